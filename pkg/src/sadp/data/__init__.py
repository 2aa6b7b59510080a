"""Bundled example workflows."""
from __future__ import annotations

from importlib import resources


def fixture_path(name: str):
    return resources.files(__name__).joinpath(name)


def read_fixture(name: str) -> str:
    return fixture_path(name).read_text(encoding="utf-8")


def flight_booking():
    """The five-service Flight Booking application as an :class:`ApplicationModel`."""
    from ..ingest import parse_workflow_json

    return parse_workflow_json(read_fixture("flight_booking.json")).application
