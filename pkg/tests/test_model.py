import random

import pytest
from hypothesis import given, settings

from sadp.model import (
    ApplicationModel,
    AttributeCatalog,
    CycleDetectedError,
    DanglingEdgeError,
    DuplicateIdError,
    EmptyModelError,
    ExecutionProfile,
    Microservice,
    Modality,
    Relevance,
    Severity,
    UnknownTableRefError,
    build_application,
    errors,
    topological_order,
    validate,
)
from sadp.rules import DecisionTable, ModalityDecision

from .helpers import models, random_model, respects_edges


def ms(ms_id, **kw):
    return Microservice(ms_id, **kw)


def test_minimal_model():
    model = build_application([ms("a")])
    assert len(model) == 1
    assert model.edges == ()


def test_two_cycle_rejected():
    with pytest.raises(CycleDetectedError):
        build_application([ms("a"), ms("b")], [("a", "b"), ("b", "a")])


def test_self_loop_rejected():
    with pytest.raises(CycleDetectedError):
        build_application([ms("a")], [("a", "a")])


def test_duplicate_id_rejected():
    with pytest.raises(DuplicateIdError, match="'a'"):
        build_application([ms("a"), ms("a")])


def test_dangling_edge_rejected():
    with pytest.raises(DanglingEdgeError):
        build_application([ms("a")], [("a", "ghost")])


def test_unknown_table_ref_rejected():
    with pytest.raises(UnknownTableRefError):
        build_application([ms("a", decision_table_ref="t")])


def test_empty_model_rejected():
    with pytest.raises(EmptyModelError):
        build_application([])


def test_flight_booking_is_a_five_node_dag(fb):
    assert fb.ids == ["FlightSearch", "WeatherInformation", "FlightBooking",
                      "RentalCarBooking", "Payment"]
    assert len(fb.edges) == 4


def test_edges_are_canonicalised():
    a = build_application([ms("a"), ms("b"), ms("c")], [("b", "c"), ("a", "b"), ("a", "b")])
    b = build_application([ms("a"), ms("b"), ms("c")], [("a", "b"), ("b", "c")])
    assert a == b


@pytest.mark.parametrize(
    "edges, expected",
    [
        ([("a", "b"), ("b", "c")], ["a", "b", "c"]),
        ([("c", "b"), ("b", "a")], ["c", "b", "a"]),
    ],
)
def test_topological_order_chain(edges, expected):
    model = build_application([ms("a"), ms("b"), ms("c")], edges)
    assert topological_order(model) == expected


def test_topological_order_diamond():
    model = build_application([ms(x) for x in "abcd"],
                              [("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")])
    order = topological_order(model)
    assert order == ["a", "b", "c", "d"]
    assert respects_edges(order, model)


def test_topological_order_flight_booking(fb):
    assert topological_order(fb) == ["FlightSearch", "WeatherInformation", "FlightBooking",
                                     "RentalCarBooking", "Payment"]


@settings(max_examples=200, deadline=None)
@given(models(max_tasks=8))
def test_topological_order_is_valid_permutation(model):
    assert respects_edges(topological_order(model), model)


@settings(max_examples=200, deadline=None)
@given(models(max_tasks=8))
def test_relevance_partition(model):
    groups = {r: {m.id for m in model.microservices if m.relevance is r} for r in Relevance}
    assert sum(len(g) for g in groups.values()) == len(model)
    assert set().union(*groups.values()) == set(model.ids)


def test_fully_annotated_flight_booking_has_no_errors(fb):
    assert errors(validate(fb)) == []


def test_unknown_annotation_key_is_an_error():
    model = build_application([ms("a", annotations={"latencyy": "10 ms"})])
    errs = errors(validate(model))
    assert [(e.code, e.subject) for e in errs] == [("UnknownAttribute", "a")]


def test_variant_power_ordering_warning():
    variants = {Modality.NORMAL: ExecutionProfile(10, 100), Modality.LOW_POWER: ExecutionProfile(12, 100)}
    model = build_application([ms("a", annotations={"power": "10 W"}, declared_variants=variants)])
    issues = validate(model)
    assert [i.code for i in issues if i.severity is Severity.WARNING] == ["VariantOrdering"]
    assert errors(issues) == []


def test_ordered_variants_do_not_warn():
    variants = {Modality.LOW_POWER: ExecutionProfile(5, 100), Modality.NORMAL: ExecutionProfile(10, 100),
                Modality.HIGH_PERFORMANCE: ExecutionProfile(20, 100)}
    model = build_application([ms("a", annotations={"power": "x"}, declared_variants=variants)])
    assert validate(model) == []


def test_empty_annotations_and_defaults_warn():
    model = build_application([ms("a", defaulted_fields=("power_watts", "duration_ms"))])
    codes = sorted(i.code for i in validate(model))
    assert codes == ["DefaultedBaseline", "EmptyAnnotations"]


def test_mandatory_task_with_skip_table_warns():
    table = DecisionTable("t", rules=(), default_output=ModalityDecision.SKIP)
    model = build_application(
        [ms("pay", relevance=Relevance.MANDATORY, annotations={"power": "1"}, decision_table_ref="t")],
        tables={"t": table},
    )
    assert [i.code for i in validate(model)] == ["SkippableMandatory"]


def test_profile_invariants():
    with pytest.raises(ValueError):
        ExecutionProfile(-1, 10)
    with pytest.raises(ValueError):
        ExecutionProfile(1, -10)
    with pytest.raises(ValueError):
        ExecutionProfile(1, 10, 0, 1.5)
    assert ExecutionProfile(10, 100).energy_j == 1.0


def test_catalog_invariants():
    with pytest.raises(ValueError):
        AttributeCatalog(())
    with pytest.raises(ValueError):
        AttributeCatalog((("a", "functional"), ("a", "quality")))
    with pytest.raises(ValueError):
        AttributeCatalog((("", "functional"),))


def test_variant_count_bounded_on_every_path():
    rng = random.Random(7)
    for _ in range(200):
        model = random_model(rng, max_tasks=8)
        assert all(len(m.declared_variants) <= 3 for m in model.microservices)
        assert errors(issue for issue in validate(model) if issue.code != "UnknownAttribute") == []


def test_models_are_immutable(fb):
    with pytest.raises(AttributeError):
        fb.id = "other"
    assert isinstance(fb, ApplicationModel)
