"""Design-coverage scores for an annotated application model.

All scores are fractions in [0, 1]:

* step 1 -- annotation coverage over the attribute catalog,
* step 2 -- relevance classification, explicit (coverage) or implicit (0/1),
* step 3 -- declared execution variants over the three possible modalities.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .model import MODALITIES, ApplicationModel, Relevance


class Step2Mode(str, Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"


@dataclass(frozen=True)
class Coverage:
    annotated_count: int
    variant_count: int


@dataclass(frozen=True)
class SadpScorecard:
    step1: float
    step2: float
    step2_mode: Step2Mode
    step3: float
    per_microservice_coverage: dict[str, Coverage] = field(default_factory=dict)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.step1, self.step2, self.step3)

    def to_dict(self) -> dict:
        return {
            "step1": self.step1,
            "step2": self.step2,
            "step2_mode": self.step2_mode.value,
            "step3": self.step3,
            "coverage": {
                ms_id: {"annotated": c.annotated_count, "variants": c.variant_count}
                for ms_id, c in self.per_microservice_coverage.items()
            },
        }


def _annotated_count(model: ApplicationModel, ms) -> int:
    return len(set(ms.annotations) & set(model.catalog.keys))


def step1_score(model: ApplicationModel) -> float:
    total = sum(_annotated_count(model, ms) for ms in model.microservices)
    return total / (len(model.catalog) * len(model))


def step2_score_explicit(model: ApplicationModel) -> float:
    tagged = sum(ms.relevance is not Relevance.UNANNOTATED for ms in model.microservices)
    return tagged / len(model)


def step2_score_implicit(model: ApplicationModel) -> float:
    tagged = any(ms.relevance is not Relevance.UNANNOTATED for ms in model.microservices)
    return 1.0 if tagged else 0.0


def step3_score(model: ApplicationModel) -> float:
    declared = sum(len(ms.declared_variants) for ms in model.microservices)
    return declared / (len(MODALITIES) * len(model))


def scorecard(model: ApplicationModel, step2_mode: Step2Mode | str = Step2Mode.IMPLICIT) -> SadpScorecard:
    mode = Step2Mode(step2_mode)
    step2 = step2_score_explicit(model) if mode is Step2Mode.EXPLICIT else step2_score_implicit(model)
    coverage = {
        ms.id: Coverage(_annotated_count(model, ms), len(ms.declared_variants))
        for ms in model.microservices
    }
    return SadpScorecard(
        step1=step1_score(model),
        step2=step2,
        step2_mode=mode,
        step3=step3_score(model),
        per_microservice_coverage=coverage,
    )
