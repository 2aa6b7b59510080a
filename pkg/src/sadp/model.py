"""Annotated workflow graph: microservices, edges, catalog, validation."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Iterable, Mapping

if TYPE_CHECKING:
    from .rules import DecisionTable


class Modality(str, Enum):
    """Execution version of a single microservice."""

    NORMAL = "N"
    LOW_POWER = "LP"
    HIGH_PERFORMANCE = "HP"

    @property
    def rank(self) -> int:
        return _MODALITY_RANK[self]


_MODALITY_RANK = {Modality.NORMAL: 0, Modality.LOW_POWER: 1, Modality.HIGH_PERFORMANCE: 2}
MODALITIES: tuple[Modality, ...] = (Modality.NORMAL, Modality.LOW_POWER, Modality.HIGH_PERFORMANCE)


class Relevance(str, Enum):
    MANDATORY = "mandatory"
    OPTIONAL = "optional"
    UNANNOTATED = "unannotated"


class Category(str, Enum):
    FUNCTIONAL = "functional"
    QUALITY = "quality"
    SUSTAINABILITY = "sustainability"


class Severity(str, Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True)
class AttributeCatalog:
    """Ordered set of annotation keys a designer may express, each with a category."""

    attributes: tuple[tuple[str, Category], ...]

    def __post_init__(self) -> None:
        if not self.attributes:
            raise ValueError("attribute catalog must contain at least one key")
        keys = [k for k, _ in self.attributes]
        if any(not k for k in keys):
            raise ValueError("attribute keys must be non-empty")
        if len(set(keys)) != len(keys):
            raise ValueError("attribute keys must be unique")
        object.__setattr__(
            self, "attributes", tuple((k, Category(c)) for k, c in self.attributes)
        )

    @property
    def keys(self) -> tuple[str, ...]:
        return tuple(k for k, _ in self.attributes)

    def __len__(self) -> int:
        return len(self.attributes)

    def __contains__(self, key: object) -> bool:
        return key in self.keys

    def category(self, key: str) -> Category:
        return dict(self.attributes)[key]


DEFAULT_CATALOG = AttributeCatalog(
    (
        ("resources", Category.FUNCTIONAL),
        ("qos", Category.QUALITY),
        ("power", Category.SUSTAINABILITY),
        ("cost", Category.SUSTAINABILITY),
    )
)

DEFAULT_POWER_WATTS = 1.0
DEFAULT_DURATION_MS = 100.0


@dataclass(frozen=True)
class ExecutionProfile:
    power_watts: float = DEFAULT_POWER_WATTS
    duration_ms: float = DEFAULT_DURATION_MS
    reward_units: float = 0.0
    quality_score: float = 1.0

    def __post_init__(self) -> None:
        for name in ("power_watts", "duration_ms", "reward_units", "quality_score"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise TypeError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, float(value))
        if self.power_watts < 0:
            raise ValueError("power_watts must be >= 0")
        if self.duration_ms < 0:
            raise ValueError("duration_ms must be >= 0")
        if not 0.0 <= self.quality_score <= 1.0:
            raise ValueError("quality_score must lie in [0, 1]")

    @property
    def energy_j(self) -> float:
        return self.power_watts * self.duration_ms / 1000.0


@dataclass(frozen=True)
class Microservice:
    id: str
    name: str = ""
    relevance: Relevance = Relevance.UNANNOTATED
    annotations: Mapping[str, str] = field(default_factory=dict)
    baseline_profile: ExecutionProfile = field(default_factory=ExecutionProfile)
    declared_variants: Mapping[Modality, ExecutionProfile] = field(default_factory=dict)
    decision_table_ref: str | None = None
    # baseline fields filled by defaults at ingest; reported by validate()
    defaulted_fields: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("microservice id must be a non-empty string")
        object.__setattr__(self, "relevance", Relevance(self.relevance))
        object.__setattr__(self, "annotations", dict(self.annotations))
        variants = {Modality(m): p for m, p in self.declared_variants.items()}
        if len(variants) > len(MODALITIES):
            raise ValueError("a microservice declares at most three variants")
        ordered = {m: variants[m] for m in MODALITIES if m in variants}
        object.__setattr__(self, "declared_variants", ordered)
        if not self.name:
            object.__setattr__(self, "name", self.id)

    @property
    def is_optional(self) -> bool:
        return self.relevance is Relevance.OPTIONAL

    def profile_for(self, modality: Modality) -> tuple[ExecutionProfile, bool]:
        """Profile used when running in ``modality`` and whether baseline was substituted."""
        if modality in self.declared_variants:
            return self.declared_variants[modality], False
        return self.baseline_profile, modality is not Modality.NORMAL


@dataclass(frozen=True)
class Edge:
    from_id: str
    to_id: str


@dataclass(frozen=True)
class ValidationIssue:
    severity: Severity
    code: str
    message: str
    subject: str

    def __str__(self) -> str:
        return f"{self.severity.value.upper()} {self.code} [{self.subject}]: {self.message}"


class ModelError(ValueError):
    """Structural violation raised by :func:`build_application`."""

    code = "ModelError"

    def __init__(self, message: str, subject: str = "") -> None:
        super().__init__(message)
        self.subject = subject


class DuplicateIdError(ModelError):
    code = "DuplicateId"


class DanglingEdgeError(ModelError):
    code = "DanglingEdge"


class CycleDetectedError(ModelError):
    code = "CycleDetected"


class UnknownTableRefError(ModelError):
    code = "UnknownTableRef"


class EmptyModelError(ModelError):
    code = "EmptyModel"


@dataclass(frozen=True)
class ApplicationModel:
    id: str
    microservices: tuple[Microservice, ...]
    edges: tuple[Edge, ...] = ()
    decision_tables: Mapping[str, DecisionTable] = field(default_factory=dict)
    catalog: AttributeCatalog = DEFAULT_CATALOG

    def __post_init__(self) -> None:
        object.__setattr__(self, "microservices", tuple(self.microservices))
        object.__setattr__(self, "edges", tuple(self.edges))
        object.__setattr__(self, "decision_tables", dict(self.decision_tables))

    def __len__(self) -> int:
        return len(self.microservices)

    @property
    def ids(self) -> list[str]:
        return [m.id for m in self.microservices]

    def get(self, ms_id: str) -> Microservice:
        for m in self.microservices:
            if m.id == ms_id:
                return m
        raise KeyError(ms_id)

    def predecessors(self) -> dict[str, list[str]]:
        preds: dict[str, list[str]] = {m.id: [] for m in self.microservices}
        for e in self.edges:
            preds[e.to_id].append(e.from_id)
        return preds

    def table_for(self, ms: Microservice) -> DecisionTable | None:
        if ms.decision_table_ref is None:
            return None
        return self.decision_tables[ms.decision_table_ref]


def _as_edge(e: Edge | tuple[str, str]) -> Edge:
    return e if isinstance(e, Edge) else Edge(*e)


def _kahn(ids: list[str], edges: Iterable[Edge]) -> list[str]:
    """Topological order with ties broken by position in ``ids``; short if cyclic."""
    index = {ms_id: i for i, ms_id in enumerate(ids)}
    succ: dict[str, list[str]] = {ms_id: [] for ms_id in ids}
    indeg = dict.fromkeys(ids, 0)
    for e in edges:
        succ[e.from_id].append(e.to_id)
        indeg[e.to_id] += 1
    heap = [index[i] for i in ids if indeg[i] == 0]
    heapq.heapify(heap)
    order: list[str] = []
    while heap:
        node = ids[heapq.heappop(heap)]
        order.append(node)
        for nxt in succ[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(heap, index[nxt])
    return order


def build_application(
    microservices: Iterable[Microservice],
    edges: Iterable[Edge | tuple[str, str]] = (),
    tables: Mapping[str, DecisionTable] | None = None,
    catalog: AttributeCatalog = DEFAULT_CATALOG,
    id: str = "application",
) -> ApplicationModel:
    """Assemble an :class:`ApplicationModel`, raising on the first structural violation."""
    services = tuple(microservices)
    edge_list = tuple(_as_edge(e) for e in edges)
    tables = dict(tables or {})
    if not services:
        raise EmptyModelError("an application needs at least one microservice", id)

    seen: set[str] = set()
    for m in services:
        if m.id in seen:
            raise DuplicateIdError(f"duplicate microservice id {m.id!r}", m.id)
        seen.add(m.id)
    for e in edge_list:
        for end in (e.from_id, e.to_id):
            if end not in seen:
                raise DanglingEdgeError(
                    f"edge {e.from_id!r} -> {e.to_id!r} references unknown id {end!r}", end
                )
        if e.from_id == e.to_id:
            raise CycleDetectedError(f"self-loop on {e.from_id!r}", e.from_id)
    for m in services:
        if m.decision_table_ref is not None and m.decision_table_ref not in tables:
            raise UnknownTableRefError(
                f"{m.id!r} references unknown decision table {m.decision_table_ref!r}", m.id
            )

    ids = [m.id for m in services]
    order = _kahn(ids, edge_list)
    if len(order) != len(ids):
        stuck = [i for i in ids if i not in set(order)]
        raise CycleDetectedError(f"cycle through {', '.join(stuck)}", stuck[0])

    # edge order carries no meaning; keep one canonical order so models compare equal
    index = {ms_id: i for i, ms_id in enumerate(ids)}
    edge_list = tuple(sorted(set(edge_list), key=lambda e: (index[e.from_id], index[e.to_id])))
    return ApplicationModel(
        id=id, microservices=services, edges=edge_list, decision_tables=tables, catalog=catalog
    )


def topological_order(model: ApplicationModel) -> list[str]:
    return _kahn(model.ids, model.edges)


def _variant_order_violations(ms: Microservice) -> list[str]:
    v = ms.declared_variants
    out = []
    pairs = [
        (Modality.LOW_POWER, Modality.NORMAL),
        (Modality.NORMAL, Modality.HIGH_PERFORMANCE),
    ]
    if Modality.NORMAL not in v:
        pairs.append((Modality.LOW_POWER, Modality.HIGH_PERFORMANCE))
    for lo, hi in pairs:
        if lo in v and hi in v and v[lo].power_watts > v[hi].power_watts:
            out.append(
                f"{lo.value} draws {v[lo].power_watts:g} W, more than {hi.value} at "
                f"{v[hi].power_watts:g} W"
            )
    return out


def validate(model: ApplicationModel) -> list[ValidationIssue]:
    """Collect every design issue in ``model``; errors block simulation, warnings do not."""
    from .rules import ModalityDecision, validate_table

    issues: list[ValidationIssue] = []

    def add(sev: Severity, code: str, msg: str, subject: str) -> None:
        issues.append(ValidationIssue(sev, code, msg, subject))

    for ms in model.microservices:
        for key in ms.annotations:
            if key not in model.catalog:
                add(Severity.ERROR, "UnknownAttribute",
                    f"annotation key {key!r} is not in the attribute catalog", ms.id)
        if not ms.annotations:
            add(Severity.WARNING, "EmptyAnnotations", "no annotations provided", ms.id)
        if ms.defaulted_fields:
            add(Severity.WARNING, "DefaultedBaseline",
                "baseline filled with defaults for " + ", ".join(ms.defaulted_fields), ms.id)
        violations = _variant_order_violations(ms)
        if violations:
            add(Severity.WARNING, "VariantOrdering", "; ".join(violations), ms.id)
        table = model.table_for(ms)
        if table is not None and not ms.is_optional:
            if ModalityDecision.SKIP in table.possible_outputs():
                add(Severity.WARNING, "SkippableMandatory",
                    f"table {table.id!r} can output skip but the task is not optional; "
                    "skip will be clamped to normal", ms.id)

    for table in model.decision_tables.values():
        issues.extend(validate_table(table))
    return issues


def errors(issues: Iterable[ValidationIssue]) -> list[ValidationIssue]:
    return [i for i in issues if i.severity is Severity.ERROR]
