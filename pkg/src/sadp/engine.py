"""Workflow enactment: modality resolution, simulation and optimized selection."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Mapping, Sequence, Union

from .model import ApplicationModel, ExecutionProfile, Microservice, Modality, topological_order
from .rules import (
    ContextSnapshot,
    DecisionTable,
    MissingVariableError,
    ModalityDecision,
    RuleError,
    evaluate_table,
)

log = logging.getLogger(__name__)

EXACT_SEARCH_LIMIT = 12


class WorkflowFlag(str, Enum):
    BASIC = "basic"
    LOW_POWER = "low-power"
    HIGH_PERFORMANCE = "high-performance"


@dataclass(frozen=True)
class WorkflowMode:
    """Global workflow modality; the empty flag set is Normal execution."""

    flags: frozenset[WorkflowFlag] = frozenset()

    def __post_init__(self) -> None:
        flags = frozenset(WorkflowFlag(f) for f in self.flags)
        if {WorkflowFlag.LOW_POWER, WorkflowFlag.HIGH_PERFORMANCE} <= flags:
            raise ValueError("low-power and high-performance cannot be combined")
        object.__setattr__(self, "flags", flags)

    @classmethod
    def of(cls, *flags: WorkflowFlag | str) -> WorkflowMode:
        return cls(frozenset(WorkflowFlag(f) for f in flags))

    @property
    def is_normal(self) -> bool:
        return not self.flags

    def __contains__(self, flag: object) -> bool:
        return flag in self.flags

    def __str__(self) -> str:
        if self.is_normal:
            return "normal"
        return "+".join(f.value for f in WorkflowFlag if f in self.flags)


NORMAL = WorkflowMode()


@dataclass(frozen=True)
class OptimizationObjective:
    weight_energy: float = 0.0
    weight_time: float = 0.0
    weight_reward: float = 0.0
    max_response_time_ms: float | None = None
    max_energy_j: float | None = None

    def __post_init__(self) -> None:
        weights = (self.weight_energy, self.weight_time, self.weight_reward)
        if any(not math.isfinite(w) or w < 0 for w in weights):
            raise ValueError("objective weights must be finite and nonnegative")
        if not any(w > 0 for w in weights):
            raise ValueError("at least one objective weight must be positive")
        for bound in (self.max_response_time_ms, self.max_energy_j):
            if bound is not None and (not math.isfinite(bound) or bound < 0):
                raise ValueError("bounds must be finite and nonnegative")

    def cost(self, energy_j: float, response_time_ms: float, reward: float) -> float:
        return self.weight_energy * energy_j + self.weight_time * response_time_ms - (
            self.weight_reward * reward
        )

    def feasible(self, energy_j: float, response_time_ms: float) -> bool:
        return (self.max_energy_j is None or energy_j <= self.max_energy_j) and (
            self.max_response_time_ms is None or response_time_ms <= self.max_response_time_ms
        )


@dataclass(frozen=True)
class AllIn:
    mode: WorkflowMode = NORMAL


@dataclass(frozen=True)
class RuleDriven:
    global_table: str | None = None


@dataclass(frozen=True)
class Optimized:
    objective: OptimizationObjective


Strategy = Union[AllIn, RuleDriven, Optimized]


@dataclass(frozen=True)
class EnactmentConfig:
    strategy: Strategy = field(default_factory=AllIn)
    # the only fallback: a missing variant runs on the baseline profile
    fallback: str = "baseline"


@dataclass(frozen=True)
class Assignment:
    decisions: Mapping[str, ModalityDecision]
    clamped: frozenset[str] = frozenset()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "decisions", {k: ModalityDecision(v) for k, v in self.decisions.items()}
        )
        object.__setattr__(self, "clamped", frozenset(self.clamped))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    def __getitem__(self, ms_id: str) -> ModalityDecision:
        return self.decisions[ms_id]

    def skipped(self) -> list[str]:
        return [k for k, v in self.decisions.items() if v is ModalityDecision.SKIP]


@dataclass(frozen=True)
class TaskOutcome:
    id: str
    decision: ModalityDecision
    profile_used: ExecutionProfile | None
    energy_j: float
    clamped: bool = False
    fallback_used: bool = False


@dataclass(frozen=True)
class SimulationReport:
    outcomes: tuple[TaskOutcome, ...]
    total_energy_j: float
    response_time_ms: float
    total_reward: float
    mean_quality: float
    warnings: tuple[str, ...] = ()

    def outcome(self, ms_id: str) -> TaskOutcome:
        return next(o for o in self.outcomes if o.id == ms_id)

    @property
    def assignment(self) -> dict[str, ModalityDecision]:
        return {o.id: o.decision for o in self.outcomes}


class EngineError(Exception):
    code = "EngineError"


class InfeasibleError(EngineError):
    code = "Infeasible"


class TooLargeForExactError(EngineError):
    code = "TooLargeForExact"


# -- resolvers --------------------------------------------------------------


def _all_in_decision(ms: Microservice, mode: WorkflowMode) -> ModalityDecision:
    if WorkflowFlag.BASIC in mode and ms.is_optional:
        return ModalityDecision.SKIP
    if WorkflowFlag.LOW_POWER in mode:
        return ModalityDecision.USE_LOW_POWER
    if WorkflowFlag.HIGH_PERFORMANCE in mode:
        return ModalityDecision.USE_HIGH_PERFORMANCE
    return ModalityDecision.USE_NORMAL


def resolve_all_in(model: ApplicationModel, mode: WorkflowMode = NORMAL) -> Assignment:
    return Assignment({ms.id: _all_in_decision(ms, mode) for ms in model.microservices})


def resolve_rule_driven(
    model: ApplicationModel,
    ctx: ContextSnapshot,
    global_table: str | DecisionTable | None = None,
    lenient_missing: bool = False,
) -> Assignment:
    """Evaluate each task's own table (else ``global_table``, else normal execution).

    Skip on a task that is not optional is clamped to normal execution. With
    ``lenient_missing`` a table whose inputs are absent from ``ctx`` yields its
    default output and a warning instead of raising.
    """
    if isinstance(global_table, str):
        global_table = model.decision_tables[global_table]
    decisions: dict[str, ModalityDecision] = {}
    clamped: set[str] = set()
    warnings: list[str] = []
    for ms in model.microservices:
        table = model.table_for(ms) or global_table
        if table is None:
            decisions[ms.id] = ModalityDecision.USE_NORMAL
            continue
        try:
            decision = evaluate_table(table, ctx)
        except MissingVariableError as exc:
            if not lenient_missing:
                exc.task_id = ms.id
                raise
            decision = table.default_output
            warnings.append(f"{ms.id}: {exc}; using default {decision.value}")
        except RuleError as exc:
            exc.task_id = ms.id
            raise
        if decision is ModalityDecision.SKIP and not ms.is_optional:
            decision = ModalityDecision.USE_NORMAL
            clamped.add(ms.id)
            warnings.append(f"{ms.id}: skip requested by table {table.id!r} on a "
                            "non-optional task; running normal")
        decisions[ms.id] = decision
    for w in warnings:
        log.warning(w)
    return Assignment(decisions, frozenset(clamped), tuple(warnings))


# -- simulation -------------------------------------------------------------


def _longest(order: Sequence[str], preds: Mapping[str, list[str]],
             durations: Mapping[str, float]) -> float:
    finish: dict[str, float] = {}
    for ms_id in order:
        start = max((finish[p] for p in preds[ms_id]), default=0.0)
        finish[ms_id] = start + durations[ms_id]
    return max(finish.values(), default=0.0)


def critical_path(model: ApplicationModel, durations: Mapping[str, float]) -> float:
    """Longest node-weighted path through the DAG."""
    return _longest(topological_order(model), model.predecessors(), durations)


def _select_profile(
    ms: Microservice, decision: ModalityDecision
) -> tuple[ExecutionProfile | None, bool]:
    modality = decision.modality
    if modality is None:
        return None, False
    return ms.profile_for(modality)


def simulate(model: ApplicationModel, assignment: Assignment) -> SimulationReport:
    outcomes: list[TaskOutcome] = []
    durations: dict[str, float] = {}
    warnings = list(assignment.warnings)
    for ms in model.microservices:
        try:
            decision = assignment[ms.id]
        except KeyError:
            raise ValueError(f"assignment has no decision for {ms.id!r}") from None
        if decision is ModalityDecision.SKIP and not ms.is_optional:
            raise ValueError(f"{ms.id!r} is not optional and cannot be skipped")
        profile, fallback = _select_profile(ms, decision)
        if fallback:
            warnings.append(f"{ms.id}: no {decision.modality.value} variant, baseline used")
        durations[ms.id] = profile.duration_ms if profile else 0.0
        outcomes.append(
            TaskOutcome(
                id=ms.id,
                decision=decision,
                profile_used=profile,
                energy_j=profile.energy_j if profile else 0.0,
                clamped=ms.id in assignment.clamped,
                fallback_used=fallback,
            )
        )
    executed = [o.profile_used for o in outcomes if o.profile_used is not None]
    if executed:
        mean_quality = math.fsum(p.quality_score for p in executed) / len(executed)
    else:
        mean_quality = 1.0
        warnings.append("every task was skipped; mean quality defaults to 1.0")
    return SimulationReport(
        outcomes=tuple(outcomes),
        total_energy_j=math.fsum(o.energy_j for o in outcomes),
        response_time_ms=critical_path(model, durations),
        total_reward=math.fsum(p.reward_units for p in executed),
        mean_quality=mean_quality,
        warnings=tuple(warnings),
    )


# -- optimized selection ----------------------------------------------------

_DECISION_RANK = {
    ModalityDecision.USE_NORMAL: 0,
    ModalityDecision.USE_LOW_POWER: 1,
    ModalityDecision.USE_HIGH_PERFORMANCE: 2,
    ModalityDecision.SKIP: 3,
}


@dataclass(frozen=True)
class _Option:
    decision: ModalityDecision
    energy: float
    duration: float
    reward: float


def feasible_decisions(ms: Microservice) -> list[ModalityDecision]:
    """Normal always; a variant only when declared; skip only when optional."""
    out = [ModalityDecision.USE_NORMAL]
    for modality in (Modality.LOW_POWER, Modality.HIGH_PERFORMANCE):
        if modality in ms.declared_variants:
            out.append(ModalityDecision.for_modality(modality))
    if ms.is_optional:
        out.append(ModalityDecision.SKIP)
    return out


def _options(ms: Microservice) -> list[_Option]:
    out = []
    for d in feasible_decisions(ms):
        profile, _ = _select_profile(ms, d)
        if profile is None:
            out.append(_Option(d, 0.0, 0.0, 0.0))
        else:
            out.append(_Option(d, profile.energy_j, profile.duration_ms, profile.reward_units))
    return out


class _Search:
    """Branch and bound over per-task options in topological order.

    ``score`` must be nondecreasing in energy and time and nonincreasing in
    reward; the optimistic completion then bounds every leaf below.
    """

    def __init__(
        self,
        model: ApplicationModel,
        score: Callable[[float, float, float], float],
        objective: OptimizationObjective | None,
    ) -> None:
        self.model = model
        self.score = score
        self.objective = objective
        self.order = topological_order(model)
        self.preds = model.predecessors()
        self.options = {ms.id: _options(ms) for ms in model.microservices}
        self.id_order = sorted(model.ids)
        self.best_key: tuple | None = None
        self.best: dict[str, _Option] | None = None

    def _totals(self, chosen: Mapping[str, _Option]) -> tuple[float, float, float]:
        energy = math.fsum(o.energy for o in chosen.values())
        rt = _longest(self.order, self.preds, {k: o.duration for k, o in chosen.items()})
        reward = math.fsum(o.reward for o in chosen.values())
        return energy, rt, reward

    def _optimistic(self, chosen: dict[str, _Option], depth: int) -> dict[str, _Option]:
        full = dict(chosen)
        for ms_id in self.order[depth:]:
            opts = self.options[ms_id]
            full[ms_id] = _Option(
                ModalityDecision.USE_NORMAL,
                min(o.energy for o in opts),
                min(o.duration for o in opts),
                max(o.reward for o in opts),
            )
        return full

    def _leaf_key(self, chosen: dict[str, _Option]) -> tuple | None:
        energy, rt, reward = self._totals(chosen)
        if self.objective is not None and not self.objective.feasible(energy, rt):
            return None
        ranks = tuple(_DECISION_RANK[chosen[i].decision] for i in self.id_order)
        return (self.score(energy, rt, reward), energy, ranks)

    def _dive(self, chosen: dict[str, _Option], depth: int) -> None:
        if depth == len(self.order):
            key = self._leaf_key(chosen)
            if key is not None and (self.best_key is None or key < self.best_key):
                self.best_key, self.best = key, dict(chosen)
            return
        energy, rt, reward = self._totals(self._optimistic(chosen, depth))
        if self.objective is not None and not self.objective.feasible(energy, rt):
            return
        if self.best_key is not None and (self.score(energy, rt, reward), energy) > self.best_key[:2]:
            return
        ms_id = self.order[depth]
        for opt in self.options[ms_id]:
            chosen[ms_id] = opt
            self._dive(chosen, depth + 1)
        del chosen[ms_id]

    def run(self) -> dict[str, ModalityDecision] | None:
        self._dive({}, 0)
        if self.best is None:
            return None
        return {ms_id: self.best[ms_id].decision for ms_id in self.model.ids}


def _violation(objective: OptimizationObjective) -> Callable[[float, float, float], float]:
    def over(value: float, bound: float | None) -> float:
        if bound is None:
            return 0.0
        return max(0.0, value - bound) / (bound if bound > 0 else 1.0)

    return lambda e, t, r: over(e, objective.max_energy_j) + over(t, objective.max_response_time_ms)


def _infeasible(model: ApplicationModel, objective: OptimizationObjective,
                decisions: Mapping[str, ModalityDecision]) -> InfeasibleError:
    report = simulate(model, Assignment(decisions))
    candidates = []
    if objective.max_energy_j is not None and report.total_energy_j > objective.max_energy_j:
        b = objective.max_energy_j
        candidates.append(((report.total_energy_j - b) / (b or 1.0),
                           f"max_energy_j={b:g} (best reachable {report.total_energy_j:g} J)"))
    if (objective.max_response_time_ms is not None
            and report.response_time_ms > objective.max_response_time_ms):
        b = objective.max_response_time_ms
        candidates.append(((report.response_time_ms - b) / (b or 1.0),
                           f"max_response_time_ms={b:g} (best reachable "
                           f"{report.response_time_ms:g} ms)"))
    candidates.sort(key=lambda c: -c[0])
    detail = "; ".join(text for _, text in candidates) or "bounds"
    return InfeasibleError(f"no assignment satisfies the bounds: {detail}")


def _greedy(model: ApplicationModel, objective: OptimizationObjective) -> dict[str, ModalityDecision]:
    decisions = {ms.id: ModalityDecision.USE_NORMAL for ms in model.microservices}
    feasible = {ms.id: feasible_decisions(ms) for ms in model.microservices}
    violation = _violation(objective)

    def key(d: dict[str, ModalityDecision]) -> tuple:
        r = simulate(model, Assignment(d))
        v = violation(r.total_energy_j, r.response_time_ms, r.total_reward)
        c = objective.cost(r.total_energy_j, r.response_time_ms, r.total_reward)
        return (v, c, r.total_energy_j)

    current = key(decisions)
    order = topological_order(model)
    for _ in range(100):
        improved = False
        for ms_id in order:
            for d in feasible[ms_id]:
                trial = {**decisions, ms_id: d}
                k = key(trial)
                if k < current:
                    decisions, current, improved = trial, k, True
        if not improved:
            break
    if current[0] > 0:
        raise _infeasible(model, objective, decisions)
    return decisions


def optimize_assignment(
    model: ApplicationModel,
    objective: OptimizationObjective,
    allow_greedy: bool = True,
    exact_limit: int = EXACT_SEARCH_LIMIT,
) -> tuple[Assignment, SimulationReport]:
    """Pick the per-task modality combination minimising ``objective``.

    Exact (branch and bound) up to ``exact_limit`` tasks; beyond that a greedy
    coordinate descent is used and flagged in the assignment warnings.
    Ties go to lower energy, then to the assignment whose decisions, read in
    task-id order, prefer normal < low-power < high-performance < skip.
    """
    warnings: tuple[str, ...] = ()
    if len(model) <= exact_limit:
        decisions = _Search(model, objective.cost, objective).run()
        if decisions is None:
            fallback = _Search(model, _violation(objective), None).run()
            raise _infeasible(model, objective, fallback)
    elif allow_greedy:
        decisions = _greedy(model, objective)
        warnings = (f"{len(model)} tasks exceed the exact search limit of {exact_limit}; "
                    "greedy selection used, optimality not guaranteed",)
        log.warning(warnings[0])
    else:
        raise TooLargeForExactError(
            f"{len(model)} tasks exceed the exact search limit of {exact_limit}"
        )
    assignment = Assignment(decisions, warnings=warnings)
    return assignment, simulate(model, assignment)


def objective_value(objective: OptimizationObjective, report: SimulationReport) -> float:
    return objective.cost(report.total_energy_j, report.response_time_ms, report.total_reward)


# -- timelines --------------------------------------------------------------


@dataclass(frozen=True)
class ContextTimeline:
    entries: tuple[tuple[str, ContextSnapshot], ...] = ()

    def __post_init__(self) -> None:
        entries = tuple(self.entries)
        ids = [rid for rid, _ in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("timeline request ids must be unique")
        object.__setattr__(self, "entries", entries)

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


@dataclass(frozen=True)
class TimelineResult:
    reports: tuple[tuple[str, SimulationReport], ...]
    errors: tuple[tuple[str, str], ...]
    total_energy_j: float
    total_reward: float
    mean_response_time_ms: float


def run_timeline(
    model: ApplicationModel,
    config: EnactmentConfig,
    timeline: ContextTimeline | Iterable[tuple[str, ContextSnapshot]],
    strict: bool = False,
) -> TimelineResult:
    """Resolve and simulate every timeline entry in order.

    Non-strict runs are fail-soft: a missing context variable falls back to
    the table default, and any other rule error is recorded against the
    request id while the run continues. Strict runs raise on the first error.
    """
    if not isinstance(timeline, ContextTimeline):
        timeline = ContextTimeline(tuple(timeline))
    strategy = config.strategy
    fixed: Assignment | None = None
    if isinstance(strategy, AllIn):
        fixed = resolve_all_in(model, strategy.mode)
    elif isinstance(strategy, Optimized):
        fixed, _ = optimize_assignment(model, strategy.objective)
    elif strategy.global_table is None and not any(
        ms.decision_table_ref for ms in model.microservices
    ):
        raise ValueError("rule-driven enactment needs task tables or a global table")

    reports: list[tuple[str, SimulationReport]] = []
    errors: list[tuple[str, str]] = []
    for request_id, ctx in timeline:
        if fixed is not None:
            assignment = fixed
        else:
            try:
                assignment = resolve_rule_driven(
                    model, ctx, strategy.global_table, lenient_missing=not strict
                )
            except RuleError as exc:
                if strict:
                    raise
                errors.append((request_id, str(exc)))
                continue
        reports.append((request_id, simulate(model, assignment)))

    times = [r.response_time_ms for _, r in reports]
    return TimelineResult(
        reports=tuple(reports),
        errors=tuple(errors),
        total_energy_j=math.fsum(r.total_energy_j for _, r in reports),
        total_reward=math.fsum(r.total_reward for _, r in reports),
        mean_response_time_ms=math.fsum(times) / len(times) if times else 0.0,
    )



# -- report documents -------------------------------------------------------


def _profile_dict(p: ExecutionProfile | None) -> dict | None:
    if p is None:
        return None
    return {"power_watts": p.power_watts, "duration_ms": p.duration_ms,
            "reward_units": p.reward_units, "quality_score": p.quality_score}


def report_to_dict(report: SimulationReport) -> dict:
    return {
        "outcomes": [
            {
                "id": o.id,
                "decision": o.decision.value,
                "profile": _profile_dict(o.profile_used),
                "energy_j": o.energy_j,
                "clamped": o.clamped,
                "fallback_used": o.fallback_used,
            }
            for o in report.outcomes
        ],
        "total_energy_j": report.total_energy_j,
        "response_time_ms": report.response_time_ms,
        "total_reward": report.total_reward,
        "mean_quality": report.mean_quality,
        "warnings": list(report.warnings),
    }


def timeline_to_dict(result: TimelineResult) -> dict:
    return {
        "reports": [{"request": rid, "report": report_to_dict(r)} for rid, r in result.reports],
        "errors": [{"request": rid, "message": msg} for rid, msg in result.errors],
        "aggregate": {
            "runs": len(result.reports),
            "total_energy_j": result.total_energy_j,
            "total_reward": result.total_reward,
            "mean_response_time_ms": result.mean_response_time_ms,
        },
    }
