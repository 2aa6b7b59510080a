"""Decision tables that map a context snapshot to a per-task modality decision.

Tables follow the shape of DMN decision tables: declared inputs, ordered
rows of conjunctive conditions, a hit policy and a default output.
"""
from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Union

from .model import Modality, Severity, ValidationIssue


class ModalityDecision(str, Enum):
    SKIP = "skip"
    USE_NORMAL = "normal"
    USE_LOW_POWER = "low-power"
    USE_HIGH_PERFORMANCE = "high-performance"

    @property
    def modality(self) -> Modality | None:
        return _DECISION_MODALITY[self]

    @classmethod
    def for_modality(cls, modality: Modality) -> ModalityDecision:
        return {v: k for k, v in _DECISION_MODALITY.items() if v is not None}[modality]


_DECISION_MODALITY = {
    ModalityDecision.SKIP: None,
    ModalityDecision.USE_NORMAL: Modality.NORMAL,
    ModalityDecision.USE_LOW_POWER: Modality.LOW_POWER,
    ModalityDecision.USE_HIGH_PERFORMANCE: Modality.HIGH_PERFORMANCE,
}


class Kind(str, Enum):
    NUMBER = "number"
    BOOLEAN = "boolean"
    STRING = "string"


class HitPolicy(str, Enum):
    FIRST = "first"
    UNIQUE = "unique"


class Comparator(str, Enum):
    GT = ">"
    GE = ">="
    LT = "<"
    LE = "<="
    EQ = "=="
    NE = "!="

    def apply(self, a: Any, b: Any) -> bool:
        return _OPS[self](a, b)


_OPS = {
    Comparator.GT: operator.gt,
    Comparator.GE: operator.ge,
    Comparator.LT: operator.lt,
    Comparator.LE: operator.le,
    Comparator.EQ: operator.eq,
    Comparator.NE: operator.ne,
}
_EQUALITY = frozenset({Comparator.EQ, Comparator.NE})


@dataclass(frozen=True)
class Quantity:
    """A finite number tagged with a literal unit string (``None`` for unitless)."""

    value: float
    unit: str | None = None

    def __post_init__(self) -> None:
        if isinstance(self.value, bool) or not isinstance(self.value, (int, float)):
            raise TypeError(f"quantity value must be a number, got {self.value!r}")
        if not math.isfinite(self.value):
            raise ValueError("quantity value must be finite")
        object.__setattr__(self, "value", float(self.value))
        if self.unit == "":
            object.__setattr__(self, "unit", None)

    def __str__(self) -> str:
        return f"{self.value:g}" + (f" {self.unit}" if self.unit else "")


Value = Union[Quantity, bool, str]

_QUANTITY_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


def parse_quantity(text: str) -> Quantity:
    """Parse ``"6kW"``, ``"1200 ms"`` or ``"3"`` into a :class:`Quantity`."""
    m = _QUANTITY_RE.match(text)
    if not m:
        raise ValueError(f"not a number with optional unit: {text!r}")
    return Quantity(float(m.group(1)), m.group(2) or None)


def parse_value(text: str) -> Value:
    """Inline literal: booleans, numbers with optional unit, otherwise a plain string."""
    low = text.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return parse_quantity(text)
    except ValueError:
        return text


def kind_of(value: Value) -> Kind:
    if isinstance(value, bool):
        return Kind.BOOLEAN
    if isinstance(value, Quantity):
        return Kind.NUMBER
    if isinstance(value, str):
        return Kind.STRING
    raise TypeError(f"unsupported context value {value!r}")


def _coerce(value: Any) -> Value:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Quantity(value)
    kind_of(value)
    return value


@dataclass(frozen=True)
class ContextSnapshot:
    variables: Mapping[str, Value] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "variables", {k: _coerce(v) for k, v in dict(self.variables).items()}
        )

    def __contains__(self, name: object) -> bool:
        return name in self.variables

    def __getitem__(self, name: str) -> Value:
        return self.variables[name]


@dataclass(frozen=True)
class Condition:
    variable: str
    comparator: Comparator
    literal: Value

    def __post_init__(self) -> None:
        object.__setattr__(self, "comparator", Comparator(self.comparator))
        object.__setattr__(self, "literal", _coerce(self.literal))
        if kind_of(self.literal) is not Kind.NUMBER and self.comparator not in _EQUALITY:
            raise ValueError(
                f"comparator {self.comparator.value} is only valid for numbers"
            )

    def __str__(self) -> str:
        return f"{self.variable} {self.comparator.value} {self.literal}"


@dataclass(frozen=True)
class Rule:
    conditions: tuple[Condition, ...] = ()
    output: ModalityDecision = ModalityDecision.USE_NORMAL
    label: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "conditions", tuple(self.conditions))
        object.__setattr__(self, "output", ModalityDecision(self.output))


@dataclass(frozen=True)
class InputDecl:
    name: str
    kind: Kind = Kind.NUMBER
    unit: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", Kind(self.kind))


@dataclass(frozen=True)
class DecisionTable:
    id: str
    inputs: tuple[InputDecl, ...] = ()
    rules: tuple[Rule, ...] = ()
    hit_policy: HitPolicy = HitPolicy.FIRST
    default_output: ModalityDecision = ModalityDecision.USE_NORMAL

    def __post_init__(self) -> None:
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "hit_policy", HitPolicy(self.hit_policy))
        object.__setattr__(self, "default_output", ModalityDecision(self.default_output))

    def rule_label(self, index: int) -> str:
        return self.rules[index].label or f"rule {index + 1}"

    def possible_outputs(self) -> set[ModalityDecision]:
        return {r.output for r in self.rules} | {self.default_output}


class RuleError(Exception):
    code = "RuleError"
    task_id: str | None = None

    def __str__(self) -> str:
        text = super().__str__()
        return f"task {self.task_id!r}: {text}" if self.task_id else text


class MissingVariableError(RuleError):
    code = "MissingVariable"


class KindMismatchError(RuleError):
    code = "KindMismatch"


class UnitMismatchError(RuleError):
    code = "UnitMismatch"


class NonUniqueHitError(RuleError):
    code = "NonUniqueHit"

    def __init__(self, table_id: str, labels: list[str]) -> None:
        super().__init__(f"table {table_id!r}: multiple rules matched: {', '.join(labels)}")
        self.labels = labels


def evaluate_condition(cond: Condition, ctx: ContextSnapshot) -> bool:
    if cond.variable not in ctx:
        raise MissingVariableError(f"context has no variable {cond.variable!r}")
    actual = ctx[cond.variable]
    expected_kind = kind_of(cond.literal)
    if kind_of(actual) is not expected_kind:
        raise KindMismatchError(
            f"{cond.variable!r} is {kind_of(actual).value}, condition expects {expected_kind.value}"
        )
    if expected_kind is Kind.NUMBER:
        if actual.unit != cond.literal.unit:
            raise UnitMismatchError(
                f"{cond.variable!r} has unit {actual.unit!r}, condition uses {cond.literal.unit!r}"
            )
        return cond.comparator.apply(actual.value, cond.literal.value)
    return cond.comparator.apply(actual, cond.literal)


def rule_matches(rule: Rule, ctx: ContextSnapshot) -> bool:
    return all(evaluate_condition(c, ctx) for c in rule.conditions)


def evaluate_table(table: DecisionTable, ctx: ContextSnapshot) -> ModalityDecision:
    for decl in table.inputs:
        if decl.name not in ctx:
            raise MissingVariableError(f"table {table.id!r} needs input {decl.name!r}")
    if table.hit_policy is HitPolicy.FIRST:
        for rule in table.rules:
            if rule_matches(rule, ctx):
                return rule.output
        return table.default_output
    hits = [i for i, rule in enumerate(table.rules) if rule_matches(rule, ctx)]
    if len(hits) > 1:
        raise NonUniqueHitError(table.id, [table.rule_label(i) for i in hits])
    return table.rules[hits[0]].output if hits else table.default_output


# -- static analysis --------------------------------------------------------


@dataclass(frozen=True)
class _Interval:
    lo: float = -math.inf
    lo_closed: bool = False
    hi: float = math.inf
    hi_closed: bool = False

    def tighten(self, op: Comparator, x: float) -> _Interval:
        lo, lc, hi, hc = self.lo, self.lo_closed, self.hi, self.hi_closed
        if op in (Comparator.GT, Comparator.GE, Comparator.EQ):
            closed = op is not Comparator.GT
            if x > lo or (x == lo and lc and not closed):
                lo, lc = x, closed
        if op in (Comparator.LT, Comparator.LE, Comparator.EQ):
            closed = op is not Comparator.LT
            if x < hi or (x == hi and hc and not closed):
                hi, hc = x, closed
        return _Interval(lo, lc, hi, hc)

    @property
    def empty(self) -> bool:
        return self.lo > self.hi or (self.lo == self.hi and not (self.lo_closed and self.hi_closed))

    def contains(self, other: _Interval) -> bool:
        if other.empty:
            return True
        lo_ok = self.lo < other.lo or (
            self.lo == other.lo and (self.lo_closed or not other.lo_closed)
        )
        hi_ok = self.hi > other.hi or (
            self.hi == other.hi and (self.hi_closed or not other.hi_closed)
        )
        return lo_ok and hi_ok

    def intersect(self, other: _Interval) -> _Interval:
        lo, lc = max((self.lo, not self.lo_closed), (other.lo, not other.lo_closed))
        hi, hc = min((self.hi, self.hi_closed), (other.hi, other.hi_closed))
        return _Interval(lo, not lc, hi, hc)


def _numeric_intervals(rule: Rule) -> dict[str, _Interval] | None:
    """Per-variable interval of a rule, or ``None`` if any condition is not an interval."""
    out: dict[str, _Interval] = {}
    for c in rule.conditions:
        if kind_of(c.literal) is not Kind.NUMBER or c.comparator is Comparator.NE:
            return None
        out[c.variable] = out.get(c.variable, _Interval()).tighten(c.comparator, c.literal.value)
    return out


def _subsumes(earlier: dict[str, _Interval], later: dict[str, _Interval]) -> bool:
    if any(iv.empty for iv in later.values()):
        return True
    for var, iv in earlier.items():
        if var not in later or not iv.contains(later[var]):
            return False
    return True


def _pair_disjoint(a: Rule, b: Rule) -> bool | None:
    """True if provably disjoint, False if provably overlapping, None if unknown."""
    ia, ib = _numeric_intervals(a), _numeric_intervals(b)
    if ia is not None and ib is not None:
        if any(iv.empty for iv in (*ia.values(), *ib.values())):
            return True
        return any(ia[v].intersect(ib[v]).empty for v in ia.keys() & ib.keys())
    eq_a = {c.variable: c.literal for c in a.conditions if c.comparator is Comparator.EQ}
    eq_b = {c.variable: c.literal for c in b.conditions if c.comparator is Comparator.EQ}
    if any(eq_a[v] != eq_b[v] for v in eq_a.keys() & eq_b.keys()):
        return True
    return None


def validate_table(
    table: DecisionTable, known_variables: Iterable[str] | None = None
) -> list[ValidationIssue]:
    """Static checks: undeclared variables, kind/unit mismatches, dead rows, uniqueness."""
    issues: list[ValidationIssue] = []
    subject = table.id

    def add(sev: Severity, code: str, msg: str) -> None:
        issues.append(ValidationIssue(sev, code, msg, subject))

    declared = {d.name: d for d in table.inputs}
    if len(declared) != len(table.inputs):
        add(Severity.ERROR, "DuplicateInput", "input names must be unique")
    if known_variables is not None:
        known = set(known_variables)
        for name in declared:
            if name not in known:
                add(Severity.ERROR, "UnknownVariable", f"input {name!r} is not a known variable")

    well_typed = True
    for i, rule in enumerate(table.rules):
        label = table.rule_label(i)
        for c in rule.conditions:
            decl = declared.get(c.variable)
            if decl is None:
                add(Severity.ERROR, "UnknownVariable",
                    f"{label}: condition on undeclared variable {c.variable!r}")
                well_typed = False
                continue
            if kind_of(c.literal) is not decl.kind:
                add(Severity.ERROR, "KindMismatch",
                    f"{label}: {c.variable!r} is declared {decl.kind.value}, "
                    f"literal is {kind_of(c.literal).value}")
                well_typed = False
            elif decl.kind is Kind.NUMBER and c.literal.unit != decl.unit:
                add(Severity.ERROR, "UnitMismatch",
                    f"{label}: {c.variable!r} is declared in {decl.unit!r}, "
                    f"literal uses {c.literal.unit!r}")
                well_typed = False
    if not well_typed:
        return issues

    if table.hit_policy is HitPolicy.FIRST:
        intervals = [_numeric_intervals(r) for r in table.rules]
        for j, later in enumerate(intervals):
            if later is None:
                continue
            for i in range(j):
                earlier = intervals[i]
                if earlier is not None and _subsumes(earlier, later):
                    add(Severity.WARNING, "UnreachableRule",
                        f"{table.rule_label(j)} is shadowed by {table.rule_label(i)}")
                    break
    else:
        unknown = False
        for j in range(len(table.rules)):
            for i in range(j):
                verdict = _pair_disjoint(table.rules[i], table.rules[j])
                if verdict is False:
                    add(Severity.WARNING, "OverlappingRules",
                        f"{table.rule_label(i)} and {table.rule_label(j)} can both match")
                elif verdict is None:
                    unknown = True
        if unknown:
            add(Severity.WARNING, "UniquenessUnverifiable",
                "unique hit policy cannot be verified statically for every rule pair")
    return issues
