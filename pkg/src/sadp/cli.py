"""Command line front end: ``sadp validate|score|import|simulate|optimize``.

Exit codes: 0 success, 1 validation errors, 2 parse errors, 3 rule or
optimizer errors, 4 usage errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from decimal import ROUND_HALF_EVEN, Decimal
from enum import IntEnum
from pathlib import Path
from typing import Sequence

from . import engine
from .engine import (
    AllIn,
    EnactmentConfig,
    EngineError,
    OptimizationObjective,
    RuleDriven,
    WorkflowMode,
)
from .ingest import (
    ParseError,
    catalog_from_json,
    dumps,
    import_bpmn_subset,
    parse_tables,
    parse_timeline,
    parse_workflow_json,
    read_json,
    serialize_workflow,
)
from .model import ApplicationModel, Severity, validate
from .rules import ContextSnapshot, RuleError, parse_value
from .scoring import Step2Mode, scorecard


class ExitStatus(IntEnum):
    OK = 0
    VALIDATION = 1
    PARSE = 2
    RUNTIME = 3
    USAGE = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def percent(fraction: float) -> str:
    """Render a fraction as a percentage, one decimal, round-half-even, ``.0`` dropped."""
    value = Decimal(repr(fraction * 100)).quantize(Decimal("0.1"), rounding=ROUND_HALF_EVEN)
    text = f"{value:f}"
    if text.endswith(".0"):
        text = text[:-2]
    return text + "%"


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _load(args) -> ApplicationModel:
    catalog = None
    if getattr(args, "catalog", None):
        catalog = catalog_from_json(read_json(_read(args.catalog)), "catalog", args.lenient)
    tables = parse_tables(_read(args.tables), args.lenient) if getattr(args, "tables", None) else None
    text = _read(args.path)
    if args.path.endswith((".bpmn", ".xml")):
        kwargs = {"catalog": catalog} if catalog else {}
        return import_bpmn_subset(text, tables, **kwargs).application
    model = parse_workflow_json(text, lenient=args.lenient, catalog=catalog).application
    if tables:
        merged = {**model.decision_tables, **tables}
        model = ApplicationModel(model.id, model.microservices, model.edges, merged, model.catalog)
    return model


def _blocking(model: ApplicationModel) -> bool:
    issues = [i for i in validate(model) if i.severity is Severity.ERROR]
    for issue in issues:
        print(issue, file=sys.stderr)
    return bool(issues)


def _emit(args, obj, text: str) -> None:
    if args.format == "json":
        sys.stdout.write(dumps(obj))
    else:
        print(text)


# -- commands ---------------------------------------------------------------


def cmd_validate(args) -> ExitStatus:
    try:
        model = _load(args)
    except ParseError as exc:
        print(exc, file=sys.stderr)
        return ExitStatus.VALIDATION if exc.code == "SemanticError" else ExitStatus.PARSE
    issues = validate(model)
    n_err = sum(i.severity is Severity.ERROR for i in issues)
    lines = [str(i) for i in issues if i.severity is Severity.ERROR or not args.quiet]
    lines.append(f"{model.id}: {n_err} error(s), {len(issues) - n_err} warning(s)")
    _emit(args, {
        "model": model.id,
        "errors": n_err,
        "issues": [{"severity": i.severity.value, "code": i.code, "subject": i.subject,
                    "message": i.message} for i in issues],
    }, "\n".join(lines))
    return ExitStatus.VALIDATION if n_err else ExitStatus.OK


def _score_text(card, quiet: bool) -> str:
    step2 = percent(card.step2) if card.step2_mode is Step2Mode.EXPLICIT else f"{card.step2:g}"
    head = f"Step 1: {percent(card.step1)} | Step 2: {step2} | Step 3: {percent(card.step3)}"
    if quiet:
        return head
    rows = [head, "", f"{'microservice':<24} {'annotated':>9} {'variants':>8}"]
    for ms_id, cov in card.per_microservice_coverage.items():
        rows.append(f"{ms_id:<24} {cov.annotated_count:>9} {cov.variant_count:>8}")
    return "\n".join(rows)


def cmd_score(args) -> ExitStatus:
    model = _load(args)
    if _blocking(model):
        return ExitStatus.VALIDATION
    card = scorecard(model, Step2Mode(args.step2_mode))
    _emit(args, card.to_dict(), _score_text(card, args.quiet))
    return ExitStatus.OK


def cmd_import(args) -> ExitStatus:
    tables = parse_tables(_read(args.tables)) if args.tables else None
    doc = import_bpmn_subset(_read(args.path), tables)
    model = doc.application
    text = serialize_workflow(doc)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    n_ann = sum(len(ms.annotations) for ms in model.microservices)
    if not args.quiet:
        print(f"imported {model.id}: {len(model)} tasks, {len(model.edges)} edges, "
              f"{n_ann} annotations, {len(model.decision_tables)} tables",
              file=sys.stderr if not args.out else sys.stdout)
    return ExitStatus.OK


def _report_text(report: engine.SimulationReport, title: str = "") -> str:
    rows = [title] if title else []
    rows.append(f"{'task':<22} {'decision':<17} {'energy J':>9} {'ms':>7}  flags")
    for o in report.outcomes:
        flags = ",".join(f for f, on in (("clamped", o.clamped), ("fallback", o.fallback_used)) if on)
        dur = o.profile_used.duration_ms if o.profile_used else 0.0
        rows.append(f"{o.id:<22} {o.decision.value:<17} {o.energy_j:>9g} {dur:>7g}  {flags}")
    rows.append(f"energy {report.total_energy_j:g} J | response {report.response_time_ms:g} ms | "
                f"reward {report.total_reward:g} | quality {report.mean_quality:.3f}")
    return "\n".join(rows)


def _parse_context(items: Sequence[str]) -> ContextSnapshot:
    variables = {}
    for item in items:
        name, sep, raw = item.partition("=")
        if not sep or not name.strip():
            raise UsageError(f"--context expects key=value[unit], got {item!r}")
        variables[name.strip()] = parse_value(raw)
    return ContextSnapshot(variables)


def _mode(values: Sequence[str]) -> WorkflowMode:
    flags = set(values)
    if "normal" in flags:
        if len(flags) > 1:
            raise UsageError("--mode normal cannot be combined with other modes")
        return engine.NORMAL
    try:
        return WorkflowMode.of(*flags)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_simulate(args) -> ExitStatus:
    if args.mode and args.rules:
        raise UsageError("--mode and --rules are mutually exclusive")
    if args.rules and not (args.timeline or args.context):
        raise UsageError("--rules needs --timeline or --context")
    if args.context and args.timeline:
        raise UsageError("--context and --timeline are mutually exclusive")
    mode = _mode(args.mode or [])
    ctx = _parse_context(args.context) if args.context else None
    model = _load(args)
    if _blocking(model):
        return ExitStatus.VALIDATION
    if args.global_table and args.global_table not in model.decision_tables:
        raise UsageError(f"unknown global table {args.global_table!r}")

    if args.timeline:
        entries = parse_timeline(_read(args.timeline))
        strategy = RuleDriven(args.global_table) if args.rules else AllIn(mode)
        result = engine.run_timeline(model, EnactmentConfig(strategy), entries, strict=args.strict)
        text = "\n\n".join(_report_text(r, f"request {rid}") for rid, r in result.reports)
        if result.errors:
            text += "\n\n" + "\n".join(f"request {rid}: {msg}" for rid, msg in result.errors)
        text += (f"\n\n{len(result.reports)} runs | energy {result.total_energy_j:g} J | "
                 f"reward {result.total_reward:g} | mean response "
                 f"{result.mean_response_time_ms:g} ms")
        _emit(args, engine.timeline_to_dict(result), text)
        return ExitStatus.OK

    if args.rules:
        assignment = engine.resolve_rule_driven(model, ctx, args.global_table,
                                                lenient_missing=not args.strict)
    else:
        assignment = engine.resolve_all_in(model, mode)
    report = engine.simulate(model, assignment)
    _emit(args, engine.report_to_dict(report), _report_text(report))
    return ExitStatus.OK


def cmd_optimize(args) -> ExitStatus:
    try:
        objective = OptimizationObjective(args.we, args.wt, args.wr, args.max_rt, args.max_energy)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    model = _load(args)
    if _blocking(model):
        return ExitStatus.VALIDATION
    assignment, report = engine.optimize_assignment(model, objective, allow_greedy=not args.no_greedy)
    cost = engine.objective_value(objective, report)
    greedy = bool(assignment.warnings)
    obj = {
        "assignment": {k: v.value for k, v in assignment.decisions.items()},
        "objective": cost,
        "greedy": greedy,
        "report": engine.report_to_dict(report),
    }
    text = _report_text(report, f"objective {cost:g}" + (" (greedy)" if greedy else ""))
    _emit(args, obj, text)
    return ExitStatus.OK


# -- wiring -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=("table", "json"), default="table")
    common.add_argument("--quiet", action="store_true", help="suppress non-essential output")
    common.add_argument("--lenient", action="store_true", help="ignore unknown JSON fields")
    common.add_argument("--tables", help="decision-table sidecar JSON")

    parser = _Parser(prog="sadp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("validate", parents=[common], help="list design issues")
    p.add_argument("path")
    p.add_argument("--catalog", help="attribute catalog JSON overriding the document's")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("score", parents=[common], help="print the design scorecard")
    p.add_argument("path")
    p.add_argument("--catalog")
    p.add_argument("--step2-mode", choices=[m.value for m in Step2Mode], default="implicit")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("import", parents=[common], help="convert a BPMN subset file to JSON")
    p.add_argument("path")
    p.add_argument("--out")
    p.set_defaults(func=cmd_import)

    p = sub.add_parser("simulate", parents=[common], help="resolve modalities and simulate")
    p.add_argument("path")
    p.add_argument("--mode", action="append",
                   choices=("normal", "basic", "low-power", "high-performance"))
    p.add_argument("--rules", action="store_true", help="decide per task with decision tables")
    p.add_argument("--global-table", help="table applied to tasks without their own")
    p.add_argument("--context", action="append", metavar="KEY=VALUE[UNIT]")
    p.add_argument("--timeline")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("optimize", parents=[common], help="optimized per-task selection")
    p.add_argument("path")
    p.add_argument("--we", type=float, default=0.0, help="weight per joule")
    p.add_argument("--wt", type=float, default=0.0, help="weight per ms of response time")
    p.add_argument("--wr", type=float, default=0.0, help="weight per reward unit")
    p.add_argument("--max-rt", type=float, help="response time bound (ms)")
    p.add_argument("--max-energy", type=float, help="energy bound (J)")
    p.add_argument("--no-greedy", action="store_true")
    p.set_defaults(func=cmd_optimize)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.ERROR, format="%(levelname)s %(message)s")
    try:
        args = build_parser().parse_args(argv)
        return int(args.func(args))
    except UsageError as exc:
        print(f"sadp: usage error: {exc}", file=sys.stderr)
        return ExitStatus.USAGE
    except ParseError as exc:
        print(exc, file=sys.stderr)
        return ExitStatus.VALIDATION if exc.code == "SemanticError" else ExitStatus.PARSE
    except (RuleError, EngineError) as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return ExitStatus.RUNTIME


if __name__ == "__main__":
    sys.exit(main())
