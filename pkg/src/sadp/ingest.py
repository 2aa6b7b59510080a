"""Workflow documents: canonical JSON, decision-table JSON and a BPMN XML subset.

Canonical workflow JSON (format version 1.0)::

    {format_version, id, catalog?, tasks[], edges[], tables{}}
    task  = {id, name?, relevance?, annotations{}, baseline{}, variants{N|LP|HP: profile}, table?}
    table = {id, hit_policy?, default?, inputs[{name, kind, unit?}],
             rules[{when[{var, op, value, unit?}], then, label?}]}

See ``docs/format.md`` for the full field reference.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from typing import Any, Mapping
from xml.parsers import expat

from .model import (
    DEFAULT_CATALOG,
    DEFAULT_DURATION_MS,
    DEFAULT_POWER_WATTS,
    MODALITIES,
    ApplicationModel,
    AttributeCatalog,
    Category,
    Edge,
    ExecutionProfile,
    Microservice,
    ModelError,
    Modality,
    Relevance,
    build_application,
)
from .rules import (
    Comparator,
    Condition,
    ContextSnapshot,
    DecisionTable,
    HitPolicy,
    InputDecl,
    Kind,
    ModalityDecision,
    Quantity,
    Rule,
    kind_of,
    parse_quantity,
)

FORMAT_VERSION = "1.0"

# annotation keys that also seed the numeric execution profile
PROFILE_KEYS = {
    "power": "power_watts",
    "duration": "duration_ms",
    "reward": "reward_units",
    "quality": "quality_score",
}
PROFILE_FIELDS = ("power_watts", "duration_ms", "reward_units", "quality_score")


class Source(str, Enum):
    CANONICAL_JSON = "canonical-json"
    BPMN_SUBSET = "bpmn-subset"


@dataclass(frozen=True)
class WorkflowDocument:
    application: ApplicationModel
    format_version: str = FORMAT_VERSION
    source: Source = Source.CANONICAL_JSON


class ParseError(ValueError):
    """Rejected input; ``location`` is ``(line, column)`` or an element path."""

    def __init__(self, code: str, message: str, location: tuple[int, int] | str = "") -> None:
        super().__init__(message)
        self.code = code
        self.message = message
        self.location = location

    def __str__(self) -> str:
        loc = self.location
        if isinstance(loc, tuple):
            loc = f"line {loc[0]}, column {loc[1]}"
        return f"{self.code} at {loc or '<document>'}: {self.message}"


def _schema(path: str, message: str) -> ParseError:
    return ParseError("SchemaError", message, path or "$")


# -- JSON helpers -----------------------------------------------------------


class _Reader:
    def __init__(self, lenient: bool) -> None:
        self.lenient = lenient

    def obj(self, value: Any, path: str, required: set[str], optional: set[str]) -> dict:
        if not isinstance(value, dict):
            raise _schema(path, "expected an object")
        for key in sorted(required):
            if key not in value:
                raise _schema(f"{path}.{key}", f"missing required field {key!r}")
        if not self.lenient:
            extra = sorted(set(value) - required - optional)
            if extra:
                raise _schema(f"{path}.{extra[0]}", f"unknown field {extra[0]!r}")
        return value

    @staticmethod
    def string(value: Any, path: str) -> str:
        if not isinstance(value, str) or not value:
            raise _schema(path, "expected a non-empty string")
        return value

    @staticmethod
    def number(value: Any, path: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise _schema(path, "expected a number")
        return float(value)

    @staticmethod
    def array(value: Any, path: str) -> list:
        if not isinstance(value, list):
            raise _schema(path, "expected an array")
        return value

    @staticmethod
    def enum(enum_cls: type[Enum], value: Any, path: str):
        try:
            return enum_cls(value)
        except ValueError:
            allowed = ", ".join(repr(m.value) for m in enum_cls)
            raise _schema(path, f"expected one of {allowed}, got {value!r}") from None


def read_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("SyntaxError", exc.msg, (exc.lineno, exc.colno)) from None


# -- catalog, tables, contexts ----------------------------------------------


def catalog_from_json(data: Any, path: str = "catalog", lenient: bool = False) -> AttributeCatalog:
    r = _Reader(lenient)
    items = r.array(data, path)
    attrs = []
    for i, item in enumerate(items):
        p = f"{path}[{i}]"
        r.obj(item, p, {"key", "category"}, set())
        attrs.append((r.string(item["key"], f"{p}.key"),
                      r.enum(Category, item["category"], f"{p}.category")))
    try:
        return AttributeCatalog(tuple(attrs))
    except ValueError as exc:
        raise _schema(path, str(exc)) from None


def catalog_to_json(catalog: AttributeCatalog) -> list[dict]:
    return [{"key": k, "category": c.value} for k, c in catalog.attributes]


def _literal(r: _Reader, item: dict, path: str, decl: InputDecl | None) -> Any:
    value = item["value"]
    unit = item.get("unit")
    if unit is not None and not isinstance(unit, str):
        raise _schema(f"{path}.unit", "expected a string")
    if isinstance(value, bool) or isinstance(value, str):
        if unit is not None:
            raise _schema(f"{path}.unit", "only numeric literals carry a unit")
        return value
    number = r.number(value, f"{path}.value")
    if unit is None and decl is not None and decl.kind is Kind.NUMBER:
        unit = decl.unit
    try:
        return Quantity(number, unit)
    except ValueError as exc:
        raise _schema(f"{path}.value", str(exc)) from None


def table_from_json(data: Any, path: str = "table", lenient: bool = False) -> DecisionTable:
    r = _Reader(lenient)
    r.obj(data, path, {"id", "rules"}, {"hit_policy", "default", "inputs"})
    inputs = []
    for i, item in enumerate(r.array(data.get("inputs", []), f"{path}.inputs")):
        p = f"{path}.inputs[{i}]"
        r.obj(item, p, {"name"}, {"kind", "unit"})
        unit = item.get("unit")
        if unit is not None and not isinstance(unit, str):
            raise _schema(f"{p}.unit", "expected a string")
        inputs.append(InputDecl(r.string(item["name"], f"{p}.name"),
                                r.enum(Kind, item.get("kind", "number"), f"{p}.kind"),
                                unit or None))
    declared = {d.name: d for d in inputs}
    rules = []
    for i, item in enumerate(r.array(data["rules"], f"{path}.rules")):
        p = f"{path}.rules[{i}]"
        r.obj(item, p, {"then"}, {"when", "label"})
        conds = []
        for j, c in enumerate(r.array(item.get("when", []), f"{p}.when")):
            cp = f"{p}.when[{j}]"
            r.obj(c, cp, {"var", "op", "value"}, {"unit"})
            var = r.string(c["var"], f"{cp}.var")
            op = r.enum(Comparator, c["op"], f"{cp}.op")
            try:
                conds.append(Condition(var, op, _literal(r, c, cp, declared.get(var))))
            except ValueError as exc:
                raise _schema(cp, str(exc)) from None
        label = item.get("label")
        if label is not None and not isinstance(label, str):
            raise _schema(f"{p}.label", "expected a string")
        rules.append(Rule(tuple(conds), r.enum(ModalityDecision, item["then"], f"{p}.then"), label))
    return DecisionTable(
        id=r.string(data["id"], f"{path}.id"),
        inputs=tuple(inputs),
        rules=tuple(rules),
        hit_policy=r.enum(HitPolicy, data.get("hit_policy", "first"), f"{path}.hit_policy"),
        default_output=r.enum(ModalityDecision, data.get("default", "normal"), f"{path}.default"),
    )


def _literal_to_json(value: Any) -> dict:
    if isinstance(value, Quantity):
        out: dict[str, Any] = {"value": value.value}
        if value.unit is not None:
            out["unit"] = value.unit
        return out
    return {"value": value}


def table_to_json(table: DecisionTable) -> dict:
    inputs = []
    for d in table.inputs:
        item: dict[str, Any] = {"name": d.name, "kind": d.kind.value}
        if d.unit is not None:
            item["unit"] = d.unit
        inputs.append(item)
    rules = []
    for rule in table.rules:
        item = {
            "when": [{"var": c.variable, "op": c.comparator.value, **_literal_to_json(c.literal)}
                     for c in rule.conditions],
            "then": rule.output.value,
        }
        if rule.label is not None:
            item["label"] = rule.label
        rules.append(item)
    return {
        "id": table.id,
        "hit_policy": table.hit_policy.value,
        "default": table.default_output.value,
        "inputs": inputs,
        "rules": rules,
    }


def parse_tables(text: str, lenient: bool = False) -> dict[str, DecisionTable]:
    """Sidecar file: ``{"tables": {...}}``, a map of id to table, a list, or one table."""
    data = read_json(text)
    if isinstance(data, dict) and "tables" in data and "rules" not in data:
        data = data["tables"]
    if isinstance(data, dict) and "rules" in data:
        data = [data]
    if isinstance(data, dict):
        items = [(f"tables.{k}", v) for k, v in data.items()]
    elif isinstance(data, list):
        items = [(f"tables[{i}]", v) for i, v in enumerate(data)]
    else:
        raise _schema("$", "expected an object or array of decision tables")
    out: dict[str, DecisionTable] = {}
    for path, item in items:
        table = table_from_json(item, path, lenient)
        if table.id in out:
            raise _schema(path, f"duplicate table id {table.id!r}")
        out[table.id] = table
    return out


def context_from_json(data: Any, path: str = "context") -> ContextSnapshot:
    if not isinstance(data, dict):
        raise _schema(path, "expected an object of variables")
    variables = {}
    for name, spec in data.items():
        p = f"{path}.{name}"
        if isinstance(spec, dict):
            if "value" not in spec:
                raise _schema(f"{p}.value", "missing required field 'value'")
            value, unit = spec["value"], spec.get("unit")
        else:
            value, unit = spec, None
        if isinstance(value, (bool, str)):
            variables[name] = value
        elif isinstance(value, (int, float)):
            try:
                variables[name] = Quantity(value, unit)
            except ValueError as exc:
                raise _schema(p, str(exc)) from None
        else:
            raise _schema(p, "expected a number, boolean or string")
    return ContextSnapshot(variables)


def parse_timeline(text: str) -> list[tuple[str, ContextSnapshot]]:
    data = read_json(text)
    r = _Reader(lenient=False)
    entries = []
    seen: set[str] = set()
    for i, item in enumerate(r.array(data, "$")):
        p = f"[{i}]"
        r.obj(item, p, {"request", "context"}, set())
        rid = r.string(item["request"], f"{p}.request")
        if rid in seen:
            raise _schema(f"{p}.request", f"duplicate request id {rid!r}")
        seen.add(rid)
        entries.append((rid, context_from_json(item["context"], f"{p}.context")))
    return entries


def timeline_to_json(entries) -> list[dict]:
    out = []
    for rid, ctx in entries:
        context = {}
        for name, value in ctx.variables.items():
            context[name] = _literal_to_json(value) if kind_of(value) is Kind.NUMBER else {"value": value}
        out.append({"request": rid, "context": context})
    return out


# -- tasks -------------------------------------------------------------------


def _profile(r: _Reader, data: Any, path: str, base: Mapping[str, float]) -> dict[str, float]:
    r.obj(data, path, set(), set(PROFILE_FIELDS))
    out = dict(base)
    for name in PROFILE_FIELDS:
        if name in data:
            out[name] = r.number(data[name], f"{path}.{name}")
    return out


def _make_profile(values: Mapping[str, float], path: str) -> ExecutionProfile:
    try:
        return ExecutionProfile(**values)
    except (TypeError, ValueError) as exc:
        raise _schema(path, str(exc)) from None


def _task_from_json(
    r: _Reader, data: Any, path: str, catalog: AttributeCatalog
) -> Microservice:
    r.obj(data, path, {"id"}, {"name", "relevance", "annotations", "baseline", "variants", "table"})
    ms_id = r.string(data["id"], f"{path}.id")
    name = data.get("name", ms_id)
    if not isinstance(name, str):
        raise _schema(f"{path}.name", "expected a string")
    relevance = r.enum(Relevance, data.get("relevance", "unannotated"), f"{path}.relevance")

    raw = data.get("annotations", {})
    if not isinstance(raw, dict):
        raise _schema(f"{path}.annotations", "expected an object")
    annotations: dict[str, str] = {}
    seeded: dict[str, float] = {}
    for key, value in raw.items():
        if not isinstance(value, str):
            if not r.lenient:
                raise _schema(f"{path}.annotations.{key}", "annotation values are strings")
            value = str(value)
        if key in PROFILE_KEYS:
            try:
                seeded[PROFILE_KEYS[key]] = parse_quantity(value).value
            except ValueError:
                pass
            if key not in catalog:
                continue
        annotations[key] = value

    baseline = dict(seeded)
    baseline.update(_profile(r, data.get("baseline", {}), f"{path}.baseline", {}))
    defaulted = []
    for name_, default in (("power_watts", DEFAULT_POWER_WATTS), ("duration_ms", DEFAULT_DURATION_MS)):
        if name_ not in baseline:
            baseline[name_] = default
            defaulted.append(name_)
    baseline_profile = _make_profile(baseline, f"{path}.baseline")

    variants_raw = data.get("variants", {})
    if not isinstance(variants_raw, dict):
        raise _schema(f"{path}.variants", "expected an object")
    variants = {}
    base_values = {f: getattr(baseline_profile, f) for f in PROFILE_FIELDS}
    for key, prof in variants_raw.items():
        vp = f"{path}.variants.{key}"
        modality = r.enum(Modality, key, vp)
        variants[modality] = _make_profile(_profile(r, prof, vp, base_values), vp)

    table = data.get("table")
    if table is not None:
        table = r.string(table, f"{path}.table")
    return Microservice(
        id=ms_id,
        name=name,
        relevance=relevance,
        annotations=annotations,
        baseline_profile=baseline_profile,
        declared_variants=variants,
        decision_table_ref=table,
        defaulted_fields=tuple(defaulted),
    )


def _build(app_id: str, tasks, edges, tables, catalog, path: str) -> ApplicationModel:
    try:
        return build_application(tasks, edges, tables, catalog, id=app_id)
    except ModelError as exc:
        raise ParseError("SemanticError", f"{exc.code}: {exc}", path) from exc


def parse_workflow_json(
    text: str, lenient: bool = False, catalog: AttributeCatalog | None = None
) -> WorkflowDocument:
    """Parse canonical workflow JSON; ``catalog`` overrides the document's catalog."""
    data = read_json(text)
    r = _Reader(lenient)
    r.obj(data, "$", {"format_version", "id", "tasks"}, {"catalog", "edges", "tables"})
    version = data["format_version"]
    if version != FORMAT_VERSION:
        raise _schema("$.format_version", f"unsupported format version {version!r}")
    app_id = r.string(data["id"], "$.id")
    if catalog is None:
        catalog = (catalog_from_json(data["catalog"], "$.catalog", lenient)
                   if "catalog" in data else DEFAULT_CATALOG)

    tasks = [_task_from_json(r, t, f"$.tasks[{i}]", catalog)
             for i, t in enumerate(r.array(data["tasks"], "$.tasks"))]
    edges = []
    for i, e in enumerate(r.array(data.get("edges", []), "$.edges")):
        p = f"$.edges[{i}]"
        r.obj(e, p, {"from", "to"}, set())
        edges.append(Edge(r.string(e["from"], f"{p}.from"), r.string(e["to"], f"{p}.to")))
    tables_raw = data.get("tables", {})
    if not isinstance(tables_raw, dict):
        raise _schema("$.tables", "expected an object keyed by table id")
    tables = {}
    for key, t in tables_raw.items():
        table = table_from_json(t, f"$.tables.{key}", lenient)
        if table.id != key:
            raise _schema(f"$.tables.{key}.id", f"table id {table.id!r} differs from its key")
        tables[key] = table
    model = _build(app_id, tasks, edges, tables, catalog, "$")
    return WorkflowDocument(model, version, Source.CANONICAL_JSON)


def _profile_json(p: ExecutionProfile) -> dict:
    return {f: getattr(p, f) for f in PROFILE_FIELDS}


def _annotations_json(ms: Microservice, catalog: AttributeCatalog) -> dict:
    keys = [k for k in catalog.keys if k in ms.annotations]
    keys += sorted(k for k in ms.annotations if k not in catalog)
    return {k: ms.annotations[k] for k in keys}


def to_json_obj(doc: WorkflowDocument | ApplicationModel) -> dict:
    model = doc.application if isinstance(doc, WorkflowDocument) else doc
    tasks = []
    for ms in model.microservices:
        task: dict[str, Any] = {
            "id": ms.id,
            "name": ms.name,
            "relevance": ms.relevance.value,
            "annotations": _annotations_json(ms, model.catalog),
            "baseline": _profile_json(ms.baseline_profile),
            "variants": {m.value: _profile_json(p) for m, p in ms.declared_variants.items()},
        }
        if ms.decision_table_ref is not None:
            task["table"] = ms.decision_table_ref
        tasks.append(task)
    return {
        "format_version": FORMAT_VERSION,
        "id": model.id,
        "catalog": catalog_to_json(model.catalog),
        "tasks": tasks,
        "edges": [{"from": e.from_id, "to": e.to_id} for e in model.edges],
        "tables": {k: table_to_json(t) for k, t in sorted(model.decision_tables.items())},
    }


def dumps(obj: Any) -> str:
    """Deterministic JSON text used for every document the package writes."""
    return json.dumps(obj, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def serialize_workflow(doc: WorkflowDocument | ApplicationModel) -> str:
    return dumps(to_json_obj(doc))


# -- BPMN subset ------------------------------------------------------------

SUPPORTED_ELEMENTS = frozenset({
    "definitions", "process", "task", "serviceTask", "businessRuleTask", "sequenceFlow",
    "parallelGateway", "textAnnotation", "association", "text", "incoming", "outgoing",
    "documentation",
})
_TASKS = frozenset({"task", "serviceTask"})
_ANNOTATION_LINE = re.compile(r"^\s*([^:@\s][^:@]*?)\s*(?:@\s*(\w+)\s*)?:\s*(.*?)\s*$")


@dataclass
class _Node:
    tag: str
    attrs: dict[str, str]
    line: int
    column: int
    path: str
    children: list[_Node]
    text: str = ""
    text_line: int = 0


def _parse_xml(xml: str) -> _Node:
    parser = expat.ParserCreate()
    stack: list[_Node] = []
    root: list[_Node] = []

    def start(name: str, attrs: dict[str, str]) -> None:
        tag = name.rsplit(":", 1)[-1]
        parent = stack[-1] if stack else None
        path = f"{parent.path}/{tag}" if parent else f"/{tag}"
        if "id" in attrs:
            path += f"[@id={attrs['id']}]"
        if tag not in SUPPORTED_ELEMENTS:
            raise ParseError("UnsupportedElement", f"element <{name}> is outside the supported "
                             "BPMN subset", (parser.CurrentLineNumber, parser.CurrentColumnNumber + 1))
        node = _Node(tag, attrs, parser.CurrentLineNumber, parser.CurrentColumnNumber + 1, path, [])
        (parent.children if parent else root).append(node)
        stack.append(node)

    def end(name: str) -> None:
        stack.pop()

    def chars(data: str) -> None:
        node = stack[-1]
        if not node.text:
            node.text_line = parser.CurrentLineNumber
        node.text += data

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    try:
        parser.Parse(xml, True)
    except expat.ExpatError as exc:
        raise ParseError("SyntaxError", expat.errors.messages[exc.code],
                         (exc.lineno, exc.offset + 1)) from None
    return root[0]


def _parse_annotation(node: _Node) -> list[tuple[str, str | None, str, int]]:
    """Split a textAnnotation body into ``(key, modality, value, line)`` entries."""
    text_nodes = [c for c in node.children if c.tag == "text"]
    if not text_nodes:
        return []
    body = text_nodes[0]
    out = []
    for offset, line in enumerate(body.text.split("\n")):
        if not line.strip():
            continue
        lineno = body.text_line + offset
        m = _ANNOTATION_LINE.match(line)
        if not m or not m.group(3):
            raise ParseError("MalformedAnnotation",
                             f"expected 'key: value', got {line.strip()!r}", (lineno, 1))
        out.append((m.group(1), m.group(2), m.group(3), lineno))
    return out


def _modality_token(token: str, where: tuple[int, int]) -> Modality:
    try:
        return Modality(token.strip())
    except ValueError:
        raise ParseError("MalformedAnnotation",
                         f"unknown modality {token.strip()!r}; use N, LP or HP", where) from None


def import_bpmn_subset(
    xml: str,
    tables: Mapping[str, DecisionTable] | None = None,
    catalog: AttributeCatalog = DEFAULT_CATALOG,
) -> WorkflowDocument:
    """Map a restricted BPMN process with ``sadp:`` markers onto an application model.

    Decision-table bodies are not read from the XML; ``tables`` supplies them.
    """
    root = _parse_xml(xml)
    processes = [root] if root.tag == "process" else [c for c in root.children if c.tag == "process"]
    if len(processes) != 1:
        raise ParseError("SchemaError", "expected exactly one <process>", root.path)
    process = processes[0]
    app_id = process.attrs.get("id") or "application"

    flow_nodes: dict[str, _Node] = {}
    flows: list[_Node] = []
    annotations: dict[str, _Node] = {}
    associations: list[_Node] = []
    for node in process.children:
        if node.tag in _TASKS or node.tag in ("businessRuleTask", "parallelGateway"):
            if "id" not in node.attrs:
                raise ParseError("SchemaError", f"<{node.tag}> needs an id", (node.line, node.column))
            if node.attrs["id"] in flow_nodes:
                raise ParseError("SemanticError", f"DuplicateId: {node.attrs['id']!r}",
                                 (node.line, node.column))
            flow_nodes[node.attrs["id"]] = node
        elif node.tag == "sequenceFlow":
            flows.append(node)
        elif node.tag == "textAnnotation":
            annotations[node.attrs.get("id", "")] = node
        elif node.tag == "association":
            associations.append(node)

    succ: dict[str, list[str]] = {k: [] for k in flow_nodes}
    for f in flows:
        src, dst = f.attrs.get("sourceRef"), f.attrs.get("targetRef")
        for end in (src, dst):
            if end not in flow_nodes:
                raise ParseError("SemanticError", f"DanglingEdge: sequenceFlow references "
                                 f"unknown node {end!r}", (f.line, f.column))
        if dst not in succ[src]:
            succ[src].append(dst)

    task_ids = [k for k, n in flow_nodes.items() if n.tag in _TASKS]

    table_refs: dict[str, str] = {}
    for nid, node in flow_nodes.items():
        if node.tag != "businessRuleTask":
            continue
        ref = node.attrs.get("sadp:table")
        if not ref:
            continue
        targets = [t for t in succ[nid] if flow_nodes[t].tag in _TASKS]
        if not targets:
            raise ParseError("SemanticError", f"business rule {nid!r} does not precede a task",
                             (node.line, node.column))
        for t in targets:
            table_refs[t] = ref

    notes: dict[str, list[tuple[str, str | None, str, int]]] = {t: [] for t in task_ids}
    for a in associations:
        ends = (a.attrs.get("sourceRef"), a.attrs.get("targetRef"))
        note = next((e for e in ends if e in annotations), None)
        task = next((e for e in ends if e in notes), None)
        if note is None or task is None:
            raise ParseError("DanglingAssociation",
                             f"association must link a textAnnotation to a task, got {ends}",
                             (a.line, a.column))
        notes[task].extend(_parse_annotation(annotations[note]))

    tasks = []
    for tid in task_ids:
        node = flow_nodes[tid]
        where = (node.line, node.column)
        data: dict[str, Any] = {"id": tid, "name": node.attrs.get("name", tid)}
        rel = node.attrs.get("sadp:relevance")
        if rel is not None:
            try:
                data["relevance"] = Relevance(rel.strip().lower()).value
            except ValueError:
                raise ParseError("MalformedAnnotation",
                                 f"sadp:relevance must be optional or mandatory, got {rel!r}",
                                 where) from None
        declared = [_modality_token(t, where) for t in node.attrs.get("sadp:variants", "").split(",")
                    if t.strip()]
        variants: dict[str, dict[str, float]] = {m.value: {} for m in MODALITIES if m in declared}
        ann: dict[str, str] = {}
        for key, mod, value, lineno in notes[tid]:
            if mod is None:
                ann[key] = value
                continue
            modality = _modality_token(mod, (lineno, 1))
            if modality.value not in variants:
                raise ParseError("MalformedAnnotation",
                                 f"variant {modality.value} is not listed in sadp:variants",
                                 (lineno, 1))
            field_name = PROFILE_KEYS.get(key, key if key in PROFILE_FIELDS else None)
            if field_name is None:
                raise ParseError("MalformedAnnotation",
                                 f"{key!r} is not a profile key ({', '.join(PROFILE_KEYS)})",
                                 (lineno, 1))
            try:
                variants[modality.value][field_name] = parse_quantity(value).value
            except ValueError:
                raise ParseError("MalformedAnnotation", f"{value!r} is not numeric",
                                 (lineno, 1)) from None
        data["annotations"] = ann
        data["variants"] = variants
        if tid in table_refs:
            data["table"] = table_refs[tid]
        tasks.append(_task_from_json(_Reader(lenient=False), data, node.path, catalog))

    edges = []
    for tid in task_ids:
        # follow flows through gateways and business rules to the next tasks
        stack, seen = list(reversed(succ[tid])), set()
        while stack:
            nxt = stack.pop()
            if nxt in seen:
                continue
            seen.add(nxt)
            if flow_nodes[nxt].tag in _TASKS:
                edges.append(Edge(tid, nxt))
            else:
                stack.extend(reversed(succ[nxt]))

    model = _build(app_id, tasks, edges, dict(tables or {}), catalog, process.path)
    return WorkflowDocument(model, FORMAT_VERSION, Source.BPMN_SUBSET)
