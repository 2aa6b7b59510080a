import json
import pytest
from hypothesis import given, settings

from sadp.data import flight_booking, read_fixture
from sadp.engine import WorkflowMode, resolve_all_in, simulate
from sadp.ingest import (
    ParseError,
    Source,
    import_bpmn_subset,
    parse_tables,
    parse_timeline,
    parse_workflow_json,
    serialize_workflow,
    dumps,
    table_to_json,
    timeline_to_json,
)
from sadp.model import Modality, Relevance
from sadp.rules import ContextSnapshot, Quantity
from sadp.scoring import Step2Mode, scorecard

from .helpers import models

BPMN_HEAD = ('<?xml version="1.0"?>\n'
             '<definitions xmlns="http://www.omg.org/spec/BPMN/20100524/MODEL" '
             'xmlns:sadp="urn:sadp:bpmn-extension:1.0">\n<process id="p">\n')
BPMN_TAIL = "</process>\n</definitions>\n"


def bpmn(body: str) -> str:
    return BPMN_HEAD + body + BPMN_TAIL


def minimal(**task):
    return json.dumps({"format_version": "1.0", "id": "app", "tasks": [{"id": "a", **task}]})


# -- canonical JSON -----------------------------------------------------------


def test_minimal_document_gets_defaults():
    doc = parse_workflow_json(minimal())
    ms = doc.application.get("a")
    assert doc.source is Source.CANONICAL_JSON
    assert ms.relevance is Relevance.UNANNOTATED
    assert ms.defaulted_fields == ("power_watts", "duration_ms")
    assert ms.baseline_profile.power_watts == 1.0


def test_defaulted_baseline_is_serialized_explicitly():
    out = json.loads(serialize_workflow(parse_workflow_json(minimal())))
    assert out["tasks"][0]["baseline"]["power_watts"] == 1.0
    assert out["tasks"][0]["baseline"]["duration_ms"] == 100.0


def test_missing_id_reports_path():
    text = json.dumps({"format_version": "1.0", "id": "app", "tasks": [{"name": "x"}]})
    with pytest.raises(ParseError) as info:
        parse_workflow_json(text)
    assert info.value.code == "SchemaError"
    assert info.value.location == "$.tasks[0].id"


def test_syntax_error_location():
    with pytest.raises(ParseError) as info:
        parse_workflow_json('{\n  "id": "x",\n  oops\n}')
    assert info.value.code == "SyntaxError"
    assert info.value.location[0] == 3


def test_unknown_field_strict_and_lenient():
    text = minimal(colour="blue")
    with pytest.raises(ParseError) as info:
        parse_workflow_json(text)
    assert info.value.location == "$.tasks[0].colour"
    assert list(parse_workflow_json(text, lenient=True).application.ids) == ["a"]


def test_bad_version_and_enum():
    with pytest.raises(ParseError, match="format_version"):
        parse_workflow_json(json.dumps({"format_version": "2.0", "id": "a", "tasks": []}))
    with pytest.raises(ParseError) as info:
        parse_workflow_json(minimal(relevance="sometimes"))
    assert info.value.location == "$.tasks[0].relevance"


def test_semantic_errors_are_parse_errors():
    text = json.dumps({"format_version": "1.0", "id": "a", "tasks": [{"id": "x"}, {"id": "x"}]})
    with pytest.raises(ParseError) as info:
        parse_workflow_json(text)
    assert info.value.code == "SemanticError"
    assert "DuplicateId" in info.value.message


def test_annotations_seed_baseline_and_variants_inherit():
    doc = parse_workflow_json(minimal(annotations={"power": "12 W", "duration": "30 ms"},
                                      variants={"LP": {"power_watts": 5}}))
    ms = doc.application.get("a")
    assert ms.baseline_profile.power_watts == 12 and ms.baseline_profile.duration_ms == 30
    assert ms.defaulted_fields == ()
    assert "duration" not in ms.annotations and ms.annotations["power"] == "12 W"
    assert ms.declared_variants[Modality.LOW_POWER].duration_ms == 30


def test_bundled_fixture_round_trip_is_byte_stable():
    text = serialize_workflow(parse_workflow_json(read_fixture("flight_booking.json")))
    assert serialize_workflow(parse_workflow_json(text)) == text
    assert parse_workflow_json(text).application == flight_booking()


@settings(max_examples=200, deadline=None)
@given(models(max_tasks=6))
def test_random_round_trip(model):
    text = serialize_workflow(model)
    again = parse_workflow_json(text).application
    assert again == model
    assert serialize_workflow(again) == text


def test_tables_and_timeline_round_trip(fb_tables):
    text = dumps({"tables": [table_to_json(t) for t in fb_tables.values()]})
    assert parse_tables(text) == fb_tables
    entries = [("r1", snapshot(6)), ("r2", snapshot(3))]
    assert parse_timeline(dumps(timeline_to_json(entries))) == entries


def snapshot(kw):
    return ContextSnapshot({"power": Quantity(kw, "kW"), "debug": True})


def test_timeline_rejects_duplicates():
    text = json.dumps([{"request": "a", "context": {}}, {"request": "a", "context": {}}])
    with pytest.raises(ParseError, match="duplicate"):
        parse_timeline(text)


# -- BPMN subset ---------------------------------------------------------------


def test_two_task_chain():
    doc = import_bpmn_subset(bpmn(
        '<task id="a" name="A" sadp:relevance="optional"/>\n<task id="b"/>\n'
        '<sequenceFlow id="f" sourceRef="a" targetRef="b"/>\n'))
    model = doc.application
    assert doc.source is Source.BPMN_SUBSET
    assert [ms.id for ms in model.microservices] == ["a", "b"]
    assert [(e.from_id, e.to_id) for e in model.edges] == [("a", "b")]
    assert model.get("a").is_optional and model.get("a").name == "A"


def test_exclusive_gateway_rejected_with_location():
    with pytest.raises(ParseError) as info:
        import_bpmn_subset(bpmn('<task id="a"/>\n<exclusiveGateway id="g"/>\n'))
    assert info.value.code == "UnsupportedElement"
    assert info.value.location[0] == 5


def test_malformed_annotation_line_number():
    xml = bpmn('<task id="a"/>\n<textAnnotation id="n"><text>cost: 1 EUR\npower 10W</text>'
               '</textAnnotation>\n<association id="as" sourceRef="n" targetRef="a"/>\n')
    with pytest.raises(ParseError) as info:
        import_bpmn_subset(xml)
    assert info.value.code == "MalformedAnnotation"
    assert info.value.location == (6, 1)


def test_dangling_association():
    xml = bpmn('<task id="a"/>\n<association id="as" sourceRef="ghost" targetRef="a"/>\n')
    with pytest.raises(ParseError) as info:
        import_bpmn_subset(xml)
    assert info.value.code == "DanglingAssociation"


def test_xml_syntax_error():
    with pytest.raises(ParseError) as info:
        import_bpmn_subset(bpmn('<task id="a">\n'))
    assert info.value.code == "SyntaxError"


def test_parallel_gateway_fan_out_and_in():
    xml = bpmn(
        '<task id="a"/><parallelGateway id="split"/><task id="b"/><task id="c"/>'
        '<parallelGateway id="join"/><task id="d"/>\n'
        '<sequenceFlow id="1" sourceRef="a" targetRef="split"/>'
        '<sequenceFlow id="2" sourceRef="split" targetRef="b"/>'
        '<sequenceFlow id="3" sourceRef="split" targetRef="c"/>'
        '<sequenceFlow id="4" sourceRef="b" targetRef="join"/>'
        '<sequenceFlow id="5" sourceRef="c" targetRef="join"/>'
        '<sequenceFlow id="6" sourceRef="join" targetRef="d"/>\n')
    model = import_bpmn_subset(xml).application
    assert {(e.from_id, e.to_id) for e in model.edges} == {
        ("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")}


def test_variant_annotation_must_be_declared():
    xml = bpmn('<task id="a"/>\n<textAnnotation id="n"><text>power@LP: 3 W</text>'
               '</textAnnotation>\n<association id="as" sourceRef="n" targetRef="a"/>\n')
    with pytest.raises(ParseError, match="sadp:variants"):
        import_bpmn_subset(xml)


def test_bpmn_matches_canonical_json(fb, fb_tables):
    model = import_bpmn_subset(read_fixture("flight_booking.bpmn"), fb_tables).application
    assert model == fb
    for mode in (Step2Mode.IMPLICIT, Step2Mode.EXPLICIT):
        assert scorecard(model, mode) == scorecard(fb, mode)
    for flags in [(), ("basic", "low-power"), ("high-performance",)]:
        mode = WorkflowMode.of(*flags)
        assert simulate(model, resolve_all_in(model, mode)) == simulate(fb, resolve_all_in(fb, mode))
    assert serialize_workflow(model) == serialize_workflow(fb)
