import json

import pytest

from rallyvis.events import Event, EventKind
from rallyvis.geometry import END_LINE_ROW, TableGrid
from rallyvis.jsonio import canonical_dumps
from rallyvis.pipeline import build_bundle
from rallyvis.rules import RuleEvaluationError, evaluate, validate_expression
from rallyvis.tactics import (
    TacticError,
    TacticFact,
    TacticKind,
    TacticRule,
    check_placement_distribution,
    default_rules,
    dump_facts,
    import_tactics_doc,
    infer_potential_placements,
    infer_potential_routes,
    merge_facts,
    run_rules,
)

QUAD = ((650.0, 620.0), (1270.0, 620.0), (1360.0, 700.0), (560.0, 700.0))


@pytest.fixture
def grid():
    return TableGrid(QUAD, 960.0)


def _stroke(reception_half="A", reception_row=END_LINE_ROW, hit=50):
    return Event(
        event_id="stroke-A-000040", kind=EventKind.STROKE, subject="A",
        span=(40, 60), hit_frame=hit,
        attributes={"reception": {"half": reception_half, "row": reception_row,
                                  "col": 1, "point": [700.0, 660.0]}},
    )


def test_endline_reception_restricts_to_opponent_endline_row(grid):
    fact = infer_potential_placements(_stroke("A", END_LINE_ROW), grid)
    cells = fact.payload["cells"]
    assert len(cells) == 3
    assert all(c["half"] == "B" for c in cells)
    assert all(c["row"] == END_LINE_ROW for c in cells)
    assert sorted(c["col"] for c in cells) == [0, 1, 2]
    for c in cells:
        assert c["p"] == pytest.approx(1.0 / 3.0, abs=1e-12)
    check_placement_distribution(fact)


def test_midtable_reception_uses_uniform_prior_over_nine_cells(grid):
    fact = infer_potential_placements(_stroke("A", 1), grid)
    cells = fact.payload["cells"]
    assert len(cells) == 9
    for c in cells:
        assert c["p"] == pytest.approx(1.0 / 9.0, abs=1e-12)
    check_placement_distribution(fact)


def test_custom_prior_renormalized_by_exact_sum(grid):
    weights = [0.111111111] * 9
    weights[0] = 0.111111102  # sums to 0.999999999
    fact = infer_potential_placements(_stroke("A", 1), grid, prior=weights)
    # Oracle: divide by the exact float sum.
    total = sum(weights)
    expected = [w / total for w in weights]
    got = [c["p"] for c in fact.payload["cells"]]
    assert got == expected
    assert abs(sum(got) - 1.0) <= 1e-9


def test_placements_require_reception(grid):
    stroke = _stroke()
    del stroke.attributes["reception"]
    with pytest.raises(TacticError, match="no reception position"):
        infer_potential_placements(stroke, grid)


def test_routes_one_per_supported_cell_with_matching_probability(grid):
    placements = infer_potential_placements(_stroke("A", END_LINE_ROW), grid)
    routes = infer_potential_routes(placements, (500.0, 550.0))
    assert routes.kind == TacticKind.POTENTIAL_ROUTES
    assert len(routes.payload["routes"]) == 3
    ps = sorted(r["p"] for r in routes.payload["routes"])
    assert ps == sorted(c["p"] for c in placements.payload["cells"])


def test_single_cell_support_gives_single_route(grid):
    placements = infer_potential_placements(_stroke("A", 1), grid,
                                            prior=[0, 0, 0, 0, 1, 0, 0, 0, 0])
    routes = infer_potential_routes(placements, (500.0, 550.0))
    assert len(routes.payload["routes"]) == 1
    assert routes.payload["routes"][0]["p"] == 1.0


def test_route_endpoints_hit_cell_centers_within_tolerance(grid):
    placements = infer_potential_placements(_stroke("A", 1), grid)
    routes = infer_potential_routes(placements, (500.0, 550.0))
    centers = {(c["half"], c["row"], c["col"]): c["center"]
               for c in placements.payload["cells"]}
    for r in routes.payload["routes"]:
        cx, cy = centers[(r["cell"]["half"], r["cell"]["row"], r["cell"]["col"])]
        assert abs(r["end"][0] - cx) <= 1e-6
        assert abs(r["end"][1] - cy) <= 1e-6


def test_empty_support_rejected(grid):
    placements = infer_potential_placements(_stroke("A", 1), grid)
    for c in placements.payload["cells"]:
        c["p"] = 0.0
    with pytest.raises(TacticError, match="empty support"):
        infer_potential_routes(placements, (500.0, 550.0))


# --- expression language -----------------------------------------------------

def test_expression_evaluation_basics():
    ctx = {"event": {"kind": "stroke", "speed": None}}
    assert evaluate({"op": "==", "args": [{"var": "event.kind"}, {"lit": "stroke"}]}, ctx)
    assert evaluate({"op": "is_null", "args": [{"var": "event.missing"}]}, ctx)
    assert evaluate({"op": "+", "args": [{"lit": 2}, {"lit": 3}]}, ctx) == 5
    assert evaluate({"op": "in", "args": [{"lit": "a"}, {"lit": ["a", "b"]}]}, ctx)


def test_expression_division_by_zero_raises():
    with pytest.raises(RuleEvaluationError, match="division by zero"):
        evaluate({"op": "/", "args": [{"lit": 1}, {"lit": 0}]}, {})


def test_expression_validation_rejects_unknown_op():
    with pytest.raises(RuleEvaluationError, match="unknown operator"):
        validate_expression({"op": "xor", "args": [{"lit": 1}, {"lit": 2}]})


def test_short_circuit_and_guards_null_comparisons():
    ctx = {"event": {"speed": None}}
    guard = {"op": "and", "args": [
        {"op": "not", "args": [{"op": "is_null", "args": [{"var": "event.speed"}]}]},
        {"op": ">=", "args": [{"var": "event.speed"}, {"lit": 10}]},
    ]}
    assert evaluate(guard, ctx) is False


# --- rule engine over the fixture --------------------------------------------

def test_default_rules_fire_on_fixture(rally_bundle):
    kinds = [f.kind for f in rally_bundle.facts]
    assert kinds.count(TacticKind.POTENTIAL_PLACEMENTS) == 6
    assert kinds.count(TacticKind.POTENTIAL_ROUTES) == 6
    assert kinds.count(TacticKind.STROKE_EFFECT) == 6
    for f in rally_bundle.facts:
        if f.kind == TacticKind.POTENTIAL_PLACEMENTS:
            check_placement_distribution(f)
    assert rally_bundle.diagnostics == []


def test_empty_rule_set_yields_no_facts(rally_bundle):
    facts, diags = run_rules([], rally_bundle.pyramid)
    assert facts == [] and diags == []


def test_two_rules_matching_same_stroke_ordered_by_rule_id(rally_bundle):
    guard = {"op": "==", "args": [{"var": "event.kind"}, {"lit": "stroke"}]}
    rules = [
        TacticRule(rule_id="r2_second", guard=guard,
                   effect={"fact_kind": "player_tactic", "value": "push_rally"}),
        TacticRule(rule_id="r1_first", guard=guard,
                   effect={"fact_kind": "stroke_effect", "value": "neutral"}),
    ]
    facts, _ = run_rules(rules, rally_bundle.pyramid)
    # Output is grouped by rule_id first, then event frame.
    rule_ids = [f.fact_id.split(":")[0] for f in facts]
    assert rule_ids == sorted(rule_ids)
    assert rule_ids[0] == "r1_first"
    assert len(facts) == 12  # 6 strokes x 2 rules
    per_stroke = {f.anchor_event for f in facts if f.fact_id.startswith("r1_first:")}
    assert per_stroke == {f.anchor_event for f in facts if f.fact_id.startswith("r2_second:")}


def test_failing_guard_recorded_as_diagnostic_others_unaffected(rally_bundle):
    rules = [
        TacticRule(rule_id="r1_boom",
                   guard={"op": "/", "args": [{"lit": 1}, {"lit": 0}]},
                   effect={"fact_kind": "stroke_effect", "value": "neutral"}),
        TacticRule(rule_id="r2_ok",
                   guard={"op": "==", "args": [{"var": "event.kind"}, {"lit": "stroke"}]},
                   effect={"fact_kind": "stroke_effect", "value": "neutral"}),
    ]
    facts, diags = run_rules(rules, rally_bundle.pyramid)
    assert len(facts) == 6
    assert all(f.fact_id.startswith("r2_ok:") for f in facts)
    assert len(diags) == 12  # every non-turn event produced a diagnostic
    assert all(d.rule_id == "r1_boom" for d in diags)
    assert "division by zero" in diags[0].message


def test_run_rules_deterministic_byte_equal(rally_bundle):
    rules = default_rules()
    a, _ = run_rules(rules, rally_bundle.pyramid)
    b, _ = run_rules(list(reversed(rules)), rally_bundle.pyramid)
    assert dump_facts(a) == dump_facts(b)


# --- imports and shadowing ----------------------------------------------------

def test_import_keystroke_attaches_to_anchor(rally_bundle, fixture_meta):
    doc = {"schema_version": 1, "facts": [
        {"kind": "key_stroke", "anchor_event": fixture_meta["key_stroke_anchor"],
         "payload": {"note": "decisive"}},
    ]}
    facts, report = import_tactics_doc(doc, rally_bundle.pyramid)
    assert report.imported == 1 and report.skipped == []
    assert facts[0].kind == TacticKind.KEY_STROKE
    assert facts[0].provenance.value == "imported"


def test_import_unresolvable_anchor_skipped_with_report(rally_bundle):
    doc = {"schema_version": 1, "facts": [
        {"kind": "key_stroke", "anchor_event": "stroke-Z-999999", "payload": {}},
    ]}
    facts, report = import_tactics_doc(doc, rally_bundle.pyramid)
    assert facts == []
    assert report.imported == 0
    assert report.skipped == [{"anchor_event": "stroke-Z-999999",
                               "reason": "unresolvable anchor"}]


def test_imported_facts_shadow_rule_facts_idempotently(rally_bundle, fixture_meta):
    anchor = fixture_meta["stroke_ids"][0]
    base = [f for f in rally_bundle.facts]
    imported = [TacticFact(
        fact_id=f"import:stroke_effect:{anchor}", kind=TacticKind.STROKE_EFFECT,
        anchor_event=anchor, payload={"value": "offensive"},
    )]
    merged_once = merge_facts(base, imported)
    merged_twice = merge_facts(merged_once, imported)
    assert dump_facts(merged_once) == dump_facts(merged_twice)
    effects = [f for f in merged_once
               if f.kind == TacticKind.STROKE_EFFECT and f.anchor_event == anchor]
    assert len(effects) == 1
    assert effects[0].payload["value"] == "offensive"


def test_reimport_same_file_is_idempotent(rally_doc):
    doc = {"schema_version": 1, "facts": [
        {"kind": "key_stroke", "anchor_event": "stroke-A-000215", "payload": {}},
    ]}
    once = build_bundle(rally_doc, tactics_doc=doc)
    base = json.loads(dump_facts(once.facts))
    merged_again = merge_facts(once.facts, import_tactics_doc(doc, once.pyramid)[0])
    assert json.loads(dump_facts(merged_again)) == base
