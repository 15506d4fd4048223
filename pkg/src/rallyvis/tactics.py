"""Tactic-level facts: expert-rule inference plus external imports.

The flagship rule: a player who receives the ball at their end line can
only return it to the opponent's end line, which restricts the potential
placement distribution to that row. Key strokes cannot be inferred here
and arrive only via `import_tactics`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

from . import rules as rule_lang
from .events import Event, EventKind
from .geometry import END_LINE_ROW, PlacementCell, TableGrid
from .jsonio import canonical_dumps, read_json

RULES_VERSION = 1
TACTICS_VERSION = 1

PLACEMENT_SUM_TOL = 1e-9


class TacticError(ValueError):
    pass


class TacticKind(str, Enum):
    POTENTIAL_ROUTES = "potential_routes"
    POTENTIAL_PLACEMENTS = "potential_placements"
    STROKE_EFFECT = "stroke_effect"
    PLAYER_TACTIC = "player_tactic"
    KEY_STROKE = "key_stroke"


class Provenance(str, Enum):
    RULE_ENGINE = "rule_engine"
    IMPORTED = "imported"


@dataclass
class TacticFact:
    fact_id: str
    kind: TacticKind
    anchor_event: str
    payload: dict
    provenance: Provenance = Provenance.RULE_ENGINE

    def to_dict(self) -> dict:
        return {
            "fact_id": self.fact_id,
            "kind": self.kind.value,
            "anchor_event": self.anchor_event,
            "payload": self.payload,
            "provenance": self.provenance.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TacticFact":
        return cls(
            fact_id=d["fact_id"],
            kind=TacticKind(d["kind"]),
            anchor_event=d["anchor_event"],
            payload=dict(d["payload"]),
            provenance=Provenance(d.get("provenance", "rule_engine")),
        )


@dataclass(frozen=True)
class TacticRule:
    rule_id: str
    guard: dict
    effect: dict

    def validate(self) -> None:
        rule_lang.validate_expression(self.guard)
        kind = self.effect.get("fact_kind")
        if kind is None:
            raise TacticError(f"rule {self.rule_id}: effect missing fact_kind")
        TacticKind(kind)


@dataclass
class RuleDiagnostic:
    rule_id: str
    event_id: str
    message: str


def load_rules(path: str | Path) -> list[TacticRule]:
    doc = read_json(path)
    if doc.get("schema_version") != RULES_VERSION:
        raise TacticError(f"unsupported rules schema_version: {doc.get('schema_version')!r}")
    parsed = [TacticRule(rule_id=r["rule_id"], guard=r["guard"], effect=r["effect"])
              for r in doc["rules"]]
    seen = set()
    for r in parsed:
        if r.rule_id in seen:
            raise TacticError(f"duplicate rule_id: {r.rule_id}")
        seen.add(r.rule_id)
        r.validate()
    return sorted(parsed, key=lambda r: r.rule_id)


def default_rules() -> list[TacticRule]:
    return load_rules(Path(__file__).parent / "data" / "default_rules.json")


def _reception_cell(event: Event) -> Optional[dict]:
    return event.attributes.get("reception")


def infer_potential_placements(stroke: Event, grid: TableGrid,
                               prior: Optional[list[float]] = None,
                               fact_id: Optional[str] = None) -> TacticFact:
    """Placement distribution over the opponent 3x3 grid for a stroke.

    End-line receptions restrict the support to the opponent end-line row
    (uniform over it); otherwise the prior (default uniform) covers all
    nine cells. Weights are renormalized by their exact sum.
    """
    if stroke.hit_frame is None:
        raise TacticError(f"stroke {stroke.event_id} has no hit frame")
    reception = _reception_cell(stroke)
    if reception is None:
        raise TacticError(f"stroke {stroke.event_id} has no reception position")
    opponent = grid.opponent_half(reception["half"])
    if int(reception["row"]) == END_LINE_ROW:
        cells = [(opponent, END_LINE_ROW, col) for col in range(3)]
        weights = [1.0, 1.0, 1.0]
    else:
        cells = grid.half_cells(opponent)
        if prior is None:
            weights = [1.0] * 9
        else:
            if len(prior) != 9:
                raise TacticError("placement prior must have 9 weights (row-major)")
            weights = [float(w) for w in prior]
    total = sum(weights)
    if total <= 0 or any(w < 0 for w in weights):
        raise TacticError("placement prior weights must be non-negative with positive sum")
    payload_cells = []
    for (half, row, col), w in zip(cells, weights):
        center = grid.cell_center(half, row, col)
        payload_cells.append({
            "half": half, "row": row, "col": col,
            "p": w / total,
            "center": [center[0], center[1]],
        })
    payload_cells.sort(key=lambda c: (c["row"], c["col"]))
    return TacticFact(
        fact_id=fact_id or f"placements:{stroke.event_id}",
        kind=TacticKind.POTENTIAL_PLACEMENTS,
        anchor_event=stroke.event_id,
        payload={"cells": payload_cells, "reception": reception},
    )


#: Arc lift as a fraction of the chord length for route arcs.
ROUTE_LIFT = 0.25


def infer_potential_routes(placements: TacticFact,
                           ball_position: tuple[float, float],
                           fact_id: Optional[str] = None) -> TacticFact:
    """One quadratic screen-space arc per supported placement cell."""
    if placements.kind != TacticKind.POTENTIAL_PLACEMENTS:
        raise TacticError("routes require a potential_placements fact")
    supported = [c for c in placements.payload["cells"] if c["p"] > 0.0]
    if not supported:
        raise TacticError("placement distribution has empty support")
    routes = []
    sx, sy = ball_position
    for cell in supported:
        ex, ey = cell["center"]
        chord = math.hypot(ex - sx, ey - sy)
        control = ((sx + ex) / 2.0, min(sy, ey) - ROUTE_LIFT * chord)
        routes.append({
            "cell": {"half": cell["half"], "row": cell["row"], "col": cell["col"]},
            "p": cell["p"],
            "start": [sx, sy],
            "control": [control[0], control[1]],
            "end": [ex, ey],
        })
    return TacticFact(
        fact_id=fact_id or f"routes:{placements.anchor_event}",
        kind=TacticKind.POTENTIAL_ROUTES,
        anchor_event=placements.anchor_event,
        payload={"routes": routes},
    )


def _event_context(event: Event, video) -> dict:
    reception = event.attributes.get("reception")
    return {
        "event": {
            "kind": event.kind.value,
            "subject": event.subject,
            "start": event.span[0],
            "end": event.span[1],
            "hit_frame": event.hit_frame,
            "technique": event.attributes.get("technique"),
            "speed_at_hit": event.attributes.get("speed_at_hit"),
            "attr": event.attributes,
        },
        "reception": reception or {},
        "video": {"width": video.width, "height": video.height, "fps": video.fps},
    }


def _apply_effect(rule: TacticRule, event: Event, context,
                  grid: TableGrid) -> TacticFact:
    effect = rule.effect
    kind = TacticKind(effect["fact_kind"])
    fact_id = f"{rule.rule_id}:{event.event_id}"
    if kind == TacticKind.POTENTIAL_PLACEMENTS:
        prior = effect.get("weights")
        prior_list = prior if isinstance(prior, list) else None
        return infer_potential_placements(event, grid, prior=prior_list, fact_id=fact_id)
    if kind in (TacticKind.STROKE_EFFECT, TacticKind.PLAYER_TACTIC):
        return TacticFact(fact_id=fact_id, kind=kind, anchor_event=event.event_id,
                          payload={"value": effect["value"], "subject": event.subject})
    raise TacticError(f"rule {rule.rule_id}: effect kind {kind.value} cannot be rule-produced")


def run_rules(ruleset: list[TacticRule], ctx) -> tuple[list[TacticFact], list[RuleDiagnostic]]:
    """Evaluate rules in rule_id order against every event in the context.

    `ctx` must expose `events`, `grid`, `track`, and `dataset` (the pyramid
    does). A guard that raises is recorded as a diagnostic; other rules are
    unaffected. Output is ordered by (rule_id, event frame).
    """
    facts: list[TacticFact] = []
    diagnostics: list[RuleDiagnostic] = []
    ordered_rules = sorted(ruleset, key=lambda r: r.rule_id)
    ordered_events = sorted(ctx.events, key=lambda e: (e.span[0], e.event_id))
    for rule in ordered_rules:
        for event in ordered_events:
            if event.kind == EventKind.TURN:
                continue
            context = _event_context(event, ctx.dataset.video)
            try:
                if not rule_lang.evaluate(rule.guard, context):
                    continue
                facts.append(_apply_effect(rule, event, context, ctx.grid))
            except (rule_lang.RuleEvaluationError, TacticError) as exc:
                diagnostics.append(RuleDiagnostic(rule.rule_id, event.event_id, str(exc)))
    return facts, diagnostics


def derive_route_facts(facts: list[TacticFact], ctx) -> list[TacticFact]:
    """Attach a route fact to every placements fact whose anchor stroke has
    a resolvable ball position at the hit frame.
    """
    events_by_id = {e.event_id: e for e in ctx.events}
    routes: list[TacticFact] = []
    for fact in facts:
        if fact.kind != TacticKind.POTENTIAL_PLACEMENTS:
            continue
        anchor = events_by_id.get(fact.anchor_event)
        if anchor is None or anchor.hit_frame is None:
            continue
        position = ctx.track.centers[anchor.hit_frame]
        if position is None:
            continue
        routes.append(infer_potential_routes(fact, position))
    return routes


def merge_facts(base: list[TacticFact], incoming: list[TacticFact]) -> list[TacticFact]:
    """Merge fact lists; incoming facts shadow base facts that share the
    same (kind, anchor_event) pair. Idempotent.
    """
    shadowed = {(f.kind, f.anchor_event) for f in incoming}
    kept = [f for f in base if (f.kind, f.anchor_event) not in shadowed]
    return kept + sorted(incoming, key=lambda f: (f.kind.value, f.anchor_event, f.fact_id))


@dataclass
class ImportReport:
    imported: int = 0
    skipped: list[dict] = field(default_factory=list)


def import_tactics(path: str | Path, ctx) -> tuple[list[TacticFact], ImportReport]:
    """Load externally produced tactic facts (e.g. key strokes) and anchor
    them to events; unresolvable anchors are reported and skipped.
    """
    doc = read_json(path)
    return import_tactics_doc(doc, ctx)


def import_tactics_doc(doc: dict, ctx) -> tuple[list[TacticFact], ImportReport]:
    if doc.get("schema_version") != TACTICS_VERSION:
        raise TacticError(f"unsupported tactics schema_version: {doc.get('schema_version')!r}")
    known = {e.event_id for e in ctx.events}
    report = ImportReport()
    facts: list[TacticFact] = []
    for raw in doc.get("facts", []):
        kind = TacticKind(raw["kind"])
        anchor = raw["anchor_event"]
        if anchor not in known:
            report.skipped.append({"anchor_event": anchor, "reason": "unresolvable anchor"})
            continue
        facts.append(TacticFact(
            fact_id=f"import:{kind.value}:{anchor}",
            kind=kind,
            anchor_event=anchor,
            payload=dict(raw.get("payload", {})),
            provenance=Provenance.IMPORTED,
        ))
        report.imported += 1
    return facts, report


def dump_facts(facts: list[TacticFact]) -> str:
    return canonical_dumps({"schema_version": TACTICS_VERSION,
                            "facts": [f.to_dict() for f in facts]})


def check_placement_distribution(fact: TacticFact) -> None:
    """Invariant check: probabilities non-negative and summing to 1."""
    cells = fact.payload["cells"]
    total = sum(c["p"] for c in cells)
    if any(c["p"] < 0 for c in cells) or abs(total - 1.0) > PLACEMENT_SUM_TOL:
        raise TacticError(f"fact {fact.fact_id}: invalid placement distribution (sum={total})")
