"""Frequency-based visual-mapping recommendation.

Corpus annotations are aggregated into count tables keyed by (attribute,
visual, narrative order); recommending a visual for an attribute under an
order is an argmax over the conditional frequency, with a fixed
effectiveness-ranked fallback table when the corpus has no records. No
smoothing: a zero count means fallback, exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .design_space import (
    DEFAULT_REGISTRY,
    ClipAnnotation,
    DataLevel,
    DesignSpaceError,
    NarrativeOrder,
    Registry,
)
from .jsonio import read_json

PROBABILITY_SUM_TOL = 1e-12


class RecommendError(ValueError):
    pass


@dataclass
class MappingStats:
    """Aggregated corpus counts.

    `counts` counts mapping occurrences; `order_totals` and
    `level_order_counts` count clips (one clip contributes one order but
    many mappings).
    """

    counts: dict[tuple[str, str, NarrativeOrder], int] = field(default_factory=dict)
    order_totals: dict[NarrativeOrder, int] = field(default_factory=dict)
    level_order_counts: dict[tuple[DataLevel, NarrativeOrder], int] = field(default_factory=dict)
    clip_count: int = 0


@dataclass(frozen=True)
class Recommendation:
    attribute: str
    visual: str
    source: str  # "corpus" | "fallback"
    probability: Optional[float] = None

    def to_dict(self) -> dict:
        return {"attribute": self.attribute, "visual": self.visual,
                "source": self.source, "probability": self.probability}


def compile_stats(annotations: list[ClipAnnotation]) -> MappingStats:
    stats = MappingStats()
    for clip in annotations:
        order = clip.narrative_order
        stats.clip_count += 1
        stats.order_totals[order] = stats.order_totals.get(order, 0) + 1
        key = (clip.data_level, order)
        stats.level_order_counts[key] = stats.level_order_counts.get(key, 0) + 1
        for attr, visual in clip.mappings:
            ckey = (attr, visual, order)
            stats.counts[ckey] = stats.counts.get(ckey, 0) + 1
    return stats


def conditional_probability(stats: MappingStats, attribute: str, visual: str,
                            order: NarrativeOrder) -> float:
    """p((attribute, visual) | order) under per-mapping normalization."""
    denominator = sum(c for (_, _, o), c in stats.counts.items() if o == order)
    if denominator == 0:
        return 0.0
    return stats.counts.get((attribute, visual, order), 0) / denominator


#: Effectiveness-ranked default visuals, used when the corpus has no
#: records for (attribute, order).
DEFAULT_FALLBACK_TABLE: dict[str, str] = {
    "ball_position": "dot",
    "ball_trajectory": "polyline",
    "ball_rotation_speed": "label",
    "ball_placement": "region",
    "player_position": "bounding_box",
    "player_trajectory": "polyline",
    "player_posture": "skeleton",
    "player_name": "label",
    "stroke_technique": "label",
    "potential_placements": "heatmap_region",
    "potential_routes": "polyline",
    "stroke_effect": "label",
    "player_tactic": "label",
    "key_stroke": "spotlight",
}


def load_fallback_table(path: str | Path, registry: Registry = DEFAULT_REGISTRY) -> dict[str, str]:
    doc = read_json(path)
    table = dict(doc.get("fallback", doc))
    for attr, visual in table.items():
        registry.attribute(attr)
        registry.visual(visual)
    return table


def recommend(stats: MappingStats, attribute: str, order: NarrativeOrder,
              fallback_table: Optional[dict[str, str]] = None,
              registry: Registry = DEFAULT_REGISTRY) -> Recommendation:
    """Visual with the highest corpus count for (attribute, order); ties
    break lexicographically by visual name. Falls back to the fixed table
    when the corpus has no records for the pair.
    """
    registry.attribute(attribute)
    if fallback_table is None:
        fallback_table = DEFAULT_FALLBACK_TABLE
    candidates = {v: c for (a, v, o), c in stats.counts.items()
                  if a == attribute and o == order and c > 0}
    if candidates:
        best = min(candidates, key=lambda v: (-candidates[v], v))
        denominator = sum(c for (_, _, o), c in stats.counts.items() if o == order)
        return Recommendation(attribute=attribute, visual=best, source="corpus",
                              probability=candidates[best] / denominator)
    visual = fallback_table.get(attribute)
    if visual is None:
        raise RecommendError(f"no visual available for {attribute!r}")
    return Recommendation(attribute=attribute, visual=visual, source="fallback")


def default_order_for_level(stats: MappingStats, level: DataLevel) -> NarrativeOrder:
    """Most frequent order for clips at a level; ties and empty stats give
    the chronological default.
    """
    counts = {o: c for (lv, o), c in stats.level_order_counts.items()
              if lv == level and c > 0}
    if not counts:
        return NarrativeOrder.LINEAR
    best = max(counts.values())
    tied = [o for o, c in counts.items() if c == best]
    if len(tied) == 1:
        return tied[0]
    if NarrativeOrder.LINEAR in tied:
        return NarrativeOrder.LINEAR
    declaration = list(NarrativeOrder)
    return min(tied, key=declaration.index)


def order_ratios(stats: MappingStats) -> dict[str, float]:
    """Share of corpus clips per narrative order (for `corpus stats`)."""
    if stats.clip_count == 0:
        return {o.value: 0.0 for o in NarrativeOrder}
    return {o.value: stats.order_totals.get(o, 0) / stats.clip_count
            for o in NarrativeOrder}


def stats_report(stats: MappingStats) -> dict:
    return {
        "clip_count": stats.clip_count,
        "order_ratios": order_ratios(stats),
        "order_totals": {o.value: stats.order_totals.get(o, 0) for o in NarrativeOrder},
        "level_order_counts": {
            f"{lv.token}/{o.value}": c
            for (lv, o), c in sorted(stats.level_order_counts.items())
        },
    }
