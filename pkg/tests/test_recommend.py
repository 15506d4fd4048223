import random

import pytest

from rallyvis.design_space import (
    ClipAnnotation,
    DataLevel,
    NarrativeOrder,
)
from rallyvis.fixtures import make_corpus
from rallyvis.recommend import (
    DEFAULT_FALLBACK_TABLE,
    MappingStats,
    RecommendError,
    compile_stats,
    conditional_probability,
    default_order_for_level,
    order_ratios,
    recommend,
)

VISUALS = ["arrow", "dot", "heatmap_region", "label", "polyline", "region"]
ATTRS = ["ball_trajectory", "ball_rotation_speed", "potential_placements",
         "player_position", "stroke_technique"]


def _stats_from_counts(counts: dict) -> MappingStats:
    stats = MappingStats()
    stats.counts = dict(counts)
    return stats


def test_compile_stats_fixture_corpus_ratios():
    stats = compile_stats(make_corpus())
    assert stats.clip_count == 40
    assert stats.order_totals[NarrativeOrder.LINEAR] == 21
    ratios = order_ratios(stats)
    assert ratios["linear"] == pytest.approx(0.525)


def test_compile_stats_empty_corpus():
    stats = compile_stats([])
    assert stats.clip_count == 0
    assert stats.counts == {}
    assert order_ratios(stats)["linear"] == 0.0


def test_compile_stats_single_clip_counts():
    clip = ClipAnnotation(clip_id="c", sport="table_tennis",
                          data_level=DataLevel.OBJECT,
                          narrative_order=NarrativeOrder.FLASH_FORWARD,
                          mappings=[("ball_trajectory", "polyline")])
    stats = compile_stats([clip])
    assert stats.counts == {("ball_trajectory", "polyline", NarrativeOrder.FLASH_FORWARD): 1}
    assert stats.order_totals == {NarrativeOrder.FLASH_FORWARD: 1}
    assert stats.level_order_counts == {(DataLevel.OBJECT, NarrativeOrder.FLASH_FORWARD): 1}


def test_conditional_probability_example():
    stats = _stats_from_counts({
        ("ball_trajectory", "polyline", NarrativeOrder.LINEAR): 5,
        ("ball_trajectory", "arrow", NarrativeOrder.LINEAR): 3,
    })
    p = conditional_probability(stats, "ball_trajectory", "polyline", NarrativeOrder.LINEAR)
    assert p == pytest.approx(0.625)
    assert conditional_probability(stats, "unseen", "dot", NarrativeOrder.LINEAR) == 0.0
    assert conditional_probability(stats, "ball_trajectory", "polyline",
                                   NarrativeOrder.ZIGZAG) == 0.0


def test_conditional_probability_sums_to_one():
    # Oracle: explicit summation over the full count table.
    rng = random.Random(7)
    counts = {}
    for _ in range(30):
        key = (rng.choice(ATTRS), rng.choice(VISUALS), rng.choice(list(NarrativeOrder)))
        counts[key] = counts.get(key, 0) + rng.randint(1, 9)
    stats = _stats_from_counts(counts)
    for order in NarrativeOrder:
        total = sum(conditional_probability(stats, d, v, order)
                    for d in ATTRS for v in VISUALS)
        if any(o == order for (_, _, o) in counts):
            assert abs(total - 1.0) <= 1e-12
        else:
            assert total == 0.0


def _brute_force_argmax(counts, attribute, order):
    candidates = {v: c for (d, v, o), c in counts.items()
                  if d == attribute and o == order and c > 0}
    if not candidates:
        return None
    best = max(candidates.values())
    return min(v for v, c in candidates.items() if c == best)


def test_recommend_matches_corpus_argmax():
    stats = _stats_from_counts({
        ("ball_trajectory", "polyline", NarrativeOrder.FLASH_FORWARD): 5,
        ("ball_trajectory", "arrow", NarrativeOrder.FLASH_FORWARD): 3,
    })
    rec = recommend(stats, "ball_trajectory", NarrativeOrder.FLASH_FORWARD)
    assert rec.visual == "polyline"
    assert rec.source == "corpus"
    assert rec.probability == pytest.approx(5 / 8)


def test_recommend_tie_breaks_lexicographically():
    stats = _stats_from_counts({
        ("ball_trajectory", "polyline", NarrativeOrder.FLASH_FORWARD): 4,
        ("ball_trajectory", "arrow", NarrativeOrder.FLASH_FORWARD): 4,
    })
    assert recommend(stats, "ball_trajectory", NarrativeOrder.FLASH_FORWARD).visual == "arrow"


def test_recommend_falls_back_when_no_records():
    stats = MappingStats()
    rec = recommend(stats, "ball_rotation_speed", NarrativeOrder.ZIGZAG)
    assert rec.visual == "label"
    assert rec.source == "fallback"
    assert rec.probability is None


def test_recommend_error_when_no_fallback():
    with pytest.raises(RecommendError, match="no visual available"):
        recommend(MappingStats(), "ball_position", NarrativeOrder.LINEAR,
                  fallback_table={})


def test_recommend_unknown_attribute_rejected():
    from rallyvis.design_space import DesignSpaceError
    with pytest.raises(DesignSpaceError, match="unknown attribute"):
        recommend(MappingStats(), "nonexistent", NarrativeOrder.LINEAR)


def test_recommend_oracle_equivalence_many_random_tables():
    rng = random.Random(42)
    orders = list(NarrativeOrder)
    for trial in range(200):
        counts = {}
        for _ in range(rng.randint(0, 25)):
            key = (rng.choice(ATTRS), rng.choice(VISUALS), rng.choice(orders))
            counts[key] = counts.get(key, 0) + rng.randint(1, 12)
        stats = _stats_from_counts(counts)
        attr = rng.choice(ATTRS)
        order = rng.choice(orders)
        expected = _brute_force_argmax(counts, attr, order)
        rec = recommend(stats, attr, order)
        if expected is None:
            assert rec.source == "fallback"
            assert rec.visual == DEFAULT_FALLBACK_TABLE[attr]
        else:
            assert rec.source == "corpus"
            assert rec.visual == expected


def test_argmax_invariant_under_uniform_scaling():
    rng = random.Random(9)
    counts = {}
    for _ in range(20):
        key = (rng.choice(ATTRS), rng.choice(VISUALS), NarrativeOrder.LINEAR)
        counts[key] = counts.get(key, 0) + rng.randint(1, 12)
    stats = _stats_from_counts(counts)
    scaled = _stats_from_counts({k: 7 * c for k, c in counts.items()})
    for attr in ATTRS:
        a = recommend(stats, attr, NarrativeOrder.LINEAR)
        b = recommend(scaled, attr, NarrativeOrder.LINEAR)
        assert a.visual == b.visual
        assert a.source == b.source


def test_adding_count_never_lowers_rank():
    counts = {
        ("ball_trajectory", "polyline", NarrativeOrder.LINEAR): 3,
        ("ball_trajectory", "arrow", NarrativeOrder.LINEAR): 3,
        ("ball_trajectory", "dot", NarrativeOrder.LINEAR): 1,
    }

    def rank_of(stats, visual):
        ranked = sorted(
            (v for (_, v, _) in stats.counts), key=lambda v: (
                -stats.counts.get(("ball_trajectory", v, NarrativeOrder.LINEAR), 0), v))
        return ranked.index(visual)

    before = rank_of(_stats_from_counts(counts), "polyline")
    counts[("ball_trajectory", "polyline", NarrativeOrder.LINEAR)] += 1
    after = rank_of(_stats_from_counts(counts), "polyline")
    assert after <= before


def test_default_order_for_level():
    assert default_order_for_level(MappingStats(), DataLevel.OBJECT) == NarrativeOrder.LINEAR
    stats = MappingStats()
    stats.level_order_counts = {
        (DataLevel.TACTIC, NarrativeOrder.FLASH_FORWARD): 10,
        (DataLevel.TACTIC, NarrativeOrder.LINEAR): 6,
    }
    assert default_order_for_level(stats, DataLevel.TACTIC) == NarrativeOrder.FLASH_FORWARD
    # Fixture corpus: object level is (almost) exclusively linear.
    corpus_stats = compile_stats(make_corpus())
    assert default_order_for_level(corpus_stats, DataLevel.OBJECT) == NarrativeOrder.LINEAR


def test_default_order_tie_prefers_linear():
    stats = MappingStats()
    stats.level_order_counts = {
        (DataLevel.EVENT, NarrativeOrder.LINEAR): 4,
        (DataLevel.EVENT, NarrativeOrder.ZIGZAG): 4,
    }
    assert default_order_for_level(stats, DataLevel.EVENT) == NarrativeOrder.LINEAR


def test_recommendations_deterministic_across_runs():
    stats = compile_stats(make_corpus())
    lists = []
    for _ in range(2):
        lists.append([
            (a, recommend(stats, a, o).visual)
            for a in sorted(DEFAULT_FALLBACK_TABLE)
            for o in NarrativeOrder
        ])
    assert lists[0] == lists[1]
