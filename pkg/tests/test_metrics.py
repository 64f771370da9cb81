from __future__ import annotations

import random

import pytest

from usckc.errors import ScoreTableError, ValidationError
from usckc.killchain import extrapolate_chains
from usckc.metrics import (
    ConsequenceBand,
    ConsequenceVector,
    ScoreTable,
    aggregate_consequence,
    attack_likelihood,
    attack_sophistication,
    chain_likelihood,
    chain_sophistication,
    classify_consequence_band,
    consequence_from_dict,
    scores_from_dict,
    segment_consequence,
)

from conftest import make_chain, make_step


def _chain(techniques, tactics=None):
    tactics = tactics or ["TA0040"] * len(techniques)
    return make_chain(
        "c",
        [
            make_step("out", "objective", tactic, technique)
            for tactic, technique in zip(tactics, techniques)
        ],
    )


def _table(**kwargs):
    return ScoreTable(
        tactic_sophistication=kwargs.get("tactic", {}),
        technique_sophistication=kwargs.get("technique", {}),
        technique_likelihood=kwargs.get("likelihood", {}),
    )


# ---------------------------------------------------------------------------
# sophistication


def test_defense_evasion_dominates_initial_access(scores):
    chain = _chain(["T1566", "T1070"], tactics=["TA0001", "TA0005"])
    result = chain_sophistication(chain, scores)
    assert result.max_tactic == 0.9


def test_single_step_technique_score(scores):
    chain = _chain(["T1598"], tactics=["TA0043"])
    assert chain_sophistication(chain, scores).max_technique == 0.3


def test_unscored_chain_falls_back_with_flags():
    table = _table()
    chain = _chain(["IMP-0002", "IMP-0005"])
    result = chain_sophistication(chain, table)
    assert (result.max_tactic, result.max_technique) == (0.5, 0.5)
    assert result.fallback_tactics == ("TA0040",)
    assert result.fallback_techniques == ("IMP-0002", "IMP-0005")


def test_attack_sophistication_max_and_min_of_chain_maxima():
    table = _table(technique={"A": 0.4, "B": 0.9, "C": 0.5})
    chains = [_chain(["A"]), _chain(["B"]), _chain(["C"])]
    summary = attack_sophistication(chains, table)
    assert summary.highest[1] == 0.9
    assert summary.lowest[1] == 0.4


def test_singleton_chain_set_highest_equals_lowest(scores):
    chain = _chain(["T1598"], tactics=["TA0043"])
    summary = attack_sophistication([chain], scores)
    assert summary.highest == summary.lowest == summary.per_chain[0]


def test_reference_chain_set_tactic_sophistication(rosat, graph, catalog, rules, scores):
    # Exhaustive maximum over the full extrapolated set: the defense-evasion
    # step appears in every chain, so both bounds sit at its 0.9 score.
    chains = extrapolate_chains(rosat, graph, catalog, rules)
    per_chain = [chain_sophistication(c, scores).max_tactic for c in chains.chains]
    summary = attack_sophistication(chains, scores)
    assert summary.highest[0] == max(per_chain) == 0.9
    assert summary.lowest[0] == min(per_chain) == 0.9


def test_attack_sophistication_rejects_empty(scores):
    with pytest.raises(ValidationError):
        attack_sophistication([], scores)


def test_sophistication_invariant_under_permutation():
    rng = random.Random(5)
    table = _table(technique={f"T{i}": rng.random() for i in range(20)})
    chains = [
        _chain([f"T{rng.randrange(20)}" for _ in range(rng.randint(1, 6))])
        for _ in range(10)
    ]
    base = attack_sophistication(chains, table)
    shuffled = chains[:]
    rng.shuffle(shuffled)
    permuted = attack_sophistication(shuffled, table)
    assert base.highest == permuted.highest
    assert base.lowest == permuted.lowest


# ---------------------------------------------------------------------------
# likelihood


def test_chain_likelihood_is_weakest_link():
    table = _table(likelihood={"A": 0.22, "B": 0.09, "C": 0.05, "D": 0.25})
    assert chain_likelihood(_chain(["A", "B", "C", "D"]), table) == 0.05


def test_single_step_likelihood():
    table = _table(likelihood={"A": 0.22})
    assert chain_likelihood(_chain(["A"]), table) == 0.22


def test_chain_likelihood_matches_scan_oracle():
    rng = random.Random(13)
    table = _table(likelihood={f"T{i}": rng.uniform(0.01, 1.0) for i in range(30)})
    for _ in range(200):
        techniques = [f"T{rng.randrange(30)}" for _ in range(rng.randint(1, 8))]
        chain = _chain(techniques)
        expected = sorted(table.technique_likelihood_of(t)[0] for t in techniques)[0]
        assert chain_likelihood(chain, table) == expected


def test_attack_likelihood_nasa_anchor(nasa, graph, catalog, rules, scores):
    chains = extrapolate_chains(nasa, graph, catalog, rules)
    assert chain_likelihood(chains.chains[0], scores) == pytest.approx(0.05, abs=1e-12)
    assert attack_likelihood(chains, scores) == pytest.approx(0.05, abs=1e-12)


def test_attack_likelihood_matches_nested_oracle():
    rng = random.Random(17)
    table = _table(likelihood={f"T{i}": rng.uniform(0.01, 1.0) for i in range(30)})
    for _ in range(100):
        chains = [
            _chain([f"T{rng.randrange(30)}" for _ in range(rng.randint(1, 6))])
            for _ in range(rng.randint(1, 6))
        ]
        best = None
        for chain in chains:
            worst = None
            for step in chain.steps:
                value = table.technique_likelihood_of(step.technique)[0]
                worst = value if worst is None else min(worst, value)
            best = worst if best is None else max(best, worst)
        assert attack_likelihood(chains, table) == best


def test_attack_likelihood_rejects_empty(scores):
    with pytest.raises(ValidationError):
        attack_likelihood([], scores)


def test_likelihood_bounded_by_each_step():
    table = _table(likelihood={"A": 0.4, "B": 0.7})
    chain = _chain(["A", "B"])
    value = chain_likelihood(chain, table)
    for step in chain.steps:
        assert value <= table.technique_likelihood_of(step.technique)[0]


def test_extension_monotonicity():
    rng = random.Random(23)
    table = _table(
        technique={f"T{i}": rng.random() for i in range(30)},
        likelihood={f"T{i}": rng.uniform(0.01, 1.0) for i in range(30)},
        tactic={f"TA{i}": rng.random() for i in range(10)},
    )
    for _ in range(300):
        techniques = [f"T{rng.randrange(30)}" for _ in range(rng.randint(1, 6))]
        chain = _chain(techniques)
        extended = _chain(techniques + [f"T{rng.randrange(30)}"])
        assert chain_likelihood(extended, table) <= chain_likelihood(chain, table)
        before = chain_sophistication(chain, table)
        after = chain_sophistication(extended, table)
        assert after.max_tactic >= before.max_tactic
        assert after.max_technique >= before.max_technique


def test_argmax_invariant_under_positive_rescaling():
    rng = random.Random(29)
    base = {f"T{i}": rng.uniform(0.01, 1.0) for i in range(30)}
    chains = [
        _chain([f"T{rng.randrange(30)}" for _ in range(rng.randint(1, 5))])
        for _ in range(8)
    ]

    def argmax(table):
        values = [chain_likelihood(chain, table) for chain in chains]
        return values.index(max(values))

    original = argmax(_table(likelihood=base))
    for c in (0.9, 0.5, 0.13):
        scaled = _table(likelihood={k: v * c for k, v in base.items()})
        assert argmax(scaled) == original


# ---------------------------------------------------------------------------
# score table validation


def test_score_table_range_validation():
    with pytest.raises(ScoreTableError):
        scores_from_dict({"tactic_sophistication": {"TA0001": 1.5}})
    with pytest.raises(ScoreTableError):
        scores_from_dict({"technique_likelihood": {"T1": 0.0}})
    with pytest.raises(ScoreTableError):
        scores_from_dict({"defaults": {"technique_likelihood": 0}})


def test_default_scores_pin_quoted_values(scores):
    assert scores.technique_likelihood_of("T1078") == (0.22, False)
    assert scores.technique_likelihood_of("T1210") == (0.09, False)
    assert scores.technique_likelihood_of("T1070") == (0.05, False)
    assert scores.technique_likelihood_of("T1496") == (0.25, False)
    assert scores.tactic_sophistication_of("TA0005") == (0.9, False)
    assert scores.technique_likelihood_of("IMP-0002") == (0.2, True)


# ---------------------------------------------------------------------------
# consequence


def test_bus_mean_with_uniform_weights():
    vec = ConsequenceVector(bus=(1.0, 0.0, 0.0, 0.0, 0.0, 0.0))
    out = aggregate_consequence(vec)
    assert out["space.bus"] == pytest.approx(1 / 6, abs=1e-12)


def test_all_zero_vector_aggregates_to_zero():
    out = aggregate_consequence(ConsequenceVector())
    for key, value in out.items():
        if isinstance(value, tuple):
            continue
        assert value == 0.0


def test_weighted_mean_matches_dot_product_oracle():
    rng = random.Random(31)
    for _ in range(100):
        values = tuple(rng.random() for _ in range(6))
        raw = [rng.random() for _ in range(6)]
        total = sum(raw)
        weights = [w / total for w in raw]
        vec = ConsequenceVector(bus=values)
        out = aggregate_consequence(vec, {"space.bus": weights})
        expected = sum(v * w for v, w in zip(values, weights))
        assert out["space.bus"] == pytest.approx(expected, abs=1e-12)


def test_uniform_weights_equal_arithmetic_mean():
    rng = random.Random(37)
    for _ in range(50):
        values = tuple(rng.random() for _ in range(5))
        out = aggregate_consequence(ConsequenceVector(payload=values))
        assert out["space.payload"] == pytest.approx(sum(values) / 5, abs=1e-12)


def test_cia_triples_returned_verbatim_never_aggregated():
    vec = consequence_from_dict({"link": {"SU": [0.1, 0.2, 0.7]}})
    out = aggregate_consequence(vec)
    assert out["link.SU"] == (0.1, 0.2, 0.7)
    with pytest.raises(ValidationError, match="not aggregated"):
        aggregate_consequence(vec, {"link.SU": [0.3, 0.3, 0.4]})


def test_weight_dimension_mismatch_rejected():
    with pytest.raises(ValidationError, match="expected 6"):
        aggregate_consequence(ConsequenceVector(), {"space.bus": [1.0]})
    with pytest.raises(ValidationError, match="sum to 1"):
        aggregate_consequence(ConsequenceVector(), {"user": [0.5, 0.2, 0.2]})
    with pytest.raises(ValidationError, match="nonnegative"):
        aggregate_consequence(ConsequenceVector(), {"user": [1.5, -0.25, -0.25]})


def test_unknown_link_class_rejected():
    with pytest.raises(ValidationError, match="link class"):
        consequence_from_dict({"link": {"G:GS-XX": [0, 0, 0]}})


def test_ground_pair_link_classes_accepted():
    vec = consequence_from_dict({"link": {"G:GS-MC": [0.1, 0.1, 0.1], "G:DPC-RT": [0, 0, 1]}})
    assert set(vec.link) == {"G:GS-MC", "G:DPC-RT"}


@pytest.mark.parametrize(
    "score, band",
    [
        (0.0, ConsequenceBand.SUPERFICIAL),
        (0.3, ConsequenceBand.SUPERFICIAL),
        (0.30000001, ConsequenceBand.TEMPORARY),
        (0.5, ConsequenceBand.TEMPORARY),
        (0.79999, ConsequenceBand.TEMPORARY),
        (0.8, ConsequenceBand.NON_RECOVERABLE),
        (1.0, ConsequenceBand.NON_RECOVERABLE),
    ],
)
def test_consequence_bands(score, band):
    assert classify_consequence_band(score) is band


def test_out_of_range_band_rejected():
    with pytest.raises(ValidationError):
        classify_consequence_band(1.2)
    with pytest.raises(ValidationError):
        classify_consequence_band(-0.1)


def test_segment_rollup_uses_max_cia_component():
    vec = consequence_from_dict({"link": {"SU": [0.0, 0.0, 0.7], "GU": [0.2, 0.0, 0.0]}})
    rollup = segment_consequence(vec)
    assert rollup["link"] == 0.7
    assert rollup["space"] == 0.0
