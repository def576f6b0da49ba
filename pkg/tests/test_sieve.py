from collections import Counter

import numpy as np
import pytest
from scipy import stats

from simonsieve.groups import build_group
from simonsieve.hsp import h_perp, make_instance
from simonsieve.reps import compute_catalog, dual_rep, tensor_one_dim
from simonsieve.sieve import (
    DECISION_NONTRIVIAL,
    DECISION_TRIVIAL,
    INCONCLUSIVE_EXTINCTION,
    SieveConfig,
    default_coins,
    default_pool_size,
    default_rounds,
    missing_for_support,
    pairing_key,
    progress_stats,
    run_sieve,
    run_trials,
    trial_seed_rng,
    weight,
)

S3 = build_group("S3")
CAT3 = compute_catalog(S3)
Z2 = build_group("Z2")


def test_defaults():
    assert default_rounds(1) == 1
    assert default_coins(1) == 1
    assert default_rounds(4) == 17  # ceil(6 sqrt(4 * 2))
    assert default_coins(4) == 2  # ceil(sqrt(4 / 2))
    assert default_pool_size(1) == 4
    assert default_pool_size(64) == 2**16  # capped
    with pytest.raises(ValueError):
        SieveConfig(pool_size=1, rounds=1, coins=1)


def test_weight():
    assert weight(CAT3, (0, 1, 0)) == 0
    assert weight(CAT3, (2, 1, 2)) == 2
    assert weight(CAT3, (2, 2, 2)) == 3


def test_pairing_key_active_indices():
    key = pairing_key(CAT3, (2, 0, 2, 1), (0, 1))
    assert key.active_indices == (0, 2)
    assert key.inactive_profile == ((1, 0), (3, 1))
    key1 = pairing_key(CAT3, (2, 0, 2, 1), (0,))
    assert key1.active_indices == (0,)


def test_pairing_key_weight_zero_matches_on_coins():
    k1 = pairing_key(CAT3, (0, 1), (0, 1))
    k2 = pairing_key(CAT3, (1, 0), (0, 1))
    k3 = pairing_key(CAT3, (1, 1), (1, 1))
    assert k1 == k2  # inactive one-dim profile is not part of the match
    assert k1 != k3  # coins differ


def test_pairing_partnership_symmetry():
    rng = np.random.default_rng(0)
    one_dims = CAT3.one_dim_indices
    for _ in range(300):
        n = int(rng.integers(1, 6))
        label = tuple(int(rng.integers(0, 3)) for _ in range(n))
        k = int(rng.integers(1, 3))
        coins = tuple(int(rng.choice(one_dims)) for _ in range(k))
        key = pairing_key(CAT3, label, coins)
        # construct a partner: replace each active coordinate by dual (x) psi
        partner = list(label)
        for j, i in enumerate(key.active_indices):
            if rng.random() < 0.5:
                partner[i] = tensor_one_dim(CAT3, dual_rep(CAT3, label[i]), coins[j])
        pkey = pairing_key(CAT3, tuple(partner), coins)
        assert pkey == key
        # and the relation read back from the key: sigma_i in {rho_i, dual x psi}
        for j, i in enumerate(key.active_indices):
            allowed = {label[i], tensor_one_dim(CAT3, dual_rep(CAT3, label[i]), coins[j])}
            assert partner[i] in allowed


def test_missing_for_support():
    inst = make_instance(S3, 3, 2, [2, 0, 2])
    assert missing_for_support(inst, (1, 0, 0), (0, 2))
    assert not missing_for_support(inst, (1, 0, 1), (0, 2))
    assert missing_for_support(inst, (1, 1, 1), (0, 1, 2))


def test_z2_sieve_decisions():
    # original Simon: all labels weight 0 from the start
    triv = make_instance(Z2, 3, 1, None)
    res = run_trials(triv, SieveConfig(pool_size=32, rounds=3, coins=1, seed=3), 40)
    decisions = Counter(r.decision for r in res)
    assert decisions[DECISION_TRIVIAL] >= 35  # odd character appears w.h.p.
    inst = make_instance(Z2, 3, 1, [1, 1, 0])
    res = run_trials(inst, SieveConfig(pool_size=32, rounds=3, coins=1, seed=4), 40)
    assert all(r.decision != DECISION_TRIVIAL for r in res)


def test_sieve_s3_nontrivial_never_trivial():
    inst = make_instance(S3, 4, 2, [2, 2, 5, 1])
    results = run_trials(inst, SieveConfig(pool_size=128, rounds=4, coins=2, seed=9, check_missing=True), 25)
    for r in results:
        assert r.decision != DECISION_TRIVIAL
        assert r.max_missing_mass < 1e-12
        for lab in r.final_labels:
            assert weight(CAT3, lab) == 0


def test_extinction_reported():
    inst = make_instance(S3, 4, 2, [2, 2, 2, 2])
    res = run_sieve(inst, SieveConfig(pool_size=2, rounds=6, coins=2, seed=0))
    assert res.decision == INCONCLUSIVE_EXTINCTION
    assert res.extinction_round is not None
    assert res.final_labels == []


def test_determinism():
    inst = make_instance(S3, 3, 2, [2, 2, 2])
    cfg = SieveConfig(pool_size=64, rounds=3, coins=1, seed=77)
    r1 = run_sieve(inst, cfg, trial_seed_rng(5, 0))
    r2 = run_sieve(inst, cfg, trial_seed_rng(5, 0))
    assert r1.decision == r2.decision
    assert r1.final_labels == r2.final_labels
    assert r1.survivors_per_round == r2.survivors_per_round


def test_trajectories_and_progress_stats():
    inst = make_instance(S3, 4, 2, [2, 2, 2, 2])
    cfg = SieveConfig(pool_size=96, rounds=4, coins=2, seed=1, keep_trajectories=True)
    res = run_sieve(inst, cfg)
    assert res.events is not None and len(res.events) == res.combine_count
    for ev in res.events:
        assert ev.child_weight <= max(ev.parent_weights) + 4  # weights bounded by n
    ps = progress_stats(res, n=4)
    assert ps.total_combines == res.combine_count
    assert ps.condition1 + ps.condition2 + ps.condition3 >= ps.any_condition
    assert 0.0 <= ps.frequency <= 1.0
    with pytest.raises(ValueError):
        progress_stats(run_sieve(inst, SieveConfig(pool_size=16, rounds=2, coins=1, seed=0)), n=4)


def test_progress_stats_classification():
    from simonsieve.sieve import CombineEvent, SieveResult

    events = [
        CombineEvent(1, ((2, 2), (2, 2)), (4, 4), (0, 0), 0, 0.5, None),  # condition 1
        CombineEvent(1, ((2, 2), (2, 2)), (4, 3), (2, 2), 2, 0.5, None),  # heavy parents, drop 2
        CombineEvent(1, ((2, 2), (2, 2)), (1, 1), (2, 2), 1, 0.5, None),  # light parents, no drop... drop 0
    ]
    res = SieveResult(
        decision=DECISION_NONTRIVIAL, final_labels=[], survivors_per_round=[],
        discarded_per_round=[], rounds_completed=1, events=events,
    )
    ps = progress_stats(res, n=16)  # threshold = sqrt(16/4) = 2
    assert ps.condition1 == 1
    # conditions are not exclusive: the weight-0 child of heavy parents also
    # counts as a large absolute drop
    assert ps.condition2 == 2
    assert ps.condition3 == 0  # third event: parents 1 < 2 but drop 0 < 0.25
    assert ps.any_condition == 2


def test_final_label_uniformity_small():
    # trivial: uniform over all 4 one-dim labels of S3^2
    inst = make_instance(S3, 2, 2, None)
    counts = Counter()
    for t in range(1200):
        r = run_sieve(inst, SieveConfig(pool_size=48, rounds=3, coins=1, seed=0), trial_seed_rng(100, t))
        if r.decided and r.final_labels:
            counts[r.final_labels[0]] += 1
    obs = [counts.get(lab, 0) for lab in [(0, 0), (0, 1), (1, 0), (1, 1)]]
    assert stats.chisquare(obs).pvalue > 1e-3
    # nontrivial: uniform over h_perp
    instn = make_instance(S3, 2, 2, [2, 2])
    hp = sorted(h_perp(instn))
    countsn = Counter()
    for t in range(1200):
        r = run_sieve(instn, SieveConfig(pool_size=48, rounds=3, coins=1, seed=0), trial_seed_rng(101, t))
        if r.decided and r.final_labels:
            lab = r.final_labels[0]
            assert lab in set(hp)
            countsn[lab] += 1
    assert stats.chisquare([countsn.get(l, 0) for l in hp]).pvalue > 1e-3
