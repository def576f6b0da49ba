import itertools

import numpy as np
import pytest
from scipy import stats

from simonsieve.groups import build_group, conjugacy_class_of
from simonsieve.hsp import h_perp, make_instance
from simonsieve.recovery import (
    GF2System,
    RecoveredInvolution,
    RecoveryConfig,
    RecoveryError,
    RecoveryFailure,
    TrivialVerdict,
    char_to_row,
    identify_coordinate,
    recover,
    solve_support,
)
from simonsieve.sieve import SieveConfig, run_sieve, trial_seed_rng

S3 = build_group("S3")
Z2 = build_group("Z2")


def brute_nullspace(rows, n):
    out = []
    for x in range(2**n):
        if all(bin(r & x).count("1") % 2 == 0 for r in rows):
            out.append(x)
    return out


def test_char_to_row():
    inst = make_instance(S3, 3, 2, [2, 0, 2])
    assert char_to_row(inst, (0, 0, 0)) == 0b000
    assert char_to_row(inst, (1, 0, 1)) == 0b101
    assert char_to_row(inst, (0, 1, 0)) == 0b010
    with pytest.raises(RecoveryError):
        char_to_row(inst, (2, 0, 0))


def test_h_perp_rows_orthogonal_to_support():
    for hidden in [[2, 0, 2], [2, 2, 2], [0, 5, 0]]:
        inst = make_instance(S3, 3, 2, hidden)
        x = sum(1 << i for i, m in enumerate(hidden) if m != 0)
        for lab in h_perp(inst):
            b = char_to_row(inst, lab)
            assert bin(b & x).count("1") % 2 == 0


def test_gf2_system_and_solver():
    sys3 = GF2System(n=3)
    assert solve_support(sys3).kind == "underdetermined"
    assert len(solve_support(sys3).basis) == 3
    sys3.add_row(0b011)
    sys3.add_row(0b110)
    assert sys3.rank == 2
    sol = solve_support(sys3)
    assert sol.kind == "determined" and sol.support == 0b111
    sys3.add_row(0b101)  # dependent
    assert sys3.rank == 2
    sys3.add_row(0b001)
    assert sys3.rank == 3
    assert solve_support(sys3).support == 0


def test_gf2_against_brute_force():
    rng = np.random.default_rng(6)
    for _ in range(200):
        n = int(rng.integers(1, 8))
        rows = [int(rng.integers(0, 2**n)) for _ in range(int(rng.integers(0, n + 3)))]
        sys_ = GF2System(n=n)
        for r in rows:
            sys_.add_row(r)
        ns = brute_nullspace(rows, n)
        assert len(ns) == 2 ** (n - sys_.rank)
        basis = sys_.nullspace_basis()
        assert len(basis) == n - sys_.rank
        spanned = {0}
        for b in basis:
            spanned |= {x ^ b for x in spanned}
        assert spanned == set(ns)


def test_identify_coordinate():
    inst = make_instance(S3, 2, 2, [2, 0])
    cfg = RecoveryConfig(sieve=SieveConfig(pool_size=96, rounds=3, coins=1, seed=0), runs_per_candidate=3)
    rng = trial_seed_rng(1, 0)
    b, info = identify_coordinate(inst, 0, cfg, rng, support_bits=0b01)
    assert b == 2
    verdicts = info["verdicts"]
    for cand in conjugacy_class_of(S3, 2):
        assert verdicts[cand] == ("nontrivial" if cand == 2 else "trivial")
    with pytest.raises(RecoveryError):
        identify_coordinate(inst, 0, cfg, rng, support_bits=0b01, support_confirmed=False)


def test_recover_z2_textbook():
    inst = make_instance(Z2, 4, 1, [1, 0, 1, 1])
    cfg = RecoveryConfig(sieve=SieveConfig(pool_size=64, rounds=4, coins=1, seed=0))
    res = recover(inst, cfg, trial_seed_rng(2, 0))
    assert isinstance(res, RecoveredInvolution)
    assert res.mbar == (1, 0, 1, 1)
    triv = make_instance(Z2, 4, 1, None)
    res2 = recover(triv, cfg, trial_seed_rng(3, 0))
    assert isinstance(res2, TrivialVerdict)


def test_recover_s3_small():
    inst = make_instance(S3, 3, 2, [5, 0, 2])
    cfg = RecoveryConfig(sieve=SieveConfig(pool_size=192, rounds=4, coins=2, seed=0), runs_per_candidate=2)
    res = recover(inst, cfg, trial_seed_rng(4, 0))
    assert isinstance(res, RecoveredInvolution)
    assert res.mbar == (5, 0, 2)
    assert res.confidence["rank"] == 2  # never reaches n for nontrivial H


def test_recover_trivial_s3():
    inst = make_instance(S3, 3, 2, None)
    cfg = RecoveryConfig(sieve=SieveConfig(pool_size=192, rounds=4, coins=2, seed=0))
    res = recover(inst, cfg, trial_seed_rng(5, 0))
    assert isinstance(res, TrivialVerdict)
    assert res.confidence["rank"] == 3


def test_row_uniformity():
    # rows from sieve labels are uniform over {b: b.x = 0}
    inst = make_instance(S3, 3, 2, [2, 2, 2])
    x = 0b111
    counts = {}
    for t in range(900):
        r = run_sieve(inst, SieveConfig(pool_size=64, rounds=3, coins=1, seed=0), trial_seed_rng(50, t))
        for lab in r.final_labels:
            b = char_to_row(inst, lab)
            assert bin(b & x).count("1") % 2 == 0
            counts[b] = counts.get(b, 0) + 1
    even = [b for b in range(8) if bin(b & x).count("1") % 2 == 0]
    obs = [counts.get(b, 0) for b in even]
    assert stats.chisquare(obs).pvalue > 1e-3


def test_rank_never_reaches_n_for_nontrivial():
    inst = make_instance(S3, 3, 2, [2, 0, 2])
    sys_ = GF2System(n=3)
    for t in range(60):
        r = run_sieve(inst, SieveConfig(pool_size=48, rounds=3, coins=1, seed=0), trial_seed_rng(60, t))
        for lab in r.final_labels:
            sys_.add_row(char_to_row(inst, lab))
    assert sys_.rank <= 2
