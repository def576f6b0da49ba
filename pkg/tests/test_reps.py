import itertools

import numpy as np
import pytest

from simonsieve.groups import build_group, commutator_subgroup
from simonsieve.reps import (
    RepError,
    cg_multiplicities,
    cg_transform,
    compute_catalog,
    dual_rep,
    fourier_matrix,
    fourier_row_blocks,
    one_dim_reps,
    product_rep_value,
    tensor_one_dim,
)

GROUPS = ["Z1", "Z2", "Z3", "Z4", "Z6", "D3", "D4", "D6", "S3", "S4", "Q8", "W(Z2)"]


def test_dims_and_sum_of_squares():
    expected = {"Z2": [1, 1], "S3": [1, 1, 2], "Q8": [1, 1, 1, 1, 2], "S4": [1, 1, 2, 3, 3]}
    for name, dims in expected.items():
        G = build_group(name)
        cat = compute_catalog(G)
        assert [r.dim for r in cat.irreps] == dims
        assert sum(r.dim**2 for r in cat.irreps) == G.order


def test_z2_characters():
    cat = compute_catalog(build_group("Z2"))
    assert np.allclose(cat.irreps[0].character, [1, 1])
    assert np.allclose(cat.irreps[1].character, [1, -1])


def test_homomorphism_unitarity_irreducibility():
    rng = np.random.default_rng(0)
    for name in GROUPS:
        G = build_group(name)
        cat = compute_catalog(G)
        for irr in cat.irreps:
            eye = np.eye(irr.dim)
            for g in G.elements():
                M = irr.matrices[g]
                assert np.abs(M @ M.conj().T - eye).max() < 1e-9
                for h in G.elements():
                    assert np.abs(irr.matrices[G.mul[g][h]] - M @ irr.matrices[h]).max() < 1e-9
            # Schur commutant test with a fresh random Hermitian
            X = rng.standard_normal((irr.dim, irr.dim)) + 1j * rng.standard_normal((irr.dim, irr.dim))
            X = X + X.conj().T
            C = sum(irr.matrices[g] @ X @ irr.matrices[g].conj().T for g in G.elements()) / G.order
            lam = np.trace(C) / irr.dim
            assert np.abs(C - lam * eye).max() < 1e-8


def test_schur_orthogonality_matrix_elements():
    for name in ["Z6", "S3", "D4", "Q8"]:
        G = build_group(name)
        cat = compute_catalog(G)
        for a, b in itertools.product(cat.irreps, repeat=2):
            # <sqrt(da) a_ij, sqrt(db) b_kl> = delta_ab delta_ik delta_jl
            inner = np.einsum("gij,gkl->ijkl", a.matrices, b.matrices.conj()) / G.order
            inner *= np.sqrt(a.dim * b.dim)
            if a.label != b.label:
                assert np.abs(inner).max() < 1e-8
            else:
                expect = np.einsum("ik,jl->ijkl", np.eye(a.dim), np.eye(a.dim))
                assert np.abs(inner - expect).max() < 1e-8


def test_one_dim_count_matches_abelianization():
    for name in ["Z2", "S3", "Q8", "S4", "D4"]:
        G = build_group(name)
        cat = compute_catalog(G)
        comm = commutator_subgroup(G)
        assert len(one_dim_reps(cat)) == G.order // len(comm)


def test_dual_rep():
    cat3 = compute_catalog(build_group("S3"))
    for lab in range(3):
        assert dual_rep(cat3, lab) == lab  # real characters
    catz = compute_catalog(build_group("Z3"))
    duals = [dual_rep(catz, i) for i in range(3)]
    assert duals[0] == 0
    assert sorted(duals[1:]) == [1, 2] and duals[1] != 1


def test_tensor_one_dim():
    cat = compute_catalog(build_group("S3"))
    assert tensor_one_dim(cat, 2, 0) == 2  # rho x trivial = rho
    assert tensor_one_dim(cat, 1, 1) == 0  # sign x sign = trivial
    assert tensor_one_dim(cat, 2, 1) == 2  # standard x sign = standard
    with pytest.raises(RepError):
        tensor_one_dim(cat, 0, 2)  # psi not one-dimensional


def test_cg_multiplicities_s3():
    cat = compute_catalog(build_group("S3"))
    assert cg_multiplicities(cat, 2, 0) == {2: 1}
    assert cg_multiplicities(cat, 2, 2) == {0: 1, 1: 1, 2: 1}
    dual = dual_rep(cat, 2)
    assert cg_multiplicities(cat, 2, dual).get(0) == 1  # contains the trivial rep once


def test_cg_transform_invariants():
    for name in ["S3", "Q8", "D4", "S4"]:
        G = build_group(name)
        cat = compute_catalog(G)
        k = len(cat.irreps)
        for r, s in itertools.product(range(k), repeat=2):
            cg = cg_transform(cat, r, s)
            q = cg.transform.shape[0]
            assert np.abs(cg.transform @ cg.transform.conj().T - np.eye(q)).max() < 1e-9
            assert sum(cat.irreps[t].dim * m for t, m in cg.multiplicities.items()) == q
            # intertwining against explicit block-diagonal form
            for g in [0, 1, G.order - 1]:
                RS = np.kron(cat.irreps[r].matrices[g], cat.irreps[s].matrices[g])
                lhs = cg.transform @ RS @ cg.transform.conj().T
                blk = np.zeros((q, q), dtype=complex)
                for t, _c, a, b in cg.block_layout:
                    blk[a:b, a:b] = cat.irreps[t].matrices[g]
                assert np.abs(lhs - blk).max() < 1e-9


def test_cg_block_sizes_s3_std_squared():
    cat = compute_catalog(build_group("S3"))
    cg = cg_transform(cat, 2, 2)
    sizes = [b - a for _t, _c, a, b in cg.block_layout]
    assert sizes == [1, 1, 2]


def test_isotypic_projector_ranks():
    cat = compute_catalog(build_group("S3"))
    G = cat.group
    for r, s in itertools.product(range(3), repeat=2):
        mults = cg_multiplicities(cat, r, s)
        RS = [np.kron(cat.irreps[r].matrices[g], cat.irreps[s].matrices[g]) for g in G.elements()]
        for t in range(3):
            dt = cat.irreps[t].dim
            P = sum(np.conj(cat.char_value(t, g)) * RS[g] for g in G.elements()) * dt / G.order
            rank = int(round(np.trace(P).real))
            assert rank == mults.get(t, 0) * dt
            assert np.abs(P @ P - P).max() < 1e-8


def test_cg_reseed_invariance():
    cat = compute_catalog(build_group("S3"))
    a = cg_transform(cat, 2, 2, seed=0)
    b = cg_transform(cat, 2, 2, seed=123)
    assert a.multiplicities == b.multiplicities
    # isotypic projectors are basis-independent
    for (t, _c, a0, a1), (t2, _c2, b0, b1) in zip(a.block_layout, b.block_layout):
        assert t == t2
        Pa = a.transform[a0:a1].conj().T @ a.transform[a0:a1]
        Pb = b.transform[b0:b1].conj().T @ b.transform[b0:b1]
        assert np.abs(Pa - Pb).max() < 1e-8


def test_catalog_reseed_same_characters():
    G = build_group("D4")
    c1 = compute_catalog(G, seed=11)
    c2 = compute_catalog(G, seed=999)
    assert [r.dim for r in c1.irreps] == [r.dim for r in c2.irreps]
    for a, b in zip(c1.irreps, c2.irreps):
        assert np.abs(a.character - b.character).max() < 1e-8
    for r, s in itertools.product(range(len(c1.irreps)), repeat=2):
        assert cg_multiplicities(c1, r, s) == cg_multiplicities(c2, r, s)


def test_fourier_matrix():
    catz = compute_catalog(build_group("Z2"))
    F = fourier_matrix(catz)
    assert np.abs(F * np.sqrt(2) - np.array([[1, 1], [1, -1]])).max() < 1e-12
    cat = compute_catalog(build_group("S3"))
    F6 = fourier_matrix(cat)
    assert np.abs(F6 @ F6.conj().T - np.eye(6)).max() < 1e-12
    assert np.allclose(np.linalg.norm(F6, axis=1), 1.0)


def test_fourier_block_diagonalizes_right_regular():
    # conjugating the right-regular action g -> (|x> -> |x g^-1>) by F yields,
    # for each irrep and each row index, the complex conjugate matrices, i.e.
    # the catalog representative of the dual irrep
    G = build_group("S3")
    cat = compute_catalog(G)
    F = fourier_matrix(cat)
    n = G.order
    M = G.mul_array
    for h in G.elements():
        R = np.zeros((n, n))
        for x in range(n):
            R[M[x, G.inv[h]], x] = 1.0
        FR = F @ R @ F.conj().T
        expected = np.zeros((n, n), dtype=complex)
        for lab, start, stop in fourier_row_blocks(cat):
            d = cat.irreps[lab].dim
            dual_char = cat.irreps[dual_rep(cat, lab)].character
            assert np.abs(np.conj(cat.irreps[lab].character) - dual_char).max() < 1e-8
            for i in range(d):
                a = start + i * d
                expected[a : a + d, a : a + d] = np.conj(cat.irreps[lab].matrices[h])
        assert np.abs(FR - expected).max() < 1e-8


def test_product_rep_value():
    cat = compute_catalog(build_group("S3"))
    assert np.allclose(product_rep_value(cat, (0, 0), (3, 5)), [[1.0]])
    v = product_rep_value(cat, (1, 2), (2, 0))  # (sign, std) at (transposition, e)
    assert np.abs(v + np.eye(2)).max() < 1e-9
    ident = product_rep_value(cat, (2, 2), (0, 0))
    assert np.abs(ident - np.eye(4)).max() < 1e-12


def test_product_character_is_product():
    G = build_group("S3")
    cat = compute_catalog(G)
    for label in itertools.product(range(3), repeat=2):
        for gbar in itertools.product(range(6), repeat=2):
            direct = np.trace(product_rep_value(cat, label, gbar))
            viachar = cat.product_char(label, gbar)
            assert abs(direct - viachar) < 1e-9


def test_catalog_deterministic():
    G = build_group("S3")
    c1 = compute_catalog(G)
    c2 = compute_catalog(G)
    assert c1 is c2  # cached


def frobenius20():
    # Z5 x| Z4 with a faithful action: the 4-dim irrep appears 3 times in its
    # own tensor square, exercising the multiplicity-copy basis construction
    from simonsieve.groups import table_from_mul

    def code(x, b):
        return x * 4 + b

    mul = [[0] * 20 for _ in range(20)]
    for x1, b1, x2, b2 in itertools.product(range(5), range(4), range(5), range(4)):
        x = (x1 + pow(2, b1, 5) * x2) % 5
        mul[code(x1, b1)][code(x2, b2)] = code(x, (b1 + b2) % 4)
    return table_from_mul(mul)


def test_cg_with_multiplicity_three():
    G = frobenius20()
    cat = compute_catalog(G)
    assert [r.dim for r in cat.irreps] == [1, 1, 1, 1, 4]
    four = 4
    mults = cg_multiplicities(cat, four, four)
    assert mults[4] == 3
    cg = cg_transform(cat, four, four)
    copies = [c for t, c, _a, _b in cg.block_layout if t == 4]
    assert copies == [0, 1, 2]
    q = cg.transform.shape[0]
    assert np.abs(cg.transform @ cg.transform.conj().T - np.eye(q)).max() < 1e-9
