import itertools

import numpy as np
import pytest

from simonsieve.groups import (
    GroupError,
    build_group,
    center,
    commutator_subgroup,
    conjugacy_class_of,
    export_group,
    involutions,
    normal_subgroups,
    parse_group_file,
    parse_group_spec,
    quotient_group,
    subgroup_from_elements,
    table_from_mul,
)

CATALOG = ["Z1", "Z2", "Z3", "Z6", "Z12", "D3", "D4", "D6", "S3", "S4", "Q8", "W(Z2)", "W(Z3)"]


def brute_classes(G):
    # independent conjugation orbit computation
    seen, classes = set(), []
    for g in G.elements():
        if g in seen:
            continue
        orbit = set()
        for h in G.elements():
            orbit.add(G.mul[G.mul[h][g]][G.inv[h]])
        seen |= orbit
        classes.append(frozenset(orbit))
    return set(classes)


def brute_closure(G, seed):
    elems = set(seed) | {G.identity}
    changed = True
    while changed:
        changed = False
        for a, b in itertools.product(list(elems), repeat=2):
            c = G.mul[a][b]
            if c not in elems:
                elems.add(c)
                changed = True
    return elems


def test_z2_basics():
    G = build_group("Z2")
    assert G.order == 2
    assert involutions(G) == [1]


def test_s3_classes_brute_force():
    G = build_group("S3")
    assert brute_classes(G) == {frozenset(c) for c in G.classes}
    assert sorted(len(c) for c in G.classes) == [1, 2, 3]
    # canonical order: identity class, then ascending size
    assert [len(c) for c in G.classes] == [1, 2, 3]
    assert G.classes[0] == (0,)


def test_wreath_z2_is_dihedral_of_order_8():
    W = build_group("W(Z2)")
    D4 = build_group("D4")
    assert W.order == 8
    assert len(involutions(W)) == len(involutions(D4)) == 5
    assert sorted(len(c) for c in W.classes) == sorted(len(c) for c in D4.classes)


def test_latin_square_and_associativity_rejected():
    with pytest.raises(GroupError):
        table_from_mul([[0, 1], [1, 1]])  # not a Latin square
    # Latin square but not associative: a quasigroup on 5 elements
    bad = [
        [0, 1, 2, 3, 4],
        [1, 0, 3, 4, 2],
        [2, 4, 0, 1, 3],
        [3, 2, 4, 0, 1],
        [4, 3, 1, 2, 0],
    ]
    with pytest.raises(GroupError):
        table_from_mul(bad)


def test_order_bound():
    with pytest.raises(GroupError):
        build_group("Z25")
    assert build_group("Z25", order_bound=32).order == 25
    # the symmetric-group parameter bound is enforced at build time
    with pytest.raises(GroupError):
        build_group("S5")


def test_commutator_subgroups():
    assert commutator_subgroup(build_group("Z2")).elements == (0,)
    G = build_group("S3")
    # oracle: enumerate commutators and close
    comms = {
        G.mul[G.mul[G.inv[g]][G.inv[h]]][G.mul[g][h]]
        for g, h in itertools.product(G.elements(), repeat=2)
    }
    expect = brute_closure(G, comms)
    got = set(commutator_subgroup(G).elements)
    assert got == expect
    assert len(got) == 3  # the alternating subgroup
    q8 = build_group("Q8")
    assert commutator_subgroup(q8).elements == (0, 1)  # {1, -1}


def test_normal_subgroups():
    assert len(normal_subgroups(build_group("Z2"))) == 2
    G = build_group("S3")
    subs = normal_subgroups(G)
    assert [len(s) for s in subs] == [1, 3, 6]
    S4 = build_group("S4")
    subs4 = normal_subgroups(S4)
    assert [len(s) for s in subs4] == [1, 4, 12, 24]
    # oracle: every returned subgroup is a class union closed under products
    for s in subs4:
        elems = set(s.elements)
        for g in s.elements:
            assert set(conjugacy_class_of(S4, g)) <= elems


def test_quotients():
    G = build_group("S3")
    subs = normal_subgroups(G)
    whole = subs[-1]
    Q, proj = quotient_group(G, whole)
    assert Q.order == 1
    a3 = subs[1]
    Q2, proj2 = quotient_group(G, a3)
    assert Q2.order == 2
    q8 = build_group("Q8")
    pm1 = subgroup_from_elements(q8, [0, 1])
    K, projk = quotient_group(q8, pm1)
    assert K.order == 4
    for x in K.elements():
        assert K.mul[x][x] == K.identity  # Klein four-group: exponent 2


def test_quotient_projection_is_homomorphism():
    G = build_group("S4")
    for sub in normal_subgroups(G):
        Q, proj = quotient_group(G, sub)
        for g, h in itertools.product(G.elements(), repeat=2):
            assert proj[G.mul[g][h]] == Q.mul[proj[g]][proj[h]]


def test_involutions_and_center():
    G = build_group("S3")
    invs = involutions(G)
    assert len(invs) == 3
    cls = conjugacy_class_of(G, invs[0])
    assert set(invs) == set(cls)
    assert center(G).elements == (0,)
    q8 = build_group("Q8")
    assert involutions(q8) == [1]
    assert center(q8).elements == (0, 1)
    z6 = build_group("Z6")
    assert center(z6).elements == tuple(range(6))


def test_lagrange_for_catalog():
    for name in CATALOG:
        G = build_group(name)
        for s in normal_subgroups(G):
            assert G.order % len(s) == 0
        assert G.order % len(commutator_subgroup(G)) == 0


def test_commutator_contained_in_abelian_kernels():
    for name in ["S3", "S4", "D4", "Q8", "W(Z2)"]:
        G = build_group(name)
        comm = set(commutator_subgroup(G).elements)
        for sub in normal_subgroups(G):
            Q, _ = quotient_group(G, sub)
            abelian = all(
                Q.mul[a][b] == Q.mul[b][a] for a, b in itertools.product(Q.elements(), repeat=2)
            )
            if abelian:
                assert comm <= set(sub.elements)


def test_export_roundtrip():
    for name in ["Z6", "S3", "Q8", "W(Z2)"]:
        G = build_group(name)
        G2 = parse_group_file(export_group(G))
        assert G2.mul == G.mul
        assert G2.names == G.names
        assert G2.classes == G.classes


def test_custom_file_errors():
    with pytest.raises(GroupError):
        parse_group_file("2\n0 1\n1 0\nA B\nextra garbage\n")
    with pytest.raises(GroupError):
        parse_group_file("2\n0 1\n")
    with pytest.raises(GroupError):
        parse_group_file("2\n0 1\n1 x\n")
    G = parse_group_file("2\n0 1\n1 0\ne m\n")
    assert G.names == ("e", "m")


def test_parse_spec_errors():
    with pytest.raises(GroupError):
        parse_group_spec("W(W(Z2))")
    with pytest.raises(GroupError):
        parse_group_spec("F4")
    assert parse_group_spec("w(z3)").describe() == "W(Z3)"


def test_dihedral_relations():
    G = build_group("D4")
    r, s = 1, 4  # r1, s0
    assert G.element_order(r) == 4
    assert G.element_order(s) == 2
    # s r s = r^-1
    srs = G.mul[G.mul[s][r]][s]
    assert srs == G.inv[r]
