"""HSP instances over G^n: oracle, weak-sampling distribution, missing harmonics.

The hidden subgroup is either trivial or {1, m_bar} for an involution m_bar
whose nontrivial coordinates are conjugates of a distinguished involution mu.
The simulator owns the ground truth; oracle_eval realizes the black-box
function as canonical minimal coset representatives.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .groups import (
    GroupTable,
    SubgroupSpec,
    conjugacy_class_of,
    center,
    normal_subgroups,
    quotient_group,
    subgroup_from_elements,
)
from .reps import IrrepCatalog, ProductLabel, compute_catalog, product_rep_value, scalar_action

DEFAULT_LABEL_CAP = 10**6


class HSPError(ValueError):
    """Invalid instance parameters."""


class GuardError(RuntimeError):
    """An enumeration or full-space size guard was exceeded."""


@dataclass(frozen=True, eq=False)
class HSPInstance:
    """Problem instance: base group, exponent n, and the hidden subgroup.

    hidden is None for the trivial subgroup, else the length-n coordinate
    vector of the involution. char_witness / rep_witness record which form of
    the base condition holds for mu (a one-dim character with chi(mu) = -1,
    or an irrep with rho(mu) = -I).
    """

    group: GroupTable
    catalog: IrrepCatalog
    n: int
    mu: int
    hidden: tuple[int, ...] | None
    char_witness: int | None
    rep_witness: int | None

    @property
    def is_trivial(self) -> bool:
        return self.hidden is None

    def identity_vector(self) -> tuple[int, ...]:
        return (self.group.identity,) * self.n

    def mul_vec(self, a, b) -> tuple[int, ...]:
        return tuple(self.group.mul[x][y] for x, y in zip(a, b))

    def describe(self) -> dict:
        return {
            "order": self.group.order,
            "n": self.n,
            "mu": self.group.names[self.mu],
            "hidden": "trivial" if self.hidden is None else [self.group.names[m] for m in self.hidden],
        }


@dataclass(frozen=True, eq=False)
class WeakDistribution:
    """Sparse weak Fourier sampling distribution over product labels."""

    entries: dict

    def total(self) -> float:
        return float(sum(self.entries.values()))


def check_base_condition(group: GroupTable, cat: IrrepCatalog, mu: int) -> int | None:
    """Smallest catalog label with rho(mu) = -I, if one exists."""
    for irr in cat.irreps:
        if np.abs(irr.matrices[mu] + np.eye(irr.dim)).max() <= 1e-9:
            return irr.label
    return None


def check_normal_condition(group: GroupTable, mu: int) -> SubgroupSpec | None:
    """Smallest normal N with mu outside N and mu*N central in G/N."""
    for sub in normal_subgroups(group):
        if mu in sub:
            continue
        quotient, proj = quotient_group(group, sub)
        if proj[mu] in set(center(quotient).elements):
            return sub
    return None


def make_instance(
    group: GroupTable,
    n: int,
    mu: int,
    hidden,
    catalog: IrrepCatalog | None = None,
) -> HSPInstance:
    """Validate parameters and build an instance (hidden: None or coordinate list)."""
    if catalog is None:
        catalog = compute_catalog(group)
    if n < 1:
        raise HSPError("n must be positive")
    e = group.identity
    if mu == e or group.mul[mu][mu] != e:
        raise HSPError(f"mu={mu} is not an involution")
    if hidden is not None:
        hidden = tuple(int(m) for m in hidden)
        if len(hidden) != n:
            raise HSPError(f"hidden vector has length {len(hidden)}, expected {n}")
        mu_class = set(conjugacy_class_of(group, mu))
        for m in hidden:
            if m != e and m not in mu_class:
                raise HSPError(f"hidden coordinate {m} is neither identity nor conjugate to mu")
        if all(m == e for m in hidden):
            raise HSPError("hidden involution must differ from the identity vector")
    char_witness = None
    for lab in catalog.one_dim_indices:
        if abs(catalog.char_value(lab, mu) + 1.0) <= 1e-9:
            char_witness = lab
            break
    rep_witness = check_base_condition(group, catalog, mu)
    if char_witness is None and rep_witness is None:
        raise HSPError("base condition fails: no irrep takes the value -identity at mu")
    return HSPInstance(
        group=group,
        catalog=catalog,
        n=n,
        mu=mu,
        hidden=hidden,
        char_witness=char_witness,
        rep_witness=rep_witness,
    )


# ---------------------------------------------------------------------------
# oracle


def _encode(group: GroupTable, gbar) -> int:
    out = 0
    for g in gbar:
        out = out * group.order + int(g)
    return out


def oracle_eval(inst: HSPInstance, gbar) -> int:
    """Coset label: equal iff the arguments lie in the same right coset of H."""
    if len(gbar) != inst.n:
        raise HSPError("element vector has wrong length")
    if inst.hidden is None:
        return _encode(inst.group, gbar)
    other = inst.mul_vec(gbar, inst.hidden)
    return min(_encode(inst.group, gbar), _encode(inst.group, other))


def modified_oracle(inst: HSPInstance, i: int, b: int) -> HSPInstance:
    """Effective instance hidden by f_i^b: unchanged if m_i in {1, b}, else trivial.

    The simulator constructs the effective hidden subgroup directly; fidelity
    with the literal pair-valued oracle is verified on small cases in tests.
    """
    group = inst.group
    if b == group.identity or group.mul[b][b] != group.identity:
        raise HSPError(f"candidate {b} is not an involution")
    if b not in set(conjugacy_class_of(group, inst.mu)):
        raise HSPError(f"candidate {b} is not conjugate to mu")
    if not 0 <= i < inst.n:
        raise HSPError(f"coordinate {i} out of range")
    if inst.hidden is not None and inst.hidden[i] in (group.identity, b):
        effective = inst.hidden
    else:
        effective = None
    return HSPInstance(
        group=inst.group,
        catalog=inst.catalog,
        n=inst.n,
        mu=inst.mu,
        hidden=effective,
        char_witness=inst.char_witness,
        rep_witness=inst.rep_witness,
    )


# ---------------------------------------------------------------------------
# weak sampling distribution


def projector_H(inst: HSPInstance, label: ProductLabel) -> np.ndarray:
    """Average of rho_bar over H: identity for trivial H, else (I + rho_bar(m))/2."""
    d = inst.catalog.product_dim(label)
    if inst.hidden is None:
        return np.eye(d, dtype=complex)
    return (np.eye(d, dtype=complex) + product_rep_value(inst.catalog, label, inst.hidden)) / 2.0


def projector_rank(inst: HSPInstance, label: ProductLabel) -> int:
    """Closed-form rank (d + chi(m)) / 2, an exact integer."""
    d = inst.catalog.product_dim(label)
    if inst.hidden is None:
        return d
    chi = inst.catalog.product_char(label, inst.hidden)
    val = (d + chi.real) / 2.0
    rank = round(val)
    if abs(val - rank) > 1e-6 or abs(chi.imag) > 1e-6:
        raise HSPError(f"projector rank {val} is not an integer for label {label}")
    return rank


def _per_coordinate_weights(inst: HSPInstance):
    """Arrays p[rho] = d^2/|G| and q_i[rho] = d*chi_rho(m_i)/|G| per coordinate."""
    cat = inst.catalog
    order = inst.group.order
    dims = np.array([r.dim for r in cat.irreps], dtype=float)
    p = dims * dims / order
    qs = []
    if inst.hidden is not None:
        for m in inst.hidden:
            ci = inst.group.class_index[m]
            chi = np.array([r.character[ci] for r in cat.irreps])
            if np.abs(chi.imag).max() > 1e-9:
                raise HSPError("character at an involution must be real")
            qs.append(dims * chi.real / order)
    return p, qs


def weak_distribution(inst: HSPInstance, cap: int = DEFAULT_LABEL_CAP) -> WeakDistribution:
    """Exact P_H over all |irreps|^n product labels (guarded enumeration)."""
    k = len(inst.catalog.irreps)
    if k**inst.n > cap:
        raise GuardError(f"{k}^{inst.n} labels exceed enumeration cap {cap}")
    p, qs = _per_coordinate_weights(inst)
    entries = {}
    for label in itertools.product(range(k), repeat=inst.n):
        prob = float(reduce(lambda acc, r: acc * p[r], label, 1.0))
        if inst.hidden is not None:
            prob += float(
                reduce(lambda acc, rq: acc * rq[1][rq[0]], zip(label, qs), 1.0)
            )
        if prob > 1e-14:
            entries[label] = prob
    dist = WeakDistribution(entries=entries)
    if abs(dist.total() - 1.0) > 1e-9:
        raise HSPError(f"weak distribution sums to {dist.total()}, not 1")
    return dist


def plancherel_distribution(inst: HSPInstance, cap: int = DEFAULT_LABEL_CAP) -> WeakDistribution:
    trivial = HSPInstance(
        group=inst.group,
        catalog=inst.catalog,
        n=inst.n,
        mu=inst.mu,
        hidden=None,
        char_witness=inst.char_witness,
        rep_witness=inst.rep_witness,
    )
    return weak_distribution(trivial, cap=cap)


def tv_distance(p: WeakDistribution, q: WeakDistribution) -> float:
    labels = set(p.entries) | set(q.entries)
    return 0.5 * sum(abs(p.entries.get(l, 0.0) - q.entries.get(l, 0.0)) for l in labels)


# ---------------------------------------------------------------------------
# missing harmonics and H-perp


def is_missing_harmonic(inst: HSPInstance, label: ProductLabel) -> bool:
    """True iff the H-projector vanishes, i.e. rho_bar(m) = -I.

    Equivalent per-coordinate test: every rho_i(m_i) is a scalar eps_i * I and
    the eps_i multiply to -1 (for one-dim labels this is chi(m) = -1).
    """
    if inst.hidden is None:
        return False
    sign = 1.0
    for r, m in zip(label, inst.hidden):
        if m == inst.group.identity:
            continue
        lam = scalar_action(inst.catalog, r, m)
        if lam is None:
            return False
        if abs(lam.imag) > 1e-9 or abs(abs(lam.real) - 1.0) > 1e-9:
            return False
        sign *= 1.0 if lam.real > 0 else -1.0
    return sign < 0


def one_dim_sign(inst: HSPInstance, label: ProductLabel) -> int:
    """chi_bar(m_bar) in {+1, -1} for a one-dim label (+1 when H is trivial)."""
    if inst.hidden is None:
        return 1
    val = inst.catalog.product_char(label, inst.hidden)
    sign = round(val.real)
    if abs(val - sign) > 1e-8 or sign not in (-1, 1):
        raise HSPError(f"one-dim character value {val} is not a sign")
    return sign


def h_perp(inst: HSPInstance, cap: int = DEFAULT_LABEL_CAP) -> list[ProductLabel]:
    """All one-dim labels taking the value +1 on H (all of them when H is trivial)."""
    one = inst.catalog.one_dim_indices
    if len(one) ** inst.n > cap:
        raise GuardError(f"{len(one)}^{inst.n} one-dim labels exceed cap {cap}")
    labels = itertools.product(one, repeat=inst.n)
    if inst.hidden is None:
        return [tuple(l) for l in labels]
    return [tuple(l) for l in labels if one_dim_sign(inst, tuple(l)) == 1]


def projective_kernel(cat: IrrepCatalog, label: int):
    """Elements on which the irrep acts by scalars, plus the restricted character.

    Returns (SubgroupSpec, {g: scalar}); the restriction of the irrep to the
    kernel is d copies of that character by construction.
    """
    group = cat.group
    members = {}
    for g in group.elements():
        lam = scalar_action(cat, label, g)
        if lam is not None:
            members[g] = lam
    spec = subgroup_from_elements(group, members.keys())
    for g in spec.elements:
        for h in group.elements():
            if group.conj(h, g) not in members:
                raise HSPError("projective kernel is not normal")
    return spec, members
