"""Explicit unitary irreps, characters, Fourier matrices and Clebsch-Gordan data.

Irreps are computed numerically from the regular representation: a random
Hermitian matrix is averaged over the group action, its eigenspaces are
irreducible invariant subspaces, and isomorphic blocks are identified by
character. The construction is derandomized by a fixed internal seed.

Tolerance ledger: 1e-9 for structural checks (homomorphism, unitarity,
intertwining), 1e-8 for derived quantities (characters, orthogonality,
multiplicities).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .groups import GroupTable

TOL_STRUCT = 1e-9
TOL_DERIVED = 1e-8

_CATALOG_SEED = 0x5EED
_MAX_SEED_RETRIES = 8
_CLUSTER_GAP = 1e-6


class RepError(RuntimeError):
    """Numerical irrep construction or catalog consistency failure."""


ProductLabel = tuple  # length-n tuple of irrep labels (ints)


@dataclass(frozen=True, eq=False)
class Irrep:
    label: int
    dim: int
    matrices: np.ndarray  # (|G|, dim, dim) complex, unitary
    character: np.ndarray  # (#classes,) complex

    def matrix(self, g: int) -> np.ndarray:
        return self.matrices[g]


@dataclass(frozen=True, eq=False)
class IrrepCatalog:
    """Canonical complete list of irreps of a group.

    Canonical order: ascending dimension, then character vectors compared
    classwise by descending real part / ascending imaginary part (the trivial
    representation is always label 0).
    """

    group: GroupTable
    irreps: tuple[Irrep, ...]
    one_dim_indices: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.irreps)

    def dim(self, label: int) -> int:
        return self.irreps[label].dim

    def char_value(self, label: int, g: int) -> complex:
        return complex(self.irreps[label].character[self.group.class_index[g]])

    def product_dim(self, label: ProductLabel) -> int:
        d = 1
        for r in label:
            d *= self.irreps[r].dim
        return d

    def product_char(self, label: ProductLabel, gbar) -> complex:
        val = 1.0 + 0.0j
        for r, g in zip(label, gbar):
            val *= self.char_value(r, g)
        return val


@dataclass(frozen=True, eq=False)
class CGData:
    """Unitary change of basis splitting one tensor product into irrep blocks.

    transform rows are grouped per block_layout entry (tau, copy, row range);
    copies of the same tau are contiguous, so the conjugated product action is
    block-diagonal with blocks I_mult(tau) (x) tau(g).
    """

    pair: tuple[int, int]
    multiplicities: dict[int, int]
    transform: np.ndarray  # (d_r*d_s, d_r*d_s) unitary
    block_layout: tuple[tuple[int, int, int, int], ...]  # (tau, copy, start, stop)


def _char_sort_key(char: np.ndarray):
    return tuple((-round(float(v.real), 6), round(float(v.imag), 6)) for v in char)


def _catalog_attempt(group: GroupTable, seed: int) -> IrrepCatalog:
    n = group.order
    M = group.mul_array
    rng = np.random.default_rng(seed)
    H = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    H = H + H.conj().T
    Hbar = np.zeros_like(H)
    for g in range(n):
        idx = M[group.inv[g]]  # a -> g^-1 a under left translation
        Hbar += H[np.ix_(idx, idx)]
    Hbar /= n
    evals, vecs = np.linalg.eigh(Hbar)
    scale = max(float(evals[-1] - evals[0]), 1.0)

    clusters = []
    start = 0
    for i in range(1, n + 1):
        if i == n or evals[i] - evals[i - 1] > _CLUSTER_GAP * scale:
            clusters.append(range(start, i))
            start = i

    X = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    candidates = []
    for cl in clusters:
        B = vecs[:, list(cl)]
        d = B.shape[1]
        mats = np.empty((n, d, d), dtype=complex)
        for g in range(n):
            mats[g] = B.conj().T @ B[M[group.inv[g]], :]
        eye = np.eye(d)
        for g in range(n):
            if np.abs(mats[g] @ mats[g].conj().T - eye).max() > TOL_STRUCT:
                raise RepError("candidate block is not unitary")
        for g in range(n):
            prod = mats[g] @ mats
            if np.abs(prod - mats[M[g]]).max() > TOL_STRUCT:
                raise RepError("candidate block is not a homomorphism")
        Xd = X[: d, : d]
        Xh = Xd + Xd.conj().T
        comm = np.zeros((d, d), dtype=complex)
        for g in range(n):
            comm += mats[g] @ Xh @ mats[g].conj().T
        comm /= n
        lam = np.trace(comm) / d
        if np.abs(comm - lam * eye).max() > TOL_DERIVED:
            raise RepError("candidate block is reducible (commutant not scalar)")
        char = np.empty(len(group.classes), dtype=complex)
        for ci, cls in enumerate(group.classes):
            traces = [np.trace(mats[g]) for g in cls]
            if max(abs(t - traces[0]) for t in traces) > TOL_STRUCT:
                raise RepError("character varies inside a conjugacy class")
            char[ci] = traces[0]
        candidates.append((d, char, mats))

    by_char: dict[tuple, list] = {}
    for cand in candidates:
        key = tuple((round(float(v.real), 6), round(float(v.imag), 6)) for v in cand[1])
        by_char.setdefault(key, []).append(cand)
    distinct = []
    for key, group_cands in by_char.items():
        d = group_cands[0][0]
        if len(group_cands) != d:
            raise RepError(f"irrep of dim {d} appeared {len(group_cands)} times in the regular rep")
        distinct.append(group_cands[0])
    if sum(d * d for d, _, _ in distinct) != n:
        raise RepError("sum of squared dimensions does not match the group order")

    distinct.sort(key=lambda cand: (cand[0], _char_sort_key(cand[1])))
    irreps = tuple(
        Irrep(label=i, dim=d, matrices=mats, character=char)
        for i, (d, char, mats) in enumerate(distinct)
    )

    sizes = np.array([len(c) for c in group.classes], dtype=float)
    for a in irreps:
        for b in irreps:
            ip = float(np.abs(np.sum(sizes * a.character * b.character.conj()) / n - (a.label == b.label)))
            if ip > TOL_DERIVED:
                raise RepError("character orthogonality failed")
    one_dim = tuple(r.label for r in irreps if r.dim == 1)
    return IrrepCatalog(group=group, irreps=irreps, one_dim_indices=one_dim)


@lru_cache(maxsize=128)
def compute_catalog(group: GroupTable, seed: int = _CATALOG_SEED) -> IrrepCatalog:
    """Complete canonical irrep catalog; deterministic for a given seed."""
    last = None
    for attempt in range(_MAX_SEED_RETRIES):
        try:
            return _catalog_attempt(group, seed + attempt)
        except RepError as exc:
            last = exc
    raise RepError(
        f"eigenspace splitting failed for {_MAX_SEED_RETRIES} consecutive seeds "
        f"starting at {seed}; retry with another seed ({last})"
    )


def one_dim_reps(cat: IrrepCatalog) -> tuple[int, ...]:
    return cat.one_dim_indices


def dual_rep(cat: IrrepCatalog, label: int) -> int:
    """Label whose character is the complex conjugate of this one's."""
    target = cat.irreps[label].character.conj()
    for r in cat.irreps:
        if r.dim == cat.irreps[label].dim and np.abs(r.character - target).max() <= TOL_DERIVED:
            return r.label
    raise RepError(f"dual of irrep {label} missing from catalog")


def tensor_one_dim(cat: IrrepCatalog, label: int, psi: int) -> int:
    """Label of g -> psi(g) * rho(g) for a one-dimensional psi."""
    if cat.irreps[psi].dim != 1:
        raise RepError(f"irrep {psi} is not one-dimensional")
    target = cat.irreps[label].character * cat.irreps[psi].character
    for r in cat.irreps:
        if r.dim == cat.irreps[label].dim and np.abs(r.character - target).max() <= TOL_DERIVED:
            return r.label
    raise RepError(f"catalog has no match for irrep {label} tensored with {psi}")


def cg_multiplicities(cat: IrrepCatalog, r: int, s: int) -> dict[int, int]:
    """Multiplicity of each tau inside rho (x) sigma, from character inner products."""
    group = cat.group
    sizes = np.array([len(c) for c in group.classes], dtype=float)
    prod = cat.irreps[r].character * cat.irreps[s].character
    out = {}
    for t in cat.irreps:
        val = np.sum(sizes * prod * t.character.conj()) / group.order
        m = round(float(val.real))
        if abs(val - m) > TOL_DERIVED or m < 0:
            raise RepError(f"non-integral multiplicity {val} for tau={t.label} in {r}x{s}")
        if m:
            out[t.label] = m
    return out


def _product_action(cat: IrrepCatalog, r: int, s: int) -> np.ndarray:
    A, B = cat.irreps[r].matrices, cat.irreps[s].matrices
    n = cat.group.order
    da, db = A.shape[1], B.shape[1]
    out = np.empty((n, da * db, da * db), dtype=complex)
    for g in range(n):
        out[g] = np.kron(A[g], B[g])
    return out


def cg_transform(cat: IrrepCatalog, r: int, s: int, seed: int = 0) -> CGData:
    """Unitary intertwiner onto the isotypic blocks of rho (x) sigma.

    Construction: for each tau, project random maps onto the intertwiner space
    Hom_G(V_tau, V_rho (x) V_sigma) by group averaging, orthonormalize in the
    Hilbert-Schmidt inner product, and stack the resulting isometries.
    The isotypic projector rank is cross-checked against the character count.
    """
    group = cat.group
    n = group.order
    mults = cg_multiplicities(cat, r, s)
    RS = _product_action(cat, r, s)
    q = RS.shape[1]
    rng = np.random.default_rng((seed, r, s))
    rows = []
    layout = []
    offset = 0
    for t_label in sorted(mults):
        m = mults[t_label]
        tau = cat.irreps[t_label]
        dt = tau.dim
        proj = np.zeros((q, q), dtype=complex)
        for g in range(n):
            proj += np.conj(cat.char_value(t_label, g)) * RS[g]
        proj *= dt / n
        rank = float(np.trace(proj).real)
        if abs(rank - m * dt) > 1e-6:
            raise RepError(
                f"isotypic projector rank {rank:.6f} disagrees with multiplicity {m}*{dt}"
            )
        copies: list[np.ndarray] = []
        attempts = 0
        while len(copies) < m:
            attempts += 1
            if attempts > 20 * m:
                raise RepError(f"intertwiner orthonormalization failed for tau={t_label}")
            X = rng.standard_normal((q, dt)) + 1j * rng.standard_normal((q, dt))
            A = np.zeros((q, dt), dtype=complex)
            for g in range(n):
                A += RS[g] @ X @ tau.matrices[g].conj().T
            A /= n
            for prev in copies:
                A = A - prev * (np.trace(prev.conj().T @ A) / dt)
            norm = np.sqrt(float(np.trace(A.conj().T @ A).real) / dt)
            if norm < 0.05:
                continue
            copies.append(A / norm)
        for c, A in enumerate(copies):
            layout.append((t_label, c, offset, offset + dt))
            rows.append(A.conj().T)
            offset += dt
    T = np.vstack(rows)
    if np.abs(T @ T.conj().T - np.eye(q)).max() > TOL_STRUCT:
        raise RepError("CG transform is not unitary")
    for g in range(n):
        lhs = T @ RS[g] @ T.conj().T
        blk = np.zeros((q, q), dtype=complex)
        for t_label, _c, a, b in layout:
            blk[a:b, a:b] = cat.irreps[t_label].matrices[g]
        if np.abs(lhs - blk).max() > TOL_STRUCT:
            raise RepError("CG transform does not intertwine the product action")
    return CGData(
        pair=(r, s),
        multiplicities=mults,
        transform=T,
        block_layout=tuple(layout),
    )


class CGCache:
    """Memoized CG transforms for one catalog; safe for read-mostly concurrency."""

    def __init__(self, cat: IrrepCatalog, seed: int = 0):
        self.catalog = cat
        self.seed = seed
        self._data: dict[tuple[int, int], CGData] = {}
        self._lock = threading.Lock()

    def get(self, r: int, s: int) -> CGData:
        key = (r, s)
        hit = self._data.get(key)
        if hit is not None:
            return hit
        with self._lock:
            hit = self._data.get(key)
            if hit is None:
                hit = cg_transform(self.catalog, r, s, seed=self.seed)
                self._data[key] = hit
            return hit


def fourier_matrix(cat: IrrepCatalog) -> np.ndarray:
    """|G| x |G| unitary with rows (rho, i, j) holding sqrt(d/|G|) rho(g)_ij."""
    n = cat.group.order
    blocks = []
    for irr in cat.irreps:
        scaled = irr.matrices * np.sqrt(irr.dim / n)
        blocks.append(np.transpose(scaled, (1, 2, 0)).reshape(irr.dim * irr.dim, n))
    F = np.vstack(blocks)
    if np.abs(F @ F.conj().T - np.eye(n)).max() > TOL_STRUCT:
        raise RepError("Fourier matrix is not unitary")
    return F


def fourier_row_blocks(cat: IrrepCatalog) -> list[tuple[int, int, int]]:
    """(label, row_start, row_stop) for each irrep's d^2 rows of fourier_matrix."""
    out = []
    off = 0
    for irr in cat.irreps:
        out.append((irr.label, off, off + irr.dim * irr.dim))
        off += irr.dim * irr.dim
    return out


def product_rep_value(cat: IrrepCatalog, label: ProductLabel, gbar) -> np.ndarray:
    """Kronecker product rho_1(g_1) (x) ... (x) rho_n(g_n)."""
    if len(label) != len(gbar):
        raise RepError(f"label length {len(label)} != element length {len(gbar)}")
    mats = [cat.irreps[r].matrices[g] for r, g in zip(label, gbar)]
    if not mats:
        return np.eye(1, dtype=complex)
    return reduce(np.kron, mats)


def scalar_action(cat: IrrepCatalog, label: int, g: int, tol: float = TOL_STRUCT) -> complex | None:
    """The scalar lambda with rho(g) = lambda*I, or None if rho(g) is not scalar."""
    mat = cat.irreps[label].matrices[g]
    lam = complex(np.trace(mat)) / cat.irreps[label].dim
    if np.abs(mat - lam * np.eye(cat.irreps[label].dim)).max() <= tol:
        return lam
    return None
