"""Exact measurement channels on register density matrices.

Weak Fourier sampling of a coset state and isotypic "combine" sampling of a
register pair, plus brute-force full-space reference implementations used for
cross-validation.

Column-space convention: a register with product label rho_bar is stored only
as its d x d density on the column space V_rho_bar; the multiplicity (row)
space is maximally mixed and unentangled after weak sampling and is dropped.
The left/right transpose ambiguity is fixed by requiring the stored invariance
D @ rho_bar(m_bar) = D; the full-space references transport their raw output
into this convention (a transpose) before returning it.

Internal density forms:
  "mixed"  exactly I/d (always the case when H is trivial, and for any
           register whose H-projector has full rank, including all 1-dim ones)
  "proj"   a fresh weak sample, (I + rho_bar(m_bar)) / (2 rk)
  "terms"  a sum of coordinate-factorized product terms (combine children)
  "dense"  an explicit matrix (fallback for children with many terms)

mixed/proj/terms states factor coordinate-wise, so combines of fresh registers
and of early-round children never materialize the joint tensor; only
dense-form pairs build the joint matrix, guarded by size.
"""

from __future__ import annotations

import itertools
import string
from dataclasses import dataclass
from functools import lru_cache, reduce

import numpy as np

from .hsp import GuardError, HSPInstance, projector_H, projector_rank, _per_coordinate_weights
from .reps import CGCache, IrrepCatalog, ProductLabel, fourier_matrix, fourier_row_blocks, scalar_action

_DENSE_ENTRY_GUARD = 2**26
_COND_EPS = 1e-14
_TERM_PRODUCT_CAP = 64  # max factorized terms for a joint before going dense
_CHILD_TERMS_MIN_DIM = 16  # smaller children are materialized densely


class ChannelError(RuntimeError):
    """Zero-probability conditioning or an inconsistent register pair."""


@dataclass
class RegisterState:
    """A sieve register: product label plus column-space density and history.

    term_coefs/term_factors hold the factorized "terms" form: the density is
    sum_k term_coefs[k] * kron_i(term_factors[i][k]).
    """

    label: ProductLabel
    inst: HSPInstance
    form: str  # "mixed" | "proj" | "terms" | "dense"
    matrix: np.ndarray | None = None
    term_coefs: np.ndarray | None = None
    term_factors: list | None = None  # per coordinate: (K, d_i, d_i)
    history: dict | None = None

    @property
    def dim(self) -> int:
        return self.inst.catalog.product_dim(self.label)

    @property
    def density(self) -> np.ndarray:
        if self.form == "mixed":
            d = self.dim
            return np.eye(d, dtype=complex) / d
        if self.form == "proj":
            return projector_H(self.inst, self.label) / projector_rank(self.inst, self.label)
        if self.form == "terms":
            acc = None
            for k in range(len(self.term_coefs)):
                mat = self.term_coefs[k] * _kronv([f[k] for f in self.term_factors])
                acc = mat if acc is None else acc + mat
            return (acc + acc.conj().T) / 2.0
        return self.matrix


@dataclass(frozen=True)
class CombineOutcome:
    child_label: ProductLabel
    probability: float
    child: RegisterState | None
    missing_mass: float | None = None


# ---------------------------------------------------------------------------
# per-pair channel data


@dataclass(frozen=True, eq=False)
class _PairChannel:
    q: int
    transform: np.ndarray
    taus: tuple[int, ...]
    mults: tuple[int, ...]
    tau_dims: tuple[int, ...]
    slices: tuple[tuple[int, int], ...]
    mixed_probs: np.ndarray


@lru_cache(maxsize=64)
def _cg_cache(cat: IrrepCatalog, seed: int) -> CGCache:
    return CGCache(cat, seed)


@lru_cache(maxsize=4096)
def _pair_channel(cat: IrrepCatalog, r: int, s: int, seed: int) -> _PairChannel:
    cg = _cg_cache(cat, seed).get(r, s)
    q = cg.transform.shape[0]
    taus, mults, dims, slices = [], [], [], []
    for t_label, copy, start, stop in cg.block_layout:
        if copy == 0:
            taus.append(t_label)
            mults.append(cg.multiplicities[t_label])
            dims.append(stop - start)
            slices.append([start, stop])
        else:
            slices[-1][1] = stop
    slices = tuple((a, b) for a, b in slices)
    mixed = np.array([m * d for m, d in zip(mults, dims)], dtype=float) / q
    return _PairChannel(
        q=q,
        transform=cg.transform,
        taus=tuple(taus),
        mults=tuple(mults),
        tau_dims=tuple(dims),
        slices=slices,
        mixed_probs=mixed,
    )


@lru_cache(maxsize=16384)
def _scalar_signs(cat: IrrepCatalog, r: int, s: int, m: int, seed: int):
    """Per block of the (r,s) channel: +-1 if tau(m) = +-I, else None."""
    ch = _pair_channel(cat, r, s, seed)
    out = []
    for t in ch.taus:
        if m == cat.group.identity:
            out.append(1)
            continue
        lam = scalar_action(cat, t, m)
        if lam is None or abs(lam.imag) > 1e-9 or abs(abs(lam.real) - 1.0) > 1e-9:
            out.append(None)
        else:
            out.append(1 if lam.real > 0 else -1)
    return tuple(out)


def _term_form(reg: RegisterState):
    """(coefs (K,), factors per coordinate (K, d_i, d_i)) for factorizable forms."""
    cat = reg.inst.catalog
    labs = reg.label
    if reg.form == "terms":
        return reg.term_coefs, reg.term_factors
    eyes = [np.eye(cat.dim(r), dtype=complex) for r in labs]
    if reg.form == "mixed":
        return np.array([1.0 / reg.dim]), [e[None] for e in eyes]
    if reg.form == "proj":
        rk = projector_rank(reg.inst, reg.label)
        acts = [cat.irreps[r].matrices[m] for r, m in zip(labs, reg.inst.hidden)]
        coefs = np.array([0.5 / rk, 0.5 / rk])
        return coefs, [np.stack([e, a]) for e, a in zip(eyes, acts)]
    raise ChannelError(f"register form {reg.form} has no factorized representation")


def _term_count(reg: RegisterState) -> int | None:
    if reg.form == "mixed":
        return 1
    if reg.form == "proj":
        return 2
    if reg.form == "terms":
        return len(reg.term_coefs)
    return None


# ---------------------------------------------------------------------------
# weak sampling


def weak_sample(inst: HSPInstance, rng: np.random.Generator, history: dict | None = None) -> RegisterState:
    """Draw a product label with probability P_H and return its register state.

    Coordinate-sequential exact sampling: the running prefix marginal
    P(a_1..a_i) = prod p_j(a_j) + prod q_j(a_j) * [all later m_j trivial]
    gives each coordinate's conditional in closed form, so no enumeration of
    the |irreps|^n label space ever happens.
    """
    return weak_sample_pool(inst, rng, 1, histories=[history])[0]


def weak_sample_pool(
    inst: HSPInstance,
    rng: np.random.Generator,
    count: int,
    histories=None,
) -> list[RegisterState]:
    """Vectorized weak sampling of `count` independent registers."""
    cat = inst.catalog
    k = len(cat.irreps)
    p, qs = _per_coordinate_weights(inst)
    if histories is None:
        histories = [None] * count
    if inst.hidden is None:
        cum = np.cumsum(p / p.sum())
        draws = np.searchsorted(cum, rng.random((count, inst.n)), side="right")
        draws = np.minimum(draws, k - 1)
        return [
            RegisterState(label=tuple(int(x) for x in row), inst=inst, form="mixed", history=h)
            for row, h in zip(draws, histories)
        ]
    e = inst.group.identity
    beta = [1.0] * (inst.n + 1)
    for i in range(inst.n - 1, -1, -1):
        beta[i] = beta[i + 1] * (1.0 if inst.hidden[i] == e else 0.0)
    p_run = np.ones(count)
    q_run = np.ones(count)
    labels = np.empty((count, inst.n), dtype=np.intp)
    for i in range(inst.n):
        w = p_run[:, None] * p[None, :] + (q_run * beta[i + 1])[:, None] * qs[i][None, :]
        np.clip(w, 0.0, None, out=w)
        cum = np.cumsum(w, axis=1)
        total = cum[:, -1]
        if np.any(total <= 0):
            raise ChannelError("weak sampling ran out of probability mass")
        u = rng.random(count) * total
        a = np.minimum(
            np.array([np.searchsorted(cum[j], u[j], side="right") for j in range(count)]),
            k - 1,
        )
        labels[:, i] = a
        p_run *= p[a]
        q_run *= qs[i][a]
    out = []
    for row, h in zip(labels, histories):
        label = tuple(int(x) for x in row)
        form = "mixed" if projector_rank(inst, label) == cat.product_dim(label) else "proj"
        out.append(RegisterState(label=label, inst=inst, form=form, history=h))
    return out


# ---------------------------------------------------------------------------
# combine channel


def _ptrace_mult(block: np.ndarray, m: int, d: int) -> np.ndarray:
    return np.einsum("iajb->ab", block.reshape(m, d, m, d))


def _fast_kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ra, ca = a.shape
    rb, cb = b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(ra * rb, ca * cb)


def _kronv(mats) -> np.ndarray:
    return reduce(_fast_kron, mats) if mats else np.eye(1, dtype=complex)


@lru_cache(maxsize=2048)
def _pair_transform_total(cat: IrrepCatalog, labels1: tuple, labels2: tuple, seed: int) -> np.ndarray:
    chans = [_pair_channel(cat, a, b, seed) for a, b in zip(labels1, labels2)]
    return _kronv([ch.transform for ch in chans])


def _channels_for(r1: RegisterState, r2: RegisterState, seed: int):
    cat = r1.inst.catalog
    return [_pair_channel(cat, a, b, seed) for a, b in zip(r1.label, r2.label)]


def _missing_signs_for(r1, r2, inst, seed):
    cat = inst.catalog
    return [
        _scalar_signs(cat, a, b, m, seed)
        for a, b, m in zip(r1.label, r2.label, inst.hidden)
    ]


def combine(
    r1: RegisterState,
    r2: RegisterState,
    inst: HSPInstance,
    rng: np.random.Generator | None,
    force_outcome: ProductLabel | None = None,
    want_missing: bool = False,
    cg_seed: int = 0,
    history: dict | None = None,
) -> CombineOutcome:
    """Isotypic sampling on the pair: measure tau_bar and return the child.

    The outcome is drawn coordinate-sequentially (measure tau_1, condition,
    then tau_2, ...), which induces exactly the joint distribution
    tr(P_tau_bar (D1 (x) D2)) because the per-coordinate isotypic projectors
    commute. force_outcome skips sampling and evaluates that outcome's
    probability and child directly (used by tests and enumeration).
    """
    if r1.inst is not inst or r2.inst is not inst:
        raise ChannelError("registers belong to a different instance")
    if len(r1.label) != len(r2.label):
        raise ChannelError("register labels have different lengths")
    chans = _channels_for(r1, r2, cg_seed)
    signs = _missing_signs_for(r1, r2, inst, cg_seed) if (want_missing and inst.hidden is not None) else None
    if r1.form == "mixed" and r2.form == "mixed":
        return _combine_mixed(r1, r2, inst, rng, chans, signs, force_outcome, history)
    k1, k2 = _term_count(r1), _term_count(r2)
    if k1 is not None and k2 is not None and k1 * k2 <= _TERM_PRODUCT_CAP:
        return _combine_factorized(r1, r2, inst, rng, chans, signs, force_outcome, history)
    return _combine_dense(r1, r2, inst, rng, chans, signs, force_outcome, history, cg_seed)


def _child_state(inst, child_label, matrix, history):
    d = matrix.shape[0]
    matrix = (matrix + matrix.conj().T) / 2.0
    tr = float(np.trace(matrix).real)
    matrix = matrix / tr
    if d == 1:
        return RegisterState(label=child_label, inst=inst, form="mixed", history=history)
    return RegisterState(label=child_label, inst=inst, form="dense", matrix=matrix, history=history)


def _pick(rng, probs) -> int:
    probs = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    probs = np.where(probs < _COND_EPS, 0.0, probs)
    cum = np.cumsum(probs)
    total = cum[-1]
    if total <= 0:
        raise ChannelError("zero-probability conditioning in combine")
    return min(int(np.searchsorted(cum, rng.random() * total, side="right")), len(probs) - 1)


def _combine_mixed(r1, r2, inst, rng, chans, signs, force, history):
    prob = 1.0
    child_label = []
    for i, ch in enumerate(chans):
        if force is not None:
            bi = _block_index(ch, inst, force[i])
            p = float(ch.mixed_probs[bi])
        else:
            bi = _pick(rng, ch.mixed_probs)
            p = float(ch.mixed_probs[bi])
        child_label.append(ch.taus[bi])
        prob *= p
    mass = None
    if signs is not None:
        plus, minus = 1.0, 1.0
        for ch, sg in zip(chans, signs):
            plus *= sum(ch.mixed_probs[b] for b, s in enumerate(sg) if s is not None)
            minus *= sum(s * ch.mixed_probs[b] for b, s in enumerate(sg) if s is not None)
        mass = max((plus - minus) / 2.0, 0.0)
    child_label = tuple(child_label)
    if prob < _COND_EPS:
        return CombineOutcome(child_label, max(prob, 0.0), None, mass)
    child = RegisterState(label=child_label, inst=inst, form="mixed", history=history)
    return CombineOutcome(child_label, prob, child, mass)


def _block_index(ch: _PairChannel, inst, tau: int) -> int:
    for b, t in enumerate(ch.taus):
        if t == tau:
            return b
    raise ChannelError(f"outcome {tau} does not appear in the decomposition")


@lru_cache(maxsize=4096)
def _block_trace_mask(cat: IrrepCatalog, r: int, s: int, seed: int) -> np.ndarray:
    """(q, n_blocks) 0/1 mask: column b marks the rows of block b."""
    ch = _pair_channel(cat, r, s, seed)
    W = np.zeros((ch.q, len(ch.slices)))
    for b, (a, bb) in enumerate(ch.slices):
        W[a:bb, b] = 1.0
    return W


def _combine_factorized(r1, r2, inst, rng, chans, signs, force, history):
    cat = inst.catalog
    n = len(chans)
    c1, f1 = _term_form(r1)
    c2, f2 = _term_form(r2)
    coefs = np.multiply.outer(c1, c2).reshape(-1).astype(complex)
    K = len(coefs)

    tr_blocks = []  # per coordinate: (K, n_blocks) block traces of T M T^dag
    y_all = []  # per coordinate: (K, q_i, q_i) transformed joint factors
    for i, ch in enumerate(chans):
        M = (f1[i][:, None, :, None, :, None] * f2[i][None, :, None, :, None, :]).reshape(K, ch.q, ch.q)
        Y = ch.transform[None] @ M @ ch.transform.conj().T[None]
        y_all.append(Y)
        W = _block_trace_mask(cat, r1.label[i], r2.label[i], 0)
        tr_blocks.append(np.einsum("kaa->ka", Y) @ W)

    mass = None
    if signs is not None:
        plus = np.ones(K, dtype=complex)
        minus = np.ones(K, dtype=complex)
        for i, sg in enumerate(signs):
            keep = [b for b, s in enumerate(sg) if s is not None]
            sgv = np.array([sg[b] for b in keep], dtype=float)
            tb = tr_blocks[i][:, keep]
            plus *= tb.sum(axis=1)
            minus *= tb @ sgv
        mass = float(max(((coefs * (plus - minus)).sum().real) / 2.0, 0.0))

    totals = np.stack([tb.sum(axis=1) for tb in tr_blocks], axis=1)  # (K, n)
    suf = np.ones((K, n + 1), dtype=complex)
    for i in range(n - 1, -1, -1):
        suf[:, i] = suf[:, i + 1] * totals[:, i]

    run = coefs.copy()
    chosen = []
    for i, ch in enumerate(chans):
        if force is not None:
            bi = _block_index(ch, inst, force[i])
        else:
            w = ((run * suf[:, i + 1]) @ tr_blocks[i]).real
            bi = _pick(rng, w)
        chosen.append(bi)
        run = run * tr_blocks[i][:, bi]
    child_label = tuple(ch.taus[b] for ch, b in zip(chans, chosen))
    prob = float(run.sum().real)
    if prob < _COND_EPS:
        return CombineOutcome(child_label, max(prob, 0.0), None, mass)

    factors = []
    for i, (ch, bi) in enumerate(zip(chans, chosen)):
        a, b = ch.slices[bi]
        m, d = ch.mults[bi], ch.tau_dims[bi]
        blk = y_all[i][:, a:b, a:b].reshape(K, m, d, m, d)
        factors.append(np.einsum("kiajb->kab", blk))
    child_coefs = coefs / prob
    child_dim = int(np.prod([ch.tau_dims[b] for ch, b in zip(chans, chosen)]))
    if child_dim >= _CHILD_TERMS_MIN_DIM and K <= _TERM_PRODUCT_CAP:
        child = RegisterState(
            label=child_label,
            inst=inst,
            form="terms",
            term_coefs=child_coefs,
            term_factors=factors,
            history=history,
        )
    else:
        acc = None
        for k in range(K):
            mat = child_coefs[k] * _kronv([f[k] for f in factors])
            acc = mat if acc is None else acc + mat
        child = _child_state(inst, child_label, acc, history)
    return CombineOutcome(child_label, prob, child, mass)


def _interleave_index(dims1, dims2) -> np.ndarray:
    """Map interleaved (r_1 s_1)(r_2 s_2).. indices to kron (r..)(s..) indices."""
    n = len(dims1)
    qs = [a * b for a, b in zip(dims1, dims2)]
    Q = int(np.prod(qs))
    rem = np.arange(Q)
    digits_r = [None] * n
    digits_s = [None] * n
    for i in range(n - 1, -1, -1):
        di = rem % qs[i]
        rem = rem // qs[i]
        digits_r[i] = di // dims2[i]
        digits_s[i] = di % dims2[i]
    idx_r = np.zeros(Q, dtype=np.intp)
    idx_s = np.zeros(Q, dtype=np.intp)
    for i in range(n):
        idx_r = idx_r * dims1[i] + digits_r[i]
        idx_s = idx_s * dims2[i] + digits_s[i]
    return idx_r * int(np.prod(dims2)) + idx_s


def _apply_rows(J: np.ndarray, qs, i: int, T: np.ndarray) -> np.ndarray:
    """Left-multiply coordinate i's row factor of the (Q, Q) matrix by T."""
    Q = J.shape[1]
    A = int(np.prod(qs[:i]))
    J3 = J.reshape(A, qs[i], -1)
    return np.matmul(T[None], J3).reshape(-1, Q)


def _combine_dense(r1, r2, inst, rng, chans, signs, force, history, cg_seed):
    cat = inst.catalog
    n = len(chans)
    dims1 = [cat.dim(r) for r in r1.label]
    dims2 = [cat.dim(r) for r in r2.label]
    qs = [a * b for a, b in zip(dims1, dims2)]
    Q = int(np.prod(qs))
    if Q * Q > _DENSE_ENTRY_GUARD:
        raise GuardError(f"dense combine joint would need {Q * Q} entries")
    perm = _interleave_index(dims1, dims2)
    J = _fast_kron(r1.density, r2.density)[np.ix_(perm, perm)]

    # transform every coordinate up front: J <- (kron T_i) J (kron T_i)^dag
    if Q <= 128:
        Ttot = _pair_transform_total(cat, r1.label, r2.label, cg_seed)
        J = Ttot @ J @ Ttot.conj().T
    else:
        for i, ch in enumerate(chans):
            J = _apply_rows(J, qs, i, ch.transform)
        J = J.conj().T
        for i, ch in enumerate(chans):
            J = _apply_rows(J, qs, i, ch.transform)
        J = J.conj().T

    mass = None
    if signs is not None:
        # diagonal of the transformed joint, contracted with block indicators
        diag = np.einsum("ii->i", J).reshape(qs)
        plus = diag
        minus = diag
        for i, (ch, sg) in enumerate(zip(chans, signs)):
            ind_p = np.zeros(ch.q)
            ind_s = np.zeros(ch.q)
            for b, s in enumerate(sg):
                if s is None:
                    continue
                a, bb = ch.slices[b]
                ind_p[a:bb] = 1.0
                ind_s[a:bb] = float(s)
            plus = np.tensordot(ind_p, plus, axes=([0], [0]))
            minus = np.tensordot(ind_s, minus, axes=([0], [0]))
        mass = float(max((complex(plus) - complex(minus)).real / 2.0, 0.0))

    pool = string.ascii_lowercase + string.ascii_uppercase
    V = J.reshape(qs + qs)
    sel = [slice(None)] * (2 * n)
    chosen = []
    for i, ch in enumerate(chans):
        if force is not None:
            bi = _block_index(ch, inst, force[i])
        else:
            view = V[tuple(sel)]
            row = [pool[j] for j in range(n)]
            col = list(row)
            col[i] = pool[n]
            v = np.einsum("".join(row) + "".join(col) + "->" + row[i] + col[i], view)
            w = np.array([np.trace(v[a:b, a:b]).real for a, b in ch.slices])
            bi = _pick(rng, w)
        chosen.append(bi)
        a, b = ch.slices[bi]
        sel[i] = slice(a, b)
        sel[n + i] = slice(a, b)

    # gather the chosen block product as a small matrix
    rows = np.array([0], dtype=np.intp)
    for i, bi in enumerate(chosen):
        a, b = chans[i].slices[bi]
        rows = np.add.outer(rows * qs[i], np.arange(a, b, dtype=np.intp)).reshape(-1)
    Jsub = J[np.ix_(rows, rows)]
    prob = float(np.trace(Jsub).real)
    child_label = tuple(ch.taus[b] for ch, b in zip(chans, chosen))
    if prob < _COND_EPS:
        return CombineOutcome(child_label, max(prob, 0.0), None, mass)
    shape = []
    for i, bi in enumerate(chosen):
        shape += [chans[i].mults[bi], chans[i].tau_dims[bi]]
    row_m = [pool[2 * i] for i in range(n)]
    row_d = [pool[2 * i + 1] for i in range(n)]
    col_d = [pool[2 * n + i] for i in range(n)]
    sub = (
        "".join(m + d for m, d in zip(row_m, row_d))
        + "".join(m + d for m, d in zip(row_m, col_d))
        + "->"
        + "".join(row_d)
        + "".join(col_d)
    )
    child = np.einsum(sub, Jsub.reshape(shape + shape))
    dchild = int(np.prod([chans[i].tau_dims[b] for i, b in enumerate(chosen)]))
    child = child.reshape(dchild, dchild) / prob
    return CombineOutcome(child_label, prob, _child_state(inst, child_label, child, history), mass)


def _joint_density_interleaved(r1: RegisterState, r2: RegisterState) -> np.ndarray:
    """D1 (x) D2 reordered so row index is (r_1 s_1)(r_2 s_2)... per coordinate."""
    cat = r1.inst.catalog
    n = len(r1.label)
    dims1 = [cat.dim(r) for r in r1.label]
    dims2 = [cat.dim(r) for r in r2.label]
    q = int(np.prod([a * b for a, b in zip(dims1, dims2)]))
    J = np.multiply.outer(r1.density.reshape(dims1 + dims1), r2.density.reshape(dims2 + dims2))
    perm = []
    for i in range(n):
        perm += [i, 2 * n + i]
    for i in range(n):
        perm += [n + i, 3 * n + i]
    return np.ascontiguousarray(np.transpose(J, perm)).reshape(q, q)


def combine_distribution(
    r1: RegisterState,
    r2: RegisterState,
    inst: HSPInstance,
    cg_seed: int = 0,
    max_outcomes: int = 4096,
):
    """Exact outcome distribution of combine, via the literal global formula.

    Independently of the sequential sampler: builds D1 (x) D2 and the global
    isotypic projectors as explicit matrices. Guarded to small dimensions;
    used for cross-validation and the full-space reference comparisons.
    """
    cat = inst.catalog
    chans = _channels_for(r1, r2, cg_seed)
    n_out = int(np.prod([len(ch.taus) for ch in chans]))
    if n_out > max_outcomes:
        raise GuardError(f"{n_out} outcomes exceed enumeration cap {max_outcomes}")
    D = _joint_density_interleaved(r1, r2)
    if D.shape[0] ** 2 > _DENSE_ENTRY_GUARD:
        raise GuardError("joint density too large for literal enumeration")
    out = {}
    for combo in itertools.product(*[range(len(ch.taus)) for ch in chans]):
        B = _kronv([ch.transform[slice(*ch.slices[b])] for ch, b in zip(chans, combo)])
        Y = B @ D @ B.conj().T
        p = float(np.trace(Y).real)
        label = tuple(ch.taus[b] for ch, b in zip(chans, combo))
        if p < _COND_EPS:
            out[label] = (max(p, 0.0), None)
            continue
        shape = []
        for ch, b in zip(chans, combo):
            shape += [ch.mults[b], ch.tau_dims[b]]
        pool = string.ascii_lowercase + string.ascii_uppercase
        n = len(chans)
        row_m = [pool[2 * i] for i in range(n)]
        row_d = [pool[2 * i + 1] for i in range(n)]
        col_d = [pool[2 * n + i] for i in range(n)]
        sub = (
            "".join(m + d for m, d in zip(row_m, row_d))
            + "".join(m + d for m, d in zip(row_m, col_d))
            + "->"
            + "".join(row_d)
            + "".join(col_d)
        )
        child = np.einsum(sub, Y.reshape(shape + shape))
        d = int(np.prod([ch.tau_dims[b] for ch, b in zip(chans, combo)]))
        child = child.reshape(d, d) / p
        out[label] = (p, _child_state(inst, label, child, None))
    return out


# ---------------------------------------------------------------------------
# full-space references


def coset_state_literal(inst: HSPInstance, guard: int = 100) -> np.ndarray:
    """The mixed coset state, literally averaging |cH><cH| over all c."""
    N = inst.group.order**inst.n
    if N > guard:
        raise GuardError(f"literal coset state guard exceeded: {N} > {guard}")
    order = inst.group.order
    vectors = np.zeros((N, N), dtype=complex)
    rho = np.zeros((N, N), dtype=complex)
    for c in itertools.product(range(order), repeat=inst.n):
        if inst.hidden is None:
            members = [c]
        else:
            members = [c, inst.mul_vec(c, inst.hidden)]
        v = np.zeros(N, dtype=complex)
        for m in members:
            idx = 0
            for g in m:
                idx = idx * order + g
            v[idx] = 1.0
        v /= np.linalg.norm(v)
        rho += np.outer(v, v.conj())
    return rho / N


def coset_state_matrix(inst: HSPInstance) -> np.ndarray:
    """(I + R_m) / |G|^n on the group-algebra space (identity/|G|^n if trivial)."""
    order = inst.group.order
    N = order**inst.n
    rho = np.eye(N, dtype=complex)
    if inst.hidden is not None:
        R = np.zeros((N, N))
        for g in itertools.product(range(order), repeat=inst.n):
            src = 0
            for x in g:
                src = src * order + x
            dst = 0
            for x in inst.mul_vec(g, inst.hidden):
                dst = dst * order + x
            R[dst, src] = 1.0
        rho = rho + R
    return rho / N


@dataclass(frozen=True)
class FullWeakReference:
    probabilities: dict
    densities: dict  # column-space convention (transported from the raw j-block)


def reference_weak_sample_full(inst: HSPInstance, guard: int = 1500) -> FullWeakReference:
    """Weak sampling via the explicit |G|^n-dim Fourier conjugation.

    Materializes rho_H = (I + R_m)/|G|^n, conjugates by the n-fold Fourier
    matrix, and reads off block probabilities and post-measurement column
    densities (transposed into the channel convention).
    """
    N = inst.group.order**inst.n
    if N > guard:
        raise GuardError(f"full-space guard exceeded: {N} > {guard}")
    cat = inst.catalog
    rho = coset_state_matrix(inst)
    F1 = fourier_matrix(cat)
    F = _kronv([F1] * inst.n)
    X = F @ rho @ F.conj().T
    probs, densities = _read_blocks(inst, X, fourier_row_blocks(cat))
    return FullWeakReference(probabilities=probs, densities=densities)


def _read_blocks(inst, X, blocks):
    cat = inst.catalog
    order = inst.group.order
    k = len(cat.irreps)
    probs = {}
    densities = {}
    for label in itertools.product(range(k), repeat=inst.n):
        # global Fourier rows of this product block: mixed-radix over coordinates
        rows = np.array([0], dtype=np.intp)
        for c in range(inst.n):
            _, start, stop = blocks[label[c]]
            idx = np.arange(start, stop, dtype=np.intp)
            rows = np.add.outer(rows * order, idx).reshape(-1)
        sub = X[np.ix_(rows, rows)]
        p = float(np.trace(sub).real)
        dims = [cat.dim(r) for r in label]
        d = int(np.prod(dims))
        shape = []
        for dd in dims:
            shape += [dd, dd]
        sub = sub.reshape(shape + shape)
        pool = string.ascii_lowercase + string.ascii_uppercase
        n = inst.n
        row_i = [pool[2 * c] for c in range(n)]
        row_j = [pool[2 * c + 1] for c in range(n)]
        col_j = [pool[2 * n + c] for c in range(n)]
        sub_s = (
            "".join(i + j for i, j in zip(row_i, row_j))
            + "".join(i + j for i, j in zip(row_i, col_j))
            + "->"
            + "".join(row_j)
            + "".join(col_j)
        )
        raw = np.einsum(sub_s, sub).reshape(d, d)
        probs[label] = p
        if p > 1e-12:
            densities[label] = raw.T / p  # transport raw j-block into channel convention
    return probs, densities


@dataclass(frozen=True)
class FullCombineReference:
    probabilities: dict
    children: dict
    spectra: dict


def embed_register_full(reg: RegisterState) -> np.ndarray:
    """Full |G|-space state of an n=1 register: row space mixed, column = D^T."""
    inst = reg.inst
    if inst.n != 1:
        raise GuardError("full-space embedding requires n = 1")
    cat = inst.catalog
    N = inst.group.order
    F = fourier_matrix(cat)
    X = np.zeros((N, N), dtype=complex)
    lab = reg.label[0]
    _, start, stop = fourier_row_blocks(cat)[lab]
    d = cat.dim(lab)
    X[start:stop, start:stop] = np.kron(np.eye(d) / d, reg.density.T)
    return F.conj().T @ X @ F


def reference_combine_full(
    r1: RegisterState,
    r2: RegisterState,
    inst: HSPInstance,
    guard_order: int = 8,
) -> FullCombineReference:
    """Combine via the explicit controlled-multiplication gate on C[G] (x) C[G].

    Applies M: |a>|b> -> |a>|b a^-1> as a permutation matrix, Fourier
    transforms the first register, measures its representation name, and
    keeps a column space; everything else is traced out.
    """
    if inst.n != 1:
        raise GuardError("reference combine requires n = 1")
    N = inst.group.order
    if N > guard_order:
        raise GuardError(f"reference combine guard exceeded: |G| = {N} > {guard_order}")
    S1 = embed_register_full(r1)
    S2 = embed_register_full(r2)
    S = np.kron(S1, S2)
    mul = inst.group.mul
    inv = inst.group.inv
    perm = np.empty(N * N, dtype=np.intp)
    for a in range(N):
        for b in range(N):
            perm[a * N + b] = a * N + mul[b][inv[a]]
    MS = np.zeros_like(S)
    MS[np.ix_(perm, perm)] = S
    F = fourier_matrix(inst.catalog)
    U = np.kron(F, np.eye(N))
    SF = U @ MS @ U.conj().T
    SF4 = SF.reshape(N, N, N, N)
    probs = {}
    children = {}
    spectra = {}
    for lab, start, stop in fourier_row_blocks(inst.catalog):
        d = inst.catalog.dim(lab)
        sub = SF4[start:stop, :, start:stop, :]
        p = float(np.einsum("xbxb->", sub).real)
        probs[(lab,)] = p
        if p <= 1e-12:
            continue
        sub6 = sub.reshape(d, d, N, d, d, N)
        child = np.einsum("ijbikb->jk", sub6) / p
        children[(lab,)] = child
        spectra[(lab,)] = np.sort(np.linalg.eigvalsh(child))
    return FullCombineReference(probabilities=probs, children=children, spectra=spectra)
