"""The pairing sieve: coin-keyed bucketing, pairwise combines, missing-harmonic decision.

Each round every register draws fresh one-dimensional "coin" labels; registers
bucket by (active high-dimensional coordinates, per-coordinate pairing
fingerprint, coins) and partners combine. The run decides "trivial" when the
final one-dimensional labels contain a missing harmonic, "nontrivial"
otherwise; desk-scale degenerate endings are reported as distinct
inconclusive outcomes rather than decisions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channels import combine, weak_sample_pool
from .hsp import HSPInstance
from .reps import ProductLabel, dual_rep, tensor_one_dim

DECISION_TRIVIAL = "trivial"
DECISION_NONTRIVIAL = "nontrivial"
INCONCLUSIVE_EXTINCTION = "inconclusive-extinction"
INCONCLUSIVE_WEIGHT = "inconclusive-weight"


def default_rounds(n: int) -> int:
    if n == 1:
        return 1
    return math.ceil(6.0 * math.sqrt(n * math.log2(n)))


def default_coins(n: int) -> int:
    if n == 1:
        return 1
    return max(1, math.ceil(math.sqrt(n / math.log2(n))))


def default_pool_size(n: int) -> int:
    if n == 1:
        return 4
    raw = math.ceil(2.0 ** (2.0 * math.sqrt(n * math.log2(n))))
    return min(2**16, max(4, raw))


@dataclass(frozen=True)
class SieveConfig:
    pool_size: int
    rounds: int
    coins: int
    seed: int = 0
    keep_trajectories: bool = False
    check_missing: bool = False

    def __post_init__(self):
        if self.pool_size < 2:
            raise ValueError("pool_size must be at least 2")
        if self.rounds < 1 or self.coins < 1:
            raise ValueError("rounds and coins must be positive")

    @classmethod
    def for_n(cls, n: int, **overrides) -> "SieveConfig":
        base = dict(
            pool_size=default_pool_size(n),
            rounds=default_rounds(n),
            coins=default_coins(n),
        )
        base.update(overrides)
        return cls(**base)


def weight(cat_or_inst, label: ProductLabel) -> int:
    """Number of components with dimension > 1."""
    cat = getattr(cat_or_inst, "catalog", cat_or_inst)
    return sum(1 for r in label if cat.dim(r) > 1)


@dataclass(frozen=True)
class PairingKey:
    """Bucket key: active indices, per-index fingerprints, the full coin vector.

    Registers are partners iff their keys are equal. The inactive profile (the
    one-dim components at non-active coordinates) is carried for telemetry but
    deliberately excluded from equality: one-dim components multiply freely
    under combines and need no alignment.
    """

    active_indices: tuple[int, ...]
    entries: tuple[tuple[tuple[int, int], int], ...]  # ((fingerprint pair), psi)
    coins: tuple[int, ...]
    inactive_profile: tuple[tuple[int, int], ...] = field(compare=False, default=())


def pairing_key(cat, label: ProductLabel, coins) -> PairingKey:
    """Key under the rule: match the k leftmost high-dim coordinates, where
    coordinate j's fingerprint is the unordered pair {rho, dual(rho) (x) psi_j},
    and all coins must agree."""
    coins = tuple(int(c) for c in coins)
    high = [i for i, r in enumerate(label) if cat.dim(r) > 1]
    active = tuple(high[: len(coins)])
    entries = []
    for j, i in enumerate(active):
        psi = coins[j]
        partner = tensor_one_dim(cat, dual_rep(cat, label[i]), psi)
        lo, hi = sorted((label[i], partner))
        entries.append(((lo, hi), psi))
    inactive = tuple((i, label[i]) for i in range(len(label)) if i not in set(active) and cat.dim(label[i]) == 1)
    return PairingKey(
        active_indices=active,
        entries=tuple(entries),
        coins=coins,
        inactive_profile=inactive,
    )


@dataclass
class CombineEvent:
    round_index: int
    parent_labels: tuple[ProductLabel, ProductLabel]
    parent_weights: tuple[int, int]
    child_label: ProductLabel
    child_weight: int
    probability: float
    missing_mass: float | None


@dataclass
class SieveResult:
    decision: str
    final_labels: list
    survivors_per_round: list
    discarded_per_round: list
    rounds_completed: int
    extinction_round: int | None = None
    max_missing_mass: float = 0.0
    combine_count: int = 0
    events: list | None = None
    trajectories: list | None = None

    @property
    def decided(self) -> bool:
        return self.decision in (DECISION_TRIVIAL, DECISION_NONTRIVIAL)


def missing_for_support(inst: HSPInstance, label: ProductLabel, support) -> bool:
    """Is a one-dim label a missing harmonic of a hidden involution on `support`?

    The tested involution's nontrivial coordinates are conjugates of mu, and
    one-dim characters are constant on mu's class, so the label is missing iff
    the product of chi_i(mu) over the support is -1. For a ground-truth
    nontrivial instance and its own support this coincides with
    is_missing_harmonic.
    """
    sign = 1.0
    for i in support:
        val = inst.catalog.char_value(label[i], inst.mu)
        sign *= 1.0 if val.real > 0 else -1.0
    return sign < 0


def run_sieve(
    inst: HSPInstance,
    cfg: SieveConfig,
    rng: np.random.Generator | None = None,
    missing_support: tuple | None = None,
) -> SieveResult:
    """Draw a pool, run the pairing rounds, and decide via missing harmonics.

    missing_support names the coordinates the tested hidden involution is
    promised to occupy; a final label certifies "trivial" when its character
    product over those coordinates is -1. Default: the instance's own support
    when hidden is nontrivial (so the decision matches is_missing_harmonic
    exactly), and all coordinates otherwise (the all-nontrivial promise).
    Recovery passes the support solved by linear algebra.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    if missing_support is None:
        if inst.hidden is None:
            missing_support = tuple(range(inst.n))
        else:
            e = inst.group.identity
            missing_support = tuple(i for i, m in enumerate(inst.hidden) if m != e)
    cat = inst.catalog
    one_dims = np.array(cat.one_dim_indices)
    histories = [{"round": 0, "id": k, "weights": None} for k in range(cfg.pool_size)]
    pool = weak_sample_pool(inst, rng, cfg.pool_size, histories=histories)
    if cfg.keep_trajectories:
        for reg in pool:
            reg.history["weights"] = (weight(cat, reg.label),)

    survivors = []
    discarded = []
    events = [] if cfg.keep_trajectories else None
    max_missing = 0.0
    n_combines = 0
    extinction_round = None

    for rnd in range(1, cfg.rounds + 1):
        coin_draws = rng.choice(one_dims, size=(len(pool), cfg.coins))
        buckets: dict[PairingKey, list] = {}
        for reg, coins in zip(pool, coin_draws):
            key = pairing_key(cat, reg.label, coins)
            buckets.setdefault(key, []).append(reg)
        children = []
        dropped = 0
        for key, members in buckets.items():
            if len(members) % 2 == 1:
                dropped += 1
                members = members[:-1]
            for a, b in zip(members[::2], members[1::2]):
                hist = None
                if cfg.keep_trajectories:
                    hist = {
                        "round": rnd,
                        "parents": (a.history["id"], b.history["id"]) if a.history else None,
                        "weights": None,
                    }
                out = combine(
                    a, b, inst, rng,
                    want_missing=cfg.check_missing,
                    history=hist,
                )
                n_combines += 1
                if out.missing_mass is not None:
                    max_missing = max(max_missing, out.missing_mass)
                if out.child is None:
                    dropped += 2
                    continue
                if cfg.keep_trajectories:
                    w_child = weight(cat, out.child_label)
                    parent_tr = a.history.get("weights") or ()
                    hist["id"] = len(children)
                    hist["weights"] = parent_tr + (w_child,)
                    events.append(
                        CombineEvent(
                            round_index=rnd,
                            parent_labels=(a.label, b.label),
                            parent_weights=(weight(cat, a.label), weight(cat, b.label)),
                            child_label=out.child_label,
                            child_weight=w_child,
                            probability=out.probability,
                            missing_mass=out.missing_mass,
                        )
                    )
                children.append(out.child)
        pool = children
        survivors.append(len(pool))
        discarded.append(dropped)
        if not pool:
            extinction_round = rnd
            break

    if extinction_round is not None:
        return SieveResult(
            decision=INCONCLUSIVE_EXTINCTION,
            final_labels=[],
            survivors_per_round=survivors,
            discarded_per_round=discarded,
            rounds_completed=extinction_round,
            extinction_round=extinction_round,
            max_missing_mass=max_missing,
            combine_count=n_combines,
            events=events,
            trajectories=_collect_trajectories(pool) if cfg.keep_trajectories else None,
        )

    final_weights = [weight(cat, reg.label) for reg in pool]
    final_labels = [reg.label for reg, w in zip(pool, final_weights) if w == 0]
    if any(w > 0 for w in final_weights):
        decision = INCONCLUSIVE_WEIGHT
    elif any(missing_for_support(inst, lab, missing_support) for lab in final_labels):
        decision = DECISION_TRIVIAL
    else:
        decision = DECISION_NONTRIVIAL
    return SieveResult(
        decision=decision,
        final_labels=final_labels,
        survivors_per_round=survivors,
        discarded_per_round=discarded,
        rounds_completed=cfg.rounds,
        max_missing_mass=max_missing,
        combine_count=n_combines,
        events=events,
        trajectories=_collect_trajectories(pool) if cfg.keep_trajectories else None,
    )


def _collect_trajectories(pool) -> list:
    out = []
    for reg in pool:
        if reg.history and reg.history.get("weights"):
            out.append(tuple(reg.history["weights"]))
    return out


@dataclass(frozen=True)
class ProgressStats:
    total_combines: int
    condition1: int  # child weight zero
    condition2: int  # heavy parents, absolute drop of at least c1 * sqrt(n/log2 n)
    condition3: int  # light parents, relative drop of at least c2
    any_condition: int
    frequency: float


def progress_stats(result: SieveResult, n: int, c1: float = 0.25, c2: float = 0.25) -> ProgressStats:
    """Classify combine events by the three weight-progress conditions.

    The parents' weight is taken as the larger of the two. c1 and c2 are
    reporting thresholds only; no correctness claim depends on them.
    """
    if result.events is None:
        raise ValueError("progress_stats requires a sieve run with keep_trajectories")
    threshold = math.sqrt(n / math.log2(n)) if n >= 2 else float("inf")
    c1_count = c2_count = zero_count = any_count = 0
    for ev in result.events:
        wpar = max(ev.parent_weights)
        drop = wpar - ev.child_weight
        cond1 = ev.child_weight == 0
        cond2 = wpar >= threshold and drop >= c1 * threshold
        cond3 = wpar < threshold and wpar > 0 and drop >= c2 * wpar
        zero_count += cond1
        c1_count += cond2
        c2_count += cond3
        any_count += cond1 or cond2 or cond3
    total = len(result.events)
    return ProgressStats(
        total_combines=total,
        condition1=zero_count,
        condition2=c1_count,
        condition3=c2_count,
        any_condition=any_count,
        frequency=any_count / total if total else 0.0,
    )


def trial_seed_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent, reproducible per-trial stream (counter-based split)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


def run_trials(inst: HSPInstance, cfg: SieveConfig, trials: int, missing_support: tuple | None = None):
    """Run independent sieve trials; returns the list of SieveResults."""
    results = []
    for t in range(trials):
        results.append(run_sieve(inst, cfg, trial_seed_rng(cfg.seed, t), missing_support=missing_support))
    return results
