"""Command-line front end: instances, analyses, experiments, reproducible JSON.

Exit codes: 0 success, 1 internal/verification failure, 2 usage/parse error,
3 size guard exceeded. Every command run with --out also writes a
<out>.manifest.json recording the command, instance, config, seed, version,
wall time and output digest; re-running with the same arguments and seed
reproduces the results file byte for byte on the same build.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .groups import GroupError, build_group, involutions, parse_group_spec
from .hsp import (
    GuardError,
    HSPError,
    check_base_condition,
    check_normal_condition,
    make_instance,
    plancherel_distribution,
    tv_distance,
    weak_distribution,
)
from .channels import (
    ChannelError,
    RegisterState,
    combine_distribution,
    reference_combine_full,
    reference_weak_sample_full,
    weak_sample,
)
from .recovery import (
    RecoveredInvolution,
    RecoveryConfig,
    TrivialVerdict,
    recover,
)
from .reps import RepError, cg_multiplicities, compute_catalog
from .sieve import SieveConfig, run_sieve, trial_seed_rng

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_GUARD = 3


def _label_name(label) -> str:
    return "(" + ",".join(str(x) for x in label) + ")"


def _json_dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _emit(args, payload: dict, manifest_extra: dict) -> None:
    text = _json_dump(payload)
    if args.out:
        out = Path(args.out)
        out.write_text(text, encoding="utf-8")
        manifest = {
            "command": manifest_extra["command"],
            "arguments": manifest_extra["arguments"],
            "seed": manifest_extra.get("seed"),
            "instance": manifest_extra.get("instance"),
            "config": manifest_extra.get("config"),
            "tool_version": __version__,
            "wall_time_s": manifest_extra["wall_time_s"],
            "output_sha256": hashlib.sha256(text.encode()).hexdigest(),
        }
        Path(str(out) + ".manifest.json").write_text(_json_dump(manifest), encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_group(args):
    if getattr(args, "group_file", None):
        from .groups import parse_group_file

        return parse_group_file(Path(args.group_file).read_text(encoding="utf-8")), f"file:{args.group_file}"
    if not getattr(args, "group", None):
        raise GroupError("one of --group or --group-file is required")
    return build_group(parse_group_spec(args.group)), args.group


def _build_instance(args):
    group, spec_name = _load_group(args)
    catalog = compute_catalog(group)
    mu = group.parse_element(args.mu) if args.mu else None
    if mu is None:
        invs = involutions(group)
        if not invs:
            raise HSPError("group has no involution; specify --mu")
        mu = invs[0]
    hidden_text = (args.hidden or "trivial").strip()
    if hidden_text.lower() == "trivial":
        hidden = None
    else:
        parts = [p for p in hidden_text.split(",") if p != ""]
        if len(parts) != args.n:
            raise HSPError(f"--hidden needs {args.n} comma-separated entries or 'trivial'")
        hidden = [group.parse_element(p) for p in parts]
    inst = make_instance(group, args.n, mu, hidden, catalog=catalog)
    return inst, spec_name


def _instance_payload(inst, spec_name) -> dict:
    desc = inst.describe()
    desc["group"] = spec_name
    desc["base_condition"] = {
        "char_witness": inst.char_witness,
        "rep_witness": inst.rep_witness,
    }
    return desc


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    return int.from_bytes(os.urandom(8), "little")


def _sieve_config(args, n: int, seed: int) -> SieveConfig:
    overrides = {}
    if args.pool is not None:
        overrides["pool_size"] = args.pool
    if args.rounds is not None:
        overrides["rounds"] = args.rounds
    if args.coins is not None:
        overrides["coins"] = args.coins
    cfg = SieveConfig.for_n(n, seed=seed, keep_trajectories=bool(getattr(args, "telemetry", None)), **overrides)
    return cfg


def _config_payload(cfg: SieveConfig) -> dict:
    return {
        "pool_size": cfg.pool_size,
        "rounds": cfg.rounds,
        "coins": cfg.coins,
        "seed": cfg.seed,
        "keep_trajectories": cfg.keep_trajectories,
        "check_missing": cfg.check_missing,
    }


# ---------------------------------------------------------------------------
# subcommands


def cmd_irreps(args) -> int:
    t0 = time.perf_counter()
    group, spec_name = _load_group(args)
    cat = compute_catalog(group)
    payload = {
        "schema": "simonsieve/irreps/1",
        "group": spec_name,
        "order": group.order,
        "class_sizes": [len(c) for c in group.classes],
        "class_representatives": [group.names[c[0]] for c in group.classes],
        "dimensions": [r.dim for r in cat.irreps],
        "characters": [
            [[round(v.real, 12), round(v.imag, 12)] for v in r.character] for r in cat.irreps
        ],
        "one_dim_indices": list(cat.one_dim_indices),
    }
    _emit(args, payload, {
        "command": "irreps",
        "arguments": vars(args) | {"func": None},
        "wall_time_s": time.perf_counter() - t0,
    })
    return EXIT_OK


def cmd_cg(args) -> int:
    t0 = time.perf_counter()
    group, spec_name = _load_group(args)
    cat = compute_catalog(group)
    k = len(cat.irreps)
    pairs = {}
    for r in range(k):
        for s in range(k):
            mults = cg_multiplicities(cat, r, s)
            pairs[f"{r}x{s}"] = {str(t): m for t, m in sorted(mults.items())}
    payload = {
        "schema": "simonsieve/cg/1",
        "group": spec_name,
        "dimensions": [r.dim for r in cat.irreps],
        "multiplicities": pairs,
    }
    _emit(args, payload, {
        "command": "cg",
        "arguments": vars(args) | {"func": None},
        "wall_time_s": time.perf_counter() - t0,
    })
    return EXIT_OK


def cmd_dist(args) -> int:
    t0 = time.perf_counter()
    inst, spec_name = _build_instance(args)
    dist = weak_distribution(inst)
    payload = {
        "schema": "simonsieve/dist/1",
        "instance": _instance_payload(inst, spec_name),
        "entries": {_label_name(k): v for k, v in sorted(dist.entries.items())},
        "total": dist.total(),
    }
    _emit(args, payload, {
        "command": "dist",
        "arguments": vars(args) | {"func": None},
        "instance": _instance_payload(inst, spec_name),
        "wall_time_s": time.perf_counter() - t0,
    })
    return EXIT_OK


def cmd_tvd(args) -> int:
    t0 = time.perf_counter()
    from .groups import center

    inst, spec_name = _build_instance(args)
    dist = weak_distribution(inst)
    plan = plancherel_distribution(inst)
    tvd = tv_distance(dist, plan)
    bound = 2.0 ** (-inst.n / 2.0)
    # the 2^{-n/2} bound is claimed only for noncentral mu and all-nontrivial
    # hidden coordinates; otherwise the distance is reported without one
    applies = (
        inst.hidden is not None
        and all(m != inst.group.identity for m in inst.hidden)
        and inst.mu not in set(center(inst.group).elements)
    )
    payload = {
        "schema": "simonsieve/tvd/1",
        "instance": _instance_payload(inst, spec_name),
        "tv_distance": tvd,
        "bound": bound,
        "bound_applies": applies,
        "within_bound": tvd <= bound + 1e-12,
    }
    _emit(args, payload, {
        "command": "tvd",
        "arguments": vars(args) | {"func": None},
        "instance": _instance_payload(inst, spec_name),
        "wall_time_s": time.perf_counter() - t0,
    })
    return EXIT_OK


def _sieve_trial(payload):
    (inst, cfg, trial, missing_support) = payload
    res = run_sieve(inst, cfg, trial_seed_rng(cfg.seed, trial), missing_support=missing_support)
    return trial, res


def cmd_sieve(args) -> int:
    t0 = time.perf_counter()
    if args.trials < 1:
        raise HSPError("--trials must be positive")
    inst, spec_name = _build_instance(args)
    seed = _resolve_seed(args)
    cfg = _sieve_config(args, inst.n, seed)
    if args.check_missing:
        cfg = SieveConfig(
            pool_size=cfg.pool_size, rounds=cfg.rounds, coins=cfg.coins,
            seed=cfg.seed, keep_trajectories=cfg.keep_trajectories, check_missing=True,
        )
    telemetry_lines = []
    decisions = {}
    results = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for trial, res in pool.map(
                _sieve_trial, [(inst, cfg, t, None) for t in range(args.trials)]
            ):
                results.append((trial, res))
    else:
        for t in range(args.trials):
            results.append(_sieve_trial((inst, cfg, t, None)))
    max_missing = 0.0
    per_trial = []
    for trial, res in sorted(results):
        decisions[res.decision] = decisions.get(res.decision, 0) + 1
        max_missing = max(max_missing, res.max_missing_mass)
        per_trial.append(
            {
                "trial": trial,
                "decision": res.decision,
                "final_labels": [_label_name(l) for l in res.final_labels],
                "survivors_per_round": res.survivors_per_round,
                "discarded_per_round": res.discarded_per_round,
                "combines": res.combine_count,
            }
        )
        if res.events is not None:
            for ev in res.events:
                telemetry_lines.append(
                    {
                        "trial": trial,
                        "round": ev.round_index,
                        "parent_labels": [_label_name(l) for l in ev.parent_labels],
                        "child_label": _label_name(ev.child_label),
                        "probability": ev.probability,
                        "weights": {
                            "parents": list(ev.parent_weights),
                            "child": ev.child_weight,
                        },
                        "missing_mass": ev.missing_mass,
                    }
                )
            telemetry_lines.append(
                {
                    "trial": trial,
                    "summary": {
                        "decision": res.decision,
                        "survivors_per_round": res.survivors_per_round,
                    },
                }
            )
    if args.telemetry:
        with open(args.telemetry, "w", encoding="utf-8") as fh:
            for line in telemetry_lines:
                fh.write(json.dumps(line, sort_keys=True) + "\n")
    payload = {
        "schema": "simonsieve/sieve/1",
        "instance": _instance_payload(inst, spec_name),
        "config": _config_payload(cfg),
        "trials": args.trials,
        "decisions": decisions,
        "max_missing_mass": max_missing,
        "per_trial": per_trial,
    }
    _emit(args, payload, {
        "command": "sieve",
        "arguments": {k: v for k, v in vars(args).items() if k != "func"},
        "seed": seed,
        "instance": _instance_payload(inst, spec_name),
        "config": _config_payload(cfg),
        "wall_time_s": time.perf_counter() - t0,
    })
    return EXIT_OK


def cmd_recover(args) -> int:
    t0 = time.perf_counter()
    inst, spec_name = _build_instance(args)
    seed = _resolve_seed(args)
    cfg = RecoveryConfig(sieve=_sieve_config(args, inst.n, seed))
    result = recover(inst, cfg, trial_seed_rng(seed, 0))
    if isinstance(result, RecoveredInvolution):
        body = {
            "decision": "nontrivial",
            "mbar": [inst.group.names[m] for m in result.mbar],
            "confidence": result.confidence,
        }
    elif isinstance(result, TrivialVerdict):
        body = {"decision": "trivial", "confidence": result.confidence}
    else:
        body = {"decision": "failure", "report": result.report}
    payload = {
        "schema": "simonsieve/recover/1",
        "instance": _instance_payload(inst, spec_name),
        "config": _config_payload(cfg.sieve),
        **body,
    }
    _emit(args, payload, {
        "command": "recover",
        "arguments": {k: v for k, v in vars(args).items() if k != "func"},
        "seed": seed,
        "instance": _instance_payload(inst, spec_name),
        "config": _config_payload(cfg.sieve),
        "wall_time_s": time.perf_counter() - t0,
    })
    return EXIT_OK if body["decision"] != "failure" else EXIT_FAIL


def cmd_check_base(args) -> int:
    t0 = time.perf_counter()
    group, spec_name = _load_group(args)
    cat = compute_catalog(group)
    mu = group.parse_element(args.mu)
    rep_wit = check_base_condition(group, cat, mu)
    norm_wit = check_normal_condition(group, mu)
    agree = (rep_wit is None) == (norm_wit is None)
    payload = {
        "schema": "simonsieve/check-base/1",
        "group": spec_name,
        "mu": group.names[mu],
        "irrep_condition": {"holds": rep_wit is not None, "witness_label": rep_wit},
        "normal_condition": {
            "holds": norm_wit is not None,
            "witness_subgroup": list(norm_wit.elements) if norm_wit else None,
        },
        "equivalent": agree,
    }
    _emit(args, payload, {
        "command": "check-base",
        "arguments": {k: v for k, v in vars(args).items() if k != "func"},
        "wall_time_s": time.perf_counter() - t0,
    })
    return EXIT_OK if agree else EXIT_FAIL


def cmd_xcheck(args) -> int:
    t0 = time.perf_counter()
    inst, spec_name = _build_instance(args)
    ref = reference_weak_sample_full(inst)
    dist = weak_distribution(inst)
    labels = set(ref.probabilities) | set(dist.entries)
    weak_dev = max(
        abs(ref.probabilities.get(l, 0.0) - dist.entries.get(l, 0.0)) for l in labels
    )
    density_dev = 0.0
    for lab, D in ref.densities.items():
        reg = RegisterState(
            label=lab, inst=inst,
            form="mixed" if inst.hidden is None else "proj",
        )
        if reg.form == "proj":
            from .hsp import projector_rank

            if projector_rank(inst, lab) == inst.catalog.product_dim(lab):
                reg = RegisterState(label=lab, inst=inst, form="mixed")
        density_dev = max(density_dev, float(np.abs(D - reg.density).max()))
    combine_dev = None
    spectra_dev = None
    if inst.n == 1 and inst.group.order <= 8:
        combine_dev = 0.0
        spectra_dev = 0.0
        realizable = [l for l, p in dist.entries.items() if p > 1e-12]
        for la in realizable:
            for lb in realizable:
                ra = _make_register(inst, la)
                rb = _make_register(inst, lb)
                ref_c = reference_combine_full(ra, rb, inst)
                chan = combine_distribution(ra, rb, inst)
                for lab in chan:
                    combine_dev = max(
                        combine_dev,
                        abs(ref_c.probabilities.get(lab, 0.0) - chan[lab][0]),
                    )
                    if chan[lab][0] > 1e-9 and chan[lab][1] is not None:
                        sc = np.sort(np.linalg.eigvalsh(chan[lab][1].density))
                        spectra_dev = max(
                            spectra_dev, float(np.abs(sc - ref_c.spectra[lab]).max())
                        )
    ok = weak_dev < 1e-8 and density_dev < 1e-8 and (combine_dev is None or combine_dev < 1e-8)
    payload = {
        "schema": "simonsieve/xcheck/1",
        "instance": _instance_payload(inst, spec_name),
        "weak_probability_deviation": weak_dev,
        "weak_density_deviation": density_dev,
        "combine_probability_deviation": combine_dev,
        "combine_spectra_deviation": spectra_dev,
        "pass": bool(ok),
    }
    _emit(args, payload, {
        "command": "xcheck",
        "arguments": {k: v for k, v in vars(args).items() if k != "func"},
        "instance": _instance_payload(inst, spec_name),
        "wall_time_s": time.perf_counter() - t0,
    })
    return EXIT_OK if ok else EXIT_FAIL


def _make_register(inst, label):
    from .hsp import projector_rank

    if inst.hidden is None or projector_rank(inst, label) == inst.catalog.product_dim(label):
        return RegisterState(label=label, inst=inst, form="mixed")
    return RegisterState(label=label, inst=inst, form="proj")


def cmd_scaling(args) -> int:
    t0 = time.perf_counter()
    import math

    group, spec_name = _load_group(args)
    catalog = compute_catalog(group)
    seed = _resolve_seed(args)
    ns = [int(x) for x in args.n_list.split(",")]
    pools = [int(x) for x in args.pools.split(",")]
    rows = []
    for n in ns:
        inst = make_instance(group, n, group.parse_element(args.mu) if args.mu else involutions(group)[0], None, catalog=catalog)
        per_pool = []
        minimal = None
        for pool in pools:
            # scan a small window of round counts per pool; report the best
            base = int(math.floor(math.log2(pool)))
            best = None
            for rounds in range(max(3, base - 4), max(4, base - 1)):
                cfg = SieveConfig(pool_size=pool, rounds=rounds, coins=max(1, args.coins or 2), seed=seed)
                hits = 0
                for t in range(args.trials):
                    res = run_sieve(inst, cfg, trial_seed_rng(seed, (7919 * pool + 101 * rounds + t) % 2**32))
                    hits += res.decision == "trivial"
                rate = hits / args.trials
                if best is None or rate > best["detect_rate"]:
                    best = {"pool": pool, "rounds": rounds, "detect_rate": rate}
            per_pool.append(best)
            if minimal is None and best["detect_rate"] >= 0.95:
                minimal = pool
                break
        rows.append({"n": n, "sweep": per_pool, "minimal_pool_95": minimal})
    payload = {
        "schema": "simonsieve/scaling/1",
        "group": spec_name,
        "trials_per_point": args.trials,
        "rows": rows,
    }
    _emit(args, payload, {
        "command": "scaling",
        "arguments": {k: v for k, v in vars(args).items() if k != "func"},
        "seed": seed,
        "wall_time_s": time.perf_counter() - t0,
    })
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_group_args(p):
    p.add_argument("--group", help="catalog group name (Z6, D4, S3, Q8, W(Z2))")
    p.add_argument("--group-file", help="path to a custom multiplication table file")


def _add_instance_args(p):
    _add_group_args(p)
    p.add_argument("--n", type=int, required=True, help="number of coordinates")
    p.add_argument("--mu", help="distinguished involution (name or index)")
    p.add_argument("--hidden", help="'trivial' or comma-separated coordinates")


def _add_sieve_args(p):
    p.add_argument("--pool", type=int, help="pool size (default from n)")
    p.add_argument("--rounds", type=int, help="sieve rounds (default from n)")
    p.add_argument("--coins", type=int, help="coins per register (default from n)")
    p.add_argument("--seed", type=int, help="RNG seed (drawn and recorded if omitted)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="simonsieve", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("irreps", help="character table and dimensions as JSON")
    _add_group_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_irreps)

    p = sub.add_parser("cg", help="Clebsch-Gordan multiplicity tables as JSON")
    _add_group_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cg)

    p = sub.add_parser("dist", help="exact weak sampling distribution")
    _add_instance_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("tvd", help="TV distance to the Plancherel distribution")
    _add_instance_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tvd)

    p = sub.add_parser("sieve", help="run sieve trials")
    _add_instance_args(p)
    _add_sieve_args(p)
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--check-missing", action="store_true")
    p.add_argument("--telemetry", help="JSON-lines telemetry output path")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sieve)

    p = sub.add_parser("recover", help="recover the hidden involution")
    _add_instance_args(p)
    _add_sieve_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("check-base", help="check both base-condition forms")
    _add_group_args(p)
    p.add_argument("--mu", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_base)

    p = sub.add_parser("xcheck", help="channel vs full-space reference comparison")
    _add_instance_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_xcheck)

    p = sub.add_parser("scaling", help="minimal pool for trivial detection")
    _add_group_args(p)
    p.add_argument("--mu")
    p.add_argument("--n-list", default="4,6,8,10")
    p.add_argument("--pools", default="16,32,64,128,256,512,1024,2048,4096")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--coins", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scaling)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except GuardError as exc:
        print(f"guard exceeded: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (GroupError, HSPError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RepError, ChannelError, OSError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
