"""Command-line runner: solve, oracle, hedge, counterexample, proptest.

Reports are JSON with sorted keys and CSVs with repr-formatted floats, so a
rerun with the same config and seed is byte-identical.  Wall-clock timings
go to a separate timings.json for that reason.  Exit status is zero iff
every gap, tolerance, and verification check passes.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .claims import make_claim
from .counterexample import divergence_demo, phi_limit, phi_trunc
from .dual_dp import backward_value
from .market_tree import NEG_INF, build_tree
from .measure_families import family_from_doc, polar_paths
from .oracle_lp import OracleScaleError, global_sup_lp
from .primal_hedge import extract_strategy, primal_lp, verify_superhedge
from .random_instances import random_claim, random_family, random_tree
from . import suites as suites_mod

SCHEMA_VERSION = 1
GAP_TOL = 1e-9
DEFAULT_SEED = 0


def _worker_count(requested):
    cap = os.environ.get("ROBUSTHEDGE_THREADS")
    cap = int(cap) if cap else None
    if requested is None:
        requested = cap or 1
    if cap is not None:
        requested = min(requested, cap)
    return max(1, requested)


def _load_config(path):
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise SystemExit(f"config parse error in {path}: line {exc.lineno}, {exc.msg}")


def _require(cfg, field, path):
    if field not in cfg:
        raise SystemExit(f"config {path}: missing field {field!r}")
    return cfg[field]


def _instance_from_config(cfg, path, exact):
    tree = build_tree(_require(cfg, "tree", path))
    xi = make_claim(tree, _require(cfg, "claim", path), exact=exact)
    fam_doc = _require(cfg, "family", path)
    fam = family_from_doc(fam_doc, claim=xi)
    if exact and fam.var_lo is not None:
        from .simplex import rat

        fam = type(fam)(cls=fam.cls, var_lo=rat(fam.var_lo), var_hi=rat(fam.var_hi), claim=fam.claim)
    return tree, xi, fam


def _value_doc(v, exact):
    if v == NEG_INF:
        return "-inf"
    return str(v) if exact else float(v)


def _dump_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_timings(out, timings):
    with open(out / "timings.json", "w") as fh:
        json.dump(timings, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _strategy_digest(H):
    doc = {str(n): [repr(float(v)) for v in h] for n, h in sorted(H.h.items())}
    blob = json.dumps(doc, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


# -- solve ---------------------------------------------------------------


def run_solve(cfg, path, out, exact):
    t0 = time.perf_counter()
    tree, xi, fam = _instance_from_config(cfg, path, exact)
    timings = {}
    t = time.perf_counter()
    Y = backward_value(tree, xi, fam)
    dp = Y[tree.root]
    timings["dp"] = time.perf_counter() - t
    t = time.perf_counter()
    oracle_skipped = False
    lp = None
    try:
        lp, _ = global_sup_lp(tree, xi, fam, exact=exact)
    except OracleScaleError:
        oracle_skipped = True
        print("warning: oracle scale exceeded, LP cross-check skipped", file=sys.stderr)
    timings["oracle"] = time.perf_counter() - t
    t = time.perf_counter()
    pv, _strategy = primal_lp(tree, xi, fam, exact=exact)
    timings["primal"] = time.perf_counter() - t

    ok = True
    gaps = {}
    if dp == NEG_INF or pv == NEG_INF or (lp == NEG_INF and not oracle_skipped):
        finite = [v for v in (dp, lp, pv) if v is not None]
        ok = all(v == NEG_INF for v in finite)
        gaps = {"dp_minus_oracle": None, "dp_minus_primal": None}
        report_hedge = None
        digest = None
        X0 = "-inf"
    else:
        if not oracle_skipped:
            gaps["dp_minus_oracle"] = float(dp - lp)
            ok = ok and abs(gaps["dp_minus_oracle"]) <= GAP_TOL
        else:
            gaps["dp_minus_oracle"] = None
        gaps["dp_minus_primal"] = float(dp - pv)
        ok = ok and abs(gaps["dp_minus_primal"]) <= GAP_TOL
        H = extract_strategy(tree, Y, fam)
        digest = _strategy_digest(H)
        X0 = _value_doc(dp, exact)
        rep = verify_superhedge(tree, dp, H, xi, fam)
        hedge_ok = rep.ok and (rep.min_slack is None or rep.min_slack >= -GAP_TOL)
        report_hedge = {
            "ok": hedge_ok,
            "min_slack": None if rep.min_slack is None else float(rep.min_slack),
        }
        if fam.cls != "var_bounded":
            # pathwise domination is a martingale-cone statement; the
            # var-bounded value needs variance instruments, checked in primal_lp
            ok = ok and hedge_ok
    polar = polar_paths(tree, fam, xi)
    report = {
        "schema_version": SCHEMA_VERSION,
        "exact": exact,
        "dual_value": _value_doc(dp, exact),
        "oracle_value": None if oracle_skipped else _value_doc(lp, exact),
        "oracle_skipped": oracle_skipped,
        "primal_value": _value_doc(pv, exact),
        "gaps": gaps,
        "X0": X0,
        "strategy_digest": digest,
        "polar_path_count": len(polar),
        "verification": report_hedge,
        "ok": ok,
    }
    _dump_json(out / "solve_report.json", report)
    timings["total"] = time.perf_counter() - t0
    _write_timings(out, timings)
    print(f"dual={report['dual_value']} oracle={report['oracle_value']} "
          f"primal={report['primal_value']} polar={len(polar)} ok={ok}")
    return 0 if ok else 1


# -- oracle --------------------------------------------------------------


def _oracle_instance(args):
    idx, seed, exact = args
    import random

    rng = random.Random(seed)
    tree = random_tree(rng)
    xi = random_claim(tree, rng, exact=exact)
    fam = random_family(tree, rng, exact=exact)
    Y = backward_value(tree, xi, fam)
    dp = Y[tree.root]
    lp, _ = global_sup_lp(tree, xi, fam, exact=exact)
    if dp == NEG_INF or lp == NEG_INF:
        gap = 0.0 if dp == lp else float("inf")
        return idx, seed, "-inf" if dp == NEG_INF else repr(float(dp)), \
            "-inf" if lp == NEG_INF else repr(float(lp)), repr(gap)
    gap = float(abs(dp - lp))
    return idx, seed, repr(float(dp)), repr(float(lp)), repr(gap)


def run_oracle(cfg, out, exact, seed, threads):
    n = int(cfg.get("instances", 100))
    seed = seed if seed is not None else int(cfg.get("seed", DEFAULT_SEED))
    tasks = [(i, seed + i, exact) for i in range(n)]
    t0 = time.perf_counter()
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_oracle_instance, tasks, chunksize=4))
    else:
        rows = [_oracle_instance(t) for t in tasks]
    rows.sort(key=lambda r: r[0])  # merge deterministically by instance index
    worst = 0.0
    with open(out / "oracle.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "dp_value", "lp_value", "gap"])
        for _idx, s, dp, lp, gap in rows:
            w.writerow([s, dp, lp, gap])
            worst = max(worst, float(gap))
    _write_timings(out, {"oracle_suite": time.perf_counter() - t0, "instances": n})
    ok = worst <= (0.0 if exact else GAP_TOL)
    print(f"oracle: {n} instances, worst gap {worst!r}, ok={ok}")
    return 0 if ok else 1


# -- hedge ---------------------------------------------------------------


def run_hedge(cfg, path, out, exact):
    tree, xi, fam = _instance_from_config(cfg, path, exact)
    Y = backward_value(tree, xi, fam)
    dp = Y[tree.root]
    if dp == NEG_INF:
        _dump_json(out / "hedge.json", {
            "schema_version": SCHEMA_VERSION,
            "X0": "-inf",
            "strategy": {},
            "verification": {"min_slack": None, "polar_paths": len(tree.paths())},
        })
        print("value is -inf: every path is polar, no hedge")
        return 0
    H = extract_strategy(tree, Y, fam)
    rep = verify_superhedge(tree, dp, H, xi, fam)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "X0": _value_doc(dp, exact),
        "strategy": {
            str(n): [_value_doc(v, exact) for v in h] for n, h in sorted(H.h.items())
        },
        "verification": {
            "min_slack": None if rep.min_slack is None else float(rep.min_slack),
            "polar_paths": len(rep.polar),
        },
    }
    _dump_json(out / "hedge.json", doc)
    with open(out / "path_slacks.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["leaf", "slack"])
        for leaf in sorted(rep.slacks):
            w.writerow([leaf, repr(float(rep.slacks[leaf]))])
    ok = rep.ok and (rep.min_slack is None or rep.min_slack >= -GAP_TOL)
    print(f"X0={doc['X0']} min_slack={doc['verification']['min_slack']} "
          f"polar={len(rep.polar)} ok={ok}")
    return 0 if ok else 1


# -- counterexample ------------------------------------------------------


def run_counterexample(cfg, out):
    ce = cfg.get("counterexample", {})
    N = int(ce.get("N", 20))
    t_scale = float(ce.get("t", 1.0))
    rows = divergence_demo(N, t_scale)
    with open(out / "divergence.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "sigma_i", "f_i", "partial_sum"])
        for r in rows:
            w.writerow([r.i, repr(r.sigma), repr(r.f_value), repr(r.partial_sum)])

    phi_cfg = ce.get("phi", {})
    n = float(phi_cfg.get("n", 2.0))
    xs = phi_cfg.get("x", [n - 1.0, n, n + 1e-6, n + 5.0])
    k_max = int(phi_cfg.get("k_max", 30))
    with open(out / "phi_sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "K", "l", "x", "phi_trunc", "phi_limit", "abs_err"])
        for k in range(1, k_max + 1):
            K, l = float(k), 2.0 ** (-k)
            for x in xs:
                val = phi_trunc(float(x), n, K, l)
                lim = phi_limit(float(x), n)
                w.writerow([k, repr(K), repr(l), repr(float(x)),
                            repr(val), repr(lim), repr(abs(val - lim))])
    ok = all(r.f_value >= 1.0 for r in rows)
    total = rows[-1].partial_sum if rows else 0.0
    print(f"counterexample: {N} bands, partial sum {total:.3f}, all f_i >= 1: {ok}")
    return 0 if ok else 1


# -- proptest ------------------------------------------------------------


def run_proptest(cfg, out, seed):
    seed = seed if seed is not None else int(cfg.get("seed", DEFAULT_SEED))
    counts = cfg.get("suites", {})
    results = suites_mod.run_all_suites(seed, counts)
    summary = []
    failed = False
    for r in results:
        line = r.summary_line()
        print(line)
        summary.append({
            "name": r.name,
            "total": r.total,
            "passed": r.passed,
            "failures": r.failures,
        })
        failed = failed or not r.ok
    _dump_json(out / "proptest.json", {
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "counts": counts,
        "suites": summary,
    })
    return 1 if failed else 0


# -- entry point ---------------------------------------------------------


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="robusthedge",
        description="Robust superhedging on finite scenario trees",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "oracle", "hedge", "counterexample", "proptest"):
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="experiment config (JSON)")
        p.add_argument("--exact", action="store_true", help="rational arithmetic")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out", type=Path, default=Path("out"))
        p.add_argument("--threads", type=int, default=None)
    args = parser.parse_args(argv)

    cfg = _load_config(args.config) if args.config else {}
    if args.command in ("solve", "hedge") and not args.config:
        raise SystemExit(f"{args.command} requires --config")
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    threads = _worker_count(args.threads)

    if args.command == "solve":
        return run_solve(cfg, args.config, out, args.exact)
    if args.command == "oracle":
        return run_oracle(cfg, out, args.exact, args.seed, threads)
    if args.command == "hedge":
        return run_hedge(cfg, args.config, out, args.exact)
    if args.command == "counterexample":
        return run_counterexample(cfg, out)
    return run_proptest(cfg, out, args.seed)


if __name__ == "__main__":
    sys.exit(main())
