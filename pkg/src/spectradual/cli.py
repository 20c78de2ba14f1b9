"""Command-line surface producing reproducible JSON reports.

Subcommands: eig, duals, oracle, hypercp, bodydist, selftest. Exit codes:
0 ok, 2 parse error, 3 solver limit or failed check without certificate,
4 oracle size limit. Reports are deterministic for a fixed seed up to the
timing field; SPECTRADUAL_THREADS caps worker count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time

import numpy as np

from . import convbody as cb
from . import eigsolve as es
from . import graphlap as gl
from . import homfun as hf
from . import hypercp as hc
from . import selftest as st
from . import subdiff as sd

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_UNVERIFIED = 3
EXIT_SIZE = 4


class ParseFailure(Exception):
    pass


def _norm_index(text):
    if text in ("inf", "infinity", "oo"):
        return math.inf
    try:
        v = float(text)
    except ValueError:
        raise ParseFailure(f"invalid norm index {text!r}")
    if v < 1:
        raise ParseFailure(f"norm index must be >= 1, got {v}")
    return v


def _report(command, inputs, results, checks, t0):
    return {
        "command": command,
        "inputs": inputs,
        "results": results,
        "checks": checks,
        "timing_ms": round(1000.0 * (time.time() - t0), 3),
    }


def _emit(report, args):
    text = json.dumps(report, indent=2, sort_keys=False)
    if getattr(args, "json_out", None):
        with open(args.json_out, "w") as fh:
            fh.write(text + "\n")
    print(text)


def _config(args):
    return es.SolveConfig(max_iters=args.max_iters, tol=args.tol,
                          seed=args.seed, restarts=args.restarts)


def cmd_eig(args):
    t0 = time.time()
    G = gl.load_graph(args.graph)
    a, b = _norm_index(args.a), _norm_index(args.b)
    pair = gl.laplacian_pair(G, a, b)
    cfg = _config(args)
    if args.target == "max":
        est = es.power_max(pair.f, pair.g, cfg)
    else:
        est = es.ratiodca_min(pair.f, pair.g, cfg)
    checks = []
    if a == 1 and b == 1 and args.target == "min-nonzero" and G.n <= 16:
        h2, _ = gl.cheeger(G, 2)
        checks.append(st.check("h2 match", est.lam, float(h2), 1e-8))
    if a == 1 and math.isinf(b) and G.n <= 24:
        if args.target == "max":
            mc, _ = gl.maxcut(G)
            checks.append(st.check("maxcut match (pm-one indicator factor 2)",
                                   est.lam, 2 * float(mc), 1e-8))
        else:
            lo, _ = gl.mincut(G)
            checks.append(st.check("mincut match (pm-one indicator factor 2)",
                                   est.lam, 2 * float(lo), 1e-8))
    if math.isinf(a) and math.isinf(b) and args.target == "min-nonzero" \
            and gl.is_connected(G):
        diam = gl.diameter(G)
        checks.append(st.check("2/diam", est.lam, 2.0 / diam, 1e-8))
    checks.append(st.check_flag("certificate", est.verified,
                                note="feasible" if est.verified else "none"))
    report = _report("eig",
                     {"graph": G.to_json(), "a": args.a, "b": args.b,
                      "target": args.target, "seed": args.seed},
                     est.to_json(), checks, t0)
    _emit(report, args)
    if not est.verified or not all(c["passed"] for c in checks):
        return EXIT_UNVERIFIED
    return EXIT_OK


def cmd_duals(args):
    t0 = time.time()
    G = gl.load_graph(args.graph)
    a, b = _norm_index(args.a), _norm_index(args.b)
    pair = gl.laplacian_pair(G, a, b)
    cfg = _config(args)
    names = ["primal", "dual-pair", "edge-pullback-pair",
             "pushforward-pair", "quotient-pair"]
    values = [es.power_max(pair.f, pair.g, cfg).lam]
    for (ff, gg) in gl.dual_forms(pair):
        values.append(es.power_max(ff, gg, cfg).lam)
    checks = []
    for name, val in zip(names[1:], values[1:]):
        checks.append(st.check(f"agreement:{name}", val, values[0], args.tol
                               if args.tol > 1e-10 else 1e-6))
    d_f = pair.f.kernel_dim()
    d_g = pair.g.kernel_dim()
    overlap = sd.kernels_overlap(pair.f, pair.g)
    report = _report("duals",
                     {"graph": G.to_json(), "a": args.a, "b": args.b,
                      "seed": args.seed},
                     {"lambda_max": dict(zip(names, values)),
                      "kernel_dims": {"d_f": d_f, "d_g": d_g,
                                      "kernels_overlap": overlap}},
                     checks, t0)
    _emit(report, args)
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_UNVERIFIED


def cmd_oracle(args):
    t0 = time.time()
    G = gl.load_graph(args.graph)
    which = args.which
    try:
        if which == "cheeger":
            val, wit = gl.cheeger(G, args.k)
            results = {"value": float(val), "witness": [list(w) for w in wit]}
        elif which == "mincut":
            val, wit = gl.mincut(G)
            results = {"value": float(val), "witness": list(wit)}
        elif which == "maxcut":
            val, wit = gl.maxcut(G)
            results = {"value": float(val), "witness": list(wit)}
        elif which == "diam":
            val = gl.diameter(G)
            results = {"value": val}
        elif which == "balls":
            val, wit = gl.inscribed_ball_bound(G, args.k)
            results = {"value": float(val) if val != math.inf else "inf",
                       "witness": None if wit is None else
                       [{"center": v, "radius": r} for (v, r) in wit]}
        elif which == "multiway":
            val, wit = gl.multiway_maxcut_bound(G, args.k)
            results = {"value": float(val),
                       "witness": [list(b) for b in wit]}
        else:
            raise ParseFailure(f"unknown oracle {which!r}")
    except gl.SizeLimit as exc:
        print(json.dumps({"error": str(exc)}))
        return EXIT_SIZE
    report = _report("oracle",
                     {"graph": G.to_json(), "which": which, "k": args.k},
                     results, [st.check_flag("oracle-exact", True)], t0)
    _emit(report, args)
    return EXIT_OK


def cmd_hypercp(args):
    t0 = time.time()
    H = hc.load_hypergraph(args.hypergraph)
    p, q = _norm_index(args.p), _norm_index(args.q)
    cfg = _config(args)
    est = hc.cp_scores(H, p, q, cfg)
    checks = []
    if q in (1.0, math.inf):
        phi, psi = hc.lifted_dual_pair(H, p, q)
        dual_est = es.power_max(phi, psi, cfg)
        checks.append(st.check("dual-pair agreement", dual_est.lam, est.lam,
                               1e-6))
        lifted = [float(v) for v in dual_est.x]
        contracted = [float(v) for v in hc.contract_lifted_vector(H, dual_est.x)]
    else:
        lifted = contracted = None
        checks.append(st.check_flag(
            "dual-pair agreement", True, note="skipped (smooth q, approximate dual)"))
    report = _report("hypercp",
                     {"hypergraph": H.to_json(), "p": args.p, "q": args.q,
                      "seed": args.seed},
                     {"lambda": est.lam,
                      "scores": [float(v) for v in est.x],
                      "dual_scores_lifted": lifted,
                      "dual_scores_contracted": contracted,
                      "verified": est.verified},
                     checks, t0)
    _emit(report, args)
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_UNVERIFIED


def cmd_bodydist(args):
    t0 = time.time()
    K = cb.load_polytope(args.body)
    L = cb.load_polytope(args.body2)
    d = cb.hat_distance(K, L)
    dstar = cb.hat_distance(cb.polar(K), cb.polar(L))
    lo, hi = cb.st_extremes(K, L)
    checks = [st.check("polar identity", dstar, d, 1e-8)]
    report = _report("bodydist",
                     {"body": K.to_json(), "body2": L.to_json()},
                     {"hat_distance": d, "lambda_min": lo, "lambda_max": hi},
                     checks, t0)
    _emit(report, args)
    return EXIT_OK if all(c["passed"] for c in checks) else EXIT_UNVERIFIED


def cmd_selftest(args):
    t0 = time.time()
    checks, ok = st.run_selftest(seed=args.seed, profile=args.profile)
    digest_src = json.dumps(checks, sort_keys=True).encode()
    digest = hashlib.sha256(digest_src).hexdigest()
    report = _report("selftest", {"seed": args.seed},
                     {"digest": digest, "passed": ok,
                      "n_checks": len(checks)},
                     checks, t0)
    _emit(report, args)
    return EXIT_OK if ok else EXIT_UNVERIFIED


def build_parser():
    ap = argparse.ArgumentParser(
        prog="spectradual",
        description="Nonlinear eigenvalue problems for homogeneous convex "
                    "function pairs: solvers, duality transforms, oracles.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=1e-10)
        p.add_argument("--max-iters", type=int, default=200)
        p.add_argument("--restarts", type=int, default=8)
        p.add_argument("--json-out", type=str, default=None)

    p = sub.add_parser("eig", help="extremal eigenvalue of a graph pair")
    p.add_argument("--graph", required=True)
    p.add_argument("--a", default="1")
    p.add_argument("--b", default="1")
    p.add_argument("--target", choices=["max", "min-nonzero"], default="max")
    common(p)
    p.set_defaults(fn=cmd_eig)

    p = sub.add_parser("duals", help="largest eigenvalue across all five forms")
    p.add_argument("--graph", required=True)
    p.add_argument("--a", default="1")
    p.add_argument("--b", default="1")
    common(p)
    p.set_defaults(fn=cmd_duals)

    p = sub.add_parser("oracle", help="exact combinatorial oracles")
    p.add_argument("--graph", required=True)
    p.add_argument("--which", required=True,
                   choices=["cheeger", "mincut", "maxcut", "diam", "balls",
                            "multiway"])
    p.add_argument("--k", type=int, default=2)
    common(p)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("hypercp", help="hypergraph core-periphery scores")
    p.add_argument("--hypergraph", required=True)
    p.add_argument("--p", default="2")
    p.add_argument("--q", default="2")
    common(p)
    p.set_defaults(fn=cmd_hypercp)

    p = sub.add_parser("bodydist", help="scaling distance between two bodies")
    p.add_argument("--body", required=True)
    p.add_argument("--body2", required=True)
    common(p)
    p.set_defaults(fn=cmd_bodydist)

    p = sub.add_parser("selftest", help="run the full property suite")
    p.add_argument("--profile", choices=["full", "quick"], default="full")
    common(p)
    p.set_defaults(fn=cmd_selftest)
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ParseFailure, FileNotFoundError, json.JSONDecodeError,
            ValueError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_PARSE
    except gl.SizeLimit as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_SIZE


if __name__ == "__main__":
    sys.exit(main())
