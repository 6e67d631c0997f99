"""Command-line front end.

Subcommands: height (one surface), search (random sampling), matrix
(export the splitting operator), verify (recompute fixture tables),
bench (informational timings). Exit codes: 0 success, 1 verification
mismatch, 2 input parse error, 3 domain precondition violation,
4 internal invariant failure.
"""

import argparse
import json
import math
import os
import sys
import time

import numpy as np

from .errors import DomainError, InternalInvariantError, ParseError
from .height import SurfaceProblem, height_matrix, height_naive
from .modmatrix import matvec
from .mtsmatrix import ZERO_MAP, build_mts, matrix_to_bytes, matrix_to_text
from .polyring import delta1, parse_poly, poly_to_text, power_mod_p, to_dense
from .search import (
    SearchConfig,
    fixtures_path,
    found_surfaces_text,
    histogram_text,
    run_search,
    sample_surface,
    verify_fixtures,
)


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("QFSPLIT_JOBS", "1")))
    except ValueError:
        return 1


def _load_poly(source: str, p: int, nvars):
    """Polynomial from literal text, or from a file via @path."""
    if source.startswith("@"):
        with open(source[1:]) as fh:
            source = fh.read()
    return parse_poly(source, nvars, p)


def _height_io(h):
    if isinstance(h, float) and math.isinf(h):
        return "inf"
    return int(h)


def cmd_height(args) -> int:
    f = _load_poly(args.poly, args.p, args.nvars)
    prob = SurfaceProblem(args.p, f.nvars, f, args.bound)
    start = time.perf_counter()
    if args.method == "naive":
        res = height_naive(prob)
    else:
        res = height_matrix(prob, args.mts)
    elapsed = time.perf_counter() - start
    if args.json:
        doc = {
            "p": args.p,
            "n": f.nvars,
            "bound": res.bound_used,
            "method": args.method,
            "height": _height_io(res.height),
            "iterations": res.iterations,
        }
        print(json.dumps(doc, sort_keys=True))
    else:
        print(f"height {_height_io(res.height)}")
        print(f"iterations {res.iterations}")
        print(f"time {elapsed:.3f}s")
    return 0


def cmd_search(args) -> int:
    cfg = SearchConfig(
        p=args.p,
        sample_count=args.count,
        rng_seed=args.seed,
        bound=args.bound,
        target_height=args.target_height,
        parallelism=args.jobs,
    )
    hist, found = run_search(cfg)
    doc = {
        "p": args.p,
        "n": cfg.n,
        "seed": args.seed,
        **hist.as_dict(),
        "found": [
            {"index": s.index, "height": s.height, "poly": poly_to_text(s.f)}
            for s in found
        ],
    }
    rendered = json.dumps(doc, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rendered + "\n")
    if args.json:
        print(rendered)
    else:
        print(histogram_text(hist, args.p))
        print(found_surfaces_text(found))
    return 0


def cmd_matrix(args) -> int:
    f = _load_poly(args.poly, args.p, args.nvars)
    SurfaceProblem(args.p, f.nvars, f)
    g = power_mod_p(f, args.p - 1)
    delta = delta1(g)
    m = build_mts(delta, g.degree, args.p, args.mts)
    if m is ZERO_MAP:
        raise DomainError("operator target degree is undefined for this input")
    if args.format == "binary":
        with open(args.out, "wb") as fh:
            fh.write(matrix_to_bytes(m))
    else:
        with open(args.out, "w") as fh:
            fh.write(matrix_to_text(m))
    print(f"wrote {m.rows}x{m.cols} matrix over F_{args.p} to {args.out}")
    return 0


def cmd_verify(args) -> int:
    path = args.fixtures if args.fixtures else fixtures_path()
    with open(path) as fh:
        text = fh.read()
    primes = None
    if args.primes:
        primes = [int(v) for v in args.primes.split(",")]
    verdicts = verify_fixtures(
        text, primes=primes, jobs=args.jobs, method=args.method
    )
    bad = 0
    for v in verdicts:
        mark = "ok" if v.ok else "MISMATCH"
        bad += 0 if v.ok else 1
        print(
            f"p={v.row.p} expected={_height_io(v.row.expected):>3} "
            f"got={_height_io(v.got):>3} {mark}"
        )
    print(f"{len(verdicts)} rows, {bad} mismatches")
    return 1 if bad else 0


def _bench_one(label: str, reps: int, fn) -> None:
    times = []
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    print(f"{label} reps={reps} mean={sum(times) / reps:.4f}s")


def cmd_bench(args) -> int:
    p = args.p
    rng = np.random.default_rng(0)
    f = sample_surface(rng, p, 4)
    if args.what == "power":
        _bench_one(f"power p={p}", args.reps, lambda: power_mod_p(f, p - 1))
        return 0
    if args.what == "height":
        _bench_one(
            f"height p={p}",
            args.reps,
            lambda: height_matrix(SurfaceProblem(p, 4, f)),
        )
        return 0
    g = power_mod_p(f, p - 1)
    delta = delta1(g)
    if args.what == "mts":
        for alg in ("triv", "merge", "wics"):
            _bench_one(
                f"mts/{alg} p={p}",
                args.reps,
                lambda a=alg: build_mts(delta, g.degree, p, a),
            )
        return 0
    m = build_mts(delta, g.degree, p, "wics")
    vec = to_dense(g, m.source_basis)
    _bench_one(f"matvec p={p}", args.reps, lambda: matvec(m, vec))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qfsplit",
        description="Quasi-F-split heights of Calabi-Yau hypersurfaces over F_p.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    hp = sub.add_parser("height", help="height of one surface")
    hp.add_argument("--p", type=int, required=True, help="prime characteristic")
    hp.add_argument("--poly", required=True, help="polynomial text, or @file")
    hp.add_argument("--nvars", type=int, default=None,
                    help="variable count when not all of x1..xn appear")
    hp.add_argument("--bound", type=int, default=None, help="height search ceiling")
    hp.add_argument("--method", choices=("naive", "matrix"), default="matrix")
    hp.add_argument("--mts", choices=("triv", "merge", "wics"), default="wics")
    hp.add_argument("--json", action="store_true", help="structured output")
    hp.set_defaults(func=cmd_height)

    sp = sub.add_parser("search", help="heights of random surfaces")
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--count", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--bound", type=int, default=None)
    sp.add_argument("--target-height", type=int, default=None,
                    help="stop at the first sample reaching this height")
    sp.add_argument("--jobs", type=int, default=_default_jobs())
    sp.add_argument("--out", default=None, help="also write JSON to this file")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_search)

    mp = sub.add_parser("matrix", help="export the splitting operator matrix")
    mp.add_argument("--p", type=int, required=True)
    mp.add_argument("--poly", required=True)
    mp.add_argument("--nvars", type=int, default=None)
    mp.add_argument("--mts", choices=("triv", "merge", "wics"), default="wics")
    mp.add_argument("--out", required=True)
    mp.add_argument("--format", choices=("text", "binary"), default="text")
    mp.set_defaults(func=cmd_matrix)

    vp = sub.add_parser("verify", help="recompute fixture heights")
    vp.add_argument("--fixtures", default=None,
                    help="fixture file (default: packaged tables)")
    vp.add_argument("--primes", default=None, help="comma-separated prime filter")
    vp.add_argument("--jobs", type=int, default=_default_jobs())
    vp.add_argument("--method", choices=("naive", "matrix"), default="matrix")
    vp.set_defaults(func=cmd_verify)

    bp = sub.add_parser("bench", help="informational timings, nothing asserted")
    bp.add_argument("--p", type=int, default=5)
    bp.add_argument("--what", choices=("power", "mts", "matvec", "height"),
                    default="height")
    bp.add_argument("--reps", type=int, default=3)
    bp.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InternalInvariantError as exc:
        print(f"internal invariant failed: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
