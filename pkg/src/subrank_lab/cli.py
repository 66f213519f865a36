"""``subrank-lab`` command line.

Exit codes: 0 success, 1 verification failure, 2 malformed input,
3 certificate search found nothing.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import __version__
from . import experiments as ex
from .errors import MalformedInput, ShapeMismatch
from .io import dumps, load_certificate, load_tensor, save_json, save_certificate, save_tensor

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_MALFORMED = 2
EXIT_NOT_FOUND = 3


def _shape(text: str):
    return ex._parse_format(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0, echoed)")
    common.add_argument("--tol", type=float, default=None, help="numerical tolerance")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sampling")
    common.add_argument("-o", "--output", help="write the JSON result here instead of stdout")

    p = argparse.ArgumentParser(prog="subrank-lab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", parents=[common], help="write a named or random tensor")
    g.add_argument("name", choices=ex.GENERATORS)
    g.add_argument("--n", type=int, default=1)
    g.add_argument("--shape", type=_shape, default=(2, 2, 2), help="e.g. 3x3x5")
    g.add_argument("--r", type=int, default=1, help="rank for rank-r")
    g.add_argument("--algebra", choices=("C", "H", "O"), default="C")

    v = sub.add_parser("verify", parents=[common], help="check a certificate")
    v.add_argument("-i", "--input", required=True)
    v.add_argument("-c", "--certificate", required=True)

    b = sub.add_parser("bounds", parents=[common], help="upper bounds and obstructions")
    b.add_argument("-i", "--input", required=True)

    s = sub.add_parser("search", parents=[common], help="ALS certificate search")
    s.add_argument("-i", "--input", required=True)
    s.add_argument("--r", type=int, required=True)
    s.add_argument("--restarts", type=int, default=20)
    s.add_argument("--max-iters", type=int, default=500)
    s.add_argument("--cert-out", help="also write the certificate document here")

    c = sub.add_parser("cpd", parents=[common], help="Jennrich CP decomposition")
    c.add_argument("-i", "--input", required=True)

    m = sub.add_parser("montecarlo", parents=[common], help="typical-subrank sampling")
    m.add_argument("--format", default="2x2x2")
    m.add_argument("--samples", type=int, default=10_000)
    m.add_argument("--band", type=float, default=ex.DEFAULT_BAND)
    m.add_argument("--restarts", type=int, default=8)
    m.add_argument("--max-iters", type=int, default=200)
    m.add_argument("--csv", help="write the frequency table as CSV")

    sh = sub.add_parser("showcase", parents=[common], help="named end-to-end pipelines")
    sh.add_argument("name", choices=ex.SHOWCASES)
    sh.add_argument("--n", type=int, default=2)

    pu = sub.add_parser("probe-upper", parents=[common],
                        help="search one size above a known certificate")
    pu.add_argument("name", choices=tuple(ex.PROBES))
    pu.add_argument("--n", type=int, default=1)
    pu.add_argument("--restarts", type=int, default=20)
    pu.add_argument("--max-iters", type=int, default=500)
    return p


def _emit(doc, path):
    if path:
        save_json(doc, path)
    else:
        sys.stdout.write(dumps(doc) + "\n")


def _run(args) -> int:
    t0 = time.perf_counter()
    cmd = args.command
    code = EXIT_OK
    if cmd == "gen":
        rep, T = ex.cmd_gen(args.name, n=args.n, seed=args.seed, shape=args.shape,
                            r=args.r, algebra=args.algebra)
        if args.output:
            save_tensor(T, args.output)
        else:
            sys.stdout.write(dumps(rep.results["tensor"]) + "\n")
        print(f"seed={args.seed}", file=sys.stderr)
        return EXIT_OK
    if cmd == "verify":
        rep = ex.cmd_verify(load_tensor(args.input), load_certificate(args.certificate),
                            tol=args.tol if args.tol is not None else 1e-10)
        code = EXIT_OK if rep.ok else EXIT_VERIFY
    elif cmd == "bounds":
        rep = ex.cmd_bounds(load_tensor(args.input), tol=args.tol or 1e-8, seed=args.seed)
    elif cmd == "search":
        rep, out = ex.cmd_search(load_tensor(args.input), args.r, restarts=args.restarts,
                                 max_iters=args.max_iters, seed=args.seed,
                                 tol=args.tol or 1e-10)
        if out is not None and out.found and args.cert_out:
            save_certificate(out.certificate, args.cert_out)
        code = EXIT_OK if rep.ok else EXIT_NOT_FOUND
    elif cmd == "cpd":
        rep = ex.cmd_cpd(load_tensor(args.input), tol=args.tol or 1e-8, seed=args.seed)
    elif cmd == "montecarlo":
        rep = ex.cmd_montecarlo(args.format, samples=args.samples, seed=args.seed,
                                band=args.band, restarts=args.restarts,
                                max_iters=args.max_iters, threads=args.threads)
        if args.csv:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write(ex.frequencies_csv(rep))
        code = EXIT_OK if rep.ok else EXIT_VERIFY
    elif cmd == "showcase":
        rep = ex.cmd_showcase(args.name, n=args.n, seed=args.seed, tol=args.tol or 1e-10)
        code = EXIT_OK if rep.ok else EXIT_VERIFY
    elif cmd == "probe-upper":
        rep = ex.cmd_probe_upper(args.name, n=args.n, restarts=args.restarts,
                                 seed=args.seed, max_iters=args.max_iters)
        code = EXIT_OK if rep.ok else EXIT_VERIFY
    else:  # pragma: no cover - argparse rejects unknown commands
        raise AssertionError(cmd)
    rep.params.setdefault("seed", args.seed)
    rep.elapsed_seconds = rep.elapsed_seconds or time.perf_counter() - t0
    _emit(rep.to_dict(), args.output)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (MalformedInput, ShapeMismatch, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


if __name__ == "__main__":
    sys.exit(main())
