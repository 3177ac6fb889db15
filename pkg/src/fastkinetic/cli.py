"""Command-line entry point (``fastkinetic``)."""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from .io import ConfigError, DumpError, bkw_report, diff, load_config, parse_config, run_case
from .solver import EXIT_CONFIG, EXIT_OK


def bench_collision(dv: int, n: int, angles, repeat: int = 7, batch: int = 1, seed: int = 0, bound: float = 8.0):
    """Median wall time (seconds) of one fast collision evaluation."""
    from .grid import VelocityGrid
    from .spectral import SpectralConfig, evaluate_q_fast, precompute_tables

    vg = VelocityGrid(dv, n, bound)
    tables = precompute_tables(SpectralConfig.for_grid(vg, angles=tuple(angles)))
    f = np.random.default_rng(seed).random((batch,) + vg.shape)
    evaluate_q_fast(f, tables)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        evaluate_q_fast(f, tables)
        times.append((time.perf_counter() - t0) / batch)
    return float(np.median(times))


def _parser():
    p = argparse.ArgumentParser(prog="fastkinetic", description=__doc__)
    sub = p.add_subparsers(dest="verb", required=True)

    s = sub.add_parser("simulate", help="run a case from an INI configuration")
    s.add_argument("config_path", nargs="?", help="configuration file")
    s.add_argument("--config", dest="config_opt", help="configuration file")
    s.add_argument("--case", help="run a built-in case with its defaults instead of a file")
    s.add_argument("--output-dir", default="output")
    s.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    s.add_argument("--dump-every", type=int, default=None)
    s.add_argument("--seed", type=int, default=0, help="recorded only; the solver is deterministic")

    d = sub.add_parser("diff", help="relative errors between two dumps")
    d.add_argument("a")
    d.add_argument("b")

    r = sub.add_parser("report-bkw", help="errors of a BKW dump series against the exact solution")
    r.add_argument("series_dir")

    b = sub.add_parser("bench-collision", help="time the fast collision operator")
    b.add_argument("--dv", type=int, default=2)
    b.add_argument("--n", type=int, default=32)
    b.add_argument("--angles", type=int, nargs="+", default=None)
    b.add_argument("--repeat", type=int, default=7)
    b.add_argument("--seed", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "simulate":
            path = args.config_opt or args.config_path
            if bool(path) == bool(args.case):
                print("give exactly one of a configuration file or --case", file=sys.stderr)
                return EXIT_CONFIG
            cfg, plan = load_config(path) if path else parse_config(f"[case]\nid = {args.case}\n")
            if args.dump_every is not None:
                plan.dump_every = args.dump_every
            return run_case(cfg, plan, args.output_dir, workers=args.workers)
        if args.verb == "diff":
            print(diff(args.a, args.b).format())
            return EXIT_OK
        if args.verb == "report-bkw":
            print(bkw_report(args.series_dir).format())
            return EXIT_OK
        if args.verb == "bench-collision":
            angles = args.angles or ([8] if args.dv == 2 else [8, 8])
            t = bench_collision(args.dv, args.n, angles, args.repeat, seed=args.seed)
            print(f"dv={args.dv} N={args.n} angles={'x'.join(map(str, angles))} median={t:.6e} s")
            return EXIT_OK
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DumpError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
