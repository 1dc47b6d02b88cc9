"""Command-line interface.

Subcommands: ``run`` executes an experiment config, ``analyze`` writes a
theory report for a finished run directory, ``oracle`` dumps a dense PR
landscape for plotting, ``bench`` times the numba kernels against the numpy
fallback.  Exit codes for ``run``: 0 success, 2 invalid config, 3 budget too
small; ``analyze``: 2 when the directory has no summaries.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import kernels
from .environment import ENV_NAMES
from .errors import BudgetTooSmallError
from .harness import (
    ConfigError,
    ExperimentConfig,
    analyze_dir,
    atomic_write_text,
    dump_oracle,
    run_experiment,
)


def _cmd_run(args) -> int:
    try:
        cfg = ExperimentConfig.load(args.config)
        if args.output_dir:
            cfg.output_dir = args.output_dir
            cfg.validate()
        run_experiment(cfg, workers=args.workers)
    except (ConfigError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetTooSmallError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    print(f"wrote results to {cfg.output_dir}")
    return 0


def _cmd_analyze(args) -> int:
    try:
        report = analyze_dir(args.run_dir, cstar=args.cstar, delta=args.delta)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2) + "\n"
    if args.out:
        atomic_write_text(Path(args.out), text)
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return 0


def _cmd_oracle(args) -> int:
    dump_oracle(args.environment, args.out, grid_n=args.grid)
    print(f"wrote {args.out}")
    return 0


def _time_call(fn, *fn_args, repeats: int = 5) -> float:
    fn(*fn_args)  # warm up (jit compilation, caches)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*fn_args)
        best = min(best, time.perf_counter() - t0)
    return best


def _cmd_bench(args) -> int:
    rng = np.random.default_rng(0)
    pts = rng.uniform(-5.12, 5.12, size=(args.points, 2))
    s, g = args.deployed, args.grid
    dpr_rows = rng.normal(size=(s, g))
    w_rows = np.abs(rng.normal(size=(s, g)))
    slack = np.abs(rng.normal(size=s))

    cases = [
        ("ackley batch", "ackley_values", (pts,)),
        ("rastrigin batch", "rastrigin_values", (pts,)),
        ("zooming bounds", "zoom_bounds", (dpr_rows, w_rows, slack)),
    ]
    timings: dict[str, dict[str, float]] = {}
    for backend in ("numpy", "numba"):
        try:
            kernels.set_backend(backend)
        except Exception as exc:
            print(f"{backend}: unavailable ({exc})")
            continue
        for label, fn_name, fn_args in cases:
            fn = getattr(kernels, fn_name)
            timings.setdefault(label, {})[backend] = _time_call(
                fn, *fn_args, repeats=args.repeats
            )
    print(f"{'kernel':<18} {'numpy (s)':>12} {'numba (s)':>12} {'speedup':>9}")
    for label, per in timings.items():
        np_t = per.get("numpy")
        nb_t = per.get("numba")
        ratio = f"{np_t / nb_t:8.2f}x" if np_t and nb_t else "      n/a"
        print(
            f"{label:<18} {np_t if np_t else float('nan'):>12.6f} "
            f"{nb_t if nb_t else float('nan'):>12.6f} {ratio:>9}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="perfopt",
        description="Benchmark tree-search optimizers of the performative risk.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config (JSON)")
    p_run.add_argument("config", help="path to the config file")
    p_run.add_argument("--output-dir", default=None, help="override output_dir")
    p_run.add_argument(
        "--workers", type=int, default=None,
        help="parallel (algorithm, seed) runs; default PERFOPT_WORKERS or 1",
    )
    p_run.set_defaults(fn=_cmd_run)

    p_an = sub.add_parser("analyze", help="theory report for a run directory")
    p_an.add_argument("run_dir")
    p_an.add_argument("--out", default=None, help="write JSON here instead of stdout")
    p_an.add_argument("--cstar", type=float, default=1.0)
    p_an.add_argument("--delta", type=float, default=0.05)
    p_an.set_defaults(fn=_cmd_analyze)

    p_or = sub.add_parser("oracle", help="dump the dense PR landscape as CSV")
    p_or.add_argument("environment", choices=list(ENV_NAMES))
    p_or.add_argument("--out", required=True)
    p_or.add_argument("--grid", type=int, default=257)
    p_or.set_defaults(fn=_cmd_oracle)

    p_b = sub.add_parser("bench", help="numba vs numpy kernel timings")
    p_b.add_argument("--points", type=int, default=1_000_000)
    p_b.add_argument("--deployed", type=int, default=400)
    p_b.add_argument("--grid", type=int, default=3025)
    p_b.add_argument("--repeats", type=int, default=5)
    p_b.set_defaults(fn=_cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    raise SystemExit(main())
