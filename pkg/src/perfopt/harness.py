"""Experiment runner: config parsing, seed sweeps, equal-budget comparison,
and CSV/JSON persistence.

A config is a single JSON file (round-trips losslessly through
``ExperimentConfig``).  Every (algorithm, seed) run writes one CSV of
per-deployment records and one summary JSON; an aggregate JSON holds
mean/std cumulative-regret curves over seeds at shared step indices.  With
``pad_to_budget`` on (the default) the returned decision is redeployed until
every run has consumed exactly T deployments, so cumulative-regret curves of
different algorithms are comparable pointwise.  All files are written to a
temp name and renamed, and all randomness flows through the per-run seed.
Worker count for parallel (algorithm, seed) runs comes from the
``PERFOPT_WORKERS`` environment variable.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .baselines import BLACKBOX_NAMES, run_blackbox, run_szooming
from .doop import doop_hmax, run_doop
from .environment import ENV_NAMES, make_env
from .errors import BudgetTooSmallError
from .metrics import record_deploy
from .soop import run_soop, soop_budgets

FULL_ALGOS = ("doop", "soo", "sequool", "szooming")
SAMPLED_ALGOS = ("soop", "stosoo", "stroquool", "szooming")


class ConfigError(ValueError):
    """The experiment config is malformed or inconsistent."""


@dataclass
class ExperimentConfig:
    environment: str
    algorithms: list[str]
    T: int
    mode: str = "full"
    m0: int = 10
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    output_dir: str = "runs"
    pad_to_budget: bool = True
    candidates: int = 9
    salt: int = 0
    grid_per_axis: int = 55
    L_z: float = 1.0
    eps: float | None = None
    alpha: float = 1.0

    def validate(self) -> "ExperimentConfig":
        if self.environment not in ENV_NAMES:
            raise ConfigError(f"unknown environment {self.environment!r}")
        if self.mode not in ("full", "sampled"):
            raise ConfigError("mode must be 'full' or 'sampled'")
        allowed = FULL_ALGOS if self.mode == "full" else SAMPLED_ALGOS
        if not self.algorithms:
            raise ConfigError("need at least one algorithm")
        for name in self.algorithms:
            if name not in allowed:
                raise ConfigError(
                    f"algorithm {name!r} is not available in {self.mode} mode; "
                    f"choose from {allowed}"
                )
        if self.T < 2:
            raise ConfigError("need T >= 2")
        if self.m0 < 1 or self.candidates < 1 or self.grid_per_axis < 2:
            raise ConfigError("m0, candidates, grid_per_axis must be positive")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if self.L_z < 0 or self.alpha <= 0 or (self.eps is not None and self.eps < 0):
            raise ConfigError("need L_z >= 0, alpha > 0, eps >= 0")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return cfg.validate()

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_json(Path(path).read_text())

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def atomic_write_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _pad_run(env, trace, theta, cfg: ExperimentConfig, rng) -> int:
    """Redeploy the returned decision until the trace holds exactly T
    records; padding rows carry depth = -1 and cell_index = -1."""
    padded = 0
    while trace.deployments < cfg.T:
        if cfg.mode == "full":
            env.deploy_full(theta)
            drawn = 0
        else:
            env.deploy_sample(theta, cfg.m0, rng)
            drawn = cfg.m0
        record_deploy(trace, theta, env, depth=-1, cell_index=-1, samples=drawn)
        padded += 1
    return padded


def run_single(cfg: ExperimentConfig, algorithm: str, seed: int):
    """One (algorithm, seed) run; returns (theta_T, trace)."""
    env = make_env(cfg.environment)
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    if algorithm == "doop":
        theta, trace = run_doop(env, cfg.T, k=cfg.candidates, salt=cfg.salt)
    elif algorithm == "soop":
        theta, trace = run_soop(
            env, cfg.T, m0=cfg.m0, rng=rng, k=cfg.candidates, salt=cfg.salt
        )
    elif algorithm == "szooming":
        theta, trace = run_szooming(
            env, cfg.T, L_z=cfg.L_z, eps=cfg.eps, alpha=cfg.alpha, mode=cfg.mode,
            m0=cfg.m0, rng=rng, grid_per_axis=cfg.grid_per_axis,
        )
    elif algorithm in BLACKBOX_NAMES:
        theta, trace = run_blackbox(
            algorithm, env, cfg.T, m0=cfg.m0, rng=rng,
            k=cfg.candidates, salt=cfg.salt,
        )
    else:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    elapsed = time.perf_counter() - t0
    trace.wall_clock = elapsed - trace.oracle_seconds
    trace.meta["deployments_algorithm"] = trace.deployments
    trace.meta["seed"] = seed
    if cfg.pad_to_budget:
        trace.meta["pad_deployments"] = _pad_run(env, trace, theta, cfg, rng)
    return theta, trace


def _run_task(cfg_json: str, algorithm: str, seed: int, out_dir: str):
    cfg = ExperimentConfig.from_json(cfg_json)
    _, trace = run_single(cfg, algorithm, seed)
    out = Path(out_dir)
    stem = f"{algorithm}_seed{seed}"
    csv_path = out / f"{stem}.csv"
    tmp = csv_path.with_name(csv_path.name + ".tmp")
    trace.to_csv(tmp)
    os.replace(tmp, csv_path)
    summary = {
        "algorithm": algorithm,
        "seed": seed,
        "mode": cfg.mode,
        "environment": cfg.environment,
        "budget": cfg.T,
        "config": cfg.to_dict(),
        **trace.summary(),
    }
    atomic_write_text(out / f"{stem}.json", json.dumps(summary, indent=2) + "\n")
    return algorithm, seed, summary, list(map(float, trace.cum_regret))


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> dict:
    """Run the full (algorithm x seed) sweep and write all outputs; returns
    the aggregate report."""
    cfg.validate()
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out / "config.json", cfg.to_json())
    if workers is None:
        workers = int(os.environ.get("PERFOPT_WORKERS", "1") or 1)

    tasks = [(alg, seed) for alg in cfg.algorithms for seed in cfg.seeds]
    results = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_task, cfg.to_json(), alg, seed, str(out))
                for alg, seed in tasks
            ]
            results = [f.result() for f in futures]
    else:
        results = [_run_task(cfg.to_json(), alg, seed, str(out)) for alg, seed in tasks]

    by_alg: dict[str, list] = {alg: [] for alg in cfg.algorithms}
    for alg, seed, summary, curve in results:
        by_alg[alg].append((seed, summary, curve))

    aggregate = {"config": cfg.to_dict(), "algorithms": {}}
    lengths = set()
    for alg, rows in by_alg.items():
        rows.sort(key=lambda r: r[0])
        curves = [np.asarray(c) for _, _, c in rows]
        shared = min(len(c) for c in curves)
        stack = np.stack([c[:shared] for c in curves])
        simple = np.array([s["simple_regret"] for _, s, _ in rows])
        lengths.update(len(c) for c in curves)
        aggregate["algorithms"][alg] = {
            "seeds": [seed for seed, _, _ in rows],
            "deployments": [s["deployments"] for _, s, _ in rows],
            "mean_cumulative_regret": stack.mean(axis=0).tolist(),
            "std_cumulative_regret": stack.std(axis=0).tolist(),
            "mean_simple_regret": float(simple.mean()),
            "std_simple_regret": float(simple.std()),
            "mean_wall_clock_seconds": float(
                np.mean([s["wall_clock_seconds"] for _, s, _ in rows])
            ),
        }
    if cfg.pad_to_budget:
        counts = {
            c for entry in aggregate["algorithms"].values() for c in entry["deployments"]
        }
        if counts != {cfg.T}:
            raise RuntimeError(f"padded runs must all consume exactly T, saw {counts}")
    aggregate["curve_note"] = (
        "curves are indexed by deployment number; padding redeploys the "
        "returned decision so every run spends exactly T deployments"
    )
    atomic_write_text(out / "aggregate.json", json.dumps(aggregate, indent=2) + "\n")
    return aggregate


def analyze_dir(run_dir, cstar: float = 1.0, delta: float = 0.05) -> dict:
    """Theory report for a finished run directory: sensitivity estimate,
    near-optimality-dimension estimate, regime, and bound overlays per T."""
    run_dir = Path(run_dir)
    summaries = []
    if run_dir.is_dir():
        for path in sorted(run_dir.glob("*_seed*.json")):
            summaries.append(json.loads(path.read_text()))
    if not summaries:
        raise FileNotFoundError(f"no run summaries found in {run_dir}")

    env_names = sorted({s["environment"] for s in summaries})
    report = {"runs": len(summaries), "environments": {}}
    for name in env_names:
        env = make_env(name)
        eps = analysis.grid_lipschitz(env.rate, env.domain.lower, env.domain.upper, n=55)
        D = env.domain.dim
        nu = 2.0 * np.sqrt(D) * 1.0 * eps  # alpha = 1, L_z = 1
        d_est = analysis.near_opt_dim(env, nu=nu, rho=0.5, h_range=range(0, 7),
                                      grid_n=256)
        entry = {
            "eps_grid_lipschitz_of_rate": eps,
            "L_z": 1.0,
            "alpha": 1.0,
            "d_estimate": d_est,
            "budgets": [],
        }
        budgets = sorted(
            {
                (s["budget"], s["mode"], s["config"].get("m0", 10))
                for s in summaries
                if s["environment"] == name
            }
        )
        for T, mode, m0 in budgets:
            row: dict = {"T": T, "mode": mode}
            try:
                if mode == "full":
                    b = analysis.bound_full(d_est, 1.0, D, 1.0, eps, T)
                    row["h_max"] = doop_hmax(T, D)
                else:
                    b = analysis.bound_data(d_est, 1.0, D, 1.0, eps, T, m0,
                                            cstar=cstar, delta=delta)
                    row["h_max"] = soop_budgets(T, D)[0]
                    params = analysis.regime_params(d_est, 1.0, D, 1.0, eps, T, m0,
                                                    cstar=cstar, delta=delta)
                    row["regime"] = params.regime
                    row["h_tilde"] = params.h_tilde
                row["bound"] = b.value
                row["bound_case"] = b.case
            except BudgetTooSmallError as exc:
                row["error"] = str(exc)
            entry["budgets"].append(row)
        report["environments"][name] = entry
    return report


def dump_oracle(env_name: str, out_path, grid_n: int = 257) -> None:
    """Dense-grid PR landscape as CSV ``theta_0,theta_1,pr`` for plotting."""
    env = make_env(env_name)
    axes = [
        np.linspace(lo, hi, grid_n)
        for lo, hi in zip(env.domain.lower, env.domain.upper)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = env.true_pr_batch(pts)
    lines = ["theta_0,theta_1,pr"]
    for p, v in zip(pts, vals):
        lines.append(f"{float(p[0])!r},{float(p[1])!r},{float(v)!r}")
    atomic_write_text(Path(out_path), "\n".join(lines) + "\n")
