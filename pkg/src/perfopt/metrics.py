"""Regret accounting, deployment traces, and the deploy-only client.

Every algorithm run produces a ``RunTrace``: one record per deployment with
the true performative risk and instantaneous/cumulative regret against the
environment's optimum.  Ground truth is consulted only here, on the
evaluation side; optimizers interact with a ``DeployClient`` that exposes the
domain and the two deployment feedback channels, nothing else.  Time spent in
ground-truth oracles is accumulated separately so runtime comparisons between
algorithms exclude it.
"""

from __future__ import annotations

import time

import numpy as np

from .errors import BudgetExhausted

CSV_HEADER = "step,theta_0,theta_1,pr,inst_regret,cum_regret,depth,cell_index,samples"


class RunTrace:
    """Ordered per-deployment log plus run-level results."""

    def __init__(self, optimum_value: float, oracle_seconds: float = 0.0):
        self.optimum_value = float(optimum_value)
        self.thetas: list[np.ndarray] = []
        self.pr: list[float] = []
        self.inst_regret: list[float] = []
        self.cum_regret: list[float] = []
        self.depth: list[int] = []
        self.cell_index: list[int] = []
        self.samples: list[int] = []
        self.oracle_seconds = float(oracle_seconds)
        self.meta: dict = {}
        self.final_theta: np.ndarray | None = None
        self.simple_regret: float | None = None
        self.final_pr: float | None = None
        self.wall_clock: float | None = None

    @classmethod
    def for_env(cls, env) -> "RunTrace":
        t0 = time.perf_counter()
        _, pr_star = env.optimum()
        return cls(pr_star, oracle_seconds=time.perf_counter() - t0)

    @property
    def deployments(self) -> int:
        return len(self.pr)

    def to_csv(self, path) -> None:
        if self.thetas and self.thetas[0].shape != (2,):
            raise ValueError("CSV schema is fixed to 2-d decisions")
        lines = [CSV_HEADER]
        for t in range(self.deployments):
            th = self.thetas[t]
            # plain-float repr: shortest digits that round-trip exactly
            lines.append(
                f"{t + 1},{float(th[0])!r},{float(th[1])!r},{float(self.pr[t])!r},"
                f"{float(self.inst_regret[t])!r},{float(self.cum_regret[t])!r},"
                f"{self.depth[t]},{self.cell_index[t]},{self.samples[t]}"
            )
        with open(path, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + "\n")

    def summary(self) -> dict:
        return {
            "deployments": self.deployments,
            "simple_regret": self.simple_regret,
            "final_pr": self.final_pr,
            "final_theta": None
            if self.final_theta is None
            else [float(v) for v in self.final_theta],
            "cumulative_regret": self.cum_regret[-1] if self.cum_regret else 0.0,
            "optimum_value": self.optimum_value,
            "wall_clock_seconds": self.wall_clock,
            "oracle_seconds": self.oracle_seconds,
            "meta": self.meta,
        }


def record_deploy(trace: RunTrace, theta, env, depth: int = -1,
                  cell_index: int = 0, samples: int = 0) -> None:
    """Append one deployment record, scoring ``theta`` with the env oracle."""
    theta = np.asarray(theta, dtype=float)
    t0 = time.perf_counter()
    pr = env.true_pr(theta)
    trace.oracle_seconds += time.perf_counter() - t0
    inst = pr - trace.optimum_value
    prev = trace.cum_regret[-1] if trace.cum_regret else 0.0
    trace.thetas.append(theta.copy())
    trace.pr.append(pr)
    trace.inst_regret.append(inst)
    trace.cum_regret.append(prev + inst)
    trace.depth.append(int(depth))
    trace.cell_index.append(int(cell_index))
    trace.samples.append(int(samples))


class DeployClient:
    """Budget-capped, trace-recording, deploy-only view of an environment.

    Optimizers receive this object instead of the environment, so the only
    reachable feedback is what a real deployment returns.  The T-th deployment
    is the last; any further attempt raises ``BudgetExhausted``.
    """

    def __init__(self, env, budget: int, trace: RunTrace | None = None):
        if budget < 1:
            raise ValueError("need a positive deployment budget")
        self._env = env
        self.budget = int(budget)
        self.trace = trace if trace is not None else RunTrace.for_env(env)

    @property
    def domain(self):
        return self._env.domain

    @property
    def deployments(self) -> int:
        return self.trace.deployments

    @property
    def remaining(self) -> int:
        return self.budget - self.trace.deployments

    def _gate(self):
        if self.remaining <= 0:
            raise BudgetExhausted(f"all {self.budget} deployments spent")

    def deploy_full(self, theta, depth: int = -1, cell_index: int = 0):
        self._gate()
        handle = self._env.deploy_full(theta)
        record_deploy(self.trace, theta, self._env, depth, cell_index, samples=0)
        return handle

    def deploy_sample(self, theta, m0: int, rng, depth: int = -1, cell_index: int = 0):
        self._gate()
        batch = self._env.deploy_sample(theta, m0, rng)
        record_deploy(self.trace, theta, self._env, depth, cell_index, samples=m0)
        return batch

    def finalize(self, theta_final) -> None:
        """Record the returned decision's ground-truth score on the trace."""
        theta_final = np.asarray(theta_final, dtype=float)
        t0 = time.perf_counter()
        pr = self._env.true_pr(theta_final)
        self.trace.oracle_seconds += time.perf_counter() - t0
        self.trace.final_theta = theta_final.copy()
        self.trace.final_pr = pr
        self.trace.simple_regret = pr - self.trace.optimum_value
