"""Comparison algorithms: confidence-bound zooming over a finite grid and
black-box tree searches that ignore performative feedback.

The zooming baseline maintains, for every grid arm, lower and upper bounds on
PR built from the decoupled risks of all deployed decisions plus the
sensitivity radius L_z * eps * ||theta - theta'||^alpha, recomputed from
scratch after every deployment (per-step cost proportional to
|deployed| * |grid| by construction).  The black-box baselines treat
theta -> PR(theta) (full feedback) or theta -> mean of m0 sampled losses
(data-driven) as an opaque objective evaluated at cell centers: SequOOL and
StroquOOL reuse the schedules of ``doop``/``soop`` with the center
representative, SOO and StoSOO follow their published sweep rules with the
same depth budgets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .doop import doop_hmax, run_schedule, select_rep_center
from .errors import BudgetExhausted
from .metrics import DeployClient
from .partition import Cell, root
from .soop import run_stochastic_schedule, soop_budgets, stoch_rep_center


@dataclass
class GridArm:
    """One grid decision in the zooming baseline."""

    index: int
    theta: np.ndarray
    active: bool = True
    deploys: int = 0
    pr_estimate: float = math.inf
    pooled: object = None  # SampleSet in sampled mode
    handle_row: object = None  # exact DPR over the grid in full mode


def make_grid(domain, per_axis: int = 55) -> np.ndarray:
    """Uniform grid over the domain, row-major with axis 0 most significant;
    the default 55 points per axis gives 3,025 arms in 2-d."""
    axes = [
        np.linspace(lo, hi, per_axis)
        for lo, hi in zip(domain.lower, domain.upper)
    ]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def run_szooming(env, T: int, grid=None, L_z: float = 1.0, eps: float | None = None,
                 alpha: float = 1.0, mode: str = "full", m0: int = 10, rng=None,
                 grid_per_axis: int = 55):
    """Lowest-lower-bound zooming with interval elimination over a finite grid.

    Deploys the active arm with the smallest lower bound (ties to the smallest
    grid index), refreshes every arm's interval from all deployed decisions,
    and eliminates arms whose lower bound exceeds the smallest active upper
    bound.  Eliminated arms are never redeployed; active ones may be, which is
    how leftover budget concentrates on the surviving arms.  When ``eps`` is
    omitted it defaults to the max difference quotient of the environment's
    rate function over the grid itself, the same recipe the experiments use.
    Returns (theta_T, trace) with theta_T the deployed arm with the smallest
    PR estimate.
    """
    if mode not in ("full", "sampled"):
        raise ValueError("mode must be 'full' or 'sampled'")
    rng = np.random.default_rng(rng)
    client = DeployClient(env, T)
    if grid is None:
        grid = make_grid(client.domain, grid_per_axis)
    grid = np.asarray(grid, dtype=float)
    n_arms = grid.shape[0]
    if n_arms == 0:
        raise ValueError("grid must be nonempty")
    if eps is None:
        from .analysis import grid_lipschitz_points

        eps = grid_lipschitz_points(grid, env.rate(grid))
    if L_z < 0 or eps < 0:
        raise ValueError("need L_z >= 0 and eps >= 0")
    client.trace.meta.update(
        {
            "algorithm": "szooming",
            "mode": mode,
            "budget": T,
            "grid_arms": int(n_arms),
            "L_z": float(L_z),
            "eps": float(eps),
            "alpha": float(alpha),
            "m0": m0 if mode == "sampled" else None,
        }
    )

    arms = [GridArm(i, grid[i]) for i in range(n_arms)]
    active = np.ones(n_arms, dtype=bool)
    # one bound row per distinct deployed arm, refreshed in place when an arm
    # is redeployed in sampled mode
    dpr_rows = np.empty((0, n_arms))
    w_rows = np.empty((0, n_arms))
    slack = np.empty(0)
    row_of: dict[int, int] = {}
    lb = np.full(n_arms, -math.inf)

    def refresh_row(arm: GridArm):
        nonlocal dpr_rows, w_rows, slack
        if arm.index not in row_of:
            dist = np.linalg.norm(grid - arm.theta, axis=1)
            new_w = L_z * eps * dist ** alpha
            dpr_rows = np.vstack([dpr_rows, np.empty((1, n_arms))])
            w_rows = np.vstack([w_rows, new_w[None, :]])
            slack = np.append(slack, 0.0)
            row_of[arm.index] = len(slack) - 1
        r = row_of[arm.index]
        if mode == "full":
            dpr_rows[r] = arm.handle_row
            slack[r] = 0.0
        else:
            dpr_rows[r] = arm.pooled.empirical_dpr_batch(grid)
            n = len(arm.pooled)
            spread = float(np.std(arm.pooled.samples)) if n > 1 else 0.0
            slack[r] = 2.0 * spread / math.sqrt(n)

    try:
        while True:
            j = int(np.argmin(np.where(active, lb, math.inf)))
            arm = arms[j]
            if mode == "full":
                handle = client.deploy_full(arm.theta, depth=-1, cell_index=j)
                arm.handle_row = handle.dpr_batch(grid)
                arm.pr_estimate = float(arm.handle_row[j])
            else:
                batch = client.deploy_sample(
                    arm.theta, m0, rng, depth=-1, cell_index=j
                )
                arm.pooled = batch if arm.pooled is None else arm.pooled.extended(batch)
                arm.pr_estimate = arm.pooled.empirical_dpr(arm.theta)
            arm.deploys += 1
            refresh_row(arm)

            lb, ub = kernels.zoom_bounds(dpr_rows, w_rows, slack)
            threshold = float(np.min(ub[active]))
            drop = active & (lb > threshold)
            if drop.any():
                if not (active & ~drop).any():
                    # degenerate radii (eps = 0) can contradict themselves and
                    # condemn every arm; keep the one attaining the threshold
                    keeper = int(np.argmin(np.where(active, ub, math.inf)))
                    drop[keeper] = False
                active &= ~drop
                for i in np.flatnonzero(drop):
                    arms[i].active = False
    except BudgetExhausted:
        pass

    client.trace.meta["active_arms"] = int(active.sum())
    client.trace.meta["eliminated_arms"] = [int(i) for i in np.flatnonzero(~active)]
    deployed = [a for a in arms if a.deploys > 0]
    best = min(deployed, key=lambda a: (a.pr_estimate, a.index))
    client.finalize(best.theta)
    return best.theta, client.trace


# ------------------------------------------------------------ black box ----

@dataclass
class _SooNode:
    cell: Cell
    value: float
    expanded: bool = False


def _run_soo(client: DeployClient, T: int):
    """Deterministic simultaneous optimistic optimization on cell centers."""
    domain = client.domain
    h_cap = doop_hmax(T, domain.dim)
    client.trace.meta["h_max"] = h_cap

    def evaluate(cell: Cell) -> _SooNode:
        theta = domain.from_unit(cell.center())
        handle = client.deploy_full(theta, depth=cell.depth, cell_index=cell.index)
        return _SooNode(cell, handle.dpr(theta))

    layers: list[list[_SooNode]] = [[] for _ in range(h_cap + 2)]
    try:
        layers[0].append(evaluate(root(domain.dim)))
        while True:
            v_best = math.inf
            progressed = False
            deepest = max(h for h, lay in enumerate(layers) if lay)
            for h in range(0, min(deepest, h_cap) + 1):
                leaves = [n for n in layers[h] if not n.expanded]
                if not leaves:
                    continue
                node = min(leaves, key=lambda n: (n.value, n.cell.index))
                if node.value <= v_best:
                    node.expanded = True
                    progressed = True
                    v_best = node.value
                    for child in node.cell.children():
                        layers[child.depth].append(evaluate(child))
            if not progressed:
                break
    except BudgetExhausted:
        pass

    best = min(
        (n for lay in layers for n in lay),
        key=lambda n: (n.value, n.cell.depth, n.cell.index),
    )
    client.finalize(domain.from_unit(best.cell.center()))
    return domain.from_unit(best.cell.center()), client.trace


@dataclass
class _StoSooNode:
    cell: Cell
    evals: list = field(default_factory=list)
    expanded: bool = False

    @property
    def count(self) -> int:
        return len(self.evals)

    @property
    def mean(self) -> float:
        return sum(self.evals) / len(self.evals) if self.evals else math.inf


def _run_stosoo(client: DeployClient, T: int, m0: int, rng):
    """Stochastic SOO: per-node means with exploration widths, evaluate until
    a node has k evaluations, then expand it."""
    domain = client.domain
    h_cap, _ = soop_budgets(T, domain.dim)
    k_evals = math.ceil(T / (m0 * h_cap))
    delta = 1.0 / math.sqrt(T)
    width_num = math.log(T * T / delta)
    client.trace.meta.update({"h_max": h_cap, "k_evals": k_evals, "delta": delta})

    def b_value(node: _StoSooNode) -> float:
        if not node.evals:
            return -math.inf  # unevaluated nodes are maximally optimistic
        return node.mean - math.sqrt(width_num / (2.0 * node.count))

    def evaluate(node: _StoSooNode):
        theta = domain.from_unit(node.cell.center())
        batch = client.deploy_sample(
            theta, m0, rng, depth=node.cell.depth, cell_index=node.cell.index
        )
        node.evals.append(batch.empirical_dpr(theta))

    layers: list[list[_StoSooNode]] = [[] for _ in range(h_cap + 2)]
    layers[0].append(_StoSooNode(root(domain.dim)))
    try:
        while True:
            progressed = False
            deepest = max(h for h, lay in enumerate(layers) if lay)
            for h in range(0, min(deepest, h_cap) + 1):
                leaves = [n for n in layers[h] if not n.expanded]
                if not leaves:
                    continue
                node = min(leaves, key=lambda n: (b_value(n), n.cell.index))
                if node.count < k_evals:
                    evaluate(node)
                else:
                    node.expanded = True
                    for child in node.cell.children():
                        layers[child.depth].append(_StoSooNode(child))
                progressed = True
            if not progressed:
                break
    except BudgetExhausted:
        pass

    expanded = [n for lay in layers for n in lay if n.expanded]
    if expanded:
        deepest = max(n.cell.depth for n in expanded)
        best = min(
            (n for n in expanded if n.cell.depth == deepest),
            key=lambda n: (n.mean, n.cell.index),
        )
    else:
        evaluated = [n for lay in layers for n in lay if n.evals]
        best = min(evaluated, key=lambda n: (n.mean, n.cell.depth, n.cell.index))
    theta = domain.from_unit(best.cell.center())
    client.finalize(theta)
    return theta, client.trace


BLACKBOX_NAMES = ("soo", "stosoo", "sequool", "stroquool")


def run_blackbox(name: str, env, T: int, m0: int = 10, rng=None,
                 k: int = 9, salt: int = 0):
    """Run one of the black-box baselines; returns (theta_T, trace).

    ``sequool`` and ``soo`` use full feedback, ``stroquool`` and ``stosoo``
    draw m0 samples per deployment.
    """
    if name not in BLACKBOX_NAMES:
        raise ValueError(f"unknown baseline {name!r}; choose from {BLACKBOX_NAMES}")
    client = DeployClient(env, T)
    client.trace.meta.update({"algorithm": name, "budget": T})
    if name == "sequool":
        h_max = doop_hmax(T, client.domain.dim)
        client.trace.meta["h_max"] = h_max
        return run_schedule(client, h_max, select_rep_center, k, salt)
    if name == "soo":
        return _run_soo(client, T)
    rng = np.random.default_rng(rng)
    client.trace.meta["m0"] = m0
    if name == "stroquool":
        return run_stochastic_schedule(client, m0, rng, stoch_rep_center, k, salt)
    return _run_stosoo(client, T, m0, rng)
