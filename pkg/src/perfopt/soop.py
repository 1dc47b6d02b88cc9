"""Sampled-feedback tree search over the performative risk.

Each deployment of a decision yields m0 i.i.d. samples, so cell statistics
are empirical and cells must be deployed repeatedly to be trusted.  The
schedule grants n = 2^p repeated deployments in geometric passes per depth,
opens only cells that have never been opened (n_open = 0) and have earned at
least 2^p deployments, and ends with a cross-validation phase that redeploys
one champion per trust level on fresh samples.  The same machinery with the
cell center as representative is the StroquOOL baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .environment import SampleSet
from .errors import BudgetExhausted, BudgetTooSmallError
from .metrics import DeployClient
from .partition import Cell, candidate_points, root


def soop_budgets(T: int, D: int) -> tuple[int, int]:
    """(h_max, p_max) = (floor(T / (2^(D+1) (log2 T + 1)^2)), floor(log2 h_max))."""
    if T < 2:
        raise BudgetTooSmallError(f"need T >= 2, got {T}")
    h_max = int(T / (2 ** (D + 1) * (math.log2(T) + 1.0) ** 2))
    if h_max < 1:
        raise BudgetTooSmallError(
            f"T={T} gives depth budget 0 in dimension D={D}; increase T"
        )
    return h_max, h_max.bit_length() - 1


@dataclass
class StochCellRecord:
    """A deployed cell: representative, pooled samples, and the deploy/open
    counters the schedule's eligibility filters run on."""

    cell: Cell
    rep_unit: np.ndarray
    rep: np.ndarray
    sample_set: SampleSet
    n_deploy: int
    n_open: int = 0
    emp_pr: float = field(default=math.nan)

    def refresh(self) -> None:
        self.emp_pr = self.sample_set.empirical_dpr(self.rep)


def stoch_rep_dpr(child: Cell, parent: StochCellRecord, domain, k: int, salt: int):
    """Child representative minimizing the empirical DPR under the parent's
    pooled samples; ties go to the earliest candidate."""
    cands = candidate_points(child, k, salt)
    vals = parent.sample_set.empirical_dpr_batch(domain.from_unit(cands))
    return cands[int(np.argmin(vals))]


def stoch_rep_center(child: Cell, parent: StochCellRecord, domain, k: int, salt: int):
    return child.center()


def _deploy_times(client, rec_cell, rep, n, m0, rng, pooled=None):
    """Deploy ``rep`` n more times, pooling batches; returns the pooled set,
    the number of deployments that actually happened, and whether the budget
    ran out mid-way."""
    done = 0
    try:
        for _ in range(n):
            batch = client.deploy_sample(
                rep, m0, rng, depth=rec_cell.depth, cell_index=rec_cell.index
            )
            pooled = batch if pooled is None else pooled.extended(batch)
            done += 1
    except BudgetExhausted:
        return pooled, done, True
    return pooled, done, False


def open_stochastic(rec: StochCellRecord, n: int, layers, client, m0: int, rng,
                    select_rep, k: int, salt: int) -> None:
    """Open ``rec`` with n deployments per child.

    First opening: pick each child's representative from the parent's pooled
    samples and deploy it n times.  Re-opening with a larger n tops up every
    existing child to n deployments, reusing the stored representative;
    n at or below the previous grant is a no-op.  Budget exhaustion stops the
    opening with counters reflecting the deployments that actually happened.
    """
    domain = client.domain
    if rec.n_open > 0:
        if n <= rec.n_open:
            return
        rec.n_open = n
        for child_rec in layers[rec.cell.depth + 1]:
            if child_rec.cell.parent() != rec.cell:
                continue
            extra = n - child_rec.n_deploy
            if extra <= 0:
                continue
            pooled, done, out = _deploy_times(
                client, child_rec.cell, child_rec.rep, extra, m0, rng,
                pooled=child_rec.sample_set,
            )
            child_rec.sample_set = pooled
            child_rec.n_deploy += done
            child_rec.refresh()
            if out:
                raise BudgetExhausted("budget spent during top-up")
        return

    rec.n_open = n
    for child in rec.cell.children():
        rep_unit = select_rep(child, rec, domain, k, salt)
        rep = domain.from_unit(rep_unit)
        pooled, done, out = _deploy_times(client, child, rep, n, m0, rng)
        if done > 0:
            child_rec = StochCellRecord(child, rep_unit, rep, pooled, done)
            child_rec.refresh()
            layers[child.depth].append(child_rec)
        if out:
            raise BudgetExhausted("budget spent during opening")


def run_stochastic_schedule(client: DeployClient, m0: int, rng, select_rep,
                            k: int, salt: int):
    """Init, exploration, and cross-validation phases shared by the sampled
    tree searches; returns (theta_T, trace)."""
    domain = client.domain
    h_max, p_max = soop_budgets(client.budget, domain.dim)
    client.trace.meta.update({"h_max": h_max, "p_max": p_max, "m0": m0})
    layers: list[list[StochCellRecord]] = [[] for _ in range(h_max + 2)]
    counters = {"deploy_init": 0, "deploy_explore": 0, "deploy_cv": 0}
    client.trace.meta["counters"] = counters
    exhausted = False

    # init: the root representative is the cube center, deployed h_max times
    rt = root(domain.dim)
    rep_unit = rt.center()
    rep = domain.from_unit(rep_unit)
    pooled, done, exhausted = _deploy_times(client, rt, rep, h_max, m0, rng)
    counters["deploy_init"] = done
    if pooled is not None:
        root_rec = StochCellRecord(rt, rep_unit, rep, pooled, done)
        root_rec.refresh()
        layers[0].append(root_rec)

    # exploration: geometric passes, wide and shallow first
    if not exhausted:
        before = client.deployments
        try:
            open_stochastic(
                layers[0][0], h_max, layers, client, m0, rng, select_rep, k, salt
            )
            for h in range(1, h_max + 1):
                p_start = (h_max // h).bit_length() - 1
                for p in range(p_start, -1, -1):
                    quota = h_max // (h * 2 ** p)
                    if quota < 1:
                        continue
                    need = 2 ** p
                    eligible = [
                        r for r in layers[h] if r.n_open == 0 and r.n_deploy >= need
                    ]
                    eligible.sort(key=lambda r: (r.emp_pr, r.cell.index))
                    for rec in eligible[:quota]:
                        open_stochastic(
                            rec, need, layers, client, m0, rng, select_rep, k, salt
                        )
        except BudgetExhausted:
            exhausted = True
        counters["deploy_explore"] = client.deployments - before

    if exhausted:
        # no room for validation: trust the most-deployed cells
        pool = [r for layer in layers for r in layer]
        top = max(r.n_deploy for r in pool)
        best = min(
            (r for r in pool if r.n_deploy == top),
            key=lambda r: (r.emp_pr, r.cell.depth, r.cell.index),
        )
        client.trace.meta["cv_skipped"] = True
        client.finalize(best.rep)
        return best.rep, client.trace

    # cross-validation: one champion per trust level, fresh samples each
    before = client.deployments
    champions = []
    for p in range(p_max + 1):
        need = 2 ** p
        pool = [r for layer in layers for r in layer if r.n_deploy >= need]
        if not pool:
            continue
        cand = min(pool, key=lambda r: (r.emp_pr, r.cell.depth, r.cell.index))
        fresh, done, out = _deploy_times(client, cand.cell, cand.rep, h_max, m0, rng)
        if done > 0:
            champions.append((fresh.empirical_dpr(cand.rep), p, cand))
        if out:
            break
    counters["deploy_cv"] = client.deployments - before

    if champions:
        _, _, best = min(champions, key=lambda c: (c[0], c[1]))
    else:
        pool = [r for layer in layers for r in layer]
        top = max(r.n_deploy for r in pool)
        best = min(
            (r for r in pool if r.n_deploy == top),
            key=lambda r: (r.emp_pr, r.cell.depth, r.cell.index),
        )
    client.finalize(best.rep)
    return best.rep, client.trace


def run_soop(env, T: int, m0: int = 10, rng=None, k: int = 9, salt: int = 0):
    """Run the sampled-feedback search with budget T; returns (theta_T, trace).

    ``rng`` is a numpy Generator or a seed; all randomness flows through it.
    """
    rng = np.random.default_rng(rng)
    client = DeployClient(env, T)
    client.trace.meta.update(
        {"algorithm": "soop", "k": k, "salt": salt, "budget": T}
    )
    return run_stochastic_schedule(client, m0, rng, stoch_rep_dpr, k, salt)
