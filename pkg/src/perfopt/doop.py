"""Full-feedback tree search over the performative risk.

Deploying a decision reveals its whole distribution, so the decoupled risk
DPR(theta, .) of the parent cell's representative is exact and can select
each child's representative.  The schedule is parameter-free: depth budget
h_max derived from T alone, and floor(h_max / h) openings at depth h, biased
toward shallow, wide exploration.  The same schedule with the cell center as
representative is the SequOOL baseline (see ``baselines``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BudgetExhausted, BudgetTooSmallError
from .metrics import DeployClient
from .partition import Cell, candidate_points, root


def doop_hmax(T: int, D: int) -> int:
    """Depth budget floor(T / (2^D * H_T)), H_T the T-th harmonic number
    computed by direct summation."""
    if T < 2:
        raise BudgetTooSmallError(f"need T >= 2, got {T}")
    harmonic = sum(1.0 / t for t in range(1, T + 1))
    h_max = int(T / (2 ** D * harmonic))
    if h_max < 1:
        raise BudgetTooSmallError(
            f"T={T} gives depth budget 0 in dimension D={D}; increase T"
        )
    return h_max


@dataclass
class CellRecord:
    """An evaluated cell: its representative decision, the distribution
    handle from deploying it, and PR of the representative."""

    cell: Cell
    rep_unit: np.ndarray
    rep: np.ndarray
    handle: object
    pr: float


def select_rep_dpr(child: Cell, parent: CellRecord, domain, k: int, salt: int):
    """Representative minimizing DPR(parent rep, .) over the candidate grid;
    ties resolve to the earliest candidate (the center comes first)."""
    cands = candidate_points(child, k, salt)
    vals = parent.handle.dpr_batch(domain.from_unit(cands))
    return cands[int(np.argmin(vals))]


def select_rep_center(child: Cell, parent: CellRecord, domain, k: int, salt: int):
    return child.center()


def open_full(rec: CellRecord, layers, client, select_rep, k: int, salt: int) -> None:
    """Deploy a representative in each child of ``rec`` (one deployment per
    child).  On budget exhaustion the children already deployed are kept."""
    domain = client.domain
    for child in rec.cell.children():
        rep_unit = select_rep(child, rec, domain, k, salt)
        rep = domain.from_unit(rep_unit)
        handle = client.deploy_full(rep, depth=child.depth, cell_index=child.index)
        pr = handle.dpr(rep)
        layers[child.depth].append(CellRecord(child, rep_unit, rep, handle, pr))


def run_schedule(client: DeployClient, h_max: int, select_rep, k: int, salt: int):
    """The shared deterministic schedule: open the root, then at each depth
    h = 1..h_max open the floor(h_max/h) evaluated cells with smallest PR."""
    domain = client.domain
    layers: list[list[CellRecord]] = [[] for _ in range(h_max + 2)]
    openings = 0
    try:
        rt = root(domain.dim)
        rep_unit = rt.center()
        rep = domain.from_unit(rep_unit)
        handle = client.deploy_full(rep, depth=0, cell_index=0)
        layers[0].append(CellRecord(rt, rep_unit, rep, handle, handle.dpr(rep)))

        open_full(layers[0][0], layers, client, select_rep, k, salt)
        openings += 1
        for h in range(1, h_max + 1):
            quota = h_max // h
            ranked = sorted(layers[h], key=lambda r: (r.pr, r.cell.index))
            for rec in ranked[:quota]:
                open_full(rec, layers, client, select_rep, k, salt)
                openings += 1
    except BudgetExhausted:
        pass

    best = min(
        (r for layer in layers for r in layer),
        key=lambda r: (r.pr, r.cell.depth, r.cell.index),
    )
    client.trace.meta["openings"] = openings
    client.finalize(best.rep)
    return best.rep, client.trace


def run_doop(env, T: int, k: int = 9, salt: int = 0):
    """Run the full-feedback search with budget T; returns (theta_T, trace).

    theta_T is the evaluated representative with smallest PR across all
    depths, so it never falls short of the best deployment in the trace.
    """
    client = DeployClient(env, T)
    h_max = doop_hmax(T, client.domain.dim)
    client.trace.meta.update(
        {"algorithm": "doop", "h_max": h_max, "k": k, "salt": salt, "budget": T}
    )
    return run_schedule(client, h_max, select_rep_dpr, k, salt)
