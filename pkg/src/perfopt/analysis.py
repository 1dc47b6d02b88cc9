"""Theory-side calculators: near-optimality dimension, Lambert W, regime
classification, and the simple-regret bound expressions.

Everything here is advisory instrumentation for interpreting runs; none of it
feeds the optimizers, which are parameter-free.  The estimation-noise scale B
depends on a user-supplied uniform-concentration constant (default 1.0) and a
confidence level delta, since that constant is not computable generically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .doop import doop_hmax
from .soop import soop_budgets

_LN2 = math.log(2.0)


def lambert_w(x: float) -> float:
    """Principal-branch Lambert W on x >= 0 by Halley iteration, accurate to
    |W e^W - x| <= 1e-12 * max(1, x)."""
    x = float(x)
    if x < 0:
        raise ValueError("principal branch evaluated on x >= 0 only")
    if x == 0.0:
        return 0.0
    if x > math.e:
        w = math.log(x)
        w -= math.log(w)
    else:
        w = math.log1p(x) * 0.7
    tol = 1e-14 * x
    for _ in range(200):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= tol:
            break
        wp1 = w + 1.0
        w -= f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
    return w


def grid_lipschitz_points(points: np.ndarray, values: np.ndarray) -> float:
    """Max difference quotient |v_i - v_j| / ||p_i - p_j|| over all pairs."""
    points = np.asarray(points, dtype=float)
    values = np.asarray(values, dtype=float).ravel()
    n = points.shape[0]
    best = 0.0
    step = max(1, int(2e7) // max(n, 1))
    for start in range(0, n, step):
        blk = slice(start, min(start + step, n))
        diff = np.abs(values[blk, None] - values[None, :])
        dist = np.linalg.norm(points[blk, None, :] - points[None, :, :], axis=2)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(dist > 0, diff / dist, 0.0)
        best = max(best, float(q.max()))
    return best


def grid_lipschitz(fn, lower, upper, n: int = 55, window: int | None = None) -> float:
    """Max difference quotient of ``fn`` over an n-per-axis grid on the box.

    ``window=None`` compares all pairs (the coarse-grid recipe the
    experiments use for the zooming sensitivity).  ``window=w`` compares only
    neighbors within Chebyshev distance w, which on a dense grid converges to
    the Lipschitz constant; restricted to 2-d.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    axes = [np.linspace(lo, hi, n) for lo, hi in zip(lower, upper)]
    if window is None:
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        return grid_lipschitz_points(pts, np.asarray(fn(pts), dtype=float))
    if lower.shape != (2,):
        raise ValueError("windowed mode supports 2-d boxes only")
    gx, gy = np.meshgrid(axes[0], axes[1], indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    vals = np.asarray(fn(pts), dtype=float).reshape(n, n)
    hx = (upper[0] - lower[0]) / (n - 1)
    hy = (upper[1] - lower[1]) / (n - 1)
    best = 0.0
    for di in range(0, window + 1):
        for dj in range(-window, window + 1):
            if di == 0 and dj <= 0:
                continue  # half plane: each pair once
            a = vals[di:, :]
            b = vals[: n - di, :]
            if dj > 0:
                a, b = a[:, dj:], b[:, : n - dj]
            elif dj < 0:
                a, b = a[:, :dj], b[:, -dj:]
            dist = math.hypot(di * hx, dj * hy)
            best = max(best, float(np.max(np.abs(a - b))) / dist)
    return best


def unit_lipschitz(eps: float, domain) -> float:
    """Convert a Lipschitz constant from original to unit-cube coordinates."""
    return float(eps) * float(np.max(domain.widths))


def near_opt_dim(env, nu: float, rho: float, h_range=range(0, 7),
                 grid_n: int | None = None) -> float:
    """Smallest d >= 0 with N_h(6 nu rho^h) <= rho^(-d h) for every depth in
    ``h_range``, where N_h counts depth-h cells whose PR minimum (dense-grid
    estimate) is within the threshold of the optimum.  Bisection to 1e-3.
    """
    if nu <= 0 or not 0 < rho < 1:
        raise ValueError("need nu > 0 and rho in (0, 1)")
    D = env.domain.dim
    h_top = max(h_range)
    cells = 1 << h_top
    if grid_n is None:
        grid_n = 4 * cells
    if grid_n < 4 * cells or grid_n % cells:
        raise ValueError(
            f"grid too coarse: need a multiple of {cells} with >= 4 points per "
            f"cell edge at depth {h_top}"
        )
    # cell-interior sample points so every grid point belongs to one cell
    u = (np.arange(grid_n) + 0.5) / grid_n
    mesh = np.meshgrid(*([u] * D), indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    vals = env.true_pr_batch(env.domain.from_unit(pts)).reshape((grid_n,) * D)
    pr_star = env.optimum()[1]

    counts = {}
    for h in h_range:
        side = 1 << h
        block = grid_n // side
        arr = vals
        # fold each axis into (cells, block) and min over the block part
        shape = []
        for _ in range(D):
            shape.extend([side, block])
        arr = arr.reshape(shape)
        arr = arr.min(axis=tuple(range(1, 2 * D, 2)))
        counts[h] = int(np.count_nonzero(arr <= pr_star + 6.0 * nu * rho ** h))

    def fits(d: float) -> bool:
        return all(counts[h] <= rho ** (-d * h) for h in h_range)

    if fits(0.0):
        return 0.0
    hi = 1.0
    while not fits(hi):
        hi *= 2.0
        if hi > 1024:
            raise ValueError("no finite near-optimality dimension fits the counts")
    lo = 0.0
    while hi - lo > 1e-3:
        mid = 0.5 * (lo + hi)
        if fits(mid):
            hi = mid
        else:
            lo = mid
    return hi


@dataclass
class RegimeParams:
    """The scale quantities that govern the sampled-feedback rate."""

    nu: float
    rho: float
    B: float
    d: float
    h_max: int
    h_tilde: float
    h_bar: float
    regime: str  # "low-noise" | "high-noise"


def regime_params(d: float, alpha: float, D: int, L_z: float, eps: float,
                  T: int, m0: int, cstar: float = 1.0,
                  delta: float = 0.05) -> RegimeParams:
    """Classify the run into the low- or high-noise regime."""
    h_max, _ = soop_budgets(T, D)
    nu = (2.0 * math.sqrt(D)) ** alpha * L_z * eps
    rho = 2.0 ** -alpha
    B = 2.0 * math.sqrt(2.0) * (cstar + math.sqrt(math.log(T / delta))) / math.sqrt(m0)
    scale = alpha * (d + 2.0) * _LN2
    h_tilde = lambert_w(h_max * nu ** 2 * scale / B ** 2) / scale
    if d > 0:
        h_bar = lambert_w(h_max * d * alpha * _LN2) / (d * alpha * _LN2)
    else:
        h_bar = float(h_max)
    regime = "high-noise" if B >= L_z * eps * 2.0 ** (-alpha * h_tilde) else "low-noise"
    return RegimeParams(nu, rho, B, d, h_max, h_tilde, h_bar, regime)


@dataclass
class BoundResult:
    value: float
    case: str
    h_max: int
    details: dict = field(default_factory=dict)


def bound_full(d: float, alpha: float, D: int, L_z: float, eps: float,
               T: int) -> BoundResult:
    """Simple-regret bound for the full-feedback search after T deployments.

    Returns the closed form when its precondition h_max * alpha * d * ln 2 >= e
    holds, otherwise the Lambert-W form, with the case recorded.
    """
    h_max = doop_hmax(T, D)
    nu = (2.0 * math.sqrt(D)) ** alpha * L_z * eps
    if d == 0:
        return BoundResult(2.0 * nu * 2.0 ** (-alpha * h_max), "d0", h_max,
                           {"nu": nu})
    x = h_max * alpha * d * _LN2
    if x >= math.e:
        value = 2.0 * nu * (x / math.log(x)) ** (-1.0 / d)
        return BoundResult(value, "closed-form", h_max, {"nu": nu, "x": x})
    value = 2.0 * nu * math.exp(-lambert_w(x) / d)
    return BoundResult(value, "lambert-w", h_max, {"nu": nu, "x": x})


def bound_data(d: float, alpha: float, D: int, L_z: float, eps: float, T: int,
               m0: int, cstar: float = 1.0, delta: float = 0.05) -> BoundResult:
    """Simple-regret bound for the sampled-feedback search after T
    deployments, matching the regime (low/high noise) and d case; the
    sharper closed forms are used when their h_max preconditions hold."""
    params = regime_params(d, alpha, D, L_z, eps, T, m0, cstar, delta)
    h_max, nu, B = params.h_max, params.nu, params.B
    additive = (4.0 * cstar + 4.0 * math.sqrt(math.log(T / delta))) / math.sqrt(
        h_max * m0
    )
    details = {
        "nu": nu,
        "B": B,
        "h_tilde": params.h_tilde,
        "regime": params.regime,
        "additive": additive,
    }
    scale = alpha * (d + 2.0) * _LN2
    y = h_max * nu ** 2 * scale / B ** 2 if B > 0 else math.inf

    if params.regime == "high-noise":
        if y >= math.e and h_max >= B ** 2 * math.e / (nu ** 2 * scale):
            value = 6.0 * nu * (y / math.log(y)) ** (-1.0 / (d + 2.0)) + additive
            return BoundResult(value, "high-noise-closed-form", h_max, details)
        value = 6.0 * nu * 2.0 ** (-alpha * params.h_tilde) + additive
        return BoundResult(value, "high-noise-lambert-w", h_max, details)

    refined_floor = B ** 2 * math.e / (nu ** 2 * scale) if nu > 0 else math.inf
    if d == 0:
        if h_max >= max(1.0, refined_floor):
            value = (2.0 + 3.0 * math.sqrt(2.0)) * nu * 2.0 ** (-alpha * h_max)
            return BoundResult(value + additive, "low-noise-d0-refined", h_max, details)
        value = (2.0 + 2.0 * math.sqrt(2.0)) * nu * 2.0 ** (-alpha * h_max)
        return BoundResult(value + additive, "low-noise-d0", h_max, details)
    x = h_max * alpha * d * _LN2
    details["x"] = x
    if h_max >= max(1.0, math.e / (alpha * d * _LN2), refined_floor):
        value = (2.0 + 3.0 * math.sqrt(2.0)) * nu * (x / math.log(x)) ** (-1.0 / d)
        return BoundResult(value + additive, "low-noise-closed-form", h_max, details)
    value = (2.0 + 2.0 * math.sqrt(2.0)) * nu * math.exp(-lambert_w(x) / d)
    return BoundResult(value + additive, "low-noise-lambert-w", h_max, details)
