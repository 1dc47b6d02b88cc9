"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The zooming baseline recomputes confidence bounds from every deployed decision
at every step, and the tree searches evaluate batches of candidate points;
both are worth jitting.  Backend selection: the environment variable
``PERFOPT_BACKEND`` may be ``numba`` or ``numpy``; unset means numba when it
imports cleanly, numpy otherwise.  Results are deterministic per backend
(reductions here are order-independent, but cross-backend bit identity is not
promised).
"""

from __future__ import annotations

import math
import os

import numpy as np

_E = math.e
_TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------- numpy ----

def _ackley_np(pts: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    sq = np.mean(pts * pts, axis=1)
    cs = np.mean(np.cos(_TWO_PI * pts), axis=1)
    return -20.0 * np.exp(-0.2 * np.sqrt(sq)) - np.exp(cs) + 20.0 + _E


def _rastrigin_np(pts: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    return 10.0 * pts.shape[1] + np.sum(
        pts * pts - 10.0 * np.cos(_TWO_PI * pts), axis=1
    )


def _zoom_bounds_np(dpr_rows, w_rows, slack):
    lo = dpr_rows - slack[:, None] - w_rows
    hi = dpr_rows + slack[:, None] + w_rows
    return lo.max(axis=0), hi.min(axis=0)


_NUMPY_IMPL = {
    "ackley": _ackley_np,
    "rastrigin": _rastrigin_np,
    "zoom_bounds": _zoom_bounds_np,
}


# ---------------------------------------------------------------- numba ----

def _build_numba_impl():
    from numba import njit

    @njit(cache=True)
    def ackley_nb(pts):
        n, d = pts.shape
        out = np.empty(n)
        for i in range(n):
            sq = 0.0
            cs = 0.0
            for j in range(d):
                x = pts[i, j]
                sq += x * x
                cs += math.cos(_TWO_PI * x)
            sq /= d
            cs /= d
            out[i] = -20.0 * math.exp(-0.2 * math.sqrt(sq)) - math.exp(cs) + 20.0 + _E
        return out

    @njit(cache=True)
    def rastrigin_nb(pts):
        n, d = pts.shape
        out = np.empty(n)
        for i in range(n):
            acc = 10.0 * d
            for j in range(d):
                x = pts[i, j]
                acc += x * x - 10.0 * math.cos(_TWO_PI * x)
            out[i] = acc
        return out

    @njit(cache=True)
    def zoom_bounds_nb(dpr_rows, w_rows, slack):
        s, g = dpr_rows.shape
        lo = np.full(g, -np.inf)
        hi = np.full(g, np.inf)
        for i in range(s):
            for j in range(g):
                a = dpr_rows[i, j] - slack[i] - w_rows[i, j]
                b = dpr_rows[i, j] + slack[i] + w_rows[i, j]
                if a > lo[j]:
                    lo[j] = a
                if b < hi[j]:
                    hi[j] = b
        return lo, hi

    def ackley(pts):
        return ackley_nb(np.ascontiguousarray(np.atleast_2d(np.asarray(pts, dtype=float))))

    def rastrigin(pts):
        return rastrigin_nb(np.ascontiguousarray(np.atleast_2d(np.asarray(pts, dtype=float))))

    def zoom_bounds(dpr_rows, w_rows, slack):
        return zoom_bounds_nb(
            np.ascontiguousarray(dpr_rows),
            np.ascontiguousarray(w_rows),
            np.ascontiguousarray(slack),
        )

    return {"ackley": ackley, "rastrigin": rastrigin, "zoom_bounds": zoom_bounds}


_IMPL = dict(_NUMPY_IMPL)
_BACKEND = "numpy"


def set_backend(name: str) -> str:
    """Select ``numba`` or ``numpy``; returns the backend actually in use."""
    global _IMPL, _BACKEND
    if name == "numpy":
        _IMPL, _BACKEND = dict(_NUMPY_IMPL), "numpy"
    elif name == "numba":
        _IMPL, _BACKEND = _build_numba_impl(), "numba"
    else:
        raise ValueError(f"unknown backend {name!r}")
    return _BACKEND


def current_backend() -> str:
    return _BACKEND


def _init_backend():
    want = os.environ.get("PERFOPT_BACKEND", "").strip().lower()
    if want == "numpy":
        return
    try:
        set_backend("numba")
    except Exception:
        if want == "numba":
            raise
        # silent fallback keeps the package importable without numba


_init_backend()


def ackley_values(pts) -> np.ndarray:
    """Ackley function (normalized so the origin evaluates to 0), batched."""
    return _IMPL["ackley"](pts)


def rastrigin_values(pts) -> np.ndarray:
    """Rastrigin function, batched over rows of ``pts``."""
    return _IMPL["rastrigin"](pts)


def zoom_bounds(dpr_rows, w_rows, slack):
    """Confidence bounds over a grid from all deployed decisions.

    ``dpr_rows[s, j]`` is the (empirical) decoupled risk of grid point j under
    deployed decision s, ``w_rows[s, j]`` the sensitivity radius between them,
    ``slack[s]`` an estimation slack.  Returns elementwise
    ``(max_s rows - slack - w, min_s rows + slack + w)``.
    """
    return _IMPL["zoom_bounds"](
        np.asarray(dpr_rows, dtype=float),
        np.asarray(w_rows, dtype=float),
        np.asarray(slack, dtype=float),
    )
