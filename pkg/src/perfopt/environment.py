"""Decision-dependent benchmark environments.

An environment couples a loss f(theta, z) with a distribution map D(theta):
deploying a decision theta yields feedback about D(theta), either the full
distribution (a ``DistributionHandle`` that can evaluate the decoupled risk
DPR(theta, theta') exactly) or m0 i.i.d. samples (a ``SampleSet``).  The
performative risk PR(theta) = E_{z ~ D(theta)} f(theta, z) and the optimum are
ground-truth oracles for evaluation only; optimizers never see them.

The shipped environments use f(theta, z) = g(theta) + z with z exponential
with mean r(theta), where (g, r) are the Ackley and Rastrigin functions on
[-5.12, 5.12]^2 in either order.  Then DPR(theta, theta') = g(theta') +
r(theta) in closed form and PR = g + r with optimum 0 at the origin.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import DomainError
from .partition import BoxDomain


def ackley(x) -> float | np.ndarray:
    """Normalized Ackley value: 0 at the origin, nonnegative on the domain."""
    x = np.asarray(x, dtype=float)
    vals = kernels.ackley_values(np.atleast_2d(x))
    return float(vals[0]) if x.ndim == 1 else vals


def rastrigin(x) -> float | np.ndarray:
    x = np.asarray(x, dtype=float)
    vals = kernels.rastrigin_values(np.atleast_2d(x))
    return float(vals[0]) if x.ndim == 1 else vals


class DistributionHandle:
    """Full feedback from one deployment: exact access to D(theta_source).

    For the additive-exponential environments DPR(theta, theta') =
    g(theta') + r(theta), so the handle only needs the rate at its source.
    """

    __slots__ = ("theta", "_base", "_rate_value", "_domain")

    def __init__(self, theta, base, rate_value, domain):
        self.theta = np.array(theta, dtype=float)
        self.theta.setflags(write=False)
        self._base = base
        self._rate_value = float(rate_value)
        self._domain = domain

    def dpr(self, theta_eval) -> float:
        """Decoupled performative risk DPR(theta_source, theta_eval)."""
        theta_eval = np.asarray(theta_eval, dtype=float)
        if not self._domain.contains(theta_eval):
            raise DomainError(f"decision {theta_eval.tolist()} outside domain")
        return float(self._base(np.atleast_2d(theta_eval))[0]) + self._rate_value

    def dpr_batch(self, points) -> np.ndarray:
        """Vectorized ``dpr`` over rows of ``points`` (assumed in-domain)."""
        return self._base(np.atleast_2d(points)) + self._rate_value


class SampleSet:
    """Pooled i.i.d. samples from D(theta_source).

    Batches are appended in draw order and never reordered.  Instances are
    snapshots: ``extended`` returns a new set sharing no mutable state.
    """

    __slots__ = ("theta", "samples", "_base", "_mean")

    def __init__(self, theta, samples, base):
        self.theta = np.array(theta, dtype=float)
        self.theta.setflags(write=False)
        self.samples = np.asarray(samples, dtype=float)
        self.samples.setflags(write=False)
        self._base = base
        self._mean = float(self.samples.mean()) if self.samples.size else 0.0

    def __len__(self):
        return self.samples.size

    def extended(self, batch: "SampleSet") -> "SampleSet":
        if batch.theta.shape != self.theta.shape or not np.array_equal(
            batch.theta, self.theta
        ):
            raise ValueError("can only pool samples drawn at the same decision")
        return SampleSet(
            self.theta, np.concatenate([self.samples, batch.samples]), self._base
        )

    def empirical_dpr(self, theta_eval) -> float:
        """Mean of f(theta_eval, z) over the pooled samples."""
        if self.samples.size == 0:
            raise ValueError("empty sample set")
        theta_eval = np.atleast_2d(np.asarray(theta_eval, dtype=float))
        return float(self._base(theta_eval)[0]) + self._mean

    def empirical_dpr_batch(self, points) -> np.ndarray:
        if self.samples.size == 0:
            raise ValueError("empty sample set")
        return self._base(np.atleast_2d(points)) + self._mean


def dpr_exact(handle: DistributionHandle, theta_eval) -> float:
    return handle.dpr(theta_eval)


def empirical_dpr(sample_set: SampleSet, theta_eval) -> float:
    return sample_set.empirical_dpr(theta_eval)


class AdditiveExpEnv:
    """Environment with loss g(theta) + z, z exponential with mean r(theta).

    ``base`` and ``rate`` are batched callables mapping (n, D) arrays to (n,)
    values; ``rate`` must be nonnegative on the domain (a zero rate is the
    point mass at zero, the continuous limit of the exponential family).
    """

    def __init__(self, base, rate, domain: BoxDomain, name: str = "additive_exp",
                 analytic_optimum=None, oracle_grid: int = 1025):
        self.base = base
        self.rate = rate
        self.domain = domain
        self.name = name
        self._analytic_optimum = analytic_optimum
        self._oracle_grid = oracle_grid
        self._optimum_cache = None

    @property
    def optimum_is_analytic(self) -> bool:
        return self._analytic_optimum is not None

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.domain.dim,):
            raise DomainError(f"decision must be a {self.domain.dim}-vector")
        if not self.domain.contains(theta):
            raise DomainError(f"decision {theta.tolist()} outside domain")
        return theta

    def _rate_at(self, theta) -> float:
        lam = float(self.rate(np.atleast_2d(theta))[0])
        if lam < 0:
            raise ValueError("rate function must be nonnegative")
        return lam

    def deploy_full(self, theta) -> DistributionHandle:
        theta = self._check(theta)
        return DistributionHandle(theta, self.base, self._rate_at(theta), self.domain)

    def deploy_sample(self, theta, m0: int, rng: np.random.Generator) -> SampleSet:
        """One deployment in the data-driven setting: m0 fresh draws."""
        theta = self._check(theta)
        if m0 < 1:
            raise ValueError("need m0 >= 1")
        z = rng.exponential(scale=self._rate_at(theta), size=m0)
        return SampleSet(theta, z, self.base)

    def true_pr(self, theta) -> float:
        theta = self._check(theta)
        return float(self.base(np.atleast_2d(theta))[0]) + self._rate_at(theta)

    def true_pr_batch(self, points) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return self.base(points) + self.rate(points)

    def optimum(self):
        """(theta_PO, PR(theta_PO)); analytic when known, else a dense-grid
        brute-force estimate at ``oracle_grid`` points per axis."""
        if self._optimum_cache is None:
            if self._analytic_optimum is not None:
                theta, value = self._analytic_optimum
                self._optimum_cache = (np.array(theta, dtype=float), float(value))
            else:
                axes = [
                    np.linspace(lo, hi, self._oracle_grid)
                    for lo, hi in zip(self.domain.lower, self.domain.upper)
                ]
                mesh = np.meshgrid(*axes, indexing="ij")
                pts = np.stack([m.ravel() for m in mesh], axis=1)
                vals = self.true_pr_batch(pts)
                j = int(np.argmin(vals))
                self._optimum_cache = (pts[j].copy(), float(vals[j]))
        return self._optimum_cache


ENV_NAMES = ("ackley_exp_rastrigin", "rastrigin_exp_ackley")


def make_env(name: str) -> AdditiveExpEnv:
    """Environment registry used by the harness config."""
    domain = BoxDomain([-5.12, -5.12], [5.12, 5.12])
    if name == "ackley_exp_rastrigin":
        base, rate = kernels.ackley_values, kernels.rastrigin_values
    elif name == "rastrigin_exp_ackley":
        base, rate = kernels.rastrigin_values, kernels.ackley_values
    else:
        raise ValueError(f"unknown environment {name!r}; choose from {ENV_NAMES}")
    return AdditiveExpEnv(
        base, rate, domain, name=name, analytic_optimum=((0.0, 0.0), 0.0)
    )
