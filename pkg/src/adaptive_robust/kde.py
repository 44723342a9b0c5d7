"""Kernel density estimation by uniform sampling, with adaptive-query wrappers.

Two Lipschitz kernels are supported::

    exp:       k(x, y) = C exp(-||x - y||)      L = C
    rational:  k(x, y) = C / (C + ||x - y||)    L = 1/C

The sampling estimator averages the kernel over ``s`` points drawn with
replacement, so it inherits the kernel's Lipschitz constant in the query.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import constants
from .dp import OutputGrid
from .framework import robust_build
from .rng import substream

KERNELS = ("exp", "rational")
NET_CAP = 10**7


class CapacityError(RuntimeError):
    pass


@dataclass(frozen=True)
class Kernel:
    kind: str = "exp"
    C: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNELS:
            raise ValueError(f"unknown kernel {self.kind!r}; supported: {'|'.join(KERNELS)}")
        if not self.C > 0:
            raise ValueError("kernel scale C must be positive")

    @property
    def lipschitz(self):
        return self.C if self.kind == "exp" else 1.0 / self.C

    @property
    def k_max(self):
        """Value at zero distance."""
        return self.C if self.kind == "exp" else 1.0

    def of_distance(self, t):
        t = np.asarray(t, dtype=np.float64)
        if self.kind == "exp":
            return self.C * np.exp(-t)
        return self.C / (self.C + t)

    def __call__(self, x, y):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        return self.of_distance(np.linalg.norm(x - y, axis=-1))

    def rho(self, tau):
        """Smallest ``t`` with ``k(t) <= tau/3`` for all distances ``>= t``."""
        if self.kind == "exp":
            # C e^{-t} <= tau/3  <=>  t >= ln(3C/tau)
            return max(math.log(3 * self.C / tau), 0.0)
        # C/(C+t) <= tau/3  <=>  t >= C(3/tau - 1)
        return max(self.C * (3.0 / tau - 1.0), 0.0)


def _points(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a non-empty point set")
    return X


def _kernel_mean(P, q, kernel):
    q = np.asarray(q, dtype=np.float64)
    if q.ndim == 0:
        q = q[None]
    d2 = np.einsum("ij,ij->i", P - q, P - q)
    return float(kernel.of_distance(np.sqrt(d2)).mean())


def kde_exact(X, q, kernel):
    """``(1/n) sum_i k(x_i, q)``."""
    return _kernel_mean(_points(X), q, kernel)


@dataclass(frozen=True)
class KdeQueryResult:
    value: float
    promise_met: bool


def sample_size(eps, tau, delta, kernel, c=None):
    c = constants.C_S if c is None else c
    return max(1, math.ceil(c * kernel.k_max * math.log(1 / delta) / (tau * eps**2)))


@dataclass(frozen=True, eq=False)
class KdeSampleEstimator:
    X: np.ndarray = field(repr=False)
    sample_idx: np.ndarray = field(repr=False)
    kernel: Kernel = Kernel()
    tau: float = 0.1
    eps: float = 0.3
    delta: float = 0.01

    @property
    def s(self):
        return self.sample_idx.size

    @property
    def lipschitz(self):
        return self.kernel.lipschitz

    @property
    def sample(self):
        return self.X[self.sample_idx]

    def answer(self, q):
        return _kernel_mean(self.X[self.sample_idx], q, self.kernel)

    def query(self, q):
        v = self.answer(q)
        return KdeQueryResult(v, v >= self.tau * (1 - self.eps))


def _index_dtype(n):
    return np.int16 if n <= np.iinfo(np.int16).max else np.int32 if n <= np.iinfo(np.int32).max else np.int64


def kde_build(X, eps, tau, delta, kernel, seed):
    X = _points(X)
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 < tau <= kernel.k_max:
        raise ValueError(f"tau must lie in (0, {kernel.k_max}]")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    s = sample_size(eps, tau, delta, kernel)
    idx = substream(seed).integers(0, X.shape[0], size=s).astype(_index_dtype(X.shape[0]))
    idx.setflags(write=False)
    return KdeSampleEstimator(X, idx, kernel, tau, eps, delta)


def kde_query(e, q):
    return e.query(q)


def kde_grid(kernel, tau, eps):
    return OutputGrid.geometric(1e-3 * tau, 2.0 * kernel.k_max, 1.0 + eps / 10)


def robust_kde_build(X, Q, eps, tau, seed, kernel=Kernel(), delta=0.25, params=None, grid=None):
    """Replicas of :func:`kde_build`, each correct with probability ``1 - delta``."""
    X = _points(X)

    def factory(data, s):
        return kde_build(data, eps, tau, delta, kernel, s)

    grid = kde_grid(kernel, tau, eps) if grid is None else grid
    return robust_build(factory, X, Q, X.shape[0], grid, seed, params=params)


def net_size_bound(Delta, rho, L, eps, tau, d):
    """``(1 + 6 (Delta + rho) L / (eps tau))^d`` for covering radius ``eps tau / (3L)``."""
    return (1.0 + 6.0 * (Delta + rho) * L / (eps * tau)) ** d


def lattice_net(center, radius, net_radius):
    """Cubic lattice of spacing ``2 net_radius / sqrt(d)`` around a ball.

    Every point of the ball is within ``net_radius`` of a lattice point; for
    ``d <= 4`` lattice points are at least ``net_radius`` apart.
    """
    center = np.asarray(center, dtype=np.float64)
    d = center.size
    s = 2.0 * net_radius / math.sqrt(d)
    half = math.ceil((radius + net_radius) / s)
    count = (2 * half + 1) ** d
    if count > NET_CAP:
        raise CapacityError(f"candidate lattice of {count} points exceeds the cap of {NET_CAP}")
    axis = np.arange(-half, half + 1) * s
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    keep = np.linalg.norm(grid, axis=1) <= radius + net_radius
    return center + grid[keep]


@dataclass(frozen=True, eq=False)
class NetWrapper:
    base: KdeSampleEstimator
    net: np.ndarray = field(repr=False)
    center: np.ndarray = field(repr=False)
    net_radius: float = 0.0
    Delta: float = 0.0
    rho: float = 0.0
    L: float = 1.0
    eps: float = 0.3
    tau: float = 0.1

    @property
    def size_bound(self):
        return net_size_bound(self.Delta, self.rho, self.L, self.eps, self.tau, self.center.size)

    def query(self, q):
        v = self.base.answer(q)
        return KdeQueryResult(v, v >= self.tau * (1 - self.eps))


def kde_net_build(X, eps, tau, kernel, Delta=None, rho=None, seed=None):
    """Base estimator at ``(eps/3, tau/2)`` with failure ``1/(100 |N|)``.

    The net fixes the failure probability; queries go straight to the base
    estimator.
    """
    X = _points(X)
    d = X.shape[1]
    if Delta is None:
        diffs = X[:, None, :] - X[None, :, :]
        Delta = float(np.sqrt(np.einsum("ijk,ijk->ij", diffs, diffs).max()))
    if rho is None:
        rho = kernel.rho(tau)
    elif kernel.of_distance(rho) > tau / 3 + 1e-15:
        raise ValueError(f"k at distance rho={rho} exceeds tau/3")
    L = kernel.lipschitz
    bound = net_size_bound(Delta, rho, L, eps, tau, d)
    if bound > NET_CAP:
        raise CapacityError(f"net size bound {bound:.3g} exceeds the cap of {NET_CAP}")
    net_radius = eps * tau / (3 * L)
    center = X.mean(axis=0)
    net = lattice_net(center, Delta + rho, net_radius)
    delta = 1.0 / (100 * len(net))
    base = kde_build(X, eps / 3, tau / 2, delta, kernel, seed)
    return NetWrapper(base, net, center, net_radius, Delta, rho, L, eps, tau)


def kde_net_query(w, q):
    return w.query(q)
