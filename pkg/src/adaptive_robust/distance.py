"""Distance estimation from a stored point set under adaptive queries.

:class:`AdeFastJl` keeps ``r`` JL maps and every stored projection; a query
``(y, i)`` is answered by a private median over ``k`` sampled maps.
:class:`AdeSrht` answers all ``n`` distances per query from one SRHT stack,
with fixed per-point index sets and per-point budgets.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import constants
from .dp import (
    OutputGrid,
    PrivacyParams,
    advanced_composition,
    framework_params,
    private_median,
    subsampling_amplification,
)
from .framework import BudgetExhaustedError
from .rng import child_seed, substream
from .transforms import FastJlMap, GaussianJlMap, SrhtStack, TruncationParams, fast_jl_rows, jl_rows, ret_norm


class ConditioningError(RuntimeError):
    pass


@dataclass(frozen=True)
class DistanceQuery:
    y: np.ndarray
    i: int = None


def _points(X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("X must be a non-empty n x d matrix")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains NaN or Inf")
    return X


def diameter(X):
    """Largest pairwise distance (exact, ``O(n^2 d)``)."""
    sq = np.einsum("ij,ij->i", X, X)
    g = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    return float(math.sqrt(max(g.max(), 0.0)))


def distance_grid(X, eps):
    """Grid on ``[1e-6, 2 * scale]`` with spacing ``1 + eps/10``.

    ``scale`` is the diameter, or the largest norm when that is bigger, so
    queries far from every point still fall inside the grid.
    """
    scale = max(diameter(X), float(np.linalg.norm(X, axis=1).max()), 1.0)
    return OutputGrid.geometric(1e-6, 2.0 * scale, 1.0 + eps / 10)


class AdeFastJl:
    def __init__(self, X, maps, projections, params, grid, seed):
        self.X = X
        self.maps = maps
        self.projections = projections
        self.params = params
        self.grid = grid
        self.queries_used = 0
        self.transform_applications = 0
        self._rng = substream(seed, 1)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def m(self):
        return self.maps[0].out_dim

    def storage_reals(self):
        """Stored projections plus map state."""
        return self.projections.size + sum(mp.n_reals() for mp in self.maps)

    def query(self, y, i):
        if self.queries_used >= self.params.Q:
            raise BudgetExhaustedError(f"query budget of {self.params.Q} exhausted")
        if not 0 <= int(i) < self.n:
            raise IndexError(f"point index {i} outside [0, {self.n})")
        y = np.asarray(y, dtype=np.float64)
        js = self._rng.integers(0, len(self.maps), size=self.params.k)
        vals = np.empty(js.size)
        for t, j in enumerate(js):
            py = self.maps[j].apply(y)
            self.transform_applications += 1
            vals[t] = np.linalg.norm(self.projections[j, i] - py)
        self.queries_used += 1
        return private_median(vals, self.grid, self.params.eps_med, self._rng)


def ade_build(X, Q, eps, seed, kind="fast", params=None, grid=None):
    """Build ``r`` maps and store ``Pi_j x_i`` for every map and point."""
    X = _points(X)
    n, d = X.shape
    if params is None:
        params = framework_params(Q, n)
    if kind == "fast":
        m = fast_jl_rows(eps, d)
        maps = [FastJlMap.create(m, d, child_seed(seed, 0, j)) for j in range(params.r)]
    elif kind == "gaussian":
        m = jl_rows(eps)
        maps = [GaussianJlMap.create(m, d, child_seed(seed, 0, j)) for j in range(params.r)]
    else:
        raise ValueError(f"unknown map kind {kind!r}")
    proj = np.stack([mp.apply(X) for mp in maps])
    proj.setflags(write=False)
    grid = distance_grid(X, eps) if grid is None else grid
    return AdeFastJl(X, maps, proj, params, grid, seed)


def ade_query(ds, q):
    return ds.query(q.y, q.i)


@dataclass(frozen=True)
class SrhtParams:
    m: int
    r: int
    k: int
    l: int
    Q: int
    eps_med: float = constants.EPS_MED

    @classmethod
    def for_problem(cls, n, d, Q, eps):
        nd = max(n * d, 2)
        m = math.ceil(constants.C_M_SRHT * eps**-2 * math.log(2 * d * n / eps))
        r = math.ceil(constants.C_R_SRHT * math.sqrt(Q) * math.log(nd) ** 3)
        k = math.ceil(constants.C_K_SRHT * eps**-2 * math.log(2 / eps) * math.log(2 * nd))
        l = math.ceil(constants.C_L_SRHT * math.log(nd))
        return cls(m, max(r, 2 * l), k, l, Q)

    def per_point_privacy(self, n):
        """Privacy of one point's index sets after ``Q`` queries."""
        per = subsampling_amplification(self.eps_med, 0.0, self.l, self.r)
        dp = 1.0 / (n * self.Q) ** 2
        if per.epsilon <= 1:
            return advanced_composition(self.Q, per.epsilon, per.delta, dp)
        return PrivacyParams(self.Q * per.epsilon, 0.0)


class AdeSrht:
    def __init__(self, h, index_sets, values, params, grid, trunc, seed):
        self.h = h
        self.index_sets = index_sets
        self.values = values
        self.params = params
        self.grid = grid
        self.trunc = trunc
        self.queries_used = 0
        self._rng = substream(seed, 2)

    @property
    def n(self):
        return self.index_sets.shape[0]

    def sample_reals(self):
        return self.values.size

    def storage_reals(self):
        """``n * r * k`` sampled coordinates plus the Gaussian diagonals."""
        return self.values.size + self.h.n_reals()

    def query(self, q):
        if self.queries_used >= self.params.Q:
            raise BudgetExhaustedError(f"query budget of {self.params.Q} exhausted")
        v = self.h.apply(np.asarray(q, dtype=np.float64))
        n, l = self.n, self.params.l
        t = self._rng.integers(0, self.params.r, size=(n, l))
        rows = np.arange(n)[:, None]
        idx = self.index_sets[rows, t]
        diff = v[idx] - self.values[rows, t]
        est = ret_norm(diff, self.trunc)
        out = np.array([private_median(est[i], self.grid, self.params.eps_med, self._rng) for i in range(n)])
        self.queries_used += 1
        return out


def conditioning_ok(h, eps, trunc, n_dirs=200, seed=0):
    """Check the truncated-mean norm event on random unit directions."""
    rng = substream(seed, 9)
    Z = rng.standard_normal((n_dirs, h.d))
    Z /= np.linalg.norm(Z, axis=1, keepdims=True)
    H = h.apply(Z)
    est = math.sqrt(math.pi / 2) * np.minimum(np.abs(H), trunc.r_trunc).mean(axis=1)
    return bool(np.all(np.abs(est - 1.0) <= eps))


def ade_srht_build(X, Q, eps, seed, params=None, grid=None):
    X = _points(X)
    n, d = X.shape
    if params is None:
        params = SrhtParams.for_problem(n, d, Q, eps)
    if Q > d:
        warnings.warn(f"Q={Q} exceeds the dimension d={d}", stacklevel=2)
    trunc = TruncationParams.for_eps(eps)
    for attempt in range(2):
        h = SrhtStack.create(params.m, d, child_seed(seed, 0, attempt))
        if conditioning_ok(h, eps, trunc, seed=child_seed(seed, 3, attempt)):
            break
    else:
        raise ConditioningError("SRHT failed the conditioning check twice")
    rng = substream(seed, 1, attempt)
    idx_dtype = np.int32 if h.out_dim < 2**31 else np.int64
    index_sets = rng.integers(0, h.out_dim, size=(n, params.r, params.k)).astype(idx_dtype)
    values = np.empty(index_sets.shape)
    for i in range(n):
        values[i] = h.apply(X[i])[index_sets[i]]
    index_sets.setflags(write=False)
    values.setflags(write=False)
    grid = distance_grid(X, eps) if grid is None else grid
    return AdeSrht(h, index_sets, values, params, grid, trunc, seed)


def ade_srht_query(ds, q):
    return ds.query(q)
