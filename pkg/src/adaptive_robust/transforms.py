"""Seeded randomized linear maps and the scalar estimators built on them.

Three map families are provided:

* :class:`GaussianJlMap` -- dense ``m x d`` matrix of i.i.d. ``N(0, 1/m)``.
* :class:`FastJlMap` -- ``P H D``: random signs, a Walsh-Hadamard transform,
  then ``m`` rows sampled uniformly with replacement.
* :class:`SrhtStack` -- ``m`` Hadamard blocks, each preceded by its own
  Gaussian diagonal, stacked into an ``m * d_pad`` output.

All maps are immutable after construction and linear in their input.
"""

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from . import constants
from .rng import as_generator

# Phi^{-1}(3/4): median of |N(0, 1)|.
HALF_NORMAL_MEDIAN = NormalDist().inv_cdf(0.75)
SQRT_HALF_PI = math.sqrt(math.pi / 2.0)


class DimensionError(ValueError):
    """Input length does not match what a transform expects."""


def next_pow2(d):
    d = int(d)
    if d < 1:
        raise DimensionError(f"dimension must be positive, got {d}")
    return 1 << (d - 1).bit_length()


def _is_pow2(d):
    return d >= 1 and (d & (d - 1)) == 0


def as_vector(x, name="x"):
    """Validate a 1-D finite real vector."""
    v = np.asarray(x)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be one-dimensional, got shape {v.shape}")
    if v.dtype.kind not in "iuf":
        v = v.astype(np.float64)
    if v.dtype.kind == "f" and not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains NaN or Inf")
    return v


def fwht(v):
    """Unnormalized Walsh-Hadamard transform along the last axis.

    Integer input stays integer, so ``fwht(fwht(v)) == len(v) * v`` holds
    exactly for integer vectors. Leading axes are treated as a batch.
    """
    x = np.asarray(v)
    d = x.shape[-1]
    if not _is_pow2(d):
        raise DimensionError(f"fwht needs a power-of-two length, got {d}")
    if x.dtype.kind in "iub":
        x = x.astype(np.int64)
    else:
        x = x.astype(np.float64)
    batch = x.shape[:-1]
    h = 1
    while h < d:
        y = x.reshape(*batch, d // (2 * h), 2, h)
        a = y[..., 0, :]
        b = y[..., 1, :]
        x = np.stack((a + b, a - b), axis=-2).reshape(*batch, d)
        h *= 2
    return x


def _pad(x, d_pad):
    if x.shape[-1] == d_pad:
        return x.astype(np.float64, copy=False)
    out = np.zeros(x.shape[:-1] + (d_pad,), dtype=np.float64)
    out[..., : x.shape[-1]] = x
    return out


def jl_rows(eps):
    """Target dimension for a dense Gaussian JL map at accuracy ``eps``."""
    return max(1, math.ceil(constants.C_JL / eps**2))


def fast_jl_rows(eps, d):
    """Target dimension for a fast JL map at accuracy ``eps`` on ``R^d``."""
    return max(1, math.ceil(constants.C_FAST_JL * math.log(max(d, 2)) / eps**2))


@dataclass(frozen=True, eq=False)
class GaussianJlMap:
    m: int
    d: int
    seed: int
    entries: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, m, d, seed):
        if m < 1 or d < 1:
            raise DimensionError(f"need m >= 1 and d >= 1, got m={m}, d={d}")
        rng = as_generator(seed)
        entries = rng.standard_normal((m, d)) / math.sqrt(m)
        entries.setflags(write=False)
        return cls(int(m), int(d), int(seed), entries)

    @property
    def out_dim(self):
        return self.m

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.d:
            raise DimensionError(f"expected length {self.d}, got {x.shape[-1]}")
        return x @ self.entries.T

    def n_reals(self):
        return self.m * self.d


@dataclass(frozen=True, eq=False)
class FastJlMap:
    """``x -> (1/sqrt(m)) * (H D x)[rows]`` with ``H`` the unnormalized Hadamard.

    Equivalently ``sqrt(d_pad/m)`` times the orthonormal Hadamard rows, so
    that ``E ||Pi x||^2 = ||x||^2``.
    """

    m: int
    d: int
    d_pad: int
    seed: int
    signs: np.ndarray = field(repr=False)
    sampled_rows: np.ndarray = field(repr=False)

    @classmethod
    def create(cls, m, d, seed):
        if m < 1 or d < 1:
            raise DimensionError(f"need m >= 1 and d >= 1, got m={m}, d={d}")
        d_pad = next_pow2(d)
        rng = as_generator(seed)
        signs = rng.choice(np.array([-1.0, 1.0]), size=d_pad)
        rows = rng.integers(0, d_pad, size=m)
        signs.setflags(write=False)
        rows.setflags(write=False)
        return cls(int(m), int(d), d_pad, int(seed), signs, rows)

    @property
    def out_dim(self):
        return self.m

    @property
    def scale(self):
        return 1.0 / math.sqrt(self.m)

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.d:
            raise DimensionError(f"expected length {self.d}, got {x.shape[-1]}")
        hx = fwht(_pad(x, self.d_pad) * self.signs)
        return hx[..., self.sampled_rows] * self.scale

    def n_reals(self):
        # signs plus row indices
        return self.d_pad + self.m


def jl_apply(jl_map, x):
    """Apply a Gaussian or fast JL map to ``x`` (or a batch of rows)."""
    if isinstance(x, np.ndarray) and x.ndim == 2:
        return jl_map.apply(x)
    return jl_map.apply(as_vector(x))


@dataclass(frozen=True, eq=False)
class SrhtStack:
    """Stack of ``m`` blocks ``H D^j`` with Gaussian diagonals ``D^j``.

    With ``normalized=False`` (the default) ``H`` is the unnormalized
    Hadamard matrix, so every output coordinate is distributed as
    ``N(0, ||z||^2)``; that is the scale the truncated-mean norm estimator
    is calibrated for. ``normalized=True`` divides each block by
    ``sqrt(d_pad)``, making each block an isometry in expectation.
    """

    d: int
    d_pad: int
    m: int
    seed: int
    diagonals: np.ndarray = field(repr=False)
    normalized: bool = False

    @classmethod
    def create(cls, m, d, seed, normalized=False, diagonals=None):
        if m < 1 or d < 1:
            raise DimensionError(f"need m >= 1 and d >= 1, got m={m}, d={d}")
        d_pad = next_pow2(d)
        if diagonals is None:
            diagonals = as_generator(seed).standard_normal((m, d_pad))
        else:
            diagonals = np.array(diagonals, dtype=np.float64)
            if diagonals.shape != (m, d_pad):
                raise DimensionError(f"diagonals must have shape {(m, d_pad)}")
        diagonals.setflags(write=False)
        return cls(int(d), d_pad, int(m), int(seed), diagonals, bool(normalized))

    @property
    def out_dim(self):
        return self.m * self.d_pad

    def apply(self, z):
        z = np.asarray(z, dtype=np.float64)
        if z.shape[-1] != self.d:
            raise DimensionError(f"expected length {self.d}, got {z.shape[-1]}")
        zp = _pad(z, self.d_pad)
        # (..., m, d_pad) blocks, flattened block-major
        blocks = fwht(zp[..., None, :] * self.diagonals)
        if self.normalized:
            blocks = blocks / math.sqrt(self.d_pad)
        return blocks.reshape(z.shape[:-1] + (self.out_dim,))

    def n_reals(self):
        return self.m * self.d_pad


def srht_apply(h, z):
    return h.apply(as_vector(z, "z"))


def psi_r(a, r_trunc):
    """Truncated magnitude ``min(|a|, r)``; vectorized over ``a``."""
    if r_trunc <= 0:
        raise ValueError("truncation level must be positive")
    out = np.minimum(np.abs(a), r_trunc)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class TruncationParams:
    r_trunc: float
    eps: float

    @classmethod
    def for_eps(cls, eps):
        """Smallest admissible truncation level for accuracy ``eps``."""
        return cls(4.0 * math.sqrt(math.log(1.0 / eps)) if eps < 1 else 4.0, eps)

    def __post_init__(self):
        if not self.r_trunc > 0:
            raise ValueError("r_trunc must be positive")
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")


def ret_norm(coords, params):
    """Estimate ``||x||`` from sampled coordinates of ``h(x)``.

    Two passes: the median absolute coordinate over ``Phi^{-1}(3/4)`` gives
    a scale, then the truncated mean at ``r_trunc * scale`` is rescaled by
    ``sqrt(pi/2)``. Works along the last axis, so a 2-D array gives one
    estimate per row.
    """
    c = np.abs(np.asarray(coords, dtype=np.float64))
    if c.shape[-1] == 0:
        raise ValueError("ret_norm needs at least one coordinate")
    scale = np.median(c, axis=-1, keepdims=True) / HALF_NORMAL_MEDIAN
    trunc = params.r_trunc * scale
    # a zero scale means most coordinates are zero; do not truncate to 0
    trunc = np.where(scale > 0, trunc, np.inf)
    est = SQRT_HALF_PI * np.minimum(c, trunc).mean(axis=-1)
    return float(est) if np.ndim(est) == 0 else est


def quantile(values, alpha):
    """The ``ceil(alpha * n)``-th smallest element (1-indexed)."""
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    if v.size == 0:
        raise ValueError("quantile of an empty multiset")
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    idx = math.ceil(alpha * v.size - 1e-12)
    return float(v[max(idx, 1) - 1])
