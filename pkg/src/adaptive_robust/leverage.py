"""Leverage scores, a binary-tree sampler, and leverage-score row sampling."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import constants
from .rng import as_generator


class DegenerateInputError(ValueError):
    pass


def _rank_tol(s, shape):
    return s.max(initial=0.0) * max(shape) * np.finfo(np.float64).eps


@dataclass(frozen=True, eq=False)
class LeverageScores:
    tau: np.ndarray = field(repr=False)
    rank: int = 0

    def __len__(self):
        return self.tau.size


def compute_leverage_scores(A):
    """Exact leverage scores ``||U_i||^2`` from a thin SVD of ``A``.

    The SVD, rather than QR, keeps the column basis correct when ``A`` is
    rank deficient.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError("A must be a matrix")
    if not np.any(A):
        raise DegenerateInputError("leverage scores of an all-zero matrix")
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(s > _rank_tol(s, A.shape)))
    tau = np.einsum("ij,ij->i", U[:, :rank], U[:, :rank])
    tau.setflags(write=False)
    return LeverageScores(tau, rank)


class SamplerTree:
    """Complete binary tree of prefix sums over non-negative leaf weights.

    ``tree[1]`` is the root; the children of node ``i`` are ``2i`` and
    ``2i + 1``; leaves start at ``size``. Each draw descends the tree once.
    """

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64).ravel()
        if w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)):
            raise DegenerateInputError("sampler weights must be finite and non-negative")
        if not w.sum() > 0:
            raise DegenerateInputError("sampler needs at least one positive weight")
        self.n = w.size
        size = 1 << max(0, (self.n - 1).bit_length())
        tree = np.zeros(2 * size)
        tree[size : size + self.n] = w
        for i in range(size - 1, 0, -1):
            tree[i] = tree[2 * i] + tree[2 * i + 1]
        self.size = size
        self.tree = tree
        self.tree.setflags(write=False)

    @property
    def total(self):
        return float(self.tree[1])

    @property
    def weights(self):
        return self.tree[self.size : self.size + self.n]

    def sample(self, rng, size=None):
        """Draw leaf indices with probability proportional to their weight."""
        shape = () if size is None else size
        u = rng.random(shape) * self.total
        node = np.ones(np.shape(u), dtype=np.int64)
        while self.size > 1 and node.max(initial=0) < self.size:
            left = self.tree[2 * node]
            go_right = (u >= left) & (self.tree[2 * node + 1] > 0)
            u = np.where(go_right, u - left, u)
            node = 2 * node + go_right
        out = node - self.size
        return int(out) if size is None else out


def build_sampler(scores):
    tau = scores.tau if isinstance(scores, LeverageScores) else scores
    return SamplerTree(tau)


@dataclass(frozen=True, eq=False)
class RowSamplingMatrix:
    n: int
    row_indices: np.ndarray = field(repr=False)
    scales: np.ndarray = field(repr=False)
    probs: np.ndarray = field(repr=False)

    def __len__(self):
        return self.row_indices.size

    def apply(self, A):
        """``S @ A`` for a matrix or vector ``A`` with ``n`` rows."""
        A = np.asarray(A, dtype=np.float64)
        if A.shape[0] != self.n:
            raise ValueError(f"expected {self.n} rows, got {A.shape[0]}")
        s = self.scales if A.ndim == 1 else self.scales[:, None]
        return A[self.row_indices] * s

    def dense(self):
        S = np.zeros((len(self), self.n))
        S[np.arange(len(self)), self.row_indices] = self.scales
        return S


def sampling_probabilities(scores, d, eps, c=None):
    c = constants.C_LEV if c is None else c
    u = scores.tau if isinstance(scores, LeverageScores) else np.asarray(scores, dtype=np.float64)
    return np.minimum(1.0, eps**-2 * u * c * math.log(max(d, 2)))


def sampling_matrix(A, eps, seed, scores=None, c=None):
    """Independent Bernoulli leverage-score row sampling.

    Row ``i`` is kept with probability ``p_i = min(1, eps^-2 u_i c ln d)`` and
    scaled by ``1/sqrt(p_i)``.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    A = np.asarray(A, dtype=np.float64)
    if scores is None:
        scores = compute_leverage_scores(A)
    p = sampling_probabilities(scores, A.shape[1], eps, c)
    rng = as_generator(seed)
    keep = rng.random(p.size) < p
    rows = np.flatnonzero(keep)
    return RowSamplingMatrix(A.shape[0], rows, 1.0 / np.sqrt(p[rows]), p[rows])


def fixed_size_sample(sampler, m, rng):
    """``m`` with-replacement draws from the tree, scaled as ``1/sqrt(m p_i)``."""
    idx = sampler.sample(rng, m)
    p = sampler.weights[idx] / sampler.total
    return RowSamplingMatrix(sampler.n, idx, 1.0 / np.sqrt(m * p), p)


def embedding_distortion(S, A):
    """Exact ``max_x | ||SAx||^2 / ||Ax||^2 - 1 |`` over the column space of ``A``."""
    A = np.asarray(A, dtype=np.float64)
    U, s, _ = np.linalg.svd(A, full_matrices=False)
    U = U[:, s > _rank_tol(s, A.shape)]
    ev = np.linalg.eigvalsh(S.apply(U).T @ S.apply(U))
    return float(max(abs(ev[0] - 1), abs(ev[-1] - 1)))
