"""Dynamic least-squares cost under sparse label updates.

Three maintainers share the update format:

* :class:`RegressionSketch` -- leverage-score sample ``S``, Gaussian JL map
  ``G`` and ``M = G A (S A)^+``; outputs ``||M S b - G b||^2``.
* :class:`RobustRegression` -- epochs of ``Gamma`` independent sketches whose
  outputs are combined by a private median, rebuilt every ``T`` rounds.
* :class:`ExactMaintainer` -- deterministic SVD-based tracker.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import constants
from .dp import OutputGrid, PrivacyParams, advanced_composition, private_median
from .leverage import LeverageScores, compute_leverage_scores, sampling_matrix
from .rng import child_seed, substream
from .transforms import GaussianJlMap


class RankWarning(UserWarning):
    pass


def _check_shapes(A, b):
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible shapes A{A.shape} and b{b.shape}")
    return A, b


def exact_cost_oracle(A, b):
    """``min_x ||Ax - b||^2`` via a dense least-squares solve."""
    A, b = _check_shapes(A, b)
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    r = A @ x - b
    return float(r @ r)


@dataclass(frozen=True)
class SparseUpdate:
    """Absolute new values for at most ``K`` distinct label entries."""

    indices: tuple = ()
    values: tuple = ()

    @classmethod
    def from_pairs(cls, pairs, K=None):
        pairs = list(pairs)
        idx = tuple(int(i) for i, _ in pairs)
        vals = tuple(float(v) for _, v in pairs)
        if len(set(idx)) != len(idx):
            raise ValueError("update indices must be distinct")
        if K is not None and len(idx) > K:
            raise ValueError(f"update touches {len(idx)} entries, more than K={K}")
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("update values must be finite")
        return cls(idx, vals)

    def __len__(self):
        return len(self.indices)

    def pairs(self):
        return list(zip(self.indices, self.values))

    def check(self, n):
        for i in self.indices:
            if not 0 <= i < n:
                raise IndexError(f"update index {i} outside [0, {n})")


def _deltas(b, upd):
    """Validate ``upd`` against ``b``; return touched indices and deltas."""
    upd.check(b.size)
    if len(upd) == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    idx = np.fromiter(upd.indices, dtype=np.int64, count=len(upd))
    new = np.fromiter(upd.values, dtype=np.float64, count=len(upd))
    return idx, new - b[idx]


def jl_rows_for(n, eps, c=None):
    c = constants.C_G if c is None else c
    return max(1, math.ceil(c * eps**-2 * math.log(max(n, 2))))


def cg_pinv_rows(SA, R, tol=1e-12, max_iter=None):
    """Rows of ``R (SA)^+`` for full-column-rank ``SA`` by batched CG.

    Each row ``w`` solves ``(SA)^T (SA) y = R_j^T`` and returns
    ``SA y``; all right-hand sides run together.
    """
    SA = np.asarray(SA, dtype=np.float64)
    B = np.asarray(R, dtype=np.float64).T
    N = SA.T @ SA
    d = N.shape[0]
    if max_iter is None:
        max_iter = 10 * d
    Y = np.zeros_like(B)
    Res = B.copy()
    P = Res.copy()
    rs = np.einsum("ij,ij->j", Res, Res)
    stop = tol**2 * np.maximum(rs, np.finfo(float).tiny)
    for _ in range(max_iter):
        if np.all(rs <= stop):
            break
        NP = N @ P
        denom = np.einsum("ij,ij->j", P, NP)
        alpha = np.divide(rs, denom, out=np.zeros_like(rs), where=denom > 0)
        Y += P * alpha
        Res -= NP * alpha
        rs_new = np.einsum("ij,ij->j", Res, Res)
        beta = np.divide(rs_new, rs, out=np.zeros_like(rs), where=rs > 0)
        P = Res + P * beta
        rs = rs_new
    return (SA @ Y).T


class RegressionSketch:
    """Sketched cost tracker; holds ``Sb``, ``Gb`` and ``M Sb`` across updates."""

    def __init__(self, S, G, M, b):
        self.S = S
        self.G = G
        self.M = M
        self.b = np.array(b, dtype=np.float64)
        # position of each original row inside Sb, or -1
        self._slot = np.full(S.n, -1, dtype=np.int64)
        self._slot[S.row_indices] = np.arange(len(S))
        self.Sb = S.apply(self.b)
        self.Gb = G.apply(self.b)
        self.MSb = M @ self.Sb

    @property
    def n(self):
        return self.b.size

    @property
    def estimate(self):
        r = self.MSb - self.Gb
        return float(r @ r)

    def update(self, upd):
        idx, delta = _deltas(self.b, upd)
        if idx.size == 0:
            return self.estimate
        self.b[idx] += delta
        self.Gb += self.G.entries[:, idx] @ delta
        slots = self._slot[idx]
        hit = slots >= 0
        if np.any(hit):
            ds = delta[hit] * self.S.scales[slots[hit]]
            self.Sb[slots[hit]] += ds
            self.MSb += self.M[:, slots[hit]] @ ds
        return self.estimate

    def recompute(self):
        """From-scratch ``||M S b - G b||^2`` for the current label."""
        r = self.M @ self.S.apply(self.b) - self.G.apply(self.b)
        return float(r @ r)

    def n_reals(self):
        return self.M.size + self.G.entries.size + 2 * len(self.S) + self.Gb.size


def reg_init(A, b1, eps, sampler=None, seed=None, solver="direct", c_g=None):
    """Build a :class:`RegressionSketch` for ``A`` at initial label ``b1``.

    ``sampler`` is a precomputed :class:`LeverageScores` (shared across
    instances); the sample is drawn at accuracy ``eps/2``.
    """
    A, b1 = _check_shapes(A, b1)
    if not 0 < eps <= 0.25:
        raise ValueError(f"eps must lie in (0, 1/4], got {eps}")
    if solver not in ("direct", "cg"):
        raise ValueError(f"unknown solver {solver!r}")
    n, d = A.shape
    scores = sampler if isinstance(sampler, LeverageScores) else compute_leverage_scores(A)
    S = sampling_matrix(A, eps / 2, substream(seed, 0), scores=scores)
    G = GaussianJlMap.create(jl_rows_for(n, eps, c_g), n, child_seed(seed, 1))
    SA = S.apply(A)
    GA = G.apply(A.T).T
    sv = np.linalg.svd(SA, compute_uv=False)
    rank = int(np.sum(sv > sv.max(initial=0.0) * max(SA.shape) * np.finfo(float).eps))
    if rank < d:
        warnings.warn(f"SA has rank {rank} < {d}; using the pseudoinverse", RankWarning, stacklevel=2)
        solver = "direct"
    if solver == "direct":
        M = GA @ np.linalg.pinv(SA)
    else:
        M = cg_pinv_rows(SA, GA)
    return RegressionSketch(S, G, M, b1)


def reg_update(sk, upd):
    return sk.update(upd)


def recompute(sk):
    return sk.recompute()


@dataclass
class EpochState:
    T: int
    Gamma: int
    eps_round: float
    step_in_epoch: int = 0
    epoch: int = 0


def epoch_params(A, eps, K, c_t=None, c_gamma=None, c_med=None):
    """Epoch length ``T``, instance count ``Gamma`` and per-round median epsilon."""
    c_t = constants.C_T if c_t is None else c_t
    c_gamma = constants.C_GAMMA if c_gamma is None else c_gamma
    c_med = constants.C_MED_REG if c_med is None else c_med
    n = A.shape[0]
    nnz = int(np.count_nonzero(A))
    T = max(1, math.ceil(c_t * nnz / (eps**2 * K)))
    L = math.log(n * T) if n * T > 1 else 1.0
    Gamma = max(1, math.ceil(c_gamma * math.sqrt(T) * L))
    eps_round = c_med / (math.sqrt(T) * L)
    return EpochState(T, Gamma, eps_round)


def regression_grid(b1, eps):
    scale = max(float(np.dot(b1, b1)), 1.0)
    return OutputGrid.geometric(1e-6 * scale, 1e6 * scale, 1.0 + eps / 8)


class RobustRegression:
    """``Gamma`` sketches per epoch, private median per round."""

    def __init__(self, A, b1, eps, K, seed=None, grid=None, state=None, solver="direct"):
        self.A, b1 = _check_shapes(A, b1)
        self.eps = eps
        self.K = K
        self.seed = seed
        self.solver = solver
        self.scores = compute_leverage_scores(self.A)
        self.grid = regression_grid(b1, eps) if grid is None else grid
        self.state = epoch_params(self.A, eps, K) if state is None else state
        self.b = b1.copy()
        self._rng = substream(seed, 2)
        self.instances = []
        self._rebuild()

    def _rebuild(self):
        e = self.state.epoch
        self.instances = [
            reg_init(self.A, self.b, self.eps, self.scores, child_seed(self.seed, 3, e, g), self.solver)
            for g in range(self.state.Gamma)
        ]

    def privacy_per_epoch(self):
        """Advanced composition of ``T`` rounds at the per-round epsilon."""
        eps = self.state.eps_round
        T = self.state.T
        delta_prime = 1.0 / (self.A.shape[0] * T) ** 2
        if eps <= 1:
            return advanced_composition(T, eps, 0.0, delta_prime)
        return PrivacyParams(T * eps, 0.0)

    def step(self, upd):
        st = self.state
        if st.step_in_epoch == st.T:
            st.epoch += 1
            st.step_in_epoch = 0
            self._rebuild()
        idx, delta = _deltas(self.b, upd)
        self.b[idx] += delta
        outs = np.array([sk.update(upd) for sk in self.instances])
        st.step_in_epoch += 1
        return private_median(outs, self.grid, st.eps_round, self._rng)


def robust_reg_run(A, b1, eps, updates, K=5, seed=None, **kw):
    """Yield one private-median estimate per update; ``updates`` may be adaptive."""
    rr = RobustRegression(A, b1, eps, K, seed=seed, **kw)
    for upd in updates:
        yield rr.step(upd)


class ExactMaintainer:
    """Tracks ``x = A^+ b`` and ``U^T b`` in ``O(dK)`` per update.

    The cost is ``||Sigma V^T x - U^T b||^2 + ||b||^2 - ||U^T b||^2``; the
    last two terms are the part of ``b`` outside the column space.
    """

    def __init__(self, A, b1):
        A, b1 = _check_shapes(A, b1)
        U, s, Vt = np.linalg.svd(A, full_matrices=False)
        keep = s > s.max(initial=0.0) * max(A.shape) * np.finfo(float).eps
        self.U = U[:, keep]
        self.Sigma = s[keep]
        self.Vt = Vt[keep]
        self.A_pinv = (self.Vt.T / self.Sigma) @ self.U.T
        self.b = b1.copy()
        self.x_cur = self.A_pinv @ self.b
        self.Utb_cur = self.U.T @ self.b
        self.b_norm2 = float(self.b @ self.b)

    @property
    def cost(self):
        fit = self.Sigma * (self.Vt @ self.x_cur) - self.Utb_cur
        out = float(fit @ fit) + self.b_norm2 - float(self.Utb_cur @ self.Utb_cur)
        return max(out, 0.0)

    def update(self, upd):
        idx, delta = _deltas(self.b, upd)
        if idx.size:
            new = self.b[idx] + delta
            self.b_norm2 += float(new @ new - self.b[idx] @ self.b[idx])
            self.b[idx] = new
            self.x_cur += self.A_pinv[:, idx] @ delta
            self.Utb_cur += self.U[idx].T @ delta
        return self.cost


def exact_init(A, b1):
    return ExactMaintainer(A, b1)


def exact_update(m, upd):
    return m.update(upd)
