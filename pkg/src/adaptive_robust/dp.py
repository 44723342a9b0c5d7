"""Private median over a geometric output grid, and privacy calculators."""

import math
from dataclasses import dataclass, field

import numpy as np

from . import constants


@dataclass(frozen=True)
class PrivacyParams:
    epsilon: float
    delta: float

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and math.isfinite(self.delta)):
            raise ValueError("privacy parameters must be finite")
        if self.epsilon < 0 or not 0 <= self.delta < 1:
            raise ValueError(f"invalid privacy parameters ({self.epsilon}, {self.delta})")


@dataclass(frozen=True, eq=False)
class OutputGrid:
    """``{0} U {lo * ratio^j : j = 0..J}`` with ``lo * ratio^J >= hi``."""

    lo: float
    hi: float
    ratio: float
    points: np.ndarray = field(repr=False)

    @classmethod
    def geometric(cls, lo, hi, ratio):
        if not (0 < lo < hi):
            raise ValueError(f"need 0 < lo < hi, got lo={lo}, hi={hi}")
        if not ratio > 1:
            raise ValueError(f"ratio must exceed 1, got {ratio}")
        n_steps = math.ceil(math.log(hi / lo) / math.log(ratio) - 1e-12)
        pts = np.concatenate(([0.0], lo * ratio ** np.arange(n_steps + 1)))
        pts.setflags(write=False)
        return cls(float(lo), float(hi), float(ratio), pts)

    def __len__(self):
        return self.points.size

    @property
    def top(self):
        return float(self.points[-1])

    def snap(self, values):
        """Map values to grid indices: below ``lo`` -> the 0 point, else nearest in log scale."""
        v = np.clip(np.asarray(values, dtype=np.float64), 0.0, self.top)
        idx = np.zeros(v.shape, dtype=np.int64)
        pos = v >= self.lo
        if np.any(pos):
            j = np.rint(np.log(v[pos] / self.lo) / math.log(self.ratio)).astype(np.int64)
            idx[pos] = 1 + np.clip(j, 0, self.points.size - 2)
        return idx

    def step_bounds(self, a, b):
        """Interval ``[a / ratio, b * ratio]`` used for aggregation checks."""
        return a / self.ratio, b * self.ratio


def median_distribution(values, grid, epsilon):
    """Exponential-mechanism output probabilities over ``grid.points``.

    Values are clamped to ``[0, top]`` and snapped to grid points; the
    utility of point ``x`` is its depth ``min(#{s <= x}, #{s >= x})``,
    which changes by at most one when a single value is replaced.
    Probabilities are proportional to ``exp(epsilon * depth / 2)``.
    """
    vals = np.asarray(values, dtype=np.float64).ravel()
    if vals.size == 0:
        raise ValueError("private median of an empty multiset")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if not np.all(np.isfinite(vals)):
        raise ValueError("values must be finite")
    snapped = np.sort(grid.snap(vals))
    pos = np.arange(len(grid))
    le = np.searchsorted(snapped, pos, side="right")
    ge = snapped.size - np.searchsorted(snapped, pos, side="left")
    depth = np.minimum(le, ge).astype(np.float64)
    logits = 0.5 * epsilon * depth
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def private_median(values, grid, epsilon, rng):
    """(epsilon, 0)-DP approximate median; returns a grid point."""
    p = median_distribution(values, grid, epsilon)
    # inverse-CDF draw keeps exactly one uniform per call
    u = rng.random()
    j = int(np.searchsorted(np.cumsum(p), u, side="right"))
    return float(grid.points[min(j, p.size - 1)])


def advanced_composition(k, eps, delta, delta_prime):
    """Privacy of ``k`` adaptive uses of an (eps, delta)-DP mechanism."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if not (0 < eps <= 1 and 0 < delta_prime <= 1):
        raise ValueError("eps and delta_prime must lie in (0, 1]")
    if not 0 <= delta <= 1:
        raise ValueError("delta must lie in [0, 1]")
    eps_total = math.sqrt(2 * k * math.log(1 / delta_prime)) * eps + 2 * k * eps**2
    return PrivacyParams(eps_total, min(k * delta + delta_prime, math.nextafter(1.0, 0.0)))


def subsampling_amplification(eps, delta, k, n):
    """Privacy after running an (eps, delta)-DP mechanism on ``k`` of ``n`` rows."""
    if eps > 1 or eps < 0:
        raise ValueError("amplification needs 0 <= eps <= 1")
    if k < 0 or n < 1:
        raise ValueError("need k >= 0 and n >= 1")
    if k > n / 2:
        raise ValueError(f"subsample size {k} exceeds half the database size {n}")
    e = 6 * eps * k / n
    return PrivacyParams(e, math.exp(e) * 4 * k * delta / n)


@dataclass(frozen=True)
class FrameworkParams:
    r: int
    k: int
    eps_med: float
    Q: int
    n: int = 1
    per_query: PrivacyParams = None
    total: PrivacyParams = None


def log_nq(n, Q):
    return max(math.log(n * Q), 1.0)


def compose_budget(r, k, Q, eps_med, delta_prime):
    """Per-query and Q-query privacy of private medians over k-of-r subsamples.

    The total is the tighter of basic composition (``Q * eps``) and
    advanced composition.
    """
    per = subsampling_amplification(eps_med, 0.0, k, r)
    if Q == 0 or per.epsilon == 0:
        return per, PrivacyParams(0.0, 0.0)
    basic = Q * per.epsilon
    if per.epsilon <= 1:
        adv = advanced_composition(Q, per.epsilon, per.delta, delta_prime)
        if adv.epsilon < basic:
            return per, adv
    return per, PrivacyParams(basic, min(Q * per.delta, 0.5))


def framework_params(Q, n, c_r=None, c_k=None, eps_med=None):
    """Replica count, subsample size and the privacy budget they buy."""
    if Q < 1 or n < 1:
        raise ValueError("need Q >= 1 and n >= 1")
    c_r = constants.C_R if c_r is None else c_r
    c_k = constants.C_K if c_k is None else c_k
    eps_med = constants.EPS_MED if eps_med is None else eps_med
    L = log_nq(n, Q)
    r = math.ceil(c_r * math.sqrt(Q) * L**2)
    k = math.ceil(c_k * L)
    r = max(r, 2 * k)
    delta_prime = min(1.0, 1.0 / (n * Q) ** 2)
    per, total = compose_budget(r, k, Q, eps_med, delta_prime)
    return FrameworkParams(r, k, eps_med, Q, n, per, total)
