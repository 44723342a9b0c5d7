"""Adaptive adversaries and head-to-head runs of naive, baseline and robust estimators.

The norm scenario follows the classic sign attack: with ``Pi`` the attacked
Gaussian map, the adversary keeps

    s_i = s_{i-1} + (-1)^{W_i} z_i,   W_i = 1[ ||Pi(z_i - e_1)|| <= ||Pi(z_i + e_1)|| ]

and queries ``q_i = s_i / ||s_i||``. Every query has norm exactly one, so
errors are measured against 1.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .dp import FrameworkParams, OutputGrid
from .framework import robust_build
from .kde import Kernel, kde_build, kde_exact, robust_kde_build
from .regression import ExactMaintainer, RobustRegression, SparseUpdate, reg_init
from .rng import DEFAULT_SEED, child_seed, substream
from .transforms import FastJlMap, GaussianJlMap, SrhtStack, TruncationParams, ret_norm

SCENARIOS = ("norm", "regression", "distance", "kde")
CSV_COLUMNS = ("iteration", "truth", "naive", "robust", "baseline1", "baseline2")


@dataclass(frozen=True)
class AttackConfig:
    d: int = 1024
    m: int = 128
    r: int = 64
    k: int = 5
    num_queries: int = 2000
    seed: int = DEFAULT_SEED
    scenario: str = "norm"
    eps_med: float = 1.0
    baselines: bool = True
    # regression scenario
    reg_n: int = 200
    reg_d: int = 20
    K: int = 5
    eps: float = 0.25
    # kde scenario
    kde_n: int = 1000
    kde_d: int = 2
    tau: float = 0.05
    kernel: Kernel = Kernel()

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; choose from {', '.join(SCENARIOS)}")
        for name in ("d", "m", "r", "k"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.num_queries < 0:
            raise ValueError("num_queries must be non-negative")

    @classmethod
    def full(cls, **kw):
        """The reference configuration: d=4096, m=250, r=200, k=5, 5000 queries."""
        return cls(**{"d": 4096, "m": 250, "r": 200, "k": 5, "num_queries": 5000, **kw})

    def params(self):
        """Replica parameters of the norm scenario; other scenarios use :func:`framework_params`."""
        return FrameworkParams(self.r, self.k, self.eps_med, max(self.num_queries, 1))


@dataclass
class IterationRecord:
    iteration: int
    truth: float
    estimates: dict = field(default_factory=dict)
    seconds: dict = field(default_factory=dict)

    def row(self):
        return [self.iteration, self.truth] + [self.estimates.get(c) for c in CSV_COLUMNS[2:]]


# -- estimators ---------------------------------------------------------------


class ExactNorm:
    label = "exact"

    def answer(self, q):
        return float(np.linalg.norm(q))


class NaiveJl:
    """A single Gaussian JL map; the attack is aimed at its randomness."""

    label = "naive"

    def __init__(self, d, m, seed):
        self.map = GaussianJlMap.create(m, d, seed)

    def apply(self, x):
        return self.map.apply(x)

    def answer(self, q):
        return float(np.linalg.norm(self.map.apply(q)))


class _FastJlNorm:
    def __init__(self, m, d, seed):
        self.map = FastJlMap.create(m, d, seed)

    def answer(self, q):
        return float(np.linalg.norm(self.map.apply(q)))


def norm_grid():
    return OutputGrid.geometric(1e-3, 10.0, 1.01)


class RobustNorm:
    """``r`` fast JL maps behind the private-median wrapper."""

    label = "robust"

    def __init__(self, d, m, params, seed, grid=None):
        self.wrapper = robust_build(
            lambda _, s: _FastJlNorm(m, d, s), None, params.Q, 1, grid or norm_grid(), seed, params=params
        )

    def answer(self, q):
        return self.wrapper.query(q)


class Baseline1:
    """Simplified: plain median over ``k`` of ``r`` Gaussian JL maps."""

    label = "baseline1"

    def __init__(self, d, m, r, k, seed):
        self.maps = [GaussianJlMap.create(m, d, child_seed(seed, 0, j)) for j in range(r)]
        self.k = k
        self._rng = substream(seed, 1)

    def answer(self, q):
        if self.k == len(self.maps):
            js = np.arange(self.k)
        else:
            js = self._rng.integers(0, len(self.maps), size=self.k)
        return float(np.median([np.linalg.norm(self.maps[j].apply(q)) for j in js]))


class Baseline2:
    """Simplified: ``r`` SRHT blocks, ``m k`` sampled output coordinates, truncated mean."""

    label = "baseline2"

    def __init__(self, d, m, r, k, seed, eps=0.25):
        self.h = SrhtStack.create(r, d, seed)
        self.n_coords = m * k
        self.trunc = TruncationParams.for_eps(eps)
        self._rng = substream(seed, 1)

    def answer(self, q):
        v = self.h.apply(q)
        idx = self._rng.integers(0, v.size, size=self.n_coords)
        return ret_norm(v[idx], self.trunc)


# -- norm attack --------------------------------------------------------------


def attack_sign(pi, z):
    """``W`` for probe ``z``: 1 when ``||Pi(z - e1)|| <= ||Pi(z + e1)||``."""
    e1 = np.zeros_like(z)
    e1[0] = 1.0
    apply = pi.apply if hasattr(pi, "apply") else (pi if callable(pi) else (lambda x: x))
    return int(np.linalg.norm(apply(z - e1)) <= np.linalg.norm(apply(z + e1)))


def generate_norm_attack(pi, rng, d, num_queries):
    """Yield unit queries ``q_i``; ``pi=None`` uses the identity map."""
    s = np.zeros(d)
    for _ in range(num_queries):
        z = rng.standard_normal(d)
        s += -z if attack_sign(pi, z) else z
        yield s / np.linalg.norm(s)


def default_estimators(config):
    seed = config.seed
    ests = [NaiveJl(config.d, config.m, child_seed(seed, 10)), RobustNorm(config.d, config.m, config.params(), child_seed(seed, 11))]
    if config.baselines:
        ests.append(Baseline1(config.d, config.m, config.r, config.k, child_seed(seed, 12)))
        ests.append(Baseline2(config.d, config.m, config.r, config.k, child_seed(seed, 13)))
    return ests


def _timed(records_times, label, fn, q):
    t0 = time.perf_counter()
    out = fn(q)
    records_times[label] = records_times.get(label, 0.0) + time.perf_counter() - t0
    return out


def run_norm_attack(config, estimators=None, target=None):
    if estimators is None:
        estimators = default_estimators(config)
    if target is None:
        target = next((e for e in estimators if getattr(e, "label", "") == "naive"), None)
    pi = getattr(target, "map", None) or target
    rng = substream(config.seed, 20)
    totals = {}
    out = []
    for i, q in enumerate(generate_norm_attack(pi, rng, config.d, config.num_queries), 1):
        rec = IterationRecord(i, 1.0)
        for e in estimators:
            rec.estimates[e.label] = float(_timed(totals, e.label, e.answer, q))
        rec.seconds = dict(totals)
        out.append(rec)
    return out


# -- regression attack ---------------------------------------------------------


class RegressionAdversary:
    """Sign-greedy probe accumulation against a cost tracker.

    Each round adds a random two-entry probe ``z`` to the label. If the
    previous probe lowered ``estimate - truth``, it is flipped (``b -> b - 2z``)
    in the same round, so the signed probes line up with the tracker's
    error. Every update touches at most four entries.
    """

    def __init__(self, A, b1, rng, width=2, scale=1.0):
        self.exact = ExactMaintainer(A, b1)
        self.b = np.array(b1, dtype=np.float64)
        self.rng = rng
        self.width = width
        self.scale = scale
        self._prev = None
        self._last_err = None
        self._inc = 0.0
        self.truth = self.exact.cost

    def start(self, estimate):
        self._last_err = estimate - self.truth

    def next_update(self):
        entries = {}
        if self._prev is not None and self._inc < 0:
            for i, v in self._prev.items():
                entries[i] = self.b[i] - 2 * v
        free = np.setdiff1d(np.arange(self.b.size), np.fromiter(entries, dtype=np.int64, count=len(entries)))
        idx = self.rng.choice(free, self.width, replace=False)
        z = {int(i): self.scale * float(self.rng.standard_normal()) for i in idx}
        for i, v in z.items():
            entries[i] = self.b[i] + v
        self._prev = z
        upd = SparseUpdate.from_pairs(entries.items())
        self.b[list(entries)] = list(entries.values())
        self.truth = self.exact.update(upd)
        return upd

    def observe(self, estimate):
        err = estimate - self.truth
        self._inc = err - self._last_err
        self._last_err = err


def regression_instance(config):
    rng = substream(config.seed, 30)
    A = rng.standard_normal((config.reg_n, config.reg_d))
    b1 = rng.standard_normal(config.reg_n)
    return A, b1


def regression_trial(A, b1, eps, K, rounds, seed, robust):
    """Attack one tracker with its own responses; return (estimates, truths)."""
    if robust:
        tracker = RobustRegression(A, b1, eps, K, seed=child_seed(seed, 1))
        first = tracker.step(SparseUpdate())
    else:
        tracker = reg_init(A, b1, eps, None, child_seed(seed, 1))
        first = tracker.estimate
    step = tracker.step if robust else tracker.update
    adv = RegressionAdversary(A, b1, substream(seed, 2))
    adv.start(first)
    est, tru = [], []
    for _ in range(rounds):
        upd = adv.next_update()
        e = step(upd)
        adv.observe(e)
        est.append(e)
        tru.append(adv.truth)
    return np.array(est), np.array(tru)


def run_regression_attack(config):
    """Stream driven by the unprotected sketch; the robust tracker sees the same updates."""
    A, b1 = regression_instance(config)
    naive = reg_init(A, b1, config.eps, None, child_seed(config.seed, 31))
    robust = RobustRegression(A, b1, config.eps, config.K, seed=child_seed(config.seed, 32))
    adv = RegressionAdversary(A, b1, substream(config.seed, 33))
    adv.start(naive.estimate)
    totals = {}
    out = []
    for i in range(1, config.num_queries + 1):
        upd = adv.next_update()
        rec = IterationRecord(i, adv.truth)
        rec.estimates["naive"] = _timed(totals, "naive", naive.update, upd)
        rec.estimates["robust"] = float(_timed(totals, "robust", robust.step, upd))
        adv.observe(rec.estimates["naive"])
        rec.seconds = dict(totals)
        out.append(rec)
    return out


# -- distance attack ------------------------------------------------------------


def run_distance_attack(config):
    """The norm attack routed through distance queries to the origin."""
    from .distance import ade_build

    X = np.zeros((1, config.d))
    naive = NaiveJl(config.d, config.m, child_seed(config.seed, 40))
    ds = ade_build(X, config.num_queries, 0.25, child_seed(config.seed, 41), grid=norm_grid())
    rng = substream(config.seed, 42)
    totals = {}
    out = []
    for i, q in enumerate(generate_norm_attack(naive.map, rng, config.d, config.num_queries), 1):
        rec = IterationRecord(i, 1.0)
        rec.estimates["naive"] = _timed(totals, "naive", naive.answer, q)
        rec.estimates["robust"] = float(_timed(totals, "robust", lambda y: ds.query(y, 0), q))
        rec.seconds = dict(totals)
        out.append(rec)
    return out


# -- kde attack ---------------------------------------------------------------------


class KdeAdversary:
    """Hill-climbs on relative error among queries that meet the promise."""

    def __init__(self, X, kernel, tau, rng, step=0.3):
        self.X = X
        self.kernel = kernel
        self.tau = tau
        self.rng = rng
        self.step = step
        self.best = X.mean(axis=0)
        self.best_err = -1.0
        self.q = self.best

    def next_query(self):
        self.q = self.best + self.step * self.rng.standard_normal(self.best.size)
        self.truth = kde_exact(self.X, self.q, self.kernel)
        return self.q

    def observe(self, estimate):
        if self.truth >= self.tau:
            err = abs(estimate / self.truth - 1)
            if err > self.best_err:
                self.best, self.best_err = self.q, err


def run_kde_attack(config, eps=0.3):
    rng = substream(config.seed, 50)
    X = rng.standard_normal((config.kde_n, config.kde_d))
    naive = kde_build(X, eps, config.tau, 0.25, config.kernel, child_seed(config.seed, 51))
    robust = robust_kde_build(X, config.num_queries, eps, config.tau, child_seed(config.seed, 52), config.kernel)
    adv = KdeAdversary(X, config.kernel, config.tau, substream(config.seed, 53))
    totals = {}
    out = []
    for i in range(1, config.num_queries + 1):
        q = adv.next_query()
        rec = IterationRecord(i, adv.truth)
        rec.estimates["naive"] = _timed(totals, "naive", naive.answer, q)
        rec.estimates["robust"] = float(_timed(totals, "robust", robust.query, q))
        adv.observe(rec.estimates["naive"])
        rec.seconds = dict(totals)
        out.append(rec)
    return out


def run_attack(config, estimators=None):
    if config.scenario == "norm":
        return run_norm_attack(config, estimators)
    if estimators is not None:
        raise ValueError("custom estimators are only supported in the norm scenario")
    return {"regression": run_regression_attack, "distance": run_distance_attack, "kde": run_kde_attack}[config.scenario](config)


def max_deviation(records, label):
    return max((abs(r.estimates[label] - r.truth) for r in records), default=0.0)


def band_fraction(records, label, lo, hi):
    if not records:
        return 1.0
    return float(np.mean([lo <= r.estimates[label] / r.truth <= hi for r in records]))
