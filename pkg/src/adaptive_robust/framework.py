"""Replica wrapper that answers adaptive queries through a private median.

Any randomized structure whose ``answer`` is correct with probability 3/4
on a fixed query can be wrapped. ``r`` replicas are built from independent
seed substreams; each query is sent to ``k`` replicas sampled with
replacement and their answers are combined by an (eps_med, 0)-DP median.
"""

from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .dp import framework_params, private_median
from .rng import child_seed, substream


class BudgetExhaustedError(RuntimeError):
    """Raised on the query after the last one the wrapper was built for."""


@dataclass
class Transcript:
    entries: list = field(default_factory=list)

    def __len__(self):
        return len(self.entries)

    def append(self, query, response):
        self.entries.append((query, float(response)))

    @property
    def responses(self):
        return np.array([r for _, r in self.entries])


def _build_one(factory, data, seed):
    build = getattr(factory, "build", factory)
    return build(data, seed)


class RobustWrapper:
    """``r`` replicas, a ``k``-subsample per query, and a query budget ``Q``.

    Raw replica answers are never stored or returned.
    """

    def __init__(self, replicas, params, grid, seed):
        self._replicas = list(replicas)
        self.params = params
        self.grid = grid
        self.seed = seed
        self.queries_used = 0
        self.transcript = Transcript()
        self._rng = substream(seed, 1)

    @property
    def r(self):
        return len(self._replicas)

    @property
    def remaining(self):
        return self.params.Q - self.queries_used

    def replica_seeds(self):
        return [child_seed(self.seed, 0, j) for j in range(self.r)]

    def query(self, q):
        if self.queries_used >= self.params.Q:
            raise BudgetExhaustedError(f"query budget of {self.params.Q} exhausted")
        idx = self._rng.integers(0, self.r, size=self.params.k)
        answers = np.array([self._replicas[j].answer(q) for j in idx], dtype=np.float64)
        out = private_median(answers, self.grid, self.params.eps_med, self._rng)
        self.transcript.append(q, out)
        self.queries_used += 1
        return out


def robust_build(
    factory: Callable[[Any, int], Any],
    data,
    Q: int,
    n: int,
    grid,
    seed: int,
    params=None,
):
    """Build a :class:`RobustWrapper` over ``factory(data, seed)`` replicas.

    ``params`` overrides :func:`framework_params` (used for scaled-down runs).
    """
    if Q < 1:
        raise ValueError("Q must be at least 1")
    if params is None:
        params = framework_params(Q, n)
    replicas = [_build_one(factory, data, child_seed(seed, 0, j)) for j in range(params.r)]
    return RobustWrapper(replicas, params, grid, seed)


def robust_query(w: RobustWrapper, query):
    return w.query(query)
