import numpy as np
import pytest

from adaptive_robust.dp import FrameworkParams, OutputGrid
from adaptive_robust.framework import BudgetExhaustedError, Transcript, robust_build, robust_query
from adaptive_robust.rng import child_seed


class Constant:
    """Replica whose answer is its seed-dependent constant."""

    def __init__(self, data, seed):
        self.value = data + (seed % 7) * 0.001

    def answer(self, q):
        return self.value


class Factory:
    def build(self, data, seed):
        return Constant(data, seed)


GRID = OutputGrid.geometric(0.01, 100.0, 1.01)


class TestRobustWrapper:
    def test_answers_near_common_value(self):
        w = robust_build(Constant, 5.0, 20, 1, GRID, seed=3, params=FrameworkParams(30, 25, 2.0, 20))
        out = [w.query(None) for _ in range(20)]
        np.testing.assert_allclose(out, 5.0, rtol=0.05)

    def test_budget(self):
        w = robust_build(Factory(), 1.0, 2, 1, GRID, seed=0, params=FrameworkParams(4, 2, 1.0, 2))
        w.query(0)
        assert w.remaining == 1
        robust_query(w, 1)
        with pytest.raises(BudgetExhaustedError):
            w.query(2)
        assert len(w.transcript) == 2
        assert w.transcript.responses.shape == (2,)

    def test_replica_seeds(self):
        seen = []

        def factory(data, seed):
            seen.append(seed)
            return Constant(data, seed)

        w = robust_build(factory, 1.0, 3, 1, GRID, seed=11, params=FrameworkParams(6, 2, 1.0, 3))
        assert seen == [child_seed(11, 0, j) for j in range(6)]
        assert w.replica_seeds() == seen
        assert w.r == 6

    def test_deterministic(self):
        def run():
            w = robust_build(Constant, 2.0, 5, 1, GRID, seed=8, params=FrameworkParams(10, 4, 1.0, 5))
            return [w.query(i) for i in range(5)]

        assert run() == run()

    def test_default_params_used(self):
        # framework_params(1, 1): r = max(ceil(44), 2 * 10) = 44
        w = robust_build(Constant, 1.0, 1, 1, GRID, seed=0)
        assert w.r == 44 and w.params.k == 10

    def test_q_positive(self):
        with pytest.raises(ValueError):
            robust_build(Constant, 1.0, 0, 1, GRID, seed=0)


def test_transcript_append():
    t = Transcript()
    t.append("q", np.float32(1.5))
    assert t.entries == [("q", 1.5)]
