import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adaptive_robust.dp import FrameworkParams
from adaptive_robust.kde import (
    CapacityError,
    Kernel,
    kde_build,
    kde_exact,
    kde_grid,
    kde_net_build,
    kde_net_query,
    kde_query,
    lattice_net,
    net_size_bound,
    robust_kde_build,
    sample_size,
)


class TestKernel:
    def test_values(self):
        assert Kernel("exp", 2.0)([0.0], [1.0]) == pytest.approx(2 * math.exp(-1))
        assert Kernel("rational", 0.5)([0.0], [1.0]) == pytest.approx(0.5 / 1.5)

    def test_constants(self):
        assert (Kernel("exp", 2.0).lipschitz, Kernel("exp", 2.0).k_max) == (2.0, 2.0)
        assert (Kernel("rational", 0.5).lipschitz, Kernel("rational", 0.5).k_max) == (2.0, 1.0)

    def test_rho(self):
        # [DERIVED] ln(3 C / tau) = ln 15
        assert Kernel("exp").rho(0.2) == pytest.approx(2.70805, abs=5e-6)
        k = Kernel("rational", 2.0)
        assert k.of_distance(k.rho(0.3)) == pytest.approx(0.1)

    def test_unknown(self):
        with pytest.raises(ValueError, match="exp|rational"):
            Kernel("gaussian")
        with pytest.raises(ValueError):
            Kernel("exp", 0.0)

    @given(st.sampled_from(["exp", "rational"]), st.floats(0.1, 5.0), st.floats(0.0, 20.0), st.floats(0.0, 20.0))
    def test_lipschitz_in_distance(self, kind, C, s, t):
        k = Kernel(kind, C)
        assert abs(float(k.of_distance(s) - k.of_distance(t))) <= k.lipschitz * abs(s - t) + 1e-12


class TestSampleEstimator:
    def test_sample_size(self):
        # [DERIVED] ceil(ln 100 / (0.05 * 0.09))
        assert sample_size(0.3, 0.05, 0.01, Kernel()) == 1024

    def test_accuracy(self, rng):
        X = rng.standard_normal((500, 2))
        e = kde_build(X, 0.2, 0.05, 0.01, Kernel(), 3)
        q = np.zeros(2)
        r = kde_query(e, q)
        assert r.value == pytest.approx(kde_exact(X, q, Kernel()), rel=0.2)
        assert r.promise_met

    def test_index_dtype(self, rng):
        e = kde_build(rng.standard_normal((100, 1)), 0.3, 0.1, 0.1, Kernel(), 0)
        assert e.sample_idx.dtype == np.int16

    @pytest.mark.parametrize("kw", [dict(eps=1.0), dict(tau=2.0), dict(delta=0.0)])
    def test_validation(self, kw, rng):
        args = dict(eps=0.3, tau=0.1, delta=0.1) | kw
        with pytest.raises(ValueError):
            kde_build(rng.standard_normal((5, 1)), args["eps"], args["tau"], args["delta"], Kernel(), 0)

    def test_1d_input(self):
        assert kde_exact([0.0, 2.0], 1.0, Kernel()) == pytest.approx(math.exp(-1))


class TestRobust:
    def test_tracks_density(self, rng):
        X = rng.standard_normal((300, 2))
        w = robust_kde_build(X, 4, 0.3, 0.05, 1, params=FrameworkParams(120, 60, 1.0, 4))
        for _ in range(4):
            q = 0.5 * rng.standard_normal(2)
            assert w.query(q) == pytest.approx(kde_exact(X, q, Kernel()), rel=0.3)

    def test_grid(self):
        g = kde_grid(Kernel("exp", 2.0), 0.1, 0.3)
        assert g.lo == pytest.approx(1e-4) and g.top >= 4.0


class TestNet:
    def test_bound(self):
        # [DERIVED] 1 + 6 (1 + ln 15) / (0.3 * 0.2)
        assert net_size_bound(1.0, math.log(15), 1.0, 0.3, 0.2, 1) == pytest.approx(371.805, abs=5e-4)

    def test_1d_size(self):
        X = np.linspace(0, 1, 11)[:, None]
        w = kde_net_build(X, 0.3, 0.2, Kernel(), Delta=1.0, seed=0)
        # spacing 2 * 0.02 covering [0.5 - 3.728, 0.5 + 3.728]
        assert len(w.net) == 187
        assert len(w.net) <= w.size_bound
        assert w.net_radius == pytest.approx(0.02)

    @given(st.integers(1, 3), st.floats(0.5, 2.0), st.floats(0.1, 0.5))
    @settings(max_examples=15, deadline=None)
    def test_covering(self, d, R, r):
        net = lattice_net(np.zeros(d), R, r)
        pts = np.random.default_rng(0).standard_normal((200, d))
        pts *= (R * np.random.default_rng(1).random(200) ** (1 / d) / np.linalg.norm(pts, axis=1))[:, None]
        dist = np.min(np.linalg.norm(pts[:, None, :] - net[None], axis=2), axis=1)
        assert dist.max() <= r + 1e-12

    def test_capacity(self):
        with pytest.raises(CapacityError):
            lattice_net(np.zeros(6), 10.0, 0.01)
        with pytest.raises(CapacityError):
            kde_net_build(np.random.default_rng(0).standard_normal((5, 5)), 0.1, 0.01, Kernel())

    def test_rho_check(self):
        with pytest.raises(ValueError):
            kde_net_build(np.zeros((3, 1)), 0.3, 0.2, Kernel(), rho=0.1)

    def test_query(self):
        X = np.linspace(0, 1, 21)[:, None]
        w = kde_net_build(X, 0.3, 0.2, Kernel(), seed=1)
        r = kde_net_query(w, np.array([0.5]))
        assert r.value == pytest.approx(kde_exact(X, [0.5], Kernel()), rel=0.1)
