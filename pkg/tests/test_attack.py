import numpy as np
import pytest

from adaptive_robust.attack import (
    CSV_COLUMNS,
    AttackConfig,
    Baseline1,
    Baseline2,
    ExactNorm,
    IterationRecord,
    NaiveJl,
    RegressionAdversary,
    attack_sign,
    band_fraction,
    generate_norm_attack,
    max_deviation,
    regression_instance,
    regression_trial,
    run_attack,
    run_norm_attack,
)
from adaptive_robust.regression import exact_cost_oracle


class TestConfig:
    def test_defaults(self):
        c = AttackConfig()
        assert (c.d, c.m, c.r, c.k, c.num_queries) == (1024, 128, 64, 5, 2000)
        f = AttackConfig.full()
        assert (f.d, f.m, f.r, f.k, f.num_queries) == (4096, 250, 200, 5, 5000)

    def test_validation(self):
        with pytest.raises(ValueError, match="scenario"):
            AttackConfig(scenario="sketch")
        with pytest.raises(ValueError):
            AttackConfig(k=0)

    def test_row(self):
        rec = IterationRecord(3, 1.0, {"naive": 0.5, "robust": 1.1})
        assert rec.row() == [3, 1.0, 0.5, 1.1, None, None]
        assert len(CSV_COLUMNS) == 6


class TestNormAttack:
    def test_identity_sign(self):
        z = np.array([0.3, 1.0])
        # ||z - e1|| <= ||z + e1|| whenever z_1 >= 0
        assert attack_sign(None, z) == 1
        assert attack_sign(None, -z) == 0

    def test_queries_are_unit(self, rng):
        qs = list(generate_norm_attack(None, rng, 16, 10))
        np.testing.assert_allclose([np.linalg.norm(q) for q in qs], 1.0)

    def test_breaks_naive(self):
        cfg = AttackConfig(d=256, m=32, num_queries=300, baselines=False, seed=3)
        recs = run_norm_attack(cfg, [NaiveJl(256, 32, 1), ExactNorm()])
        assert max_deviation(recs, "naive") >= 0.2
        assert max_deviation(recs, "exact") == pytest.approx(0.0, abs=1e-12)
        assert recs[-1].seconds["naive"] > 0

    def test_baselines(self, rng):
        q = rng.standard_normal(64)
        q /= np.linalg.norm(q)
        assert Baseline1(64, 64, 5, 5, 0).answer(q) == pytest.approx(1.0, rel=0.3)
        q = rng.standard_normal(512)
        q /= np.linalg.norm(q)
        assert Baseline2(512, 16, 32, 20, 0).answer(q) == pytest.approx(1.0, rel=0.15)

    def test_full_run_columns(self):
        recs = run_attack(AttackConfig(d=64, m=16, r=8, k=3, num_queries=5, seed=1))
        assert set(recs[0].estimates) == {"naive", "robust", "baseline1", "baseline2"}
        assert 0.0 <= band_fraction(recs, "robust", 0.85, 1.15) <= 1.0

    def test_custom_estimators_only_for_norm(self):
        with pytest.raises(ValueError):
            run_attack(AttackConfig(scenario="kde", num_queries=1), [ExactNorm()])


class TestRegressionAttack:
    def test_adversary_truth_and_sparsity(self):
        A, b = regression_instance(AttackConfig(reg_n=40, reg_d=4))
        adv = RegressionAdversary(A, b, np.random.default_rng(0))
        adv.start(0.0)
        for t in range(10):
            upd = adv.next_update()
            assert len(upd) <= 4
            adv.observe(-float(t))  # always lowering: flips every round
            assert adv.truth == pytest.approx(exact_cost_oracle(A, adv.b), rel=1e-8)

    def test_naive_trial_shapes(self):
        A, b = regression_instance(AttackConfig())
        est, tru = regression_trial(A, b, 0.25, 5, 10, seed=1, robust=False)
        assert est.shape == tru.shape == (10,)
        assert np.all(tru > 0)


@pytest.mark.parametrize("scenario", ["regression", "distance", "kde"])
def test_other_scenarios_run(scenario):
    cfg = AttackConfig(scenario=scenario, num_queries=3, d=32, m=16, kde_n=200, seed=2)
    recs = run_attack(cfg)
    assert len(recs) == 3
    assert all(np.isfinite(r.estimates["robust"]) for r in recs)
