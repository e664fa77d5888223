"""
Monte Carlo oracle tests
"""
import math

import numpy as np
import pytest

from drbd.algebra import And, Csp, Hsp, NaryOr, Or, Simult, Var, Wsp, eval_expr, variables
from drbd.distributions import Exponential, PointMass, SpareSpec, UserDefined, Weibull
from drbd.errors import PreconditionError, SamplingError
from drbd.models import DrbdModel
from drbd.montecarlo import (
    McConfig,
    block_stream,
    chunk_bounds,
    compare,
    confidence,
    draw_batch,
    draw_sample,
    estimate_curve,
    estimate_rel,
    eval_batch,
    sample_at,
    spare_routes,
)
from drbd.reliability import rel_basic, rel_expr, rel_parallel, rel_series
from drbd.structures import NestedIndex, build_nested
from tests.conftest import wsp_exact


def bad_law(values):
    return UserDefined(
        cdf_fn=lambda t: 0.0,
        pdf_fn=lambda t: 0.0,
        sampler=lambda rng, n: np.full(n, values),
    )


class TestConfig:

    def test_validation(self):
        with pytest.raises(PreconditionError):
            McConfig(n=0, seed=1)
        with pytest.raises(PreconditionError):
            McConfig(n=10, seed=1, ci_level=0.9)
        with pytest.raises(PreconditionError):
            McConfig(n=10, seed=1, workers=0)

    def test_z(self):
        assert McConfig(n=10, seed=1, ci_level=0.95).z == pytest.approx(1.959964, abs=1e-6)
        assert McConfig(n=10, seed=1).z == pytest.approx(2.575829, abs=1e-6)

    def test_chunks_cover_samples(self):
        cfg = McConfig(n=20_000, seed=1, chunk=8192)
        chunks = chunk_bounds(cfg)
        assert chunks == [(0, 8192), (1, 8192), (2, 3616)]
        assert sum(m for _, m in chunks) == cfg.n


class TestSampling:
    """Test per-block draws"""

    def test_inverse_cdf(self):
        """Exponential draws are -ln(1 - U) / rate of the stream's uniforms"""
        model = DrbdModel({"A": Exponential(2.0)}, Var("A"))
        s = draw_sample(model, np.random.default_rng(7))
        u = np.random.default_rng(7).random(1)[0]
        assert s["A"] == pytest.approx(-math.log1p(-u) / 2.0, rel=1e-12)

    def test_cold_spare_dormant_never_fails(self):
        model = DrbdModel({"Y": Exponential(1.0), "S": SpareSpec.exponential(1.0, 0.0)}, Wsp(Var("Y"), "S"))
        s = draw_sample(model, np.random.default_rng(0))
        assert s["S"].dormant == math.inf
        assert s["S"].offset >= 0.0

    def test_point_mass(self):
        model = DrbdModel({"A": PointMass(3.0)}, Var("A"))
        assert draw_sample(model, np.random.default_rng(0))["A"] == 3.0

    def test_negative_draws(self):
        model = DrbdModel({"Bad": bad_law(-1.0)}, Var("Bad"))
        with pytest.raises(SamplingError) as exc:
            draw_batch(model, 1, 0, 10)
        assert exc.value.block == "Bad"

    def test_nan_draws(self):
        model = DrbdModel({"Bad": bad_law(np.nan)}, Var("Bad"))
        with pytest.raises(SamplingError):
            estimate_rel(model, 1.0, McConfig(n=10, seed=1))

    def test_streams_are_independent_of_order(self):
        a = block_stream(5, 3, "A").random(4)
        block_stream(5, 0, "B").random(100)
        assert np.array_equal(a, block_stream(5, 3, "A").random(4))
        assert not np.array_equal(a, block_stream(5, 3, "A", 1).random(4))
        assert not np.array_equal(a, block_stream(6, 3, "A").random(4))

    def test_batch_matches_scalar_evaluation(self, wsp_model):
        """Vectorized evaluation agrees with eval_expr row by row"""
        blocks = dict(wsp_model.blocks, B=Weibull(2.0, 1.0), C=Exponential(2.0))
        roots = [
            Or(Wsp(Var("Y"), "S"), And(Var("B"), Var("C"))),
            Csp(Var("B"), "S"),
            Hsp(NaryOr((Var("B"), Var("C"))), "S"),
            Simult(Var("B"), Var("B")),
        ]
        for root in roots:
            model = DrbdModel(blocks, root)
            batch = draw_batch(model, 9, 0, 200)
            times = eval_batch(root, batch)
            for i in range(200):
                assert times[i] == eval_expr(root, sample_at(batch, i))


class TestEstimation:
    """Test estimates and their intervals"""

    def test_at_zero(self, series_model):
        est = estimate_rel(series_model, 0.0, McConfig(n=5000, seed=2))
        assert est.rel_hat == 1.0
        assert est.half_width > 0.0

    def test_exponential(self):
        model = DrbdModel({"A": Exponential(0.1)}, Var("A"))
        est = estimate_rel(model, 1.0, McConfig(n=200_000, seed=4))
        assert abs(est.rel_hat - math.exp(-0.1)) <= 2.0 * est.half_width
        assert est.n_effective == 200_000

    def test_negative_time(self, series_model):
        with pytest.raises(PreconditionError):
            estimate_curve(series_model, [1.0, -1.0], McConfig(n=10, seed=1))

    def test_workers_do_not_change_results(self, wsp_model):
        grid = [0.0, 0.5, 1.0, 2.0]
        base = estimate_curve(wsp_model, grid, McConfig(n=30_000, seed=8, workers=1))
        for workers in (2, 8):
            assert estimate_curve(wsp_model, grid, McConfig(n=30_000, seed=8, workers=workers)) == base

    def test_seed_changes_results(self, wsp_model):
        a = estimate_rel(wsp_model, 1.0, McConfig(n=10_000, seed=1))
        b = estimate_rel(wsp_model, 1.0, McConfig(n=10_000, seed=2))
        assert a.rel_hat != b.rel_hat

    def test_curve_nonincreasing(self, wsp_model):
        ests = estimate_curve(wsp_model, [0.0, 0.5, 1.0, 2.0, 4.0], McConfig(n=10_000, seed=3))
        values = [e.rel_hat for e in ests]
        assert all(a >= b for a, b in zip(values, values[1:]))

    def test_wilson_near_one(self):
        """All successes still give a positive half-width"""
        cfg = McConfig(n=1000, seed=1)
        est = confidence(1000, 1000, cfg)
        assert est.rel_hat == 1.0
        assert 0.0 < est.half_width < 0.01
        assert confidence(0, 1000, cfg).half_width > 0.0

    def test_normal_interval(self):
        cfg = McConfig(n=10_000, seed=1, ci_level=0.95)
        est = confidence(5000, 10_000, cfg)
        assert est.half_width == pytest.approx(cfg.z * 0.005, rel=1e-12)


class TestCompare:
    """Test the algebraic-vs-sampled gate"""

    def test_consistent(self, series_model):
        c = compare(series_model, 1.0, 3.0, McConfig(n=100_000, seed=5))
        assert c.consistent
        assert c.algebraic == pytest.approx(0.740818, abs=1e-6)

    def test_warm_spare_consistent(self, wsp_model):
        c = compare(wsp_model, 1.0, 3.0, McConfig(n=100_000, seed=6))
        assert c.consistent
        assert c.algebraic == pytest.approx(wsp_exact(1.0, 0.5, 1.0), abs=1e-7)

    def test_corrupted_formula_is_caught(self, series_model):
        """Using the parallel formula for a series model is a discrepancy"""
        def wrong(model, t):
            return rel_parallel([rel_basic(model.law(b), t) for b in model.block_ids])

        c = compare(series_model, 1.0, 3.0, McConfig(n=100_000, seed=5), formula=wrong)
        assert not c.consistent
        assert c.z_score > 3.0

    def test_spare_routes_disjoint(self, wsp_model):
        """Dormant and active routes never both fire in one sample"""
        cfg = McConfig(n=50_000, seed=7)
        tally = spare_routes(wsp_model, wsp_model.root, 1.0, cfg)
        assert tally.both == 0
        assert tally.dormant > 0
        assert tally.active > 0
        failures = cfg.n - round(estimate_rel(wsp_model, 1.0, cfg).rel_hat * cfg.n)
        assert tally.dormant + tally.active == failures


@pytest.mark.slow
class TestOracleAgreement:
    """Formulas against the oracle at 10^6 samples"""

    @pytest.mark.parametrize("t", [0.1, 0.5, 1.0, 2.0, 5.0])
    def test_models(self, series_model, wsp_model, t):
        cfg = McConfig(n=1_000_000, seed=2024, workers=4)
        blocks = {"Y": Exponential(1.0), "S": SpareSpec.exponential(1.0, 0.0), "B": Weibull(2.0, 2.0)}
        csp_model = DrbdModel(blocks, And(Csp(Var("Y"), "S"), Var("B")))
        for model in (series_model, series_model.with_root(Or(Var("A"), Var("B"))), wsp_model, csp_model):
            assert compare(model, t, 3.0, cfg).consistent, model.name

    @pytest.mark.parametrize("t", [0.5, 2.0])
    def test_nested(self, t):
        leaf = {f"X{i}": Exponential(0.2 + 0.1 * i) for i in range(8)}
        ps = NestedIndex.parallel_series({0, 1}, {0: {0, 1}, 1: {2, 3}})
        deep = NestedIndex.nested(
            {0, 1},
            {0: {0}, 1: {1, 2}},
            {0: {0, 1}, 1: {2}, 2: {3}},
            {0: {0}, 1: {1, 2}, 2: {3, 4}, 3: {5, 6, 7}},
        )
        cfg = McConfig(n=1_000_000, seed=7, workers=4)
        for idx in (ps, deep):
            root = build_nested(idx, lambda i: Var(f"X{i}"))
            model = DrbdModel({b: leaf[b] for b in variables(root)}, root)
            assert compare(model, t, 3.0, cfg).consistent

    @pytest.mark.parametrize("alpha", [0.0, 0.1, 0.5, 1.0])
    def test_warm_spares(self, wsp_model, alpha):
        model = wsp_model.with_rates(dormancy={"S": alpha})
        cfg = McConfig(n=1_000_000, seed=13, workers=4)
        for t in (0.5, 1.0, 2.0):
            assert compare(model, t, 3.0, cfg).consistent

    def test_dbw(self, dbw_model):
        cfg = McConfig(n=1_000_000, seed=17, workers=4)
        for t in (500.0, 5000.0):
            assert compare(dbw_model, t, 3.0, cfg).consistent

    def test_coverage(self):
        """About 99% of 99% intervals cover the true value"""
        model = DrbdModel({"A": Exponential(1.0)}, Var("A"))
        truth = math.exp(-1.0)
        hits = 0
        for seed in range(200):
            est = estimate_rel(model, 1.0, McConfig(n=2000, seed=seed))
            hits += abs(est.rel_hat - truth) <= est.half_width
        assert hits >= 190

    def test_series_product(self, series_model):
        cfg = McConfig(n=1_000_000, seed=99)
        est = estimate_rel(series_model, 1.0, cfg)
        assert abs(est.rel_hat - rel_series([math.exp(-0.1), math.exp(-0.2)])) <= est.half_width
        assert rel_expr(series_model, 1.0) == pytest.approx(0.740818, abs=1e-6)
