import math

import numpy as np
import pytest

import projlift.zoo as zoo
from projlift.bundle import (
    BundleState,
    ChartError,
    bundle_trajectory,
    cocycle_step,
    drift_step_bound_check,
    drift_value,
    fiber_contraction_rate,
    join_state,
    split_point,
)
from projlift.ensembles import BlockSystem, dirac, finite_ensemble
from projlift.linalg import proj_distance, proj_normalize, rank_span
from projlift.parallel import spawn_rng


def random_block_triangular(rng, r, q):
    def conf(dim):
        u, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        v, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        return u @ np.diag(np.exp(rng.uniform(-1.5, 1.5, dim))) @ v

    g = np.zeros((r + q, r + q))
    g[:r, :r] = conf(r)
    g[:r, r:] = rng.normal(scale=2.0, size=(r, q))
    g[r:, r:] = conf(q)
    return g


class TestChart:
    def test_zero_section(self):
        bs = BlockSystem.coordinate(2, 1)
        s = split_point([0.0, 1.0], bs)
        np.testing.assert_allclose(s.theta, [1.0])
        np.testing.assert_allclose(s.t, [0.0])

    def test_scale_invariance(self):
        bs = BlockSystem.coordinate(2, 1)
        s = split_point([4.0, 2.0], bs)
        np.testing.assert_allclose(s.theta, [1.0])
        np.testing.assert_allclose(s.t, [2.0], atol=1e-14)

    def test_invariant_point_rejected(self):
        bs = BlockSystem.coordinate(2, 1)
        with pytest.raises(ChartError):
            split_point([1.0, 0.0], bs)

    def test_join_examples(self):
        bs = BlockSystem.coordinate(2, 1)
        np.testing.assert_allclose(join_state(BundleState([1.0], [0.0]), bs),
                                   [0.0, 1.0])
        np.testing.assert_allclose(join_state(BundleState([1.0], [2.0]), bs),
                                   proj_normalize([2.0, 1.0]))

    def test_round_trip_random(self):
        rng = spawn_rng(50)
        for _ in range(100):
            d = int(rng.integers(3, 7))
            r = int(rng.integers(1, d))
            w = rank_span(rng.normal(size=(r, d)))
            if w.dim != r:
                continue
            bs = BlockSystem.from_subspace(w)
            s = BundleState(rng.normal(size=d - r), rng.normal(size=r) * 5.0)
            back = split_point(join_state(s, bs), bs)
            assert np.max(np.abs(back.theta - s.theta)) <= 1e-12
            assert np.max(np.abs(back.t - s.t)) <= 1e-11 * (1 + np.max(np.abs(s.t)))


class TestCocycleStep:
    def test_identity_fixes_state(self):
        bs = BlockSystem.coordinate(3, 1)
        s = BundleState([0.6, 0.8], [1.5])
        s2 = cocycle_step(np.eye(3), s, bs)
        assert s2.close_to(s)

    def test_triangular_formula(self):
        bs = BlockSystem.coordinate(2, 1)
        g = np.array([[1.0, 0.0], [0.0, 2.0]])
        s2 = cocycle_step(g, BundleState([1.0], [4.0]), bs)
        np.testing.assert_allclose(s2.theta, [1.0])
        np.testing.assert_allclose(s2.t, [2.0])

    def test_equivariance_randomized(self):
        rng = spawn_rng(51)
        bs = BlockSystem.coordinate(3, 1)
        for _ in range(500):
            g = random_block_triangular(rng, 1, 2)
            s = BundleState(rng.normal(size=2), rng.normal(size=1) * 10)
            lhs = join_state(cocycle_step(g, s, bs), bs)
            rhs = proj_normalize(g @ join_state(s, bs))
            assert proj_distance(lhs, rhs) <= 1e-10

    def test_composition_randomized(self):
        rng = spawn_rng(52)
        bs = BlockSystem.coordinate(4, 2)
        for _ in range(500):
            g = random_block_triangular(rng, 2, 2)
            h = random_block_triangular(rng, 2, 2)
            s = BundleState(rng.normal(size=2), rng.normal(size=2) * 10)
            two = cocycle_step(g, cocycle_step(h, s, bs), bs)
            one = cocycle_step(g @ h, s, bs)
            assert np.max(np.abs(two.theta - one.theta)) <= 1e-10
            scale = 1.0 + np.max(np.abs(one.t))
            assert np.max(np.abs(two.t - one.t)) / scale <= 1e-10


class TestDrift:
    def test_values(self):
        assert drift_value(BundleState([1.0], [0.0])) == 0.0
        assert drift_value(BundleState([1.0], [math.e - 1.0])) == pytest.approx(1.0)
        assert drift_value(BundleState([1.0], [1.0])) == pytest.approx(math.log(2.0))

    def test_identity_step(self):
        bs = BlockSystem.coordinate(2, 1)
        chk = drift_step_bound_check(np.eye(2), BundleState([1.0], [3.0]), bs)
        assert chk.delta == pytest.approx(0.0, abs=1e-14)
        assert chk.bound == pytest.approx(math.log(3.0))
        assert chk.ok

    def test_isometry_bound(self):
        bs = BlockSystem.coordinate(3, 1)
        rng = spawn_rng(53)
        q, r = np.linalg.qr(rng.normal(size=(2, 2)))
        g = np.eye(3)
        g[1:, 1:] = q * np.sign(np.diag(r))
        chk = drift_step_bound_check(g, BundleState(rng.normal(size=2), [5.0]), bs)
        assert chk.bound == pytest.approx(math.log(3.0), abs=1e-9)
        assert chk.ok

    def test_randomized_bound_holds(self):
        rng = spawn_rng(54)
        bs = BlockSystem.coordinate(3, 1)
        for _ in range(1000):
            g = random_block_triangular(rng, 1, 2)
            s = BundleState(rng.normal(size=2),
                            rng.normal(size=1) * math.exp(rng.uniform(-2, 4)))
            assert drift_step_bound_check(g, s, bs).ok


class TestFiberContraction:
    def test_deterministic_triangular(self):
        bs = BlockSystem.coordinate(2, 1)
        ens = dirac(np.array([[2.0, 1.0], [0.0, 3.0]]))
        est = fiber_contraction_rate(bs, ens, [1.0], 300, 2, seed=55)
        assert est.value == pytest.approx(math.log(2.0) - math.log(3.0), abs=1e-12)

    def test_block_isometry_is_flat(self):
        rng = spawn_rng(56)
        q1, r1 = np.linalg.qr(rng.normal(size=(2, 2)))
        g = np.zeros((4, 4))
        g[:2, :2] = q1 * np.sign(np.diag(r1))
        q2, r2 = np.linalg.qr(rng.normal(size=(2, 2)))
        g[2:, 2:] = q2 * np.sign(np.diag(r2))
        est = fiber_contraction_rate(BlockSystem.coordinate(4, 2), dirac(g),
                                     [1.0, 0.0], 300, 2, seed=57)
        assert est.value == pytest.approx(0.0, abs=1e-10)

    def test_designed_rates(self):
        # scalar blocks: rate = E log a - E log c = -0.2 - 0.1 = -0.3
        ds = zoo.two_block_floor()
        est = fiber_contraction_rate(ds.bs, ds.ens, [1.0], 20_000, 10, seed=58)
        assert abs(est.value + 0.3) <= 3.0 * est.stderr + 1e-12

    def test_sign_dichotomy(self):
        contracting, bs_c = zoo.affine_scalar(-0.2)
        est_c = fiber_contraction_rate(bs_c, contracting, [1.0], 20_000, 10, seed=59)
        assert est_c.value < -3.0 * est_c.stderr
        expanding, bs_e = zoo.affine_scalar(+0.2)
        est_e = fiber_contraction_rate(bs_e, expanding, [1.0], 20_000, 10, seed=60)
        assert est_e.value > 0.0


class TestTrajectory:
    def test_recurrent_final_state_round_trip(self):
        ens, bs = zoo.affine_scalar(-0.2)
        trace = bundle_trajectory(bs, ens, BundleState([1.0], [0.5]), 2000,
                                  spawn_rng(61))
        final = trace.final_state()
        assert math.isfinite(drift_value(final))
        assert trace.drift[-1] == pytest.approx(drift_value(final), abs=1e-9)

    def test_escaping_log_norm_grows_linearly(self):
        ens, bs = zoo.affine_scalar(+0.2)
        trace = bundle_trajectory(bs, ens, BundleState([1.0], [1.0]), 20_000,
                                  spawn_rng(62))
        rate = trace.log_t[-1] / len(trace.log_t)
        assert rate == pytest.approx(0.2, abs=0.05)
        with pytest.raises(ChartError):
            trace.final_state()  # ||t|| far beyond float range by design

    def test_zero_section_stays_zero_without_translation(self):
        ens = dirac(np.diag([0.5, 1.0]))
        bs = BlockSystem.coordinate(2, 1)
        trace = bundle_trajectory(bs, ens, BundleState([1.0], [0.0]), 50,
                                  spawn_rng(63))
        assert np.all(trace.drift == 0.0)
        assert np.all(np.isneginf(trace.log_t))
