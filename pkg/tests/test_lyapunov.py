import math

import numpy as np
import pytest

import projlift.zoo as zoo
from projlift.ensembles import (
    BlockSystem,
    dirac,
    finite_ensemble,
    transpose_ensemble,
    wedge_ensemble,
)
from projlift.estimates import combined_stderr
from projlift.lyapunov import (
    product_trajectory,
    spectrum,
    subspace_exponents,
    top_exponent,
    uniform_growth_floor,
    vector_growth,
)
from projlift.parallel import spawn_rng


class TestProductTrajectory:
    def test_deterministic_power(self):
        ens = dirac(np.diag([2.0, 1.0]))
        states = list(product_trajectory(ens, 3, spawn_rng(0)))
        m, logscale = states[-1]
        np.testing.assert_allclose(m * math.exp(logscale), np.diag([8.0, 1.0]),
                                   rtol=1e-12)

    def test_first_step_is_first_sample(self):
        ens = zoo.random_invertible_pair()
        rng = spawn_rng(1)
        idx = ens.sample_indices(spawn_rng(1), 1)
        m, logscale = next(iter(product_trajectory(ens, 1, rng)))
        np.testing.assert_allclose(m * math.exp(logscale), ens.atoms[idx[0]],
                                   rtol=1e-12)

    def test_order_sensitivity(self):
        g = np.array([[1.0, 1.0], [0.0, 1.0]])
        h = np.array([[1.0, 0.0], [1.0, 1.0]])
        left = h @ g   # L_2 for the draw sequence (g, h)
        right = g @ h  # R_2 would multiply on the other side
        assert np.max(np.abs(left - right)) > 0.5


class TestTopExponent:
    def test_exact_deterministic(self):
        est = top_exponent(dirac(np.diag([2.0, 1.0])), 500, 3, seed=2)
        assert est.value == pytest.approx(math.log(2.0), abs=1e-12)
        assert est.stderr == 0.0

    def test_rotation_is_zero(self):
        est = top_exponent(zoo.rotation2d(1.0), 500, 3, seed=3)
        assert est.value == pytest.approx(0.0, abs=1e-10)

    def test_zero_exponent_scalar(self):
        est = top_exponent(zoo.scalar_zero_exponent(), 20_000, 10, seed=4)
        assert abs(est.value) <= 3.0 * est.stderr


class TestSpectrum:
    def test_exact_diagonal(self):
        spec = spectrum(dirac(np.diag([3.0, 2.0, 1.0])), 300, 2, seed=5)
        expected = [math.log(3.0), math.log(2.0), 0.0]
        for est, val in zip(spec, expected):
            assert est.value == pytest.approx(val, abs=1e-9)
            assert est.stderr == 0.0

    def test_sum_equals_average_log_det(self):
        # exact identity of the orthonormalization estimator on the same draws
        ens = zoo.random_invertible_pair()
        n, reps, seed = 50_000, 6, 99
        spec = spectrum(ens, n, reps, seed)
        total = sum(e.value for e in spec)
        logdets = np.log(np.abs(np.linalg.det(ens.atoms)))
        same_draw = [
            logdets[ens.sample_indices(spawn_rng(seed, r), n)].mean()
            for r in range(reps)
        ]
        assert abs(total - np.mean(same_draw)) <= 1e-9

    def test_nonincreasing_within_noise(self):
        spec = spectrum(zoo.random_invertible_pair(), 20_000, 8, seed=6)
        for hi, lo in zip(spec, spec[1:]):
            assert hi.value >= lo.value - 2.0 * combined_stderr(hi, lo)

    def test_transpose_symmetry(self):
        ens = zoo.random_invertible_pair()
        a = spectrum(ens, 50_000, 10, seed=7)
        b = spectrum(transpose_ensemble(ens), 50_000, 10, seed=8)
        for ea, eb in zip(a, b):
            assert abs(ea.value - eb.value) <= 3.0 * combined_stderr(ea, eb)

    def test_wedge_partial_sum(self):
        ens = zoo.random_invertible_pair()
        spec = spectrum(ens, 50_000, 10, seed=9)
        top2 = top_exponent(wedge_ensemble(ens, 2), 50_000, 10, seed=10)
        sigma = math.sqrt(spec[0].stderr**2 + spec[1].stderr**2 + top2.stderr**2)
        assert abs(top2.value - (spec[0].value + spec[1].value)) <= 3.0 * sigma


class TestVectorGrowth:
    def test_slow_direction_exact(self):
        est = vector_growth(dirac(np.diag([2.0, 1.0])), [0.0, 1.0], 200, 2, seed=11)
        assert est.value == pytest.approx(0.0, abs=1e-12)

    def test_dominated_by_fast_direction(self):
        n = 10_000
        est = vector_growth(dirac(np.diag([2.0, 1.0])), [1.0, 1.0], n, 2, seed=12)
        # finite-horizon offset is exactly (log ||v|| - log v_fast)/n
        assert est.value == pytest.approx(math.log(2.0), abs=1.0 / n)

    def test_contracting_fiber_rate(self):
        # scalar law of large numbers: vectors in the invariant line grow at
        # the designed E log|a|
        ens, bs = zoo.affine_scalar(-0.2)
        est = vector_growth(ens, [1.0, 0.0], 20_000, 10, seed=13)
        assert abs(est.value + 0.2) <= 3.0 * est.stderr + 1e-12


class TestSubspaceExponents:
    def test_triangular_exact(self):
        bs = BlockSystem.coordinate(2, 1)
        ens = dirac(np.array([[2.0, 1.0], [0.0, 3.0]]))
        sub = subspace_exponents(bs, ens, 300, 2, seed=14)
        assert sub.lambda1_W.value == pytest.approx(math.log(2.0), abs=1e-12)
        assert sub.lambda1_Q.value == pytest.approx(math.log(3.0), abs=1e-12)

    def test_block_diagonal(self):
        bs = BlockSystem.coordinate(2, 1)
        sub = subspace_exponents(bs, dirac(np.diag([2.0, 5.0])), 300, 2, seed=15)
        assert sub.lambda1_W.value == pytest.approx(math.log(2.0))
        assert sub.lambda1_Q.value == pytest.approx(math.log(5.0))

    def test_full_top_is_max_of_blocks(self):
        rng = spawn_rng(16)
        bs = BlockSystem.coordinate(3, 1)
        atoms = []
        for _ in range(3):
            g = np.triu(rng.normal(size=(3, 3)))
            g[np.arange(3), np.arange(3)] = np.exp(rng.uniform(-1, 1, 3))
            atoms.append(g)
        ens = finite_ensemble(np.stack(atoms))
        sub = subspace_exponents(bs, ens, 50_000, 10, seed=17)
        full = top_exponent(ens, 50_000, 10, seed=18)
        expected = max(sub.lambda1_W.value, sub.lambda1_Q.value)
        sigma = math.sqrt(full.stderr**2 + sub.lambda1_W.stderr**2
                          + sub.lambda1_Q.stderr**2)
        assert abs(full.value - expected) <= 3.0 * sigma + 1e-9


class TestUniformGrowthFloor:
    def test_attained_at_slow_axis(self):
        floor = uniform_growth_floor(dirac(np.diag([2.0, 1.0])), 200, 20, seed=19)
        assert floor == pytest.approx(0.0, abs=1e-12)

    def test_isometries_zero(self):
        floor = uniform_growth_floor(zoo.isometry_ensemble(), 200, 20, seed=20)
        assert floor == pytest.approx(0.0, abs=1e-10)

    def test_designed_two_block(self):
        ds = zoo.two_block_floor()
        floor = uniform_growth_floor(ds.ens, 1000, 100, seed=21)
        assert floor >= -0.25
