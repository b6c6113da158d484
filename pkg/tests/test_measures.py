import math

import numpy as np
import pytest

import projlift.zoo as zoo
from projlift.bundle import BundleState
from projlift.ensembles import BlockSystem, dirac, finite_ensemble, quotient_ensemble
from projlift.estimates import combined_stderr
from projlift.linalg import proj_normalize
from projlift.lyapunov import top_exponent
from projlift.measures import (
    EmpiricalMeasure,
    birkhoff_empirical,
    cesaro_empirical,
    classify_regime,
    cocycle_average,
    discrepancy,
    push_forward,
    tightness_diagnostic,
    uniqueness_probe,
)
from projlift.parallel import spawn_rng

# measured same-law resampling floor for 1e5-point occupation clouds is
# ~0.006; frozen acceptance budget is 0.02
NOISE_FLOOR = 0.02


class TestEmpiricalMeasure:
    def test_weights_normalized(self):
        m = EmpiricalMeasure(np.eye(3), np.array([1.0, 2.0, 1.0]))
        assert m.weights.sum() == pytest.approx(1.0, abs=1e-15)

    def test_point_mass(self):
        m = EmpiricalMeasure.point_mass([0.0, -2.0])
        np.testing.assert_allclose(m.points[0], [0.0, 1.0])

    def test_rejects_bad_weights(self):
        with pytest.raises(ValueError):
            EmpiricalMeasure(np.eye(2), np.array([1.0, -1.0]))

    def test_support_span(self):
        m = EmpiricalMeasure(np.array([[1.0, 0.0], [-1.0, 0.0]]),
                             np.array([0.5, 0.5]))
        assert m.support_span().dim == 1


class TestCesaro:
    def test_identity_gives_point_mass(self):
        x = proj_normalize([1.0, 2.0])
        m = cesaro_empirical(dirac(np.eye(2)), x, 50, 2, spawn_rng(70))
        assert m.mass_within(x, 1e-12) == pytest.approx(1.0)

    def test_deterministic_contraction_mass(self):
        # oracle: for x = (1,1)/sqrt(2) under diag(2,1), the angle to [e1]
        # after i steps has sine 2^-i/sqrt(1+4^-i) <= 1e-3 iff i >= 10,
        # so exactly n-9 of the n points are inside the 1e-3 ball
        n = 400
        m = cesaro_empirical(dirac(np.diag([2.0, 1.0])), proj_normalize([1.0, 1.0]),
                             n, 1, spawn_rng(71))
        assert m.mass_within([1.0, 0.0], 1e-3) == pytest.approx((n - 9) / n)

    def test_pushforward_stationarity(self):
        ens, bs = zoo.affine_scalar(-0.2)
        x = proj_normalize([0.0, 1.0])
        m = cesaro_empirical(ens, x, 2000, 2, spawn_rng(72))
        pushed = push_forward(ens, m, spawn_rng(73))
        assert discrepancy(pushed, m) <= 2.0 * NOISE_FLOOR


class TestBirkhoff:
    def test_identity(self):
        x = proj_normalize([2.0, 1.0])
        m = birkhoff_empirical(dirac(np.eye(2)), x, 100, 10, spawn_rng(74))
        assert m.mass_within(x, 1e-12) == pytest.approx(1.0)

    def test_deterministic_contraction(self):
        m = birkhoff_empirical(dirac(np.diag([2.0, 1.0])), proj_normalize([1.0, 1.0]),
                               500, 60, spawn_rng(75))
        assert m.mass_within([1.0, 0.0], 1e-12) == pytest.approx(1.0)

    def test_contracting_start_independence(self):
        ens, bs = zoo.affine_scalar(-0.2)
        a = birkhoff_empirical(ens, proj_normalize([0.0, 1.0]), 100_000, 10_000,
                               spawn_rng(76))
        b = birkhoff_empirical(ens, proj_normalize([10.0, 1.0]), 100_000, 10_000,
                               spawn_rng(77))
        assert discrepancy(a, b) <= 0.05

    def test_burn_in_validation(self):
        with pytest.raises(ValueError):
            birkhoff_empirical(dirac(np.eye(2)), [1.0, 0.0], 10, 10, spawn_rng(0))


class TestCocycleAverage:
    def test_fixed_line(self):
        m = EmpiricalMeasure.point_mass([1.0, 0.0])
        est = cocycle_average(dirac(np.diag([2.0, 1.0])), m)
        assert est.value == pytest.approx(math.log(2.0))

    def test_isometries_zero(self):
        ens = zoo.isometry_ensemble()
        m = EmpiricalMeasure(spawn_rng(78).normal(size=(50, 3)), np.full(50, 0.02))
        assert cocycle_average(ens, m).value == pytest.approx(0.0, abs=1e-12)

    def test_furstenberg_formula(self):
        ens = zoo.irreducible_proximal_2x2()
        cloud = birkhoff_empirical(ens, proj_normalize([1.0, 1.0]), 100_000,
                                   10_000, spawn_rng(79))
        alpha = cocycle_average(ens, cloud)
        top = top_exponent(ens, 100_000, 20, seed=80)
        assert abs(alpha.value - top.value) <= 3.0 * combined_stderr(alpha, top)


class TestDiscrepancy:
    def test_identical_clouds(self):
        m = EmpiricalMeasure(spawn_rng(81).normal(size=(100, 3)), np.full(100, 0.01))
        assert discrepancy(m, m) == 0.0

    def test_disjoint_point_masses(self):
        m1 = EmpiricalMeasure.point_mass([1.0, 0.0])
        m2 = EmpiricalMeasure.point_mass([0.0, 1.0])
        # a 256-entry dictionary on the circle has a bump center within
        # radius 0.1 of any point, separating the two masses
        assert discrepancy(m1, m2, dict_size=256) >= 0.9

    def test_symmetry(self):
        rng = spawn_rng(82)
        m1 = EmpiricalMeasure(rng.normal(size=(80, 3)), np.full(80, 1 / 80))
        m2 = EmpiricalMeasure(rng.normal(size=(60, 3)), np.full(60, 1 / 60))
        assert discrepancy(m1, m2) == pytest.approx(discrepancy(m2, m1), abs=1e-15)

    def test_same_law_noise_floor(self):
        ens, bs = zoo.affine_scalar(-0.2)
        x = proj_normalize([0.0, 1.0])
        c1 = birkhoff_empirical(ens, x, 100_000, 10_000, spawn_rng(83))
        c2 = birkhoff_empirical(ens, x, 100_000, 10_000, spawn_rng(84))
        assert discrepancy(c1, c2) <= NOISE_FLOOR

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            discrepancy(EmpiricalMeasure.point_mass([1.0, 0.0]),
                        EmpiricalMeasure.point_mass([1.0, 0.0, 0.0]))


class TestTightness:
    def test_contracting_recurrent(self):
        ens, bs = zoo.affine_scalar(-0.2)
        rep = tightness_diagnostic(bs, ens, BundleState([1.0], [0.0]), 100_000,
                                   [math.log(1e3)], spawn_rng(85))
        assert rep.escape_fractions[0] <= 0.01
        assert rep.trend == "recurrent"

    def test_expanding_escapes(self):
        ens, bs = zoo.affine_scalar(+0.2)
        rep = tightness_diagnostic(bs, ens, BundleState([1.0], [10.0]), 10_000,
                                   [math.log(1e6)], spawn_rng(86))
        assert rep.escape_fractions[0] >= 0.99
        assert rep.trend == "escaping"

    def test_identity_never_escapes_above_start(self):
        bs = BlockSystem.coordinate(2, 1)
        state = BundleState([1.0], [1.0])
        rep = tightness_diagnostic(bs, dirac(np.eye(2)), state, 100,
                                   [state.drift + 0.1], spawn_rng(87))
        assert rep.escape_fractions[0] == 0.0


class TestClassifyRegime:
    def test_contracting(self):
        ens, bs = zoo.affine_scalar(-0.2)
        cls = classify_regime(bs, ens, EmpiricalMeasure.point_mass([1.0]),
                              20_000, 10, seed=88)
        assert cls.regime == "contracting"
        assert cls.verdict == "unique-lift-exists"

    def test_purely_expanding_without_witness(self):
        ens, bs = zoo.affine_scalar(+0.2)
        cls = classify_regime(bs, ens, EmpiricalMeasure.point_mass([1.0]),
                              20_000, 10, seed=89)
        assert cls.regime == "purely-expanding"
        assert cls.verdict == "lift-iff-complement"
        assert cls.witness is None

    def test_purely_expanding_with_witness(self):
        ds = zoo.expanding_with_complement()
        base = birkhoff_empirical(quotient_ensemble(ds.bs, ds.ens),
                                  proj_normalize([1.0, 0.7]), 20_000, 2_000,
                                  spawn_rng(90))
        cls = classify_regime(ds.bs, ds.ens, base, 20_000, 10, seed=91)
        assert cls.regime == "purely-expanding"
        assert cls.witness is not None
        from projlift.linalg import principal_angle_distance

        assert principal_angle_distance(cls.witness, ds.truth["w_prime"]) <= 1e-6

    def test_mixed_with_partial_witness(self):
        ds = zoo.mixed_with_partial_complement()
        cls = classify_regime(ds.bs, ds.ens, EmpiricalMeasure.point_mass([1.0]),
                              20_000, 10, seed=92)
        assert cls.regime == "mixed"
        assert cls.verdict == "lift-iff-partial-complement"
        assert cls.witness is not None and cls.witness.dim == 2

    def test_near_critical_refuses_verdict(self):
        # alpha equals the fiber growth level: no 3-sigma separation exists
        ens, bs = zoo.affine_scalar(0.0)
        cls = classify_regime(bs, ens, EmpiricalMeasure.point_mass([1.0]),
                              5_000, 6, seed=93)
        assert cls.regime == "critical-indeterminate"
        assert cls.verdict == "indeterminate"


class TestUniquenessProbe:
    def test_contracting_starts_agree(self):
        ens, bs = zoo.affine_scalar(-0.2)
        starts = [BundleState([1.0], [t]) for t in (0.0, 10.0, -10.0)]
        rep = uniqueness_probe(bs, ens, starts, 100_000, seed=94)
        assert rep.max_discrepancy <= 0.05
        assert rep.discrepancies.shape == (3, 3)

    def test_two_invariant_lines_disagree(self):
        # equal growth on two preserved coordinate lines: occupation clouds
        # from the two lines are distinct ergodic limits
        from projlift.linalg import Subspace

        atoms = np.stack([np.diag([math.exp(0.3), math.exp(-0.3), 1.0]),
                          np.diag([math.exp(-0.3), math.exp(0.3), 1.0])])
        ens = finite_ensemble(atoms)
        bs = BlockSystem.from_subspace(Subspace.span_of_coords(3, [2]))
        starts = [BundleState([1.0, 0.0], [0.0]), BundleState([0.0, 1.0], [0.0])]
        rep = uniqueness_probe(bs, ens, starts, 5_000, seed=95, dict_size=256)
        assert rep.max_discrepancy >= 0.5

    def test_needs_two_starts(self):
        ens, bs = zoo.affine_scalar(-0.2)
        with pytest.raises(ValueError):
            uniqueness_probe(bs, ens, [BundleState([1.0], [0.0])], 100, seed=96)
