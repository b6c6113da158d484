"""Acceptance criteria: exact algebraic identities, oracle-backed numerics
and behavioral reproduction of the contraction/expansion dichotomies, each
with pinned tolerances and time budgets.

Every criterion is deterministic (fixed seeds) and returns a
CriterionResult; ``run_all`` prints one pass/fail line per criterion.  The
same functions back tests/test_acceptance.py.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels, parallel, zoo
from .bundle import BundleState, cocycle_step, drift_step_bound_check, join_state
from .ensembles import (
    BlockSystem,
    build_sl2c_ensemble,
    dirac,
    quotient_ensemble,
    wedge_ensemble,
)
from .estimates import GrowthEstimate, combined_stderr, from_samples
from .fkh import fkh_estimate, transpose_dual_space
from .homogeneous import build_sl2c_semidirect, grassmannian_experiment, levi_spectrum_check
from .linalg import principal_angle_distance, proj_distance, proj_normalize
from .lyapunov import spectrum, top_exponent, uniform_growth_floor
from .measures import (
    EmpiricalMeasure,
    birkhoff_empirical,
    classify_regime,
    cocycle_average,
    tightness_diagnostic,
    uniqueness_probe,
)
from .parallel import spawn_rng
from .reporting import to_jsonable


@dataclass(frozen=True)
class CriterionResult:
    cid: int
    name: str
    passed: bool
    runtime_s: float
    budget_s: float
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} - C{self.cid:02d} {self.name} ({self.runtime_s:.1f}s)"


def warmup() -> None:
    """Compile every trajectory kernel on tiny inputs so criterion timings
    measure the algorithms, not the JIT."""
    atoms = np.stack([np.eye(2), 2.0 * np.eye(2)])
    idx = np.zeros(4, dtype=np.int64)
    kernels.left_product(atoms, idx)
    kernels.spectrum_accum(atoms, idx)
    kernels.vector_lognorm(atoms, idx, np.ones(2))
    kernels.apply_word(atoms, idx, np.ones(2))
    kernels.birkhoff_points(atoms, idx, np.ones(2), 1)
    blk = np.ones((2, 1, 1))
    kernels.bundle_trace(blk, blk, blk, idx, np.ones(1), np.zeros(1), -math.inf)
    kernels.fiber_rates(blk, blk, idx, np.ones(1))


# ---------------------------------------------------------------------------


def c01_exact_spectra() -> CriterionResult:
    t0 = time.perf_counter()
    spec = spectrum(dirac(np.diag([3.0, 2.0, 1.0])), 200, 2, seed=101)
    target = [math.log(3.0), math.log(2.0), 0.0]
    errs = [abs(e.value - t) for e, t in zip(spec, target)]
    dt = time.perf_counter() - t0
    return CriterionResult(1, "exact spectra for diag(3,2,1)",
                           max(errs) <= 1e-9 and dt < 1.0, dt, 1.0,
                           {"errors": errs})


def c02_zero_exponent() -> CriterionResult:
    t0 = time.perf_counter()
    est = top_exponent(zoo.scalar_zero_exponent(), 100_000, 20, seed=102)
    dt = time.perf_counter() - t0
    ok = abs(est.value) <= 3.0 * est.stderr and est.stderr > 0 and dt < 10.0
    return CriterionResult(2, "zero-exponent scalar ensemble", ok, dt, 10.0,
                           {"value": est.value, "stderr": est.stderr})


def c03_wedge_consistency() -> CriterionResult:
    t0 = time.perf_counter()
    ens = zoo.random_invertible_pair(dim=3, seed=11)
    spec = spectrum(ens, 100_000, 20, seed=331)
    top2 = top_exponent(wedge_ensemble(ens, 2), 100_000, 20, seed=332)
    partial = spec[0].value + spec[1].value
    sigma = math.sqrt(spec[0].stderr**2 + spec[1].stderr**2 + top2.stderr**2)
    gap = abs(top2.value - partial)
    dt = time.perf_counter() - t0
    return CriterionResult(3, "exterior-power partial-sum consistency",
                           gap <= 3.0 * sigma and dt < 60.0, dt, 60.0,
                           {"gap": gap, "three_sigma": 3.0 * sigma})


def c04_sl2c_spectrum_shape() -> CriterionResult:
    t0 = time.perf_counter()
    spec = spectrum(build_sl2c_ensemble(), 100_000, 20, seed=104)
    l1, l2, l3, l4 = spec
    checks = {
        "l1_minus_l2": abs(l1.value - l2.value) <= 3 * combined_stderr(l1, l2),
        "l3_minus_l4": abs(l3.value - l4.value) <= 3 * combined_stderr(l3, l4),
        "l1_plus_l4": abs(l1.value + l4.value) <= 3 * combined_stderr(l1, l4),
        "l1_positive": l1.value > 5.0 * l1.stderr > 0,
    }
    dt = time.perf_counter() - t0
    return CriterionResult(4, "paired symmetric spectrum of the complex-structure ensemble",
                           all(checks.values()) and dt < 120.0, dt, 120.0,
                           {**checks, "lambda": l1.value, "stderr": l1.stderr})


def c05_affine_filtration() -> CriterionResult:
    t0 = time.perf_counter()
    ens_c, bs = zoo.affine_scalar(-0.2)
    rep_c = fkh_estimate(ens_c, 20_000, 10, seed=105)
    t1 = time.perf_counter()
    contracting_ok = (
        rep_c.levels == 2
        and principal_angle_distance(rep_c.filtration[1], bs.invariant) <= 1e-6
        and abs(rep_c.estimates[1].value + 0.2) <= 3.0 * rep_c.estimates[1].stderr
    )
    ens_e, _ = zoo.affine_scalar(+0.2)
    rep_e = fkh_estimate(ens_e, 20_000, 10, seed=106)
    t2 = time.perf_counter()
    expanding_ok = rep_e.levels == 1
    ok = (contracting_ok and expanding_ok
          and (t1 - t0) < 120.0 and (t2 - t1) < 120.0)
    return CriterionResult(5, "affine filtration: contracting k=2 with F2=W, expanding k=1",
                           ok, t2 - t0, 240.0,
                           {"contracting_levels": rep_c.levels,
                            "beta2": rep_c.estimates[1].value,
                            "expanding_levels": rep_e.levels})


def _random_block_triangular(rng, r: int, q: int):
    """Moderately conditioned upper-block-triangular matrix."""
    def conf(dim):
        u, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        v, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
        return u @ np.diag(np.exp(rng.uniform(-1.5, 1.5, dim))) @ v

    g = np.zeros((r + q, r + q))
    g[:r, :r] = conf(r)
    g[:r, r:] = rng.normal(scale=2.0, size=(r, q))
    g[r:, r:] = conf(q)
    return g


def _random_state(rng, r: int, q: int) -> BundleState:
    theta = rng.normal(size=q)
    t = rng.normal(size=r) * math.exp(rng.uniform(-2.0, 4.0))
    return BundleState(theta, t)


def c06_drift_bound() -> CriterionResult:
    t0 = time.perf_counter()
    rng = spawn_rng(1006)
    bs = BlockSystem.coordinate(3, 1)
    worst_slack = -math.inf
    ok = True
    for _ in range(10_000):
        g = _random_block_triangular(rng, 1, 2)
        s = _random_state(rng, 1, 2)
        chk = drift_step_bound_check(g, s, bs)
        worst_slack = max(worst_slack, chk.delta - chk.bound)
        ok = ok and chk.ok
    dt = time.perf_counter() - t0
    return CriterionResult(6, "per-step drift increments below the gauge bound",
                           ok, dt, 60.0, {"worst_excess": worst_slack})


def c07_cocycle_laws() -> CriterionResult:
    t0 = time.perf_counter()
    rng = spawn_rng(1007)
    bs = BlockSystem.coordinate(3, 1)
    worst_eq = 0.0
    worst_comp = 0.0
    for _ in range(10_000):
        g = _random_block_triangular(rng, 1, 2)
        h = _random_block_triangular(rng, 1, 2)
        s = _random_state(rng, 1, 2)
        stepped = cocycle_step(g, s, bs)
        worst_eq = max(worst_eq, proj_distance(
            join_state(stepped, bs), proj_normalize(g @ join_state(s, bs))))
        via_two = cocycle_step(g, cocycle_step(h, s, bs), bs)
        via_one = cocycle_step(g @ h, s, bs)
        scale = 1.0 + float(np.max(np.abs(via_one.t)))
        worst_comp = max(
            worst_comp,
            float(np.max(np.abs(via_two.theta - via_one.theta))),
            float(np.max(np.abs(via_two.t - via_one.t))) / scale,
        )
    dt = time.perf_counter() - t0
    ok = worst_eq <= 1e-10 and worst_comp <= 1e-10
    return CriterionResult(7, "chart equivariance and cocycle composition",
                           ok, dt, 60.0,
                           {"worst_equivariance": worst_eq,
                            "worst_composition": worst_comp})


def c08_contracting_uniqueness() -> CriterionResult:
    t0 = time.perf_counter()
    ens, bs = zoo.affine_scalar(-0.2)
    starts = [BundleState([1.0], [t]) for t in (0.0, 10.0, -10.0)]
    probe = uniqueness_probe(bs, ens, starts, 100_000, seed=108)
    tight = tightness_diagnostic(bs, ens, starts[0], 100_000,
                                 [math.log(1e3)], spawn_rng(1008))
    dt = time.perf_counter() - t0
    ok = (probe.max_discrepancy <= 0.05
          and tight.escape_fractions[0] <= 0.01 and dt < 60.0)
    return CriterionResult(8, "contracting recursion: start-independent occupation",
                           ok, dt, 60.0,
                           {"probe_max": probe.max_discrepancy,
                            "escape_fraction": tight.escape_fractions[0]})


def c09_expanding_nonexistence() -> CriterionResult:
    t0 = time.perf_counter()
    ens, bs = zoo.affine_scalar(+0.2)
    tight = tightness_diagnostic(bs, ens, BundleState([1.0], [10.0]), 10_000,
                                 [math.log(1e6)], spawn_rng(1009))
    base = EmpiricalMeasure.point_mass(np.array([1.0]))
    cls = classify_regime(bs, ens, base, 20_000, 10, seed=109)
    dt = time.perf_counter() - t0
    ok = (tight.escape_fractions[0] >= 0.99
          and cls.regime == "purely-expanding" and cls.witness is None
          and dt < 60.0)
    return CriterionResult(9, "expanding recursion: escape and no lift witness",
                           ok, dt, 60.0,
                           {"escape_fraction": tight.escape_fractions[0],
                            "regime": cls.regime,
                            "witness": cls.witness is not None})


def c10_expanding_with_complement() -> CriterionResult:
    t0 = time.perf_counter()
    ds = zoo.expanding_with_complement()
    qens_cloud = birkhoff_empirical(quotient_ensemble(ds.bs, ds.ens),
                                    proj_normalize([1.0, 0.7]), 20_000, 2_000,
                                    spawn_rng(1010))
    cls = classify_regime(ds.bs, ds.ens, qens_cloud, 20_000, 10, seed=110)
    witness_ok = (cls.witness is not None
                  and principal_angle_distance(cls.witness, ds.truth["w_prime"]) <= 1e-6)
    cloud = birkhoff_empirical(ds.ens, proj_normalize([0.0, 0.0, 1.0, 0.3]),
                               100_000, 10_000, spawn_rng(1011))
    mass = cloud.mass_near_subspace(ds.truth["w_prime"], 1e-3)
    dt = time.perf_counter() - t0
    ok = witness_ok and mass >= 0.99 and cls.regime == "purely-expanding" and dt < 60.0
    return CriterionResult(10, "expanding with invariant complement: witness and support",
                           ok, dt, 60.0,
                           {"witness_found": cls.witness is not None,
                            "mass_near_complement": mass, "regime": cls.regime})


def _lift_alpha(ens, bs, start: BundleState, n: int, reps: int,
                seed: int) -> GrowthEstimate:
    """Cocycle average of the lift, across independent occupation clouds."""
    vals = []
    for r in range(reps):
        cloud = birkhoff_empirical(ens, join_state(start, bs), n, n // 10,
                                   spawn_rng(seed, r))
        vals.append(cocycle_average(ens, cloud).value)
    return from_samples(vals, n)


def c11_cocycle_average_preserved() -> CriterionResult:
    t0 = time.perf_counter()
    details = {}
    ok = True
    # contracting affine: base average is exactly 0 (trivial quotient)
    ens, bs = zoo.affine_scalar(-0.2)
    alpha_lift = _lift_alpha(ens, bs, BundleState([1.0], [0.0]), 30_000, 8, seed=111)
    gap = abs(alpha_lift.value - 0.0)
    ok &= gap <= 3.0 * alpha_lift.stderr
    details["contracting_gap"] = gap
    details["contracting_three_sigma"] = 3.0 * alpha_lift.stderr
    # mixed example: base average again exactly 0 by design
    dm = zoo.mixed_with_partial_complement()
    start = BundleState(np.array([1.0]), np.array([0.0, 0.5]))
    alpha_mixed = _lift_alpha(dm.ens, dm.bs, start, 30_000, 8, seed=112)
    gap_m = abs(alpha_mixed.value - dm.truth["alpha_quotient"])
    ok &= gap_m <= 3.0 * alpha_mixed.stderr
    details["mixed_gap"] = gap_m
    details["mixed_three_sigma"] = 3.0 * alpha_mixed.stderr
    dt = time.perf_counter() - t0
    return CriterionResult(11, "lift preserves the cocycle average",
                           bool(ok), dt, 120.0, details)


def c12_uniform_growth_floor() -> CriterionResult:
    t0 = time.perf_counter()
    ds = zoo.two_block_floor()
    floor = uniform_growth_floor(ds.ens, 1000, 100, seed=113)
    dt = time.perf_counter() - t0
    return CriterionResult(12, "uniform growth floor above beta_min - 0.05",
                           floor >= -0.25 and dt < 60.0, dt, 60.0,
                           {"floor": floor, "designed_beta_min": ds.truth["beta_min"]})


def c13_transpose_support() -> CriterionResult:
    t0 = time.perf_counter()
    ds = zoo.transpose_support_example()
    v1 = transpose_dual_space(ds.ens, 1, 20_000, 10, seed=114)
    angle = principal_angle_distance(v1, ds.truth["v1"])
    cloud = birkhoff_empirical(ds.ens, proj_normalize([1.0, 1.0]), 100_000,
                               10_000, spawn_rng(1014))
    mass = cloud.mass_near_subspace(v1, 1e-2)
    dt = time.perf_counter() - t0
    ok = angle <= 1e-6 and mass >= 0.99 and dt < 120.0
    return CriterionResult(13, "top-average occupation lives on the transpose dual space",
                           ok, dt, 120.0, {"v1_angle": angle, "mass": mass})


def c14_grassmannian_dichotomy() -> CriterionResult:
    t0 = time.perf_counter()
    sd = build_sl2c_semidirect()
    verdicts = {}
    escapes = {}
    probes = {}
    ok = True
    for k in range(4):
        rep = grassmannian_experiment(k, sd, 10_000, seed=115)
        verdicts[k] = rep.verdict
        escapes[k] = rep.escape_at_calibrated
        probes[k] = rep.probe.max_discrepancy if rep.probe is not None else None
        if k in (0, 1):
            ok &= rep.verdict == "no-stationary" and rep.escape_at_calibrated >= 0.95
        else:
            ok &= (rep.verdict == "unique-stationary"
                   and rep.escape_at_calibrated <= 0.05
                   and rep.probe is not None
                   and rep.probe.max_discrepancy <= 0.05)
    dt = time.perf_counter() - t0
    return CriterionResult(14, "affine-plane dichotomy: escape for k<=1, uniqueness for k>=2",
                           bool(ok) and dt < 300.0, dt, 300.0,
                           {"verdicts": {str(k): v for k, v in verdicts.items()},
                            "escape_fractions": {str(k): v for k, v in escapes.items()},
                            "probes": {str(k): v for k, v in probes.items()}})


def c15_levi_spectrum() -> CriterionResult:
    t0 = time.perf_counter()
    rep = levi_spectrum_check(build_sl2c_semidirect(), 1, 80_000, 12, seed=116)
    dt = time.perf_counter() - t0
    ok = rep.max_gap_sigmas <= 3.0 and dt < 120.0
    return CriterionResult(15, "translation part leaves the wedge spectrum unchanged",
                           ok, dt, 120.0,
                           {"max_gap": rep.max_gap,
                            "pooled_stderr": rep.pooled_stderr,
                            "sigmas": rep.max_gap_sigmas})


def c16_determinism() -> CriterionResult:
    t0 = time.perf_counter()
    prev = parallel.get_threads()
    try:
        parallel.set_threads(1)
        spec_a = spectrum(build_sl2c_ensemble(), 20_000, 8, seed=117)
        rep_a = grassmannian_experiment(2, build_sl2c_semidirect(), 5_000, seed=118)
        parallel.set_threads(4)
        spec_b = spectrum(build_sl2c_ensemble(), 20_000, 8, seed=117)
        rep_b = grassmannian_experiment(2, build_sl2c_semidirect(), 5_000, seed=118)
    finally:
        parallel.set_threads(prev)
    spec_equal = all(
        a.value == b.value and a.stderr == b.stderr for a, b in zip(spec_a, spec_b)
    )
    dump_a = json.dumps(to_jsonable(rep_a), sort_keys=True)
    dump_b = json.dumps(to_jsonable(rep_b), sort_keys=True)
    dt = time.perf_counter() - t0
    ok = spec_equal and dump_a == dump_b
    return CriterionResult(16, "byte-identical reruns at any thread count",
                           ok, dt, 120.0,
                           {"spectrum_equal": spec_equal,
                            "report_equal": dump_a == dump_b})


CRITERIA = [
    c01_exact_spectra,
    c02_zero_exponent,
    c03_wedge_consistency,
    c04_sl2c_spectrum_shape,
    c05_affine_filtration,
    c06_drift_bound,
    c07_cocycle_laws,
    c08_contracting_uniqueness,
    c09_expanding_nonexistence,
    c10_expanding_with_complement,
    c11_cocycle_average_preserved,
    c12_uniform_growth_floor,
    c13_transpose_support,
    c14_grassmannian_dichotomy,
    c15_levi_spectrum,
    c16_determinism,
]


def run_all(echo=None) -> list[CriterionResult]:
    warmup()
    results = []
    for fn in CRITERIA:
        res = fn()
        results.append(res)
        if echo is not None:
            echo(res.line())
    return results
