from fractions import Fraction

import numpy as np
import pytest

import projlift.zoo as zoo
from projlift.ensembles import (
    BlockSystem,
    dirac,
    finite_ensemble,
    quotient_ensemble,
    restrict_to_invariant,
    transpose_ensemble,
)
from projlift.estimates import GrowthEstimate
from projlift.fkh import (
    ClosureError,
    FiltrationError,
    FkhReport,
    find_invariant_subspace,
    fkh_estimate,
    transpose_dual_space,
)
from projlift.linalg import Subspace, principal_angle_distance
from projlift.lyapunov import vector_growth


def rational_orbit_closure_dim(atoms, seed_vec):
    """Exact orbit-span closure over the rationals (oracle for the float
    version): row-reduce with Fraction arithmetic until the rank stops."""
    def rref_rank(rows):
        rows = [list(r) for r in rows]
        rank, ncols = 0, len(rows[0])
        for col in range(ncols):
            piv = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
            if piv is None:
                continue
            rows[rank], rows[piv] = rows[piv], rows[rank]
            inv = Fraction(1, 1) / rows[rank][col]
            rows[rank] = [x * inv for x in rows[rank]]
            for i in range(len(rows)):
                if i != rank and rows[i][col] != 0:
                    f = rows[i][col]
                    rows[i] = [a - f * b for a, b in zip(rows[i], rows[rank])]
            rank += 1
        return rank, rows[:rank]

    basis = [[Fraction(x) for x in seed_vec]]
    rank, basis = rref_rank(basis)
    while True:
        images = [
            [sum(Fraction(g[i][j]) * v[j] for j in range(len(v)))
             for i in range(len(v))]
            for g in atoms
            for v in basis
        ]
        new_rank, new_basis = rref_rank(basis + images)
        if new_rank == rank:
            return rank
        rank, basis = new_rank, new_basis


class TestInvariantSubspaceSearch:
    def test_eigenline(self):
        space = find_invariant_subspace(dirac(np.diag([2.0, 3.0])), [[1.0, 0.0]])
        assert space.dim == 1
        assert principal_angle_distance(space, Subspace.span_of_coords(2, [0])) <= 1e-12

    def test_common_invariant_line(self):
        atoms = np.array([[[1.0, 1.0], [0.0, 1.0]], [[1.0, 0.0], [0.0, 2.0]]])
        space = find_invariant_subspace(finite_ensemble(atoms), [[1.0, 0.0]])
        assert space.dim == 1

    def test_irreducible_pair_fills_space(self):
        # oracle: exact rational orbit-span closure on the same atoms
        atoms = [[[2, 1], [1, 1]], [[1, 1], [1, 2]]]
        seed = [1, 1]
        oracle_dim = rational_orbit_closure_dim(atoms, seed)
        ens = zoo.irreducible_proximal_2x2()
        space = find_invariant_subspace(ens, [np.array(seed, dtype=float)])
        assert space.dim == oracle_dim == 2

    def test_closure_check_holds(self):
        ds = zoo.mixed_with_partial_complement()
        for seed in (np.eye(3)[1], np.eye(3)[2], np.array([0.0, 1.0, 0.5])):
            space = find_invariant_subspace(ds.ens, [seed])
            for g in ds.ens.atoms:
                for j in range(space.dim):
                    img = g @ space.basis[:, j]
                    assert space.distance_to(img) <= 1e-8 * np.linalg.norm(img)

    def test_word_budget_exhaustion_reported(self):
        ens = zoo.irreducible_proximal_2x2()
        with pytest.raises(ClosureError):
            find_invariant_subspace(ens, [[1.0, 0.0]], max_words=0)


class TestFiltrationEstimate:
    def test_irreducible_single_level(self):
        rep = fkh_estimate(zoo.irreducible_proximal_2x2(), 5_000, 6, seed=30)
        assert rep.levels == 1
        assert rep.filtration[0].dim == 2

    def test_contracting_affine_two_levels(self):
        ens, bs = zoo.affine_scalar(-0.2)
        rep = fkh_estimate(ens, 20_000, 10, seed=31)
        assert rep.levels == 2
        assert principal_angle_distance(rep.filtration[1], bs.invariant) <= 1e-6
        assert abs(rep.estimates[1].value + 0.2) <= 3.0 * rep.estimates[1].stderr

    def test_expanding_affine_single_level(self):
        ens, _ = zoo.affine_scalar(+0.2)
        rep = fkh_estimate(ens, 20_000, 10, seed=32)
        assert rep.levels == 1

    def test_mixed_restricted_levels(self):
        ds = zoo.mixed_with_partial_complement()
        rep = fkh_estimate(restrict_to_invariant(ds.bs, ds.ens), 20_000, 10, seed=33)
        assert rep.levels == 2
        assert rep.exponents[0] == pytest.approx(0.3, abs=0.02)
        assert rep.exponents[1] == pytest.approx(-0.3, abs=0.02)
        assert rep.filtration[1].dim == 1

    def test_exponents_strictly_decreasing(self):
        ds = zoo.mixed_with_partial_complement()
        rep = fkh_estimate(restrict_to_invariant(ds.bs, ds.ens), 10_000, 6, seed=34)
        assert all(a > b for a, b in zip(rep.exponents, rep.exponents[1:]))

    def test_quotient_of_consecutive_layers_is_flat(self):
        # collapsing the flag one layer should leave a single growth level
        ds = zoo.mixed_with_partial_complement()
        w_ens = restrict_to_invariant(ds.bs, ds.ens)
        rep = fkh_estimate(w_ens, 10_000, 6, seed=35)
        bs2 = BlockSystem.from_subspace(rep.filtration[1], block_tol=1e-6)
        quotient_rep = fkh_estimate(quotient_ensemble(bs2, w_ens), 10_000, 6, seed=36)
        assert quotient_rep.levels == 1

    def test_layer_vectors_grow_at_layer_rate(self):
        ds = zoo.mixed_with_partial_complement()
        w_ens = restrict_to_invariant(ds.bs, ds.ens)
        fast = vector_growth(w_ens, [1.0, 0.7], 20_000, 10, seed=37)
        slow = vector_growth(w_ens, [0.0, 1.0], 20_000, 10, seed=38)
        assert abs(fast.value - 0.3) <= 3.0 * fast.stderr + 1e-12
        assert abs(slow.value + 0.3) <= 3.0 * slow.stderr + 1e-12

    def test_inconsistent_report_rejected(self):
        good = [Subspace.full(2), Subspace.span_of_coords(2, [0])]
        with pytest.raises(FiltrationError):
            FkhReport(exponents=[0.0, 1.0], filtration=good,
                      estimates=[GrowthEstimate(0.0, 0.0, 1, 1)] * 2)
        with pytest.raises(FiltrationError):
            FkhReport(exponents=[1.0], filtration=good,
                      estimates=[GrowthEstimate(1.0, 0.0, 1, 1)])


class TestTransposeDual:
    def test_irreducible_gives_full_space(self):
        space = transpose_dual_space(zoo.irreducible_proximal_2x2(), 1,
                                     5_000, 6, seed=40)
        assert space.dim == 2

    def test_designed_upper_triangular(self):
        ds = zoo.transpose_support_example()
        space = transpose_dual_space(ds.ens, 1, 20_000, 10, seed=41)
        assert space.dim == 1
        assert principal_angle_distance(space, ds.truth["v1"]) <= 1e-6

    def test_symmetric_atoms_self_dual(self):
        sym = np.array([[[2.0, 1.0], [1.0, 1.0]], [[1.0, 1.0], [1.0, 2.0]]])
        ens = finite_ensemble(sym)
        a = transpose_dual_space(ens, 1, 5_000, 6, seed=42)
        b = transpose_dual_space(transpose_ensemble(ens), 1, 5_000, 6, seed=42)
        assert a.dim == b.dim
        assert principal_angle_distance(a, b) <= 1e-9
