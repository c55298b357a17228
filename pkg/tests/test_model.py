"""
Tests for liepool.model: the two-electron, four-spin-orbital example end to end.
"""
import itertools
import math

import numpy as np
import pytest
import scipy.linalg
import scipy.optimize

from liepool import model
from liepool.fermion_ops import SymmetryKind, is_singlet_tensor, symmetry_operator
from liepool.lie_engine import (Subalgebra, center, is_su2_triple, rank_extend, same_span, structure_constants,
                                su2_constants, symmetry_adapt)
from liepool.pauli_core import commutator
from liepool.sim import (Objective, StateVector, apply_exp_sum, build_ansatz, expectation, fidelity, number_sector,
                         optimize, orderscan, sector_residual)

# Amplitude grid with spacing pi/100 over one period
GRID_POINTS = 200


def two_electron_superposition(rng) -> StateVector:
    amplitudes = np.zeros(16, dtype=complex)
    for state in number_sector(4, 2):
        amplitudes[state.basis_index()] = rng.normal() + 1j * rng.normal()
    return StateVector.from_amplitudes(amplitudes, normalize=True)


class TestFixtures:
    def test_reference_is_index_three(self):
        assert model.reference_state().basis_index() == 3

    def test_target_amplitudes(self):
        amplitudes = model.target_state().amplitudes
        assert amplitudes[6] == pytest.approx(-1 / math.sqrt(2))
        assert amplitudes[9] == pytest.approx(1 / math.sqrt(2))
        assert np.count_nonzero(np.abs(amplitudes) > 1e-12) == 2

    def test_target_is_a_singlet(self):
        s2 = symmetry_operator(SymmetryKind.S2, model.LAYOUT)
        assert abs(expectation(s2, model.target_state())) < 1e-12

    def test_generators_are_antihermitian(self):
        assert all(generator.is_antihermitian() for generator in model.generators())

    def test_unknown_ordering(self):
        with pytest.raises(ValueError):
            model.ordering_factors("312")


class TestClosure:
    def test_dimension_eight(self, model_algebra):
        assert model_algebra.dimension == 8

    def test_matches_displayed_algebra(self, model_algebra):
        assert same_span(model_algebra.basis, list(model.displayed_algebra().values()))

    def test_two_commuting_su2_blocks(self, model_algebra):
        first, second = model.su2_blocks()
        for a, b in itertools.product(first, second):
            assert commutator(a, b).norm() < 1e-10
        for block in (first, second):
            structure_constants(Subalgebra(model.N_QUBITS, block))
        assert same_span(model_algebra.basis, model.displayed_center() + first + second)


class TestCenter:
    def test_dimension_two(self, model_algebra):
        assert center(model_algebra).dimension == 2

    def test_matches_displayed_center(self, model_algebra):
        assert same_span(center(model_algebra).basis, model.displayed_center())

    def test_annihilates_two_electron_sector(self, model_algebra):
        sector = number_sector(4, 2)
        for element in center(model_algebra).basis:
            assert sector_residual(element, sector) <= 1e-10

    def test_exponential_is_inert_on_sector(self, model_algebra, rng):
        psi = two_electron_superposition(rng)
        for element in center(model_algebra).basis:
            assert apply_exp_sum(element, psi, rng.uniform(-3, 3)).distance(psi) <= 1e-10


class TestSymmetryAdaptation:
    def test_dimension_four_containing_a1_to_a4(self, model_algebra):
        adapted = symmetry_adapt(model_algebra, model.symmetries())
        assert adapted.dimension == 4
        for name, element in model.adapted_elements().items():
            extension = rank_extend(adapted.basis, element)
            assert not extension.independent, name
            assert extension.residual.norm() <= 1e-9 * element.norm()

    def test_adapted_elements_are_singlets(self):
        for element in model.adapted_elements().values():
            assert is_singlet_tensor(element, model.LAYOUT)

    def test_adapted_center_is_a_c(self, model_algebra):
        adapted = symmetry_adapt(model_algebra, model.symmetries())
        found = center(adapted)
        assert found.dimension == 1
        assert same_span(found.basis, [model.adapted_center()])

    def test_a_c_annihilates_sector(self):
        assert sector_residual(model.adapted_center(), number_sector(4, 2)) <= 1e-10

    def test_su2_triple(self):
        constants = su2_constants(*model.adapted_su2())
        assert all(abs(abs(value) - 1) <= 1e-9 for value in constants)
        assert len({math.copysign(1.0, value) for value in constants}) == 1
        assert is_su2_triple(*model.adapted_su2())

    def test_ansatz_conserves_symmetries(self, rng):
        ref = model.reference_state()
        factors = model.ordering_factors("adapted")
        state = build_ansatz(factors, ref, rng.uniform(-math.pi, math.pi, size=len(factors)))
        for symmetry in model.symmetries():
            assert expectation(symmetry, state) == pytest.approx(expectation(symmetry, ref), abs=1e-9)


class TestOrderings:
    """Fidelity of each ordering against the open-shell target."""

    def test_adapted_orderings_reach_target(self, fast_seeds):
        scan = orderscan(model.ordering_factors("adapted"), model.reference_state(),
                         Objective.max_fidelity(model.target_state()), seeds=fast_seeds)
        assert len(scan.results) == 6
        assert all(result.value >= 1 - 1e-8 for result in scan.results)
        assert scan.invariant

    def test_two_one_one_cannot_reach_target(self, fast_seeds):
        result = optimize(model.ordering_factors("211"), model.reference_state(),
                          Objective.max_fidelity(model.target_state()), seeds=fast_seeds)
        assert result.value < 1 - 1e-3
        assert result.value == pytest.approx(1 / math.sqrt(2), abs=1e-6)

    def test_two_one_one_grid_oracle(self):
        factors = model.ordering_factors("211")
        ref, target = model.reference_state(), model.target_state()
        grid = np.arange(-GRID_POINTS // 2, GRID_POINTS // 2) * (math.pi / (GRID_POINTS // 2))
        first, second, third = (factor.generator.to_matrix() for factor in factors)

        # <target| U0(t0) on one axis, U1(t1) U2(t2) |ref> on the other two
        bras = np.array([target.amplitudes.conj() @ scipy.linalg.expm(t * first) for t in grid])
        third_kets = np.array([scipy.linalg.expm(t * third) @ ref.amplitudes for t in grid])
        kets = np.concatenate([third_kets @ scipy.linalg.expm(t * second).T for t in grid])
        overlaps = np.abs(bras @ kets.T)
        assert overlaps.max() <= 1 / math.sqrt(2) + 1e-9

        row, column = np.unravel_index(np.argmax(overlaps), overlaps.shape)
        start = np.array([grid[row], grid[column // GRID_POINTS], grid[column % GRID_POINTS]])
        refined = scipy.optimize.minimize(lambda x: -fidelity(target, build_ansatz(factors, ref, x)), start,
                                          method="BFGS", tol=1e-12)
        assert -refined.fun == pytest.approx(1 / math.sqrt(2), abs=1e-6)

    def test_one_two_one_reaches_target(self, fast_seeds):
        result = optimize(model.ordering_factors("121"), model.reference_state(),
                          Objective.max_fidelity(model.target_state()), seeds=fast_seeds)
        assert result.value >= 1 - 1e-8

    def test_kappa_orderings_are_order_dependent(self, fast_seeds):
        scan = orderscan(model.ordering_factors("211"), model.reference_state(),
                         Objective.max_fidelity(model.target_state()), seeds=fast_seeds)
        assert scan.spread > 1e-3
        assert not scan.invariant


class TestPipeline:
    def test_default_run_passes(self, fast_seeds):
        run = model.run_pipeline(seeds=fast_seeds)
        assert run.ok, run.failed_stages
        assert [stage.name for stage in run.stages] == ["closure", "center", "decomposition", "symmetrize",
                                                        "adapted_center", "su2", "fidelity"]
        assert run.stage("closure").details["dimension"] == 8
        assert run.stage("center").details["dimension"] == 2
        assert run.stage("symmetrize").details["dimension"] == 4
        assert run.stage("fidelity").details["invariant"]

    def test_two_one_one_is_an_expected_failure(self, fast_seeds):
        run = model.run_pipeline(ordering="211", seeds=fast_seeds)
        assert run.ok
        assert run.stage("fidelity").status == "expected-failure"

    def test_without_symmetry(self, fast_seeds):
        run = model.run_pipeline(use_symmetry=False, seeds=fast_seeds, max_permutations=2)
        assert run.ok, run.failed_stages
        assert run.stage("symmetrize").status == "skipped"
        assert run.stage("fidelity").details["permutations_scanned"] == 2

    def test_unknown_ordering(self):
        with pytest.raises(ValueError):
            model.run_pipeline(ordering="312")
