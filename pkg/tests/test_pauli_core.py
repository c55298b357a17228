"""
Tests for liepool.pauli_core: products, commutators, canonical sums and the text format.
"""
import itertools

import numpy as np
import pytest

from liepool.pauli_core import (NotAntiHermitian, ParseError, PauliSum, PauliTerm, QubitCountMismatch, commutator,
                                commutes, format_complex, format_pauli_sum, is_antihermitian, parse_complex,
                                parse_pauli_sum, pauli_mul, pauli_sum_blocks)


class TestPauliTerm:
    """String round trips and masks."""

    def test_masks_follow_qubit_order(self):
        term = PauliTerm.from_string("XIZY")
        assert term.x_mask == 0b1001
        assert term.z_mask == 0b1100
        assert term.to_string() == "XIZY"

    def test_identity(self):
        assert PauliTerm.from_string("III").is_identity
        assert not PauliTerm.from_string("IZI").is_identity

    def test_invalid_character_raises(self):
        with pytest.raises(ParseError):
            PauliTerm.from_string("XQ")

    def test_masks_out_of_range_raise(self):
        with pytest.raises(AssertionError):
            PauliTerm(2, 0b100, 0)


class TestPauliMul:
    """Products carry their phase as a power of i."""

    def test_single_qubit_table(self):
        x, y, z = (PauliTerm.from_string(c) for c in "XYZ")
        assert pauli_mul(x, y) == PauliTerm.from_string("Z", 1j)
        assert pauli_mul(y, z) == PauliTerm.from_string("X", 1j)
        assert pauli_mul(z, x) == PauliTerm.from_string("Y", 1j)
        assert pauli_mul(y, x) == PauliTerm.from_string("Z", -1j)

    def test_squares_are_identity(self):
        for label in ("X", "Y", "Z", "XYZ", "YYY"):
            term = PauliTerm.from_string(label)
            assert pauli_mul(term, term) == PauliTerm.from_string("I" * len(label))

    def test_matches_dense_product(self, rng, dense_pauli, random_label):
        for _ in range(50):
            a_label, b_label = random_label(rng, 3), random_label(rng, 3)
            product = pauli_mul(PauliTerm.from_string(a_label), PauliTerm.from_string(b_label))
            expected = dense_pauli(a_label) @ dense_pauli(b_label)
            assert np.allclose(product.to_sum().to_matrix(), expected)

    def test_associative(self, rng, random_label):
        phases = (1, 1j, -1, -1j)
        for n_qubits in range(1, 7):
            for _ in range(20):
                a, b, c = (PauliTerm.from_string(random_label(rng, n_qubits), phases[rng.integers(4)])
                           for _ in range(3))
                assert pauli_mul(pauli_mul(a, b), c) == pauli_mul(a, pauli_mul(b, c))

    def test_qubit_mismatch_raises(self):
        with pytest.raises(QubitCountMismatch):
            pauli_mul(PauliTerm.from_string("X"), PauliTerm.from_string("XX"))


class TestCommutes:
    """Symplectic commutation check."""

    def test_same_qubit_pairs(self):
        assert commutes(PauliTerm.from_string("X"), PauliTerm.from_string("X"))
        assert not commutes(PauliTerm.from_string("X"), PauliTerm.from_string("Z"))
        assert not commutes(PauliTerm.from_string("Y"), PauliTerm.from_string("Z"))

    def test_two_anticommuting_positions_commute(self):
        assert commutes(PauliTerm.from_string("XZ"), PauliTerm.from_string("ZX"))
        assert commutes(PauliTerm.from_string("XY"), PauliTerm.from_string("YX"))

    def test_agrees_with_dense_oracle(self, rng, dense_pauli, random_label):
        for _ in range(50):
            a_label, b_label = random_label(rng, 3), random_label(rng, 3)
            a, b = dense_pauli(a_label), dense_pauli(b_label)
            expected = np.allclose(a @ b, b @ a)
            assert commutes(PauliTerm.from_string(a_label), PauliTerm.from_string(b_label)) is expected


class TestPauliSum:
    """Canonical form and arithmetic."""

    def test_like_terms_merge_and_small_terms_drop(self):
        s = PauliSum.from_items(2, [((1, 0), 0.5), ((1, 0), 0.5), ((0, 1), 1e-14)])
        assert s.keys() == [(1, 0)]
        assert s.coefficient((1, 0)) == 1.0

    def test_terms_sorted_by_masks(self):
        s = PauliSum.from_terms(2, [PauliTerm.from_string("ZI"), PauliTerm.from_string("XX"),
                                    PauliTerm.from_string("XI")])
        assert s.keys() == sorted(s.keys())

    def test_cancellation_gives_empty(self):
        s = PauliSum.from_string("XY")
        assert (s - s).is_empty
        assert not (s - s)

    def test_equality_is_structural(self):
        a = PauliSum.from_string("XZ", 0.5j) + PauliSum.from_string("ZZ", 1.0)
        b = PauliSum.from_string("ZZ", 1.0) + PauliSum.from_string("XZ", 0.5j)
        assert a == b
        assert hash(a) == hash(b)

    def test_scalar_addition_uses_identity(self):
        s = PauliSum.from_string("ZI") + 1.0
        assert s.coefficient((0, 0)) == 1.0

    def test_product_matches_dense(self, rng, random_hamiltonian):
        a, b = random_hamiltonian(rng, 3, 5), random_hamiltonian(rng, 3, 5)
        assert np.allclose((a * b).to_matrix(), a.to_matrix() @ b.to_matrix())

    def test_adjoint_conjugates(self):
        s = PauliSum.from_string("XY", 1 + 2j)
        assert s.adjoint().coefficient(s.keys()[0]) == 1 - 2j

    def test_hermitian_and_antihermitian(self):
        s = PauliSum.from_string("XY", 0.3)
        assert s.is_hermitian()
        assert not s.is_antihermitian()
        assert (s * 1j).is_antihermitian()
        assert is_antihermitian(s * 1j)

    def test_apply_matches_matrix(self, rng, random_hamiltonian, random_state):
        h = random_hamiltonian(rng, 4)
        psi = random_state(rng, 4)
        assert np.allclose(h.apply(psi.amplitudes), h.to_matrix() @ psi.amplitudes)

    def test_single_term(self):
        assert PauliSum.from_string("XZ", 2.0).single_term() == PauliTerm.from_string("XZ", 2.0)
        assert (PauliSum.from_string("XZ") + PauliSum.from_string("ZX")).single_term() is None

    def test_mismatched_addition_raises(self):
        with pytest.raises(QubitCountMismatch):
            PauliSum.from_string("X") + PauliSum.from_string("XX")

    def test_not_antihermitian_is_value_error(self):
        assert issubclass(NotAntiHermitian, ValueError)


class TestCommutator:
    """[a, b] via anticommuting term pairs only."""

    def test_x_y(self):
        bracket = commutator(PauliSum.from_string("X"), PauliSum.from_string("Y"))
        assert bracket == PauliSum.from_string("Z", 2j)

    def test_commuting_terms_give_zero(self):
        assert commutator(PauliSum.from_string("XX"), PauliSum.from_string("YY")).is_empty

    def test_matches_dense(self, rng, random_hamiltonian):
        a, b = random_hamiltonian(rng, 3, 6), random_hamiltonian(rng, 3, 6)
        dense = a.to_matrix() @ b.to_matrix() - b.to_matrix() @ a.to_matrix()
        assert np.allclose(commutator(a, b).to_matrix(), dense)

    def test_antisymmetry(self, rng, random_hamiltonian):
        a, b = random_hamiltonian(rng, 3), random_hamiltonian(rng, 3)
        assert commutator(a, b).isclose(-commutator(b, a))

    def test_jacobi_identity(self, rng, random_hamiltonian):
        for _ in range(10):
            a, b, c = (random_hamiltonian(rng, 3, 4) * 1j for _ in range(3))
            total = (commutator(a, commutator(b, c)) + commutator(b, commutator(c, a))
                     + commutator(c, commutator(a, b)))
            assert total.norm() <= 1e-10

    def test_antihermitian_closed_under_bracket(self, rng, random_hamiltonian):
        a, b = random_hamiltonian(rng, 4) * 1j, random_hamiltonian(rng, 4) * 1j
        assert commutator(a, b).is_antihermitian()


class TestTextFormat:
    """Coefficient and term-line parsing."""

    @pytest.mark.parametrize("value", [0.5j, -0.25 + 1j, 1.0, -3.5, 0.1 - 0.2j])
    def test_complex_round_trip(self, value):
        assert parse_complex(format_complex(value)) == value

    def test_format_uses_i_suffix(self):
        assert format_complex(0.5j) == "0.0+0.5i"
        assert format_complex(-1 - 0.5j) == "-1.0-0.5i"

    def test_parse_sum(self):
        s = parse_pauli_sum("0.0+0.5i XZY\n# comment\n1.0 IIZ  # trailing\n")
        assert s.n_qubits == 3
        assert s.coefficient(PauliTerm.from_string("XZY").key) == 0.5j
        assert s.coefficient(PauliTerm.from_string("IIZ").key) == 1.0

    def test_bare_string_has_unit_coefficient(self):
        assert parse_pauli_sum("XY") == PauliSum.from_string("XY")

    def test_formatted_lines_reparse(self, rng, random_hamiltonian):
        s = random_hamiltonian(rng, 4) * (0.3 + 0.7j)
        assert parse_pauli_sum("\n".join(format_pauli_sum(s))) == s

    def test_report_lines_round_trip_exactly(self, rng, random_label, model_algebra):
        for n_qubits in range(1, 7):
            terms = [PauliTerm.from_string(random_label(rng, n_qubits), complex(rng.normal(), rng.normal()))
                     for _ in range(6)]
            s = PauliSum.from_terms(n_qubits, terms)
            assert parse_pauli_sum("\n".join(format_pauli_sum(s)), n_qubits) == s
        for element in model_algebra.basis:
            assert parse_pauli_sum("\n".join(format_pauli_sum(element)), element.n_qubits) == element

    def test_bad_lines_raise(self):
        with pytest.raises(ParseError):
            parse_pauli_sum("1.0 XY extra")
        with pytest.raises(ParseError):
            parse_pauli_sum("abc XY")
        with pytest.raises(ParseError):
            parse_pauli_sum("1.0 XY\n1.0 XYZ")

    def test_blocks_without_separator_are_single_terms(self):
        blocks = pauli_sum_blocks("1.0 XI\n1.0 IX\n")
        assert blocks == [PauliSum.from_string("XI"), PauliSum.from_string("IX")]

    def test_blocks_with_separator(self):
        blocks = pauli_sum_blocks("0.5 XY\n0.5 YX\n---\n1.0 ZZ\n")
        assert len(blocks) == 2
        assert len(blocks[0]) == 2

    def test_pairwise_products_over_all_two_qubit_strings(self, dense_pauli):
        labels = ["".join(p) for p in itertools.product("IXYZ", repeat=2)]
        for a_label, b_label in itertools.product(labels, labels):
            product = PauliSum.from_string(a_label) * PauliSum.from_string(b_label)
            assert np.allclose(product.to_matrix(), dense_pauli(a_label) @ dense_pauli(b_label))
