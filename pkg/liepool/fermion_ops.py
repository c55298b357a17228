"""
Second-quantized operators, the Jordan-Wigner map and spin-symmetry operators.

Spin orbitals are interleaved: mode 2p is spatial orbital p with alpha spin,
mode 2p+1 the same orbital with beta spin. Occupied modes are qubit state |1>.

    a_p   -> Z_0 .. Z_{p-1} (X_p + iY_p) / 2
    a_p^+ -> Z_0 .. Z_{p-1} (X_p - iY_p) / 2

Fermion text format, one term per line:

    modes: 2            # spatial orbitals (optional header, `layout:` is an alias)
    1.0 3^ 0            # <complex-coeff> then `p^` (creation) or `p` (annihilation)
"""

import enum
import logging
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from liepool.pauli_core import (GENERATOR_SEPARATOR, ParseError, PauliSum, commutator,
                                format_complex, parse_complex)
from liepool.utils import EPS_COEFF

Ladder = Tuple[int, bool]
FermionString = Tuple[Ladder, ...]

_TOKEN = re.compile(r"^(\d+)(\^?)$")
_HEADER = re.compile(r"^(modes|layout)\s*:\s*(\d+)$")

logger = logging.getLogger(__name__)


class FermionIndexError(ValueError):
    """Mode indices out of range, repeated or overlapping."""


def _normal_order_string(string: FermionString, coeff: complex, out: Dict[FermionString, complex]) -> None:
    """Accumulate the normal-ordered expansion of coeff * string into out."""
    ops = list(string)
    for i in range(1, len(ops)):
        for j in range(i, 0, -1):
            left, right = ops[j - 1], ops[j]
            if right[1] and not left[1]:
                if right[0] == left[0]:
                    # a_p a_p^+ = 1 - a_p^+ a_p
                    _normal_order_string(tuple(ops[:j - 1] + ops[j + 1:]), coeff, out)
                ops[j - 1], ops[j] = right, left
                coeff = -coeff
            elif right[1] == left[1]:
                if right[0] == left[0]:
                    return
                if right[0] > left[0]:
                    ops[j - 1], ops[j] = right, left
                    coeff = -coeff
    key = tuple(ops)
    out[key] = out.get(key, 0) + coeff


class FermionOperator:
    """
    Sum of ladder-operator strings, kept in normal order.

    Creation operators stand left of annihilators and indices descend within
    each block; the anticommutation sign is folded into the coefficient.
    """
    __slots__ = ("n_spinorbitals", "_terms")

    def __init__(self, n_spinorbitals: int, terms: Optional[Mapping[FermionString, complex]] = None) -> None:
        assert isinstance(n_spinorbitals, int) and n_spinorbitals > 0
        ordered: Dict[FermionString, complex] = {}
        for string, coeff in (terms or {}).items():
            for mode, _ in string:
                if not 0 <= mode < n_spinorbitals:
                    raise FermionIndexError(f"mode {mode} outside 0..{n_spinorbitals - 1}")
            _normal_order_string(tuple(string), complex(coeff), ordered)
        self.n_spinorbitals = n_spinorbitals
        self._terms = {k: c for k, c in sorted(ordered.items(), key=_string_order) if abs(c) >= EPS_COEFF}

    @classmethod
    def ladder(cls, n_spinorbitals: int, mode: int, dagger: bool) -> "FermionOperator":
        return cls(n_spinorbitals, {((mode, dagger),): 1.0})

    @classmethod
    def identity(cls, n_spinorbitals: int, coeff: complex = 1.0) -> "FermionOperator":
        return cls(n_spinorbitals, {(): coeff})

    def terms(self) -> List[Tuple[complex, FermionString]]:
        return [(coeff, string) for string, coeff in self._terms.items()]

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FermionOperator):
            return NotImplemented
        return self.n_spinorbitals == other.n_spinorbitals and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.n_spinorbitals, tuple(self._terms.items())))

    def isclose(self, other: "FermionOperator", tol: float = 1e-10) -> bool:
        keys = set(self._terms) | set(other._terms)
        return all(abs(self._terms.get(k, 0) - other._terms.get(k, 0)) <= tol for k in keys)

    def _check(self, other: "FermionOperator") -> None:
        if self.n_spinorbitals != other.n_spinorbitals:
            raise FermionIndexError(f"{self.n_spinorbitals} modes vs {other.n_spinorbitals} modes")

    def __add__(self, other: "FermionOperator") -> "FermionOperator":
        self._check(other)
        merged = dict(self._terms)
        for string, coeff in other.items():
            merged[string] = merged.get(string, 0) + coeff
        return FermionOperator(self.n_spinorbitals, merged)

    def __neg__(self) -> "FermionOperator":
        return self * -1

    def __sub__(self, other: "FermionOperator") -> "FermionOperator":
        return self + (-other)

    def __mul__(self, other) -> "FermionOperator":
        if isinstance(other, (int, float, complex, np.number)):
            return FermionOperator(self.n_spinorbitals, {k: c * other for k, c in self.items()})
        self._check(other)
        product: Dict[FermionString, complex] = {}
        for s1, c1 in self.items():
            for s2, c2 in other.items():
                _normal_order_string(s1 + s2, c1 * c2, product)
        return FermionOperator(self.n_spinorbitals, product)

    def __rmul__(self, other: complex) -> "FermionOperator":
        return self * other

    def adjoint(self) -> "FermionOperator":
        return FermionOperator(self.n_spinorbitals, {
            tuple((mode, not dagger) for mode, dagger in reversed(string)): coeff.conjugate()
            for string, coeff in self.items()})

    def is_antihermitian(self, tol: float = 1e-10) -> bool:
        return (self + self.adjoint()).isclose(FermionOperator(self.n_spinorbitals), tol)

    def __repr__(self) -> str:
        return f"FermionOperator({self.n_spinorbitals}, {format_fermion_operator(self)})"


def _string_order(item):
    string, _ = item
    return (len(string), [(not dagger, -mode) for mode, dagger in string])


def fermion_commutator(f: FermionOperator, g: FermionOperator) -> FermionOperator:
    return f * g - g * f


def number_operator(mode: int, n_spinorbitals: int) -> FermionOperator:
    return FermionOperator(n_spinorbitals, {((mode, True), (mode, False)): 1.0})


@dataclass(frozen=True)
class SpinOrbitalLayout:
    """Interleaved alpha/beta spin-orbital layout over n_spatial orbitals."""
    n_spatial: int

    def __post_init__(self):
        assert isinstance(self.n_spatial, int) and self.n_spatial > 0

    @property
    def n_modes(self) -> int:
        return 2 * self.n_spatial

    def mode(self, spatial: int, beta: bool = False) -> int:
        if not 0 <= spatial < self.n_spatial:
            raise FermionIndexError(f"spatial orbital {spatial} outside 0..{self.n_spatial - 1}")
        return 2 * spatial + int(beta)

    @classmethod
    def for_modes(cls, n_modes: int) -> "SpinOrbitalLayout":
        return cls((n_modes + 1) // 2)


@lru_cache(maxsize=None)
def _jw_ladder(n_qubits: int, mode: int, dagger: bool) -> PauliSum:
    string = (1 << mode) - 1
    sign = -0.5j if dagger else 0.5j
    return PauliSum(n_qubits, {(1 << mode, string): 0.5, (1 << mode, string | (1 << mode)): sign})


def jordan_wigner(f: FermionOperator, n_qubits: Optional[int] = None) -> PauliSum:
    """Map a FermionOperator onto qubits; one qubit per spin orbital unless n_qubits is larger."""
    n_qubits = n_qubits or f.n_spinorbitals
    if n_qubits < f.n_spinorbitals:
        raise FermionIndexError(f"{f.n_spinorbitals} modes do not fit on {n_qubits} qubits")
    result = PauliSum.zero(n_qubits)
    for string, coeff in f.items():
        image = PauliSum.identity(n_qubits, coeff)
        for mode, dagger in string:
            image = image * _jw_ladder(n_qubits, mode, dagger)
        result = result + image
    return result


def _validate_modes(occupied: Sequence[int], virtual: Sequence[int], n_spinorbitals: int) -> None:
    if not occupied or len(occupied) != len(virtual):
        raise FermionIndexError(f"need equal-length non-empty index lists, got {occupied} and {virtual}")
    everything = list(occupied) + list(virtual)
    if len(set(everything)) != len(everything):
        raise FermionIndexError(f"repeated or overlapping indices in {occupied} -> {virtual}")
    if min(everything) < 0 or max(everything) >= n_spinorbitals:
        raise FermionIndexError(f"indices {everything} outside 0..{n_spinorbitals - 1}")


def make_kappa(occupied: Sequence[int], virtual: Sequence[int],
               n_spinorbitals: Optional[int] = None) -> FermionOperator:
    """
    Anti-Hermitized n-tuple excitation.

    Returns a_{v1}^+ ... a_{vn}^+ a_{o1} ... a_{on} minus its adjoint, creators in
    `virtual` order and annihilators in `occupied` order.

    Args:
        occupied: Modes emptied by the excitation
        virtual: Modes filled by the excitation
        n_spinorbitals: Mode count of the result, default max index + 1

    Raises:
        FermionIndexError: on empty, unequal, overlapping or out-of-range index lists
    """
    if n_spinorbitals is None:
        n_spinorbitals = max(list(occupied) + list(virtual) + [0]) + 1
    _validate_modes(occupied, virtual, n_spinorbitals)
    string = tuple((v, True) for v in virtual) + tuple((o, False) for o in occupied)
    excitation = FermionOperator(n_spinorbitals, {string: 1.0})
    return excitation - excitation.adjoint()


def make_xi_pi(i: int, j: int, a: int, b: int, n_qubits: Optional[int] = None) -> Tuple[PauliSum, PauliSum]:
    """
    The two four-term halves of the double excitation kappa with annihilators on
    (i, j) and creators on (a, b); their sum is twice make_kappa([i, j], [a, b]).

    Every term of the Jordan-Wigner image carries X or Y on the four modes. Terms
    with an odd number of Y on modes j and a form xi, the rest form pi; both halves
    commute with the electron number. Signs and Z strings come from the image itself,
    so any relative order of the two pairs is allowed.

    Raises:
        FermionIndexError: unless i < j, a < b and the four modes are distinct and in range
    """
    modes = (i, j, a, b)
    if n_qubits is None:
        n_qubits = max(modes) + 1
    if not (i < j and a < b) or len(set(modes)) != 4 or min(modes) < 0 or max(modes) >= n_qubits:
        raise FermionIndexError(f"need distinct modes in 0..{n_qubits - 1} with i < j and a < b, got {modes}")

    doubled = jordan_wigner(make_kappa([i, j], [a, b], n_qubits), n_qubits) * 2
    y_modes = (1 << j) | (1 << a)
    xi, pi = [], []
    for (x_mask, z_mask), coeff in doubled.items():
        half = xi if bin(x_mask & z_mask & y_modes).count("1") % 2 else pi
        half.append(((x_mask, z_mask), coeff))
    return PauliSum.from_items(n_qubits, xi), PauliSum.from_items(n_qubits, pi)


class SymmetryKind(enum.Enum):
    NE = "ne"
    SZ = "sz"
    SPLUS = "splus"
    SMINUS = "sminus"
    S2 = "s2"


@lru_cache(maxsize=None)
def symmetry_operator(kind: SymmetryKind, layout: SpinOrbitalLayout) -> PauliSum:
    """JW image of N_e, S_z, S_+, S_- or S^2 = S_- S_+ + S_z (S_z + 1)."""
    n = layout.n_modes
    if kind is SymmetryKind.NE:
        total = FermionOperator(n, {((p, True), (p, False)): 1.0 for p in range(n)})
        return jordan_wigner(total)
    if kind is SymmetryKind.SZ:
        terms = {}
        for p in range(layout.n_spatial):
            alpha, beta = layout.mode(p), layout.mode(p, beta=True)
            terms[((alpha, True), (alpha, False))] = 0.5
            terms[((beta, True), (beta, False))] = -0.5
        return jordan_wigner(FermionOperator(n, terms))
    if kind is SymmetryKind.SPLUS:
        return jordan_wigner(FermionOperator(n, {
            ((layout.mode(p), True), (layout.mode(p, beta=True), False)): 1.0 for p in range(layout.n_spatial)}))
    if kind is SymmetryKind.SMINUS:
        return symmetry_operator(SymmetryKind.SPLUS, layout).adjoint()

    s_plus = symmetry_operator(SymmetryKind.SPLUS, layout)
    s_minus = symmetry_operator(SymmetryKind.SMINUS, layout)
    s_z = symmetry_operator(SymmetryKind.SZ, layout)
    return s_minus * s_plus + s_z * s_z + s_z


def is_singlet_tensor(op: PauliSum, layout: SpinOrbitalLayout) -> bool:
    """True iff op commutes with S_z, S_+ and S_- (rank-0 spherical tensor)."""
    return all(commutator(symmetry_operator(kind, layout), op).is_empty
               for kind in (SymmetryKind.SZ, SymmetryKind.SPLUS, SymmetryKind.SMINUS))


def build_singlet(kind: str, indices: Sequence[int], layout: SpinOrbitalLayout) -> FermionOperator:
    """
    Singlet combinations of kappa operators over spatial orbitals.

    kinds:
        single_pair (i, a):       kappa_i^a + kappa_ibar^abar
        paired_double (i, a):     kappa_{i ibar}^{a abar}
        seniority2_pair (i, a, b): kappa_{i ibar}^{a bbar} + kappa_{i ibar}^{b abar}
    """
    n = layout.n_modes
    expected = {"single_pair": 2, "paired_double": 2, "seniority2_pair": 3}
    if kind not in expected:
        raise ValueError(f"unknown singlet kind {kind!r}")
    if len(indices) != expected[kind] or len(set(indices)) != len(indices):
        raise FermionIndexError(f"{kind} needs {expected[kind]} distinct spatial indices, got {list(indices)}")

    up = layout.mode
    if kind == "single_pair":
        i, a = indices
        return make_kappa([up(i)], [up(a)], n) + make_kappa([up(i, True)], [up(a, True)], n)
    if kind == "paired_double":
        i, a = indices
        return make_kappa([up(i, True), up(i)], [up(a), up(a, True)], n)
    i, a, b = indices
    return (make_kappa([up(i, True), up(i)], [up(a), up(b, True)], n)
            + make_kappa([up(i, True), up(i)], [up(b), up(a, True)], n))


def slater_determinant(modes: Sequence[int], n_qubits: int) -> np.ndarray:
    """
    Amplitudes of a^+_{m1} a^+_{m2} ... |vac>, creators applied right to left.

    Signs follow the Jordan-Wigner convention of this module.
    """
    if len(set(modes)) != len(modes) or any(not 0 <= m < n_qubits for m in modes):
        raise FermionIndexError(f"invalid occupied modes {list(modes)} on {n_qubits} qubits")
    amplitudes = np.zeros(1 << n_qubits, dtype=np.complex128)
    amplitudes[0] = 1.0
    for mode in reversed(list(modes)):
        amplitudes = _jw_ladder(n_qubits, mode, True).apply(amplitudes)
    return amplitudes


def format_fermion_operator(f: FermionOperator) -> List[str]:
    lines = []
    for coeff, string in f.terms():
        tokens = " ".join(f"{mode}^" if dagger else f"{mode}" for mode, dagger in string)
        lines.append(f"{format_complex(coeff)} {tokens}".rstrip())
    return lines


def looks_like_fermion_text(text: str) -> bool:
    """True when the text has a `modes:`/`layout:` header or ladder tokens."""
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line or line == GENERATOR_SEPARATOR:
            continue
        if _HEADER.match(line):
            return True
        tokens = line.split()
        return len(tokens) >= 2 and all(_TOKEN.match(token) for token in tokens[1:])
    return False


def _parse_lines(lines: Iterable[Tuple[int, str]]) -> Tuple[Optional[int], List[Tuple[complex, FermionString]]]:
    n_spatial = None
    terms = []
    for number, raw in lines:
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        header = _HEADER.match(line)
        if header:
            n_spatial = int(header.group(2))
            continue
        tokens = line.split()
        coeff = parse_complex(tokens[0])
        string = []
        for token in tokens[1:]:
            match = _TOKEN.match(token)
            if match is None:
                raise ParseError(f"line {number}: invalid ladder token {token!r}")
            string.append((int(match.group(1)), bool(match.group(2))))
        terms.append((coeff, tuple(string)))
    return n_spatial, terms


def _mode_count(n_spatial: Optional[int], blocks: List[List[Tuple[complex, FermionString]]]) -> int:
    highest = max((mode for block in blocks for _, string in block for mode, _ in string), default=0)
    layout = SpinOrbitalLayout(n_spatial) if n_spatial else SpinOrbitalLayout.for_modes(highest + 1)
    if highest >= layout.n_modes:
        raise ParseError(f"mode {highest} does not fit {layout.n_spatial} spatial orbitals")
    return layout.n_modes


def _to_operator(n_modes: int, block: List[Tuple[complex, FermionString]]) -> FermionOperator:
    result = FermionOperator(n_modes)
    for coeff, string in block:
        result = result + FermionOperator(n_modes, {string: coeff})
    return result


def parse_fermion_operator(text: str) -> FermionOperator:
    n_spatial, terms = _parse_lines(enumerate(text.splitlines(), start=1))
    return _to_operator(_mode_count(n_spatial, [terms]), terms)


def fermion_blocks(text: str) -> List[FermionOperator]:
    """
    Split a fermionic generator file into operators.

    Blocks are separated by `---` lines; without separators every term line is
    its own operator. The header applies to the whole file.
    """
    numbered = list(enumerate(text.splitlines(), start=1))
    separated = any(raw.split("#", 1)[0].strip() == GENERATOR_SEPARATOR for _, raw in numbered)
    groups, current = [], []
    for number, raw in numbered:
        if raw.split("#", 1)[0].strip() == GENERATOR_SEPARATOR:
            groups.append(current)
            current = []
        else:
            current.append((number, raw))
    groups.append(current)

    n_spatial = None
    blocks = []
    for group in groups:
        header, terms = _parse_lines(group)
        n_spatial = header or n_spatial
        if separated:
            if terms:
                blocks.append(terms)
        else:
            blocks.extend([term] for term in terms)
    n_modes = _mode_count(n_spatial, blocks)
    return [_to_operator(n_modes, block) for block in blocks]
