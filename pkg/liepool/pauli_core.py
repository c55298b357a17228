"""
Exact N-qubit Pauli-product arithmetic in binary-symplectic form.

A Pauli product is a pair of integer masks (x_mask, z_mask), qubit j on bit j.
A qubit with both bits set carries y, so every unit-coefficient product is
Hermitian and squares to the identity. Products track their phase as a power
of i: P(x, z) = i^|x&z| X^x Z^z, which keeps structure constants exact.

Text format (one term per line, `#` starts a comment):

    <complex-coeff> <string>        e.g.  0.0+0.5i XZY

character j of the string is qubit j, the coefficient is written `a+bi`.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, Iterable, Iterator, List, Mapping, Optional, Tuple, Union

import numpy as np
import scipy.sparse

from liepool.utils import EPS_COEFF

PauliKey = Tuple[int, int]

_PHASES = (1, 1j, -1, -1j)
_CHAR_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_CHAR = {bits: char for char, bits in _CHAR_BITS.items()}
GENERATOR_SEPARATOR = "---"

logger = logging.getLogger(__name__)


class QubitCountMismatch(ValueError):
    """Operands act on different numbers of qubits."""


class NotAntiHermitian(ValueError):
    """An algebra element (or exponent generator) is not anti-Hermitian."""


class ParseError(ValueError):
    """Malformed operator, state or generator text."""


def _mul_keys(x1: int, z1: int, x2: int, z2: int) -> Tuple[int, int, int]:
    """Return (power of i, x, z) with P(x1,z1) P(x2,z2) = i^power P(x, z)."""
    x3 = x1 ^ x2
    z3 = z1 ^ z2
    power = ((x1 & z1).bit_count() + (x2 & z2).bit_count()
             + 2 * (z1 & x2).bit_count() - (x3 & z3).bit_count()) % 4
    return power, x3, z3


def _anticommute_keys(x1: int, z1: int, x2: int, z2: int) -> bool:
    return ((x1 & z2).bit_count() + (z1 & x2).bit_count()) % 2 == 1


def _check_qubits(a, b) -> None:
    if a.n_qubits != b.n_qubits:
        raise QubitCountMismatch(f"{a.n_qubits} qubits vs {b.n_qubits} qubits")


@dataclass(frozen=True)
class PauliTerm:
    """One N-qubit Pauli product with a complex coefficient."""
    n_qubits: int
    x_mask: int
    z_mask: int
    coeff: complex = 1.0

    def __post_init__(self):
        assert isinstance(self.n_qubits, int) and self.n_qubits > 0
        assert 0 <= self.x_mask < (1 << self.n_qubits)
        assert 0 <= self.z_mask < (1 << self.n_qubits)
        object.__setattr__(self, "coeff", complex(self.coeff))

    @classmethod
    def from_string(cls, label: str, coeff: complex = 1.0) -> "PauliTerm":
        x_mask, z_mask = _label_to_masks(label)
        return cls(len(label), x_mask, z_mask, coeff)

    @property
    def key(self) -> PauliKey:
        return (self.x_mask, self.z_mask)

    @property
    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def to_string(self) -> str:
        return _masks_to_label(self.n_qubits, self.x_mask, self.z_mask)

    def to_sum(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {self.key: self.coeff})

    def with_coeff(self, coeff: complex) -> "PauliTerm":
        return PauliTerm(self.n_qubits, self.x_mask, self.z_mask, coeff)

    def __str__(self) -> str:
        return f"{format_complex(self.coeff)} {self.to_string()}"


def _label_to_masks(label: str) -> PauliKey:
    x_mask = z_mask = 0
    for qubit, char in enumerate(label):
        if char not in _CHAR_BITS:
            raise ParseError(f"invalid Pauli character {char!r} in {label!r}")
        x_bit, z_bit = _CHAR_BITS[char]
        x_mask |= x_bit << qubit
        z_mask |= z_bit << qubit
    return x_mask, z_mask


def _masks_to_label(n_qubits: int, x_mask: int, z_mask: int) -> str:
    return "".join(_BITS_CHAR[((x_mask >> j) & 1, (z_mask >> j) & 1)] for j in range(n_qubits))


def pauli_mul(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    """Operator product a·b with the phase tracked exactly."""
    _check_qubits(a, b)
    power, x_mask, z_mask = _mul_keys(a.x_mask, a.z_mask, b.x_mask, b.z_mask)
    return PauliTerm(a.n_qubits, x_mask, z_mask, a.coeff * b.coeff * _PHASES[power])


def commutes(a: PauliTerm, b: PauliTerm) -> bool:
    """True iff the symplectic inner product of the two mask pairs is even."""
    _check_qubits(a, b)
    return not _anticommute_keys(a.x_mask, a.z_mask, b.x_mask, b.z_mask)


@lru_cache(maxsize=4096)
def _basis_action(n_qubits: int, x_mask: int, z_mask: int) -> Tuple[np.ndarray, np.ndarray]:
    """Rows and phases with P|b> = phase[b] |rows[b]> for every basis index b."""
    index = np.arange(1 << n_qubits, dtype=np.int64)
    parity = np.bitwise_count(index & z_mask) & 1
    phase = _PHASES[(x_mask & z_mask).bit_count() % 4] * (1 - 2 * parity.astype(np.float64))
    return index ^ x_mask, phase.astype(np.complex128)


class PauliSum:
    """
    Canonical linear combination of Pauli products.

    Construction always canonicalizes: like terms are merged, coefficients with
    magnitude below EPS_COEFF are dropped and terms are ordered by (x_mask, z_mask).
    Instances are immutable.
    """
    __slots__ = ("n_qubits", "_terms", "_hash")

    def __init__(self, n_qubits: int, terms: Optional[Mapping[PauliKey, complex]] = None) -> None:
        assert isinstance(n_qubits, int) and n_qubits > 0
        limit = 1 << n_qubits
        kept: Dict[PauliKey, complex] = {}
        for key in sorted(terms or {}):
            coeff = complex(terms[key])
            assert 0 <= key[0] < limit and 0 <= key[1] < limit
            if abs(coeff) >= EPS_COEFF:
                kept[key] = coeff
        self.n_qubits = n_qubits
        self._terms = kept
        self._hash = None

    @classmethod
    def from_items(cls, n_qubits: int, items: Iterable[Tuple[PauliKey, complex]]) -> "PauliSum":
        """Build from (key, coeff) pairs; repeated keys are summed."""
        merged: Dict[PauliKey, complex] = {}
        for key, coeff in items:
            merged[key] = merged.get(key, 0) + complex(coeff)
        return cls(n_qubits, merged)

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[PauliTerm]) -> "PauliSum":
        return cls.from_items(n_qubits, ((term.key, term.coeff) for term in terms))

    @classmethod
    def from_string(cls, label: str, coeff: complex = 1.0) -> "PauliSum":
        return PauliTerm.from_string(label, coeff).to_sum()

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n_qubits, {(0, 0): coeff})

    @classmethod
    def zero(cls, n_qubits: int) -> "PauliSum":
        return cls(n_qubits)

    def items(self) -> Iterator[Tuple[PauliKey, complex]]:
        return iter(self._terms.items())

    def keys(self) -> List[PauliKey]:
        return list(self._terms)

    def coefficient(self, key: PauliKey) -> complex:
        return self._terms.get(key, 0j)

    def terms(self) -> List[PauliTerm]:
        return [PauliTerm(self.n_qubits, x, z, c) for (x, z), c in self._terms.items()]

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[PauliTerm]:
        return iter(self.terms())

    def __bool__(self) -> bool:
        return bool(self._terms)

    @property
    def is_empty(self) -> bool:
        return not self._terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.n_qubits, tuple(self._terms.items())))
        return self._hash

    def isclose(self, other: "PauliSum", tol: float = 1e-10) -> bool:
        """Coefficient-wise comparison within tol."""
        _check_qubits(self, other)
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coefficient(k) - other.coefficient(k)) <= tol for k in keys)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        if isinstance(other, (int, float, complex)):
            other = PauliSum.identity(self.n_qubits, other)
        _check_qubits(self, other)
        return PauliSum.from_items(self.n_qubits, list(self.items()) + list(other.items()))

    __radd__ = __add__

    def __neg__(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: -c for k, c in self.items()})

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + (-other)

    def __rsub__(self, other) -> "PauliSum":
        return (-self) + other

    def __mul__(self, other: Union["PauliSum", PauliTerm, complex]) -> "PauliSum":
        if isinstance(other, (int, float, complex, np.number)):
            return PauliSum(self.n_qubits, {k: c * other for k, c in self.items()})
        if isinstance(other, PauliTerm):
            other = other.to_sum()
        _check_qubits(self, other)
        product: Dict[PauliKey, complex] = {}
        for (x1, z1), c1 in self.items():
            for (x2, z2), c2 in other.items():
                power, x3, z3 = _mul_keys(x1, z1, x2, z2)
                product[(x3, z3)] = product.get((x3, z3), 0) + c1 * c2 * _PHASES[power]
        return PauliSum(self.n_qubits, product)

    def __rmul__(self, other: complex) -> "PauliSum":
        return self * other

    def __truediv__(self, other: complex) -> "PauliSum":
        return self * (1 / other)

    def adjoint(self) -> "PauliSum":
        return PauliSum(self.n_qubits, {k: c.conjugate() for k, c in self.items()})

    def norm(self) -> float:
        """Euclidean norm of the coefficient vector (Frobenius norm / 2^(N/2))."""
        return float(np.sqrt(sum(abs(c) ** 2 for c in self._terms.values())))

    def is_hermitian(self, tol: float = EPS_COEFF) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def is_antihermitian(self, tol: float = EPS_COEFF) -> bool:
        return all(abs(c.real) <= tol for c in self._terms.values())

    def single_term(self) -> Optional[PauliTerm]:
        """The only term, or None when the sum has zero or several terms."""
        if len(self._terms) != 1:
            return None
        (x, z), coeff = next(iter(self._terms.items()))
        return PauliTerm(self.n_qubits, x, z, coeff)

    def apply(self, amplitudes: np.ndarray) -> np.ndarray:
        """Matrix-free action on a 2^N amplitude vector (bit j of the index is qubit j)."""
        out = np.zeros(1 << self.n_qubits, dtype=np.complex128)
        for (x, z), coeff in self.items():
            rows, phase = _basis_action(self.n_qubits, x, z)
            out[rows] += coeff * phase * amplitudes
        return out

    def to_sparse(self) -> scipy.sparse.csr_matrix:
        dim = 1 << self.n_qubits
        if not self._terms:
            return scipy.sparse.csr_matrix((dim, dim), dtype=np.complex128)
        columns = np.arange(dim, dtype=np.int64)
        rows, cols, data = [], [], []
        for (x, z), coeff in self.items():
            target, phase = _basis_action(self.n_qubits, x, z)
            rows.append(target)
            cols.append(columns)
            data.append(coeff * phase)
        matrix = scipy.sparse.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(dim, dim))
        return matrix.tocsr()

    def to_matrix(self) -> np.ndarray:
        """Dense 2^N x 2^N matrix (oracle use, small N only)."""
        return self.to_sparse().toarray()

    def __repr__(self) -> str:
        return f"PauliSum({self.n_qubits}, {format_pauli_sum(self)})"


def canonicalize(s: PauliSum) -> PauliSum:
    """Merge like terms, drop |c| < EPS_COEFF, order terms by (x_mask, z_mask)."""
    return PauliSum.from_items(s.n_qubits, s.items())


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """[a, b] = ab - ba; only anticommuting term pairs contribute (2ab)."""
    _check_qubits(a, b)
    result: Dict[PauliKey, complex] = {}
    for (x1, z1), c1 in a.items():
        for (x2, z2), c2 in b.items():
            if _anticommute_keys(x1, z1, x2, z2):
                power, x3, z3 = _mul_keys(x1, z1, x2, z2)
                result[(x3, z3)] = result.get((x3, z3), 0) + 2 * c1 * c2 * _PHASES[power]
    return PauliSum(a.n_qubits, result)


def is_antihermitian(s: PauliSum) -> bool:
    """True iff every coefficient is purely imaginary."""
    return s.is_antihermitian()


def format_complex(value: complex) -> str:
    real = value.real if value.real != 0 else 0.0
    imag = value.imag if value.imag != 0 else 0.0
    sign = "-" if imag < 0 else "+"
    return f"{real!r}{sign}{abs(imag)!r}i"


def parse_complex(token: str) -> complex:
    try:
        return complex(token.replace("i", "j"))
    except ValueError:
        raise ParseError(f"invalid complex coefficient {token!r}") from None


def format_pauli_sum(s: PauliSum) -> List[str]:
    """One `<coeff> <string>` line per term, in canonical order."""
    return [str(term) for term in s.terms()]


def parse_pauli_terms(text: str, n_qubits: Optional[int] = None) -> List[PauliTerm]:
    """Parse term lines; a bare Pauli string means coefficient 1."""
    terms = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line == GENERATOR_SEPARATOR:
            continue
        tokens = line.split()
        if len(tokens) == 1:
            coeff, label = 1.0, tokens[0]
        elif len(tokens) == 2:
            coeff, label = parse_complex(tokens[0]), tokens[1]
        else:
            raise ParseError(f"line {number}: expected '<coeff> <string>', got {raw!r}")
        try:
            term = PauliTerm.from_string(label.upper(), coeff)
        except ParseError as e:
            raise ParseError(f"line {number}: {e}") from None
        if n_qubits is None:
            n_qubits = term.n_qubits
        elif term.n_qubits != n_qubits:
            raise ParseError(f"line {number}: {term.n_qubits} qubits, expected {n_qubits}")
        terms.append(term)
    return terms


def parse_pauli_sum(text: str, n_qubits: Optional[int] = None) -> PauliSum:
    terms = parse_pauli_terms(text, n_qubits)
    if not terms:
        if n_qubits is None:
            raise ParseError("no terms and no qubit count")
        return PauliSum.zero(n_qubits)
    return PauliSum.from_terms(terms[0].n_qubits, terms)


def pauli_sum_blocks(text: str) -> List[PauliSum]:
    """
    Split a generator file into PauliSums.

    Blocks are separated by `---` lines. A file without separators holds one
    single-term generator per line.
    """
    lines = text.splitlines()
    if not any(line.split("#", 1)[0].strip() == GENERATOR_SEPARATOR for line in lines):
        terms = parse_pauli_terms(text)
        return [term.to_sum() for term in terms]

    blocks, current = [], []
    for line in lines + [GENERATOR_SEPARATOR]:
        if line.split("#", 1)[0].strip() == GENERATOR_SEPARATOR:
            if any(part.split("#", 1)[0].strip() for part in current):
                blocks.append(parse_pauli_sum("\n".join(current)))
            current = []
        else:
            current.append(line)
    if len({block.n_qubits for block in blocks}) > 1:
        raise ParseError("generator blocks act on different qubit counts")
    return blocks
