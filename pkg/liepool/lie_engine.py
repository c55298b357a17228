"""
Commutator closure, structure constants, centers and symmetry adaptation of
real Lie subalgebras spanned by anti-Hermitian PauliSums.

Spans are real: a PauliSum is a point of the real vector space whose
coordinates are the real and imaginary parts of its Pauli coefficients.
"""

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from liepool.pauli_core import (NotAntiHermitian, PauliKey, PauliSum, PauliTerm, QubitCountMismatch,
                                commutator, commutes)
from liepool.utils import EPS_COEFF, EPS_SPAN, CapacityError, worker_count

StructureTensor = Dict[Tuple[int, int, int], float]
SoIndexMap = Dict[Tuple[int, int], Tuple[int, float]]

logger = logging.getLogger(__name__)


class ClosureError(ValueError):
    """A commutator left the span that was required to contain it."""


class NotAnticommuting(ValueError):
    """Two members of an anticommuting set commute."""


@dataclass
class Subalgebra:
    """
    Real-linearly independent anti-Hermitian basis with its structure constants.

    structure maps (i, j, k) to c with [basis_i, basis_j] = sum_k c basis_k; both
    (i, j, k) and (j, i, k) are stored. provenance records where each basis element
    came from, labels carry index pairs for anticommuting-set algebras.
    """
    n_qubits: int
    basis: List[PauliSum]
    structure: StructureTensor = field(default_factory=dict)
    provenance: List[str] = field(default_factory=list)
    labels: List[Tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        assert all(element.n_qubits == self.n_qubits for element in self.basis)
        assert not self.provenance or len(self.provenance) == len(self.basis)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    @property
    def is_empty(self) -> bool:
        return not self.basis


@dataclass
class RankExtension:
    independent: bool
    residual: PauliSum


class SpanTracker:
    """
    Incrementally grown orthonormal frame for a real span of PauliSums.

    Rows are complex coordinate vectors over a growing Pauli-key index, orthonormal
    under the real inner product Re(u^H v).
    """

    def __init__(self, n_qubits: int) -> None:
        self.n_qubits = n_qubits
        self._columns: Dict[PauliKey, int] = {}
        self._keys: List[PauliKey] = []
        self._rows = np.zeros((0, 0), dtype=np.complex128)

    def __len__(self) -> int:
        return self._rows.shape[0]

    def _vector(self, s: PauliSum) -> np.ndarray:
        if s.n_qubits != self.n_qubits:
            raise QubitCountMismatch(f"{s.n_qubits} qubits vs {self.n_qubits} qubits")
        for key in s.keys():
            if key not in self._columns:
                self._columns[key] = len(self._keys)
                self._keys.append(key)
        if self._rows.shape[1] < len(self._keys):
            grown = np.zeros((self._rows.shape[0], len(self._keys)), dtype=np.complex128)
            grown[:, :self._rows.shape[1]] = self._rows
            self._rows = grown
        vector = np.zeros(len(self._keys), dtype=np.complex128)
        for key, coeff in s.items():
            vector[self._columns[key]] = coeff
        return vector

    def _project_out(self, vector: np.ndarray) -> np.ndarray:
        residual = vector
        for _ in range(2):
            if len(self):
                weights = np.real(self._rows.conj() @ residual)
                residual = residual - weights @ self._rows
        return residual

    def residual(self, s: PauliSum) -> Tuple[float, np.ndarray]:
        """Relative residual norm of s against the frame, and the residual vector."""
        vector = self._vector(s)
        norm = np.linalg.norm(vector)
        if norm == 0:
            return 0.0, vector
        residual = self._project_out(vector)
        return float(np.linalg.norm(residual) / norm), residual

    def contains(self, s: PauliSum) -> bool:
        return self.residual(s)[0] <= EPS_SPAN

    def add(self, s: PauliSum) -> bool:
        """Append s to the frame when it extends the span; returns whether it did."""
        relative, residual = self.residual(s)
        if relative <= EPS_SPAN:
            return False
        self._rows = np.vstack([self._rows, residual / np.linalg.norm(residual)])
        return True

    def to_pauli_sum(self, vector: np.ndarray) -> PauliSum:
        return PauliSum(self.n_qubits, {key: vector[i] for i, key in enumerate(self._keys)})


def _check_generators(generators: Sequence[PauliSum]) -> int:
    if not generators:
        raise ValueError("no generators given")
    n_qubits = generators[0].n_qubits
    for index, generator in enumerate(generators):
        if generator.n_qubits != n_qubits:
            raise QubitCountMismatch(f"generator {index} acts on {generator.n_qubits} qubits, expected {n_qubits}")
        if not generator.is_antihermitian():
            raise NotAntiHermitian(f"generator {index} is not anti-Hermitian")
    return n_qubits


def rank_extend(basis: Sequence[PauliSum], candidate: PauliSum) -> RankExtension:
    """Project candidate off span(basis); independent iff the relative residual exceeds EPS_SPAN."""
    tracker = SpanTracker(candidate.n_qubits)
    for element in basis:
        tracker.add(element)
    relative, residual = tracker.residual(candidate)
    return RankExtension(relative > EPS_SPAN, tracker.to_pauli_sum(residual))


def same_span(first: Sequence[PauliSum], second: Sequence[PauliSum]) -> bool:
    """Mutual containment of two real spans."""
    return (all(not rank_extend(first, element).independent for element in second)
            and all(not rank_extend(second, element).independent for element in first))


def close(generators: Sequence[PauliSum], max_dim: Optional[int] = None,
          workers: Optional[int] = None, with_structure: bool = True) -> Subalgebra:
    """
    Lie closure of a generator set by breadth-first commutator sweeps.

    Each level commutes every newly added element with every earlier one; the
    commutators of a level are evaluated in a thread pool, then offered to the
    span in pair order.

    Args:
        generators: Anti-Hermitian PauliSums on a common qubit count
        max_dim: Dimension cap, default 4^N - 1
        workers: Thread-pool size request (capped by LIEPOOL_THREADS)
        with_structure: Also solve for structure constants

    Returns:
        The closed Subalgebra; inputs that extend the span come first

    Raises:
        CapacityError: the closure would exceed max_dim
    """
    n_qubits = _check_generators(generators)
    if max_dim is None:
        max_dim = 4 ** n_qubits - 1
    if max_dim < 1:
        raise ValueError(f"max_dim must be positive, got {max_dim}")

    tracker = SpanTracker(n_qubits)
    basis: List[PauliSum] = []
    provenance: List[str] = []
    for index, generator in enumerate(generators):
        if tracker.add(generator):
            if len(basis) == max_dim:
                raise CapacityError(f"generator rank exceeds max_dim={max_dim}")
            basis.append(generator)
            provenance.append(f"input[{index}]")

    start, level = 0, 0
    with ThreadPoolExecutor(max_workers=worker_count(workers)) as executor:
        while start < len(basis):
            end = len(basis)
            pairs = [(i, j) for j in range(start, end) for i in range(j)]
            brackets = executor.map(lambda pair: commutator(basis[pair[0]], basis[pair[1]]), pairs)
            for (i, j), bracket in zip(pairs, brackets):
                if bracket.is_empty or not tracker.add(bracket):
                    continue
                if len(basis) == max_dim:
                    logger.error(f"Closure exceeded max_dim={max_dim} at level {level}")
                    raise CapacityError(f"closure dimension exceeds max_dim={max_dim}")
                basis.append(bracket)
                provenance.append(f"[{i},{j}]")
            logger.debug(f"Closure level {level}: {len(pairs)} commutators, dimension {end} -> {len(basis)}")
            start, level = end, level + 1

    algebra = Subalgebra(n_qubits, basis, provenance=provenance)
    logger.info(f"Closure of {len(generators)} generators on {n_qubits} qubits has dimension {algebra.dimension}")
    if with_structure:
        algebra.structure = structure_constants(algebra)
    return algebra


def join(first: Subalgebra, second: Subalgebra, max_dim: Optional[int] = None) -> Subalgebra:
    """Closure of the union of two subalgebras."""
    return close(first.basis + second.basis, max_dim=max_dim)


def _stacked(elements: Sequence[PauliSum], columns: Optional[Dict[PauliKey, int]] = None) -> np.ndarray:
    """Real coordinate matrix, one column per element (real parts over imaginary parts)."""
    if columns is None:
        keys = sorted({key for element in elements for key in element.keys()})
        columns = {key: i for i, key in enumerate(keys)}
    matrix = np.zeros((len(columns), len(elements)), dtype=np.complex128)
    for j, element in enumerate(elements):
        for key, coeff in element.items():
            if key not in columns:
                raise ClosureError(f"Pauli key {key} is outside the coordinate frame")
            matrix[columns[key], j] = coeff
    return np.vstack([matrix.real, matrix.imag])


def _solve_in_span(basis_matrix: np.ndarray, columns: Dict[PauliKey, int], element: PauliSum) -> np.ndarray:
    keys = set(element.keys())
    if not keys <= columns.keys():
        raise ClosureError("commutator has Pauli components outside the basis support")
    target = _stacked([element], columns)[:, 0]
    solution, *_ = np.linalg.lstsq(basis_matrix, target, rcond=None)
    residual = np.linalg.norm(basis_matrix @ solution - target)
    if residual > EPS_SPAN * max(1.0, np.linalg.norm(target)):
        raise ClosureError(f"commutator residual {residual:.3e} exceeds {EPS_SPAN}")
    return solution


def _support(elements: Sequence[PauliSum]) -> Dict[PauliKey, int]:
    keys = sorted({key for element in elements for key in element.keys()})
    return {key: i for i, key in enumerate(keys)}


def structure_constants(s: Subalgebra) -> StructureTensor:
    """
    Solve [b_i, b_j] = sum_k c_ij^k b_k for every basis pair.

    Raises:
        ClosureError: some commutator leaves span(basis)
    """
    if s.is_empty:
        return {}
    columns = _support(s.basis)
    basis_matrix = _stacked(s.basis, columns)
    tensor: StructureTensor = {}
    for i, j in itertools.combinations(range(s.dimension), 2):
        bracket = commutator(s.basis[i], s.basis[j])
        if bracket.is_empty:
            continue
        for k, value in enumerate(_solve_in_span(basis_matrix, columns, bracket)):
            if abs(value) > EPS_COEFF:
                tensor[(i, j, k)] = float(value)
                tensor[(j, i, k)] = -float(value)
    return tensor


def is_abelian(s: Subalgebra) -> bool:
    return all(commutator(a, b).is_empty for a, b in itertools.combinations(s.basis, 2))


def _pivot_basis(null_vectors: np.ndarray) -> np.ndarray:
    """
    Rows spanning the same space as the orthonormal columns of null_vectors, with an
    identity block on the coordinates picked by column-pivoted QR (in ascending order).
    """
    rows = null_vectors.T
    _, _, pivots = scipy.linalg.qr(rows, mode="economic", pivoting=True)
    chosen = np.sort(pivots[:rows.shape[0]])
    basis = scipy.linalg.solve(rows[:, chosen], rows)
    basis[np.abs(basis) < EPS_COEFF] = 0.0
    return basis


def _combinations(s: Subalgebra, null_vectors: np.ndarray) -> List[PauliSum]:
    elements = []
    for row in _pivot_basis(null_vectors):
        element = PauliSum.zero(s.n_qubits)
        for weight, base in zip(row, s.basis):
            if weight != 0.0:
                element = element + base * float(weight)
        elements.append(element)
    return elements


def _subspace_algebra(s: Subalgebra, null_vectors: np.ndarray, tag: str) -> Subalgebra:
    elements = _combinations(s, null_vectors) if null_vectors.size else []
    result = Subalgebra(s.n_qubits, elements, provenance=[f"{tag}[{k}]" for k in range(len(elements))])
    result.structure = structure_constants(result)
    return result


def center(s: Subalgebra) -> Subalgebra:
    """Elements of span(s) commuting with every basis element (null space of the adjoint map)."""
    if s.is_empty:
        return Subalgebra(s.n_qubits, [])
    structure = s.structure or structure_constants(s)
    dim = s.dimension
    # Row (j, l) of the adjoint map: coefficient of b_l in [b_k, b_j]
    adjoint = np.zeros((dim * dim, dim))
    for (k, j, l), value in structure.items():
        adjoint[j * dim + l, k] = value
    null_vectors = scipy.linalg.null_space(adjoint, rcond=EPS_SPAN)
    result = _subspace_algebra(s, null_vectors, "center")
    logger.info(f"Center of a {dim}-dimensional algebra has dimension {result.dimension}")
    return result


def symmetry_adapt(s: Subalgebra, symmetries: Sequence[PauliSum]) -> Subalgebra:
    """
    Maximal subspace of span(s) commuting with every symmetry operator.

    The result is re-checked for closure; an empty result is valid.
    """
    if not symmetries or s.is_empty:
        return Subalgebra(s.n_qubits, list(s.basis), dict(s.structure), list(s.provenance), list(s.labels))
    for symmetry in symmetries:
        if symmetry.n_qubits != s.n_qubits:
            raise QubitCountMismatch(f"symmetry on {symmetry.n_qubits} qubits, algebra on {s.n_qubits}")

    blocks = []
    for symmetry in symmetries:
        brackets = [commutator(symmetry, element) for element in s.basis]
        if any(not bracket.is_empty for bracket in brackets):
            blocks.append(_stacked(brackets))
    if not blocks:
        result = Subalgebra(s.n_qubits, list(s.basis), dict(s.structure), list(s.provenance), list(s.labels))
    else:
        null_vectors = scipy.linalg.null_space(np.vstack(blocks), rcond=EPS_SPAN)
        result = _subspace_algebra(s, null_vectors, "adapted")
    if result.is_empty:
        logger.warning(f"Symmetry adaptation of a {s.dimension}-dimensional algebra left nothing")
    else:
        logger.info(f"Symmetry-adapted algebra has dimension {result.dimension}")
    return result


def anticommuting_subalgebra(paulis: Sequence[PauliTerm]) -> Subalgebra:
    """
    so(K+1) spanned by K mutually anticommuting Pauli products.

    Basis: i P_k for each k, then P_j P_k for j < k. labels follow the so(K+1)
    index pairs: i P_k is (0, k+1), P_j P_k is (j+1, k+1).

    Raises:
        NotAnticommuting: some pair commutes
        ValueError: a term has a coefficient other than 1
    """
    if not paulis:
        raise ValueError("empty Pauli set")
    n_qubits = paulis[0].n_qubits
    for term in paulis:
        if abs(term.coeff - 1) > EPS_COEFF:
            raise ValueError(f"{term} does not have unit coefficient")
    for (j, a), (k, b) in itertools.combinations(enumerate(paulis), 2):
        if commutes(a, b):
            raise NotAnticommuting(f"{a.to_string()} and {b.to_string()} commute (positions {j}, {k})")

    sums = [term.to_sum() for term in paulis]
    basis = [s * 1j for s in sums]
    labels = [(0, k + 1) for k in range(len(paulis))]
    provenance = [f"i*P[{k}]" for k in range(len(paulis))]
    for j, k in itertools.combinations(range(len(paulis)), 2):
        basis.append(sums[j] * sums[k])
        labels.append((j + 1, k + 1))
        provenance.append(f"P[{j}]*P[{k}]")
    algebra = Subalgebra(n_qubits, basis, provenance=provenance, labels=labels)
    algebra.structure = structure_constants(algebra)
    return algebra


def so_index_map(s: Subalgebra) -> SoIndexMap:
    """Map (a, b), a < b, to (basis index, scale) with S_ab = scale * basis[index]."""
    if not s.labels:
        raise ValueError("subalgebra carries no so(n) labels")
    return {label: (index, -0.5 if label[0] == 0 else 0.5) for index, label in enumerate(s.labels)}


def verify_so_relations(s: Subalgebra, index_map: SoIndexMap) -> bool:
    """
    Check [S_ij, S_kl] = d_jk S_il + d_il S_jk - d_ik S_jl - d_jl S_ik for all index pairs.
    """
    order = 1 + max(max(pair) for pair in index_map)
    zero = PauliSum.zero(s.n_qubits)

    def generator(a: int, b: int) -> PauliSum:
        if a == b:
            return zero
        if (a, b) in index_map:
            index, scale = index_map[(a, b)]
            return s.basis[index] * scale
        if (b, a) in index_map:
            index, scale = index_map[(b, a)]
            return s.basis[index] * -scale
        return zero

    pairs = list(itertools.combinations(range(order), 2))
    for (i, j), (k, l) in itertools.product(pairs, pairs):
        expected = zero
        if j == k:
            expected = expected + generator(i, l)
        if i == l:
            expected = expected + generator(j, k)
        if i == k:
            expected = expected - generator(j, l)
        if j == l:
            expected = expected - generator(i, k)
        if (commutator(generator(i, j), generator(k, l)) - expected).norm() > EPS_SPAN:
            logger.debug(f"so relation fails for ({i},{j}), ({k},{l})")
            return False
    return True


def su2_constants(a: PauliSum, b: PauliSum, c: PauliSum) -> Tuple[float, float, float]:
    """
    (alpha, beta, gamma) with [a, b] = alpha c, [b, c] = beta a, [c, a] = gamma b.

    Raises:
        ClosureError: a bracket is not proportional to the expected element
    """
    constants = []
    for left, right, target in ((a, b, c), (b, c, a), (c, a, b)):
        bracket = commutator(left, right)
        extension = rank_extend([target], bracket)
        if extension.independent:
            raise ClosureError("bracket is not proportional to the third element")
        columns = _support([target, bracket])
        target_vector = _stacked([target], columns)[:, 0]
        bracket_vector = _stacked([bracket], columns)[:, 0]
        constants.append(float(target_vector @ bracket_vector / (target_vector @ target_vector)))
    return tuple(constants)


def is_su2_triple(a: PauliSum, b: PauliSum, c: PauliSum) -> bool:
    """True iff the triple spans a compact so(3) ~ su(2): all three cyclic constants share a sign."""
    try:
        constants = su2_constants(a, b, c)
    except ClosureError:
        return False
    if any(abs(value) <= EPS_SPAN for value in constants):
        return False
    return len({np.sign(value) for value in constants}) == 1
