"""
Statevector simulation of exponent-product ansatze.

Amplitude index bit j is qubit j. A factor with anti-Hermitian generator A and
amplitude t applies exp(t A); factor lists act right to left, so the last factor
hits the reference first.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import scipy.optimize
import scipy.sparse.linalg

from liepool.fermion_ops import jordan_wigner, make_kappa
from liepool.pauli_core import NotAntiHermitian, PauliSum, PauliTerm, QubitCountMismatch
from liepool.utils import (DEFAULT_SEEDS, EPS_COEFF, EPS_GRAD, MAX_AMPLITUDES, MAX_DENSE_QUBITS,
                           MAX_DIS_QUBITS, MAX_EXP_QUBITS, MAX_SCAN_FACTORS, ORDER_AGREEMENT,
                           CapacityError, worker_count)

NORM_TOLERANCE = 1e-10

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StateVector:
    """2^N complex amplitudes of unit norm."""
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        assert isinstance(self.n_qubits, int) and self.n_qubits > 0
        amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        assert amplitudes.shape == (1 << self.n_qubits,)
        assert abs(np.linalg.norm(amplitudes) - 1) <= NORM_TOLERANCE, "state is not normalized"
        amplitudes.setflags(write=False)
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def from_index(cls, n_qubits: int, index: int) -> "StateVector":
        amplitudes = np.zeros(1 << n_qubits, dtype=np.complex128)
        amplitudes[index] = 1.0
        return cls(n_qubits, amplitudes)

    @classmethod
    def from_bitstring(cls, bits: str) -> "StateVector":
        """Computational basis state; character j is qubit j."""
        if not bits or set(bits) - {"0", "1"}:
            raise ValueError(f"invalid bitstring {bits!r}")
        return cls.from_index(len(bits), sum(1 << j for j, bit in enumerate(bits) if bit == "1"))

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "StateVector":
        amplitudes = np.asarray(amplitudes, dtype=np.complex128)
        n_qubits = int(amplitudes.size).bit_length() - 1
        if amplitudes.size != 1 << n_qubits or n_qubits == 0:
            raise ValueError(f"{amplitudes.size} amplitudes is not a power of two above 1")
        if normalize:
            norm = np.linalg.norm(amplitudes)
            if norm == 0:
                raise ValueError("zero vector cannot be normalized")
            amplitudes = amplitudes / norm
        return cls(n_qubits, amplitudes)

    def basis_index(self) -> Optional[int]:
        """Index of the single occupied basis state, or None for superpositions."""
        index = int(np.argmax(np.abs(self.amplitudes)))
        return index if abs(abs(self.amplitudes[index]) - 1) <= NORM_TOLERANCE else None

    def overlap(self, other: "StateVector") -> complex:
        _check_states(self, other)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def distance(self, other: "StateVector") -> float:
        _check_states(self, other)
        return float(np.linalg.norm(self.amplitudes - other.amplitudes))


def _check_states(a: StateVector, b: StateVector) -> None:
    if a.n_qubits != b.n_qubits:
        raise QubitCountMismatch(f"{a.n_qubits} qubits vs {b.n_qubits} qubits")


def _check_operator(op: PauliSum, state: StateVector) -> None:
    if op.n_qubits != state.n_qubits:
        raise QubitCountMismatch(f"operator on {op.n_qubits} qubits, state on {state.n_qubits}")


@dataclass(frozen=True, eq=False)
class AnsatzFactor:
    """exp(amplitude * generator) for an anti-Hermitian generator."""
    generator: PauliSum
    amplitude: float = 0.0
    label: str = ""

    def __post_init__(self):
        if not self.generator.is_antihermitian():
            raise NotAntiHermitian(f"factor {self.label or self.generator!r} is not anti-Hermitian")
        object.__setattr__(self, "amplitude", float(self.amplitude))

    def with_amplitude(self, amplitude: float) -> "AnsatzFactor":
        return AnsatzFactor(self.generator, amplitude, self.label)


@dataclass
class GradientClass:
    representative: PauliTerm
    magnitude: float
    members: List[PauliTerm] = field(default_factory=list)


class SpectralGenerator:
    """
    Eigendecomposition of an anti-Hermitian generator for repeated exponentials.

    With H = iA Hermitian, exp(t A) = V exp(-i t w) V^+.
    """

    def __init__(self, generator: PauliSum) -> None:
        self._w, self._v = np.linalg.eigh(1j * generator.to_matrix())

    def apply(self, tau: float, amplitudes: np.ndarray) -> np.ndarray:
        return self._v @ (np.exp(-1j * tau * self._w) * (self._v.conj().T @ amplitudes))


@lru_cache(maxsize=256)
def _spectral(generator: PauliSum) -> SpectralGenerator:
    return SpectralGenerator(generator)


def apply_exp_pauli(tau: float, p: PauliTerm, state: StateVector) -> StateVector:
    """cos(tau)|psi> + i sin(tau) P|psi> for a unit-coefficient Pauli product P."""
    if abs(p.coeff - 1) > EPS_COEFF:
        raise ValueError(f"{p} does not have unit coefficient")
    _check_operator(p.to_sum(), state)
    rotated = p.to_sum().apply(state.amplitudes)
    return StateVector(state.n_qubits, math.cos(tau) * state.amplitudes + 1j * math.sin(tau) * rotated)


def apply_exp_sum(a: PauliSum, state: StateVector, tau: float = 1.0) -> StateVector:
    """
    exp(tau * a)|psi> for an anti-Hermitian PauliSum.

    Single terms take the analytic path, up to MAX_DENSE_QUBITS a cached
    eigendecomposition, beyond that scipy's expm_multiply on the sparse matrix.

    Raises:
        CapacityError: more than MAX_EXP_QUBITS qubits
        NotAntiHermitian: a is not anti-Hermitian
    """
    _check_operator(a, state)
    if not a.is_antihermitian():
        raise NotAntiHermitian("exponent generator is not anti-Hermitian")
    if a.n_qubits > MAX_EXP_QUBITS:
        raise CapacityError(f"{a.n_qubits} qubits exceeds the exponential cap of {MAX_EXP_QUBITS}")
    if a.is_empty or tau == 0:
        return state

    term = a.single_term()
    if term is not None:
        return apply_exp_pauli(tau * term.coeff.imag, term.with_coeff(1.0), state)
    if a.n_qubits <= MAX_DENSE_QUBITS:
        amplitudes = _spectral(a).apply(tau, state.amplitudes)
    else:
        amplitudes = scipy.sparse.linalg.expm_multiply(a.to_sparse() * tau, state.amplitudes, traceA=0.0)
    return StateVector(state.n_qubits, amplitudes)


def expectation(h: PauliSum, state: StateVector) -> float:
    """<psi|H|psi> for Hermitian H."""
    _check_operator(h, state)
    if not h.is_hermitian():
        raise ValueError("expectation needs a Hermitian operator")
    value = np.vdot(state.amplitudes, h.apply(state.amplitudes))
    if abs(value.imag) > NORM_TOLERANCE * max(1.0, abs(value)):
        raise ValueError(f"expectation has imaginary part {value.imag:.3e}")
    return float(value.real)


def gradient(h: PauliSum, p: PauliTerm, ref: StateVector) -> float:
    """
    dE/dtau at tau = 0 for exp(i tau P) acting on ref, i.e. i<ref|[H, P]|ref>.

    Evaluated as -2 Im <ref|H P|ref>.
    """
    if abs(p.coeff - 1) > EPS_COEFF:
        raise ValueError(f"{p} does not have unit coefficient")
    _check_operator(h, ref)
    rotated = p.to_sum().apply(ref.amplitudes)
    return float(-2 * np.vdot(ref.amplitudes, h.apply(rotated)).imag)


def dis_classes(h: PauliSum, ref: StateVector) -> List[GradientClass]:
    """
    Direct interaction set: every Pauli product with |gradient| > EPS_GRAD at a
    computational basis reference, grouped into classes of equal magnitude.

    Classes come in descending magnitude; members are in (x_mask, z_mask) order and
    the first member is the representative.

    Raises:
        CapacityError: more than MAX_DIS_QUBITS qubits
        ValueError: ref is not a computational basis state
    """
    _check_operator(h, ref)
    n = ref.n_qubits
    if n > MAX_DIS_QUBITS:
        raise CapacityError(f"exhaustive DIS enumeration is capped at {MAX_DIS_QUBITS} qubits, got {n}")
    b = ref.basis_index()
    if b is None:
        raise ValueError("DIS needs a computational basis reference")

    column = h.apply(ref.amplitudes) * np.conj(ref.amplitudes[b])
    masks = np.arange(1 << n, dtype=np.int64)
    x_masks, z_masks = np.meshgrid(masks, masks, indexing="ij")
    # P(x, z)|b> = i^|x&z| (-1)^|z&b| |b^x>
    powers = np.bitwise_count(x_masks & z_masks) % 4
    signs = 1 - 2 * (np.bitwise_count(z_masks & b) & 1)
    phases = np.array([1, 1j, -1, -1j])[powers] * signs
    gradients = -2 * (phases * np.conj(column[b ^ x_masks])).imag
    gradients[0, 0] = 0.0

    xs, zs = np.nonzero(np.abs(gradients) > EPS_GRAD)
    magnitudes = np.abs(gradients[xs, zs])
    order = sorted(range(len(xs)), key=lambda k: (-magnitudes[k], int(xs[k]), int(zs[k])))

    classes: List[GradientClass] = []
    for k in order:
        term = PauliTerm(n, int(xs[k]), int(zs[k]))
        if classes and abs(classes[-1].magnitude - magnitudes[k]) <= EPS_GRAD:
            classes[-1].members.append(term)
        else:
            classes.append(GradientClass(term, float(magnitudes[k]), [term]))
    for grouped in classes:
        grouped.members.sort(key=lambda t: t.key)
        grouped.representative = grouped.members[0]
    logger.info(f"DIS on {n} qubits: {len(xs)} terms in {len(classes)} classes")
    return classes


def apply_factor(factor: AnsatzFactor, state: StateVector, amplitude: Optional[float] = None) -> StateVector:
    tau = factor.amplitude if amplitude is None else amplitude
    return apply_exp_sum(factor.generator, state, tau)


def build_ansatz(factors: Sequence[AnsatzFactor], ref: StateVector,
                 amplitudes: Optional[Sequence[float]] = None) -> StateVector:
    """Apply the factor product to ref, rightmost factor first."""
    if amplitudes is not None and len(amplitudes) != len(factors):
        raise ValueError(f"{len(amplitudes)} amplitudes for {len(factors)} factors")
    state = ref
    for index in reversed(range(len(factors))):
        _check_operator(factors[index].generator, ref)
        state = apply_factor(factors[index], state, None if amplitudes is None else amplitudes[index])
    return state


def fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>| clipped to [0, 1]."""
    return min(1.0, abs(a.overlap(b)))


@dataclass(frozen=True, eq=False)
class Objective:
    """Either maximize fidelity to a target state or minimize the energy of a Hamiltonian."""
    kind: str
    target: Optional[StateVector] = None
    hamiltonian: Optional[PauliSum] = None

    def __post_init__(self):
        assert self.kind in ("fidelity", "energy")
        assert (self.target is not None) if self.kind == "fidelity" else (self.hamiltonian is not None)

    @classmethod
    def max_fidelity(cls, target: StateVector) -> "Objective":
        return cls("fidelity", target=target)

    @classmethod
    def min_energy(cls, hamiltonian: PauliSum) -> "Objective":
        return cls("energy", hamiltonian=hamiltonian)

    def value(self, state: StateVector) -> float:
        if self.kind == "fidelity":
            return fidelity(self.target, state)
        return expectation(self.hamiltonian, state)

    def loss(self, state: StateVector) -> float:
        """Quantity minimized by the optimizer: 1 - |<t|psi>|^2 or the energy."""
        if self.kind == "fidelity":
            return 1.0 - abs(self.target.overlap(state)) ** 2
        return expectation(self.hamiltonian, state)


@dataclass
class OptimizationResult:
    amplitudes: Tuple[float, ...]
    value: float
    loss: float
    seed: Optional[int]


def _amplitude_bound(factors: Sequence[AnsatzFactor]) -> float:
    """[-pi, pi) per amplitude, widened to [-2 pi, 2 pi) when any generator has several terms."""
    return 2 * math.pi if any(len(factor.generator) > 1 for factor in factors) else math.pi


def optimize(factors: Sequence[AnsatzFactor], ref: StateVector, objective: Objective,
             seeds: Sequence[int] = DEFAULT_SEEDS, tolerance: float = 1e-10,
             maxiter: Optional[int] = None, workers: Optional[int] = None) -> OptimizationResult:
    """
    Deterministic multi-start local optimization of the factor amplitudes.

    Every seed draws a uniform start in the amplitude box and refines it with BFGS
    on finite-difference gradients. Starts run in a thread pool; the best loss wins,
    ties going to the earlier seed.

    Raises:
        CapacityError: more than MAX_AMPLITUDES factors
    """
    if len(factors) > MAX_AMPLITUDES:
        raise CapacityError(f"{len(factors)} amplitudes exceeds the optimizer cap of {MAX_AMPLITUDES}")
    if not factors:
        return OptimizationResult((), objective.value(ref), objective.loss(ref), None)
    if not seeds:
        raise ValueError("empty seed schedule")

    bound = _amplitude_bound(factors)

    def loss(amplitudes: np.ndarray) -> float:
        return objective.loss(build_ansatz(factors, ref, amplitudes))

    def run(seed: int) -> Tuple[float, np.ndarray]:
        start = np.random.default_rng(seed).uniform(-bound, bound, size=len(factors))
        options = {"maxiter": maxiter} if maxiter else {}
        result = scipy.optimize.minimize(loss, start, method="BFGS", tol=tolerance, options=options)
        return float(result.fun), np.asarray(result.x)

    with ThreadPoolExecutor(max_workers=worker_count(workers)) as executor:
        outcomes = list(executor.map(run, seeds))

    best = 0
    for index, (value, _) in enumerate(outcomes):
        if value < outcomes[best][0]:
            best = index
    best_loss, best_x = outcomes[best]
    state = build_ansatz(factors, ref, best_x)
    return OptimizationResult(tuple(float(x) for x in best_x), objective.value(state), best_loss, seeds[best])


@dataclass
class PermutationResult:
    permutation: Tuple[int, ...]
    value: float
    amplitudes: Tuple[float, ...]
    labels: Tuple[str, ...] = ()


@dataclass
class OrderScan:
    results: List[PermutationResult]
    spread: float
    invariant: bool
    total_permutations: int

    @property
    def best(self) -> PermutationResult:
        return max(self.results, key=lambda r: r.value) if self.results else None


def scan_permutations(n_factors: int, max_permutations: Optional[int] = None) -> List[Tuple[int, ...]]:
    """All permutations in lexicographic order, or max_permutations of them evenly spaced."""
    total = math.factorial(n_factors)
    if max_permutations is None or max_permutations >= total:
        return list(itertools.permutations(range(n_factors)))
    wanted = sorted({int(round(k)) for k in np.linspace(0, total - 1, max_permutations)})
    picked, wanted_set = [], set(wanted)
    for index, permutation in enumerate(itertools.permutations(range(n_factors))):
        if index in wanted_set:
            picked.append(permutation)
        if index >= wanted[-1]:
            break
    return picked


def orderscan(factors: Sequence[AnsatzFactor], ref: StateVector, objective: Objective,
              max_factors: int = MAX_SCAN_FACTORS, max_permutations: Optional[int] = None,
              agreement: float = ORDER_AGREEMENT, **optimize_options) -> OrderScan:
    """
    Optimize every ordering of the factor product and compare the optimized objectives.

    Raises:
        CapacityError: more than max_factors factors
    """
    if len(factors) > max_factors:
        raise CapacityError(f"{len(factors)} factors exceeds the order-scan cap of {max_factors}")
    results = []
    for permutation in scan_permutations(len(factors), max_permutations):
        ordered = [factors[k] for k in permutation]
        outcome = optimize(ordered, ref, objective, **optimize_options)
        labels = tuple(factor.label for factor in ordered)
        logger.info(f"Ordering {permutation} {labels}: best {objective.kind} {outcome.value!r}")
        results.append(PermutationResult(permutation, outcome.value, outcome.amplitudes, labels))
    values = [result.value for result in results]
    spread = max(values) - min(values) if values else 0.0
    return OrderScan(results, spread, spread <= agreement, math.factorial(len(factors)))


Singles = Mapping[Tuple[int, int], float]
Doubles = Mapping[Tuple[int, int, int, int], float]


def uccsd_factors(singles: Singles, doubles: Doubles, n_qubits: int, scale: float = 1.0) -> List[AnsatzFactor]:
    """Singles first, then doubles; singles keyed (i, a), doubles keyed (i, j, a, b)."""
    factors = []
    for (i, a), t in singles.items():
        factors.append(AnsatzFactor(jordan_wigner(make_kappa([i], [a], n_qubits)), t * scale, f"k_{i}^{a}"))
    for (i, j, a, b), t in doubles.items():
        factors.append(AnsatzFactor(jordan_wigner(make_kappa([i, j], [a, b], n_qubits)), t * scale,
                                    f"k_{i}{j}^{a}{b}"))
    return factors


def trotter_uccsd(singles: Singles, doubles: Doubles, steps: int, ref: StateVector) -> StateVector:
    """[prod_singles exp(t k / K) prod_doubles exp(t k / K)]^K applied to ref."""
    if steps < 1:
        raise ValueError(f"Trotter steps must be at least 1, got {steps}")
    factors = uccsd_factors(singles, doubles, ref.n_qubits, 1.0 / steps)
    return build_ansatz(factors * steps, ref)


def exact_uccsd(singles: Singles, doubles: Doubles, ref: StateVector) -> StateVector:
    """exp(sum_k t_k kappa_k) applied to ref."""
    generator = PauliSum.zero(ref.n_qubits)
    for factor in uccsd_factors(singles, doubles, ref.n_qubits):
        generator = generator + factor.generator * factor.amplitude
    return apply_exp_sum(generator, ref)


def number_sector(n_qubits: int, electrons: int) -> List[StateVector]:
    """Basis states with the given number of occupied modes, in index order."""
    return [StateVector.from_index(n_qubits, index) for index in range(1 << n_qubits)
            if index.bit_count() == electrons]


def sector_residual(op: PauliSum, states: Sequence[StateVector]) -> float:
    """Largest ||op |psi>|| over the states; zero means op annihilates the sector."""
    return max((float(np.linalg.norm(op.apply(state.amplitudes))) for state in states), default=0.0)
