"""
JSON reports and the readers for generator, Hamiltonian, state and ansatz files.

Reports are written with sorted keys; floats use the shortest round-trip repr,
with signed zeros and magnitudes below 1e-15 written as 0.0.
"""

import json
import logging
import os
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from liepool.fermion_ops import FermionOperator, fermion_blocks, jordan_wigner, looks_like_fermion_text
from liepool.lie_engine import Subalgebra, structure_constants
from liepool.model import ModelRun
from liepool.pauli_core import (ParseError, PauliSum, format_complex, format_pauli_sum, parse_complex,
                                parse_pauli_sum, pauli_sum_blocks)
from liepool.sim import AnsatzFactor, GradientClass, Objective, OrderScan, StateVector

ZERO_CUTOFF = 1e-15
STATE_NORM_TOLERANCE = 1e-10

logger = logging.getLogger(__name__)


def clean_float(value: float) -> float:
    value = float(value)
    return 0.0 if abs(value) < ZERO_CUTOFF else value


def _clean(payload: Any) -> Any:
    if isinstance(payload, dict):
        return {str(key): _clean(value) for key, value in payload.items()}
    if isinstance(payload, (list, tuple)):
        return [_clean(value) for value in payload]
    if isinstance(payload, (bool, np.bool_)):
        return bool(payload)
    if isinstance(payload, (int, np.integer)):
        return int(payload)
    if isinstance(payload, (float, np.floating)):
        return clean_float(payload)
    return payload


def dumps_report(report: Dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def write_report(report: Dict, path: str) -> None:
    with open(path, "w") as report_file:
        report_file.write(dumps_report(report))
    logger.info(f"Report written to {path}")


def _read_text(path: str) -> str:
    with open(path) as input_file:
        return input_file.read()


def subalgebra_report(algebra: Subalgebra, algebra_center: Optional[Subalgebra] = None,
                      symmetries: Sequence[str] = ()) -> Dict:
    structure = algebra.structure or structure_constants(algebra)
    report = {
        "n_qubits": algebra.n_qubits,
        "dimension": algebra.dimension,
        "empty": algebra.is_empty,
        "basis": [format_pauli_sum(element) for element in algebra.basis],
        "provenance": list(algebra.provenance),
        "structure_constants": [[i, j, k, value] for (i, j, k), value in sorted(structure.items()) if i < j],
    }
    if algebra_center is not None:
        report["center_dimension"] = algebra_center.dimension
        report["center_basis"] = [format_pauli_sum(element) for element in algebra_center.basis]
    if symmetries:
        report["symmetries"] = list(symmetries)
    return report


def read_subalgebra_report(path: str) -> Subalgebra:
    """Rebuild a Subalgebra from a closure report; structure constants are re-solved."""
    try:
        payload = json.loads(_read_text(path))
        n_qubits = int(payload["n_qubits"])
        basis = [parse_pauli_sum("\n".join(lines), n_qubits) for lines in payload["basis"]]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"{path}: not a subalgebra report ({e})") from None
    provenance = list(payload.get("provenance") or [])
    algebra = Subalgebra(n_qubits, basis, provenance=provenance if len(provenance) == len(basis) else [])
    algebra.structure = structure_constants(algebra)
    return algebra


def dis_report(classes: Sequence[GradientClass], n_qubits: int, reference: str) -> Dict:
    return {
        "n_qubits": n_qubits,
        "reference": reference,
        "n_classes": len(classes),
        "n_terms": sum(len(group.members) for group in classes),
        "classes": [{"representative": group.representative.to_string(),
                     "magnitude": group.magnitude,
                     "size": len(group.members),
                     "members": [member.to_string() for member in group.members]} for group in classes],
    }


def orderscan_report(scan: OrderScan, objective: Objective) -> Dict:
    return {
        "objective": objective.kind,
        "spread": scan.spread,
        "verdict": "order-invariant" if scan.invariant else "order-dependent",
        "permutations_scanned": len(scan.results),
        "permutations_total": scan.total_permutations,
        "permutations": [{"order": list(result.permutation),
                          "labels": list(result.labels),
                          "value": result.value,
                          "amplitudes": list(result.amplitudes)} for result in scan.results],
    }


def model_report(run: ModelRun) -> Dict:
    return {
        "ordering": run.ordering,
        "symmetry_adapted": run.use_symmetry,
        "ok": run.ok,
        "failed_stages": run.failed_stages,
        "stages": [{"name": stage.name, "status": stage.status, "details": stage.details,
                    "message": stage.message} for stage in run.stages],
    }


def _as_antihermitian_pauli(generator: PauliSum, index: int) -> PauliSum:
    if generator.is_antihermitian():
        return generator
    if generator.is_hermitian():
        return generator * 1j
    raise ParseError(f"generator {index} is neither Hermitian nor anti-Hermitian")


def _as_antihermitian_fermion(generator: FermionOperator) -> FermionOperator:
    return generator if generator.is_antihermitian() else generator - generator.adjoint()


def generators_from_text(text: str) -> List[PauliSum]:
    """
    Anti-Hermitian generators from a Pauli or fermionic generator file.

    Hermitian Pauli generators are multiplied by i; fermionic generators that are
    not anti-Hermitian are replaced by F - F^+ before the Jordan-Wigner map.
    """
    if looks_like_fermion_text(text):
        generators = [jordan_wigner(_as_antihermitian_fermion(block)) for block in fermion_blocks(text)]
    else:
        generators = [_as_antihermitian_pauli(block, k) for k, block in enumerate(pauli_sum_blocks(text))]
    generators = [generator for generator in generators if not generator.is_empty]
    if not generators:
        raise ParseError("no generators found")
    return generators


def read_generators(path: str) -> List[PauliSum]:
    return generators_from_text(_read_text(path))


def read_hamiltonian(path: str) -> PauliSum:
    hamiltonian = parse_pauli_sum(_read_text(path))
    if not hamiltonian.is_hermitian():
        raise ParseError(f"{path}: Hamiltonian is not Hermitian")
    return hamiltonian


def state_from_text(text: str, n_qubits: Optional[int] = None) -> StateVector:
    """Lines of `<bitstring> <complex amplitude>`, character j of the bitstring is qubit j."""
    entries: List[Tuple[int, complex]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 2 or set(tokens[0]) - {"0", "1"}:
            raise ParseError(f"line {number}: expected '<bitstring> <amplitude>', got {raw!r}")
        if n_qubits is None:
            n_qubits = len(tokens[0])
        elif len(tokens[0]) != n_qubits:
            raise ParseError(f"line {number}: {len(tokens[0])} qubits, expected {n_qubits}")
        index = sum(1 << j for j, bit in enumerate(tokens[0]) if bit == "1")
        entries.append((index, parse_complex(tokens[1])))
    if not entries:
        raise ParseError("state file has no amplitudes")

    amplitudes = np.zeros(1 << n_qubits, dtype=np.complex128)
    for index, amplitude in entries:
        amplitudes[index] += amplitude
    norm = np.linalg.norm(amplitudes)
    if norm == 0:
        raise ParseError("state file describes the zero vector")
    if abs(norm - 1) > STATE_NORM_TOLERANCE:
        logger.warning(f"State norm {norm!r} renormalized to 1")
    return StateVector(n_qubits, amplitudes / norm)


def read_state(path: str, n_qubits: Optional[int] = None) -> StateVector:
    return state_from_text(_read_text(path), n_qubits)


def format_state(state: StateVector) -> List[str]:
    lines = []
    for index in np.nonzero(np.abs(state.amplitudes) > ZERO_CUTOFF)[0]:
        bits = "".join("1" if (int(index) >> j) & 1 else "0" for j in range(state.n_qubits))
        lines.append(f"{bits} {format_complex(complex(state.amplitudes[index]))}")
    return lines


def _factor_generator(entry: Dict, n_qubits: int, base_dir: str, index: int) -> PauliSum:
    if "pauli" in entry:
        lines = entry["pauli"]
        text = "\n".join(lines) if isinstance(lines, list) else str(lines)
        generator = _as_antihermitian_pauli(parse_pauli_sum(text, n_qubits), index)
    elif "fermion" in entry:
        lines = entry["fermion"]
        text = "\n".join(lines) if isinstance(lines, list) else str(lines)
        operator = _as_antihermitian_fermion(fermion_blocks_single(text))
        generator = jordan_wigner(operator, n_qubits)
    elif "file" in entry:
        generators = read_generators(os.path.join(base_dir, entry["file"]))
        if len(generators) != 1:
            raise ParseError(f"factor {index}: {entry['file']} holds {len(generators)} generators, expected 1")
        generator = generators[0]
    else:
        raise ParseError(f"factor {index} needs one of 'pauli', 'fermion' or 'file'")
    if generator.n_qubits != n_qubits:
        raise ParseError(f"factor {index} acts on {generator.n_qubits} qubits, expected {n_qubits}")
    return generator


def fermion_blocks_single(text: str) -> FermionOperator:
    """The whole text as one fermionic operator (every line is a term)."""
    blocks = fermion_blocks(text + "\n---")
    if len(blocks) != 1:
        raise ParseError(f"expected one fermionic operator, found {len(blocks)}")
    return blocks[0]


def ansatz_from_dict(payload: Dict, base_dir: str = ".") -> Tuple[List[AnsatzFactor], StateVector]:
    """
    {"n_qubits": 4, "reference": "1100",
     "factors": [{"pauli": ["0.0+0.5i XY"], "amplitude": 0.1, "label": "t1"}, ...]}

    Factors are listed in product order; the last one acts on the reference first.
    """
    try:
        n_qubits = int(payload["n_qubits"])
        reference = StateVector.from_bitstring(str(payload.get("reference", "0" * n_qubits)))
        entries = payload["factors"]
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"invalid ansatz description ({e})") from None
    if reference.n_qubits != n_qubits:
        raise ParseError(f"reference has {reference.n_qubits} qubits, ansatz declares {n_qubits}")
    factors = []
    for index, entry in enumerate(entries):
        generator = _factor_generator(entry, n_qubits, base_dir, index)
        factors.append(AnsatzFactor(generator, float(entry.get("amplitude", 0.0)), str(entry.get("label", index))))
    return factors, reference


def read_ansatz(path: str) -> Tuple[List[AnsatzFactor], StateVector]:
    try:
        payload = json.loads(_read_text(path))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e}") from None
    return ansatz_from_dict(payload, os.path.dirname(os.path.abspath(path)))


def read_objective(text: str) -> Objective:
    """`fidelity:<state file>` or `energy:<Hamiltonian file>`."""
    kind, _, path = text.partition(":")
    if kind == "fidelity" and path:
        return Objective.max_fidelity(read_state(path))
    if kind == "energy" and path:
        return Objective.min_energy(read_hamiltonian(path))
    raise ParseError(f"objective must be fidelity:<file> or energy:<file>, got {text!r}")


def is_report_text(text: str) -> bool:
    return text.lstrip().startswith("{")

