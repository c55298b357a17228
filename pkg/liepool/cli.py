import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from liepool.fermion_ops import FermionIndexError, SpinOrbitalLayout, SymmetryKind, symmetry_operator
from liepool.lie_engine import ClosureError, NotAnticommuting, center, close, symmetry_adapt
from liepool.model import ORDERINGS, run_pipeline
from liepool.pauli_core import NotAntiHermitian, ParseError, QubitCountMismatch
from liepool.reports import (dis_report, dumps_report, is_report_text, model_report, orderscan_report, read_ansatz,
                             read_generators, read_hamiltonian, read_objective, read_subalgebra_report,
                             subalgebra_report, write_report)
from liepool.sim import StateVector, dis_classes, orderscan
from liepool.utils import (DEFAULT_SEEDS, MAX_DIS_QUBITS, MAX_SCAN_FACTORS, ORDER_AGREEMENT, CapacityError,
                           parse_seed_schedule)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_INPUT = 2
EXIT_CAPACITY = 3
EXIT_MODEL_STAGE = 4

DEFAULT_CONFIG = "liepool.json"
COMMANDS = ("closure", "symmetrize", "dis", "orderscan", "model")
INPUT_ERRORS = (ParseError, OSError, FermionIndexError, QubitCountMismatch, NotAntiHermitian, NotAnticommuting,
                ClosureError)


class ConfigError(ValueError):
    """Unreadable or inconsistent run configuration."""


def parse_symmetries(text: str) -> Tuple[SymmetryKind, ...]:
    """`ne,sz,s2` (any subset, empty for none)."""
    allowed = {SymmetryKind.NE.value, SymmetryKind.SZ.value, SymmetryKind.S2.value}
    kinds = []
    for token in (part.strip().lower() for part in text.split(",")):
        if not token:
            continue
        if token not in allowed:
            raise ConfigError(f"unknown symmetry {token!r}, expected a subset of ne,sz,s2")
        kinds.append(SymmetryKind(token))
    return tuple(kinds)


@dataclass
class RunConfig:
    """Settings for one command: built-in defaults, then the JSON config file, then flags."""
    command: str
    input: Optional[str] = None
    output: Optional[str] = None
    n_qubits: Optional[int] = None
    symmetries: Tuple[SymmetryKind, ...] = (SymmetryKind.NE, SymmetryKind.SZ, SymmetryKind.S2)
    max_dim: Optional[int] = None
    seeds: Tuple[int, ...] = DEFAULT_SEEDS
    tolerance: float = 1e-10
    maxiter: Optional[int] = None
    max_permutations: Optional[int] = None
    agreement: float = ORDER_AGREEMENT
    ref_bitstring: Optional[str] = None
    objective: Optional[str] = None
    ordering: str = "adapted"
    use_symmetry: bool = True
    threads: Optional[int] = None

    def __post_init__(self):
        assert self.command in COMMANDS
        if self.max_dim is not None and self.max_dim < 1:
            raise ConfigError(f"max_dim must be at least 1, got {self.max_dim}")
        if self.input is not None and not os.path.exists(self.input):
            raise ConfigError(f"input file {self.input} does not exist")
        if not self.seeds:
            raise ConfigError("seed schedule is empty")

    def with_file(self, details: dict) -> "RunConfig":
        """Overlay the `optimizer`, `closure` and `orderscan` sections of a config document."""
        updates = {}
        optimizer = details.get("optimizer", {})
        if "seeds" in optimizer:
            seeds = optimizer["seeds"]
            updates["seeds"] = parse_seed_schedule(seeds) if isinstance(seeds, str) else tuple(int(s) for s in seeds)
        for key in ("tolerance", "maxiter"):
            if optimizer.get(key) is not None:
                updates[key] = optimizer[key]
        if details.get("closure", {}).get("max_dim") is not None:
            updates["max_dim"] = int(details["closure"]["max_dim"])
        orderscan_details = details.get("orderscan", {})
        if orderscan_details.get("max_permutations") is not None:
            updates["max_permutations"] = int(orderscan_details["max_permutations"])
        if orderscan_details.get("agreement") is not None:
            updates["agreement"] = float(orderscan_details["agreement"])
        if details.get("threads") is not None:
            updates["threads"] = int(details["threads"])
        return replace(self, **updates)

    @classmethod
    def build(cls, arguments: argparse.Namespace) -> "RunConfig":
        config = cls(arguments.command)

        path = arguments.config
        if path is None and os.path.exists(DEFAULT_CONFIG):
            path = DEFAULT_CONFIG
        if path is not None:
            try:
                with open(path) as config_file:
                    config = config.with_file(json.load(config_file))
            except (OSError, ValueError, TypeError, AttributeError) as e:
                raise ConfigError(f"cannot use config file {path}: {e}") from None

        updates = {"input": arguments.input, "output": arguments.output}
        if arguments.qubits is not None:
            updates["n_qubits"] = arguments.qubits
        if arguments.symmetries is not None:
            updates["symmetries"] = parse_symmetries(arguments.symmetries)
        if arguments.max_dim is not None:
            updates["max_dim"] = arguments.max_dim
        if arguments.seed_schedule is not None:
            try:
                updates["seeds"] = parse_seed_schedule(arguments.seed_schedule)
            except ValueError as e:
                raise ConfigError(f"invalid seed schedule: {e}") from None
        if arguments.max_permutations is not None:
            updates["max_permutations"] = arguments.max_permutations
        if arguments.ref_bitstring is not None:
            updates["ref_bitstring"] = arguments.ref_bitstring
        if arguments.objective is not None:
            updates["objective"] = arguments.objective
        if arguments.ordering is not None:
            updates["ordering"] = arguments.ordering
        if arguments.no_symmetry:
            updates["use_symmetry"] = False
        return replace(config, **updates)


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help=f"JSON configuration file (default: {DEFAULT_CONFIG} if present)")
    common.add_argument("--debug", action="store_true", help="Enable debug output")
    common.add_argument("--input", type=str, default=None, help="Input file for the command")
    common.add_argument("--output", type=str, default=None, help="Report file (default: standard output)")
    common.add_argument("--qubits", type=int, default=None, help="Expected qubit count of the input")
    common.add_argument("--symmetries", type=str, default=None,
                        help="Comma-separated subset of ne,sz,s2 (empty string for none)")
    common.add_argument("--max-dim", type=int, default=None, help="Closure dimension cap")
    common.add_argument("--ref-bitstring", type=str, default=None,
                        help="Reference basis state, character j is qubit j")
    common.add_argument("--objective", type=str, default=None,
                        help="fidelity:<state file> or energy:<Hamiltonian file>")
    common.add_argument("--seed-schedule", type=str, default=None,
                        help="Optimizer seeds, `a-b` or a comma list (default 0-31)")
    common.add_argument("--max-permutations", type=int, default=None,
                        help="Scan at most this many factor orderings")
    common.add_argument("--ordering", type=str, choices=ORDERINGS, default=None,
                        help="Ansatz ordering for the model fidelity stage")
    common.add_argument("--no-symmetry", action="store_true",
                        help="Skip symmetry adaptation in the model run")

    parser = argparse.ArgumentParser(prog="liepool")
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("closure", parents=[common], help="Lie closure of a generator file")
    subparsers.add_parser("symmetrize", parents=[common], help="Symmetry-adapt a closure")
    subparsers.add_parser("dis", parents=[common], help="Direct interaction set of a Hamiltonian")
    subparsers.add_parser("orderscan", parents=[common], help="Optimize every ordering of an ansatz")
    subparsers.add_parser("model", parents=[common], help="Reproduce the two-electron model example")
    return parser


class LiePool:
    def __init__(self, args: list):
        parser = _build_parser()
        self.arguments = parser.parse_args(args)

        logging.basicConfig(format='%(asctime)-15s %(levelname)-8s %(message)s',
                            level=(logging.DEBUG if self.arguments.debug else logging.INFO))

    def main(self) -> int:
        try:
            self.config = RunConfig.build(self.arguments)
            return getattr(self, f"cmd_{self.config.command}")()
        except ConfigError as e:
            logging.getLogger().error(f"Configuration error: {e}")
            return EXIT_INPUT
        except INPUT_ERRORS as e:
            logging.getLogger().error(f"Input error: {e}")
            return EXIT_INPUT
        except CapacityError as e:
            logging.getLogger().error(f"Capacity exceeded: {e}")
            return EXIT_CAPACITY
        except Exception:
            logging.getLogger().exception("Unexpected error")
            return EXIT_UNEXPECTED

    def _require_input(self) -> str:
        if self.config.input is None:
            raise ConfigError(f"{self.config.command} needs --input")
        return self.config.input

    def _check_qubits(self, n_qubits: int) -> None:
        if self.config.n_qubits is not None and self.config.n_qubits != n_qubits:
            raise QubitCountMismatch(f"input acts on {n_qubits} qubits, --qubits says {self.config.n_qubits}")

    def _emit(self, report: dict) -> None:
        if self.config.output:
            write_report(report, self.config.output)
        else:
            sys.stdout.write(dumps_report(report))

    def cmd_closure(self) -> int:
        generators = read_generators(self._require_input())
        self._check_qubits(generators[0].n_qubits)
        algebra = close(generators, max_dim=self.config.max_dim, workers=self.config.threads)
        self._emit(subalgebra_report(algebra, center(algebra)))
        return EXIT_OK

    def cmd_symmetrize(self) -> int:
        path = self._require_input()
        with open(path) as input_file:
            text = input_file.read()
        if is_report_text(text):
            algebra = read_subalgebra_report(path)
        else:
            algebra = close(read_generators(path), max_dim=self.config.max_dim, workers=self.config.threads)
        self._check_qubits(algebra.n_qubits)

        symmetries = []
        if self.config.symmetries:
            if algebra.n_qubits % 2:
                raise ConfigError(f"spin symmetries need an even qubit count, got {algebra.n_qubits}")
            layout = SpinOrbitalLayout.for_modes(algebra.n_qubits)
            symmetries = [symmetry_operator(kind, layout) for kind in self.config.symmetries]
        adapted = symmetry_adapt(algebra, symmetries)
        self._emit(subalgebra_report(adapted, center(adapted), [kind.value for kind in self.config.symmetries]))
        return EXIT_OK

    def cmd_dis(self) -> int:
        hamiltonian = read_hamiltonian(self._require_input())
        self._check_qubits(hamiltonian.n_qubits)
        bits = self.config.ref_bitstring or "0" * hamiltonian.n_qubits
        if max(len(bits), hamiltonian.n_qubits) > MAX_DIS_QUBITS:
            raise CapacityError(f"exhaustive DIS enumeration is capped at {MAX_DIS_QUBITS} qubits, "
                                f"got {max(len(bits), hamiltonian.n_qubits)}")
        try:
            reference = StateVector.from_bitstring(bits)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        if reference.n_qubits != hamiltonian.n_qubits:
            raise QubitCountMismatch(f"reference has {reference.n_qubits} qubits, Hamiltonian {hamiltonian.n_qubits}")

        classes = dis_classes(hamiltonian, reference)
        seen = set()
        for group in classes:
            keys = {member.key for member in group.members}
            if keys & seen:
                raise RuntimeError("DIS classes overlap")
            seen |= keys
        self._emit(dis_report(classes, hamiltonian.n_qubits, bits))
        return EXIT_OK

    def cmd_orderscan(self) -> int:
        factors, reference = read_ansatz(self._require_input())
        self._check_qubits(reference.n_qubits)
        if self.config.objective is None:
            raise ConfigError("orderscan needs --objective fidelity:<file> or energy:<file>")
        objective = read_objective(self.config.objective)
        scan = orderscan(factors, reference, objective, max_factors=MAX_SCAN_FACTORS,
                         max_permutations=self.config.max_permutations, agreement=self.config.agreement,
                         seeds=self.config.seeds, tolerance=self.config.tolerance, maxiter=self.config.maxiter,
                         workers=self.config.threads)
        self._emit(orderscan_report(scan, objective))
        return EXIT_OK

    def cmd_model(self) -> int:
        run = run_pipeline(ordering=self.config.ordering, use_symmetry=self.config.use_symmetry,
                           seeds=self.config.seeds, max_permutations=self.config.max_permutations,
                           agreement=self.config.agreement, workers=self.config.threads,
                           tolerance=self.config.tolerance, max_dim=self.config.max_dim)
        self._emit(model_report(run))
        if not run.ok:
            logging.getLogger().error(f"Model stages failed: {', '.join(run.failed_stages)}")
            return EXIT_MODEL_STAGE
        return EXIT_OK


def main(argv: Optional[list] = None) -> int:
    return LiePool(sys.argv[1:] if argv is None else argv).main()


if __name__ == "__main__":
    sys.exit(main())
