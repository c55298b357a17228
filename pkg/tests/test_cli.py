"""
Tests for the liepool command line: exit codes, configuration layering and reports.
"""
import json

import pytest

from liepool.cli import (EXIT_CAPACITY, EXIT_INPUT, EXIT_OK, ConfigError, LiePool, RunConfig, main,
                         parse_symmetries)
from liepool.fermion_ops import SymmetryKind

MODEL_GENERATORS = """modes: 2
1.0 2^ 3^ 1 0
---
1.0 3^ 1
---
1.0 2^ 0
"""

TARGET_STATE = "0110 -0.7071067811865476+0.0i\n1001 0.7071067811865476+0.0i\n"

KAPPA_ANSATZ = {
    "n_qubits": 4,
    "reference": "1100",
    "factors": [{"fermion": ["1.0 2^ 3^ 1 0"], "label": "k_iibar^aabar"},
                {"fermion": ["1.0 3^ 1"], "label": "k_ibar^abar"},
                {"fermion": ["1.0 2^ 0"], "label": "k_i^a"}],
}


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def write(path, text):
    path.write_text(text)
    return str(path)


def run(*args):
    return main(list(args))


class TestClosureCommand:
    def test_model_generators(self, workdir):
        source = write(workdir / "generators.txt", MODEL_GENERATORS)
        assert run("closure", "--input", source, "--output", "closure.json") == EXIT_OK
        report = json.loads((workdir / "closure.json").read_text())
        assert report["dimension"] == 8
        assert report["center_dimension"] == 2

    def test_single_qubit_pair(self, workdir):
        source = write(workdir / "xy.txt", "1.0 X\n1.0 Y\n")
        assert run("closure", "--input", source, "--output", "out.json") == EXIT_OK
        assert json.loads((workdir / "out.json").read_text())["dimension"] == 3

    def test_commuting_generators(self, workdir):
        source = write(workdir / "zz.txt", "ZI\nIZ\nZZ\n")
        assert run("closure", "--input", source, "--output", "out.json") == EXIT_OK
        assert json.loads((workdir / "out.json").read_text())["dimension"] == 3

    def test_report_to_stdout(self, workdir, capsys):
        source = write(workdir / "xy.txt", "1.0 X\n1.0 Y\n")
        assert run("closure", "--input", source) == EXIT_OK
        assert json.loads(capsys.readouterr().out)["dimension"] == 3

    def test_reports_are_reproducible(self, workdir):
        source = write(workdir / "generators.txt", MODEL_GENERATORS)
        run("closure", "--input", source, "--output", "first.json")
        run("closure", "--input", source, "--output", "second.json")
        assert (workdir / "first.json").read_bytes() == (workdir / "second.json").read_bytes()

    def test_parse_error(self, workdir):
        source = write(workdir / "bad.txt", "1.0 Q\n")
        assert run("closure", "--input", source) == EXIT_INPUT

    def test_missing_input(self, workdir):
        assert run("closure", "--input", "missing.txt") == EXIT_INPUT
        assert run("closure") == EXIT_INPUT

    def test_capacity(self, workdir):
        source = write(workdir / "xy.txt", "1.0 X\n1.0 Y\n")
        assert run("closure", "--input", source, "--max-dim", "2") == EXIT_CAPACITY

    def test_qubit_count_check(self, workdir):
        source = write(workdir / "xy.txt", "1.0 X\n1.0 Y\n")
        assert run("closure", "--input", source, "--qubits", "2") == EXIT_INPUT


class TestSymmetrizeCommand:
    def test_from_closure_report(self, workdir):
        source = write(workdir / "generators.txt", MODEL_GENERATORS)
        assert run("closure", "--input", source, "--output", "closure.json") == EXIT_OK
        assert run("symmetrize", "--input", "closure.json", "--symmetries", "ne,sz,s2",
                   "--output", "adapted.json") == EXIT_OK
        report = json.loads((workdir / "adapted.json").read_text())
        assert report["dimension"] == 4
        assert report["center_dimension"] == 1
        assert report["symmetries"] == ["ne", "sz", "s2"]

    def test_anticommuting_set_is_empty(self, workdir):
        source = write(workdir / "majoranas.txt", "1.0 XIII\n1.0 ZYII\n")
        assert run("symmetrize", "--input", source, "--output", "adapted.json") == EXIT_OK
        report = json.loads((workdir / "adapted.json").read_text())
        assert report["empty"]
        assert report["dimension"] == 0

    def test_no_symmetries_keeps_algebra(self, workdir):
        source = write(workdir / "generators.txt", MODEL_GENERATORS)
        assert run("symmetrize", "--input", source, "--symmetries", "", "--output", "adapted.json") == EXIT_OK
        assert json.loads((workdir / "adapted.json").read_text())["dimension"] == 8

    def test_unknown_symmetry(self, workdir):
        source = write(workdir / "generators.txt", MODEL_GENERATORS)
        assert run("symmetrize", "--input", source, "--symmetries", "parity") == EXIT_INPUT

    def test_odd_qubit_count(self, workdir):
        source = write(workdir / "xy.txt", "1.0 X\n1.0 Y\n")
        assert run("symmetrize", "--input", source) == EXIT_INPUT


class TestDisCommand:
    def test_single_qubit(self, workdir):
        source = write(workdir / "h.txt", "1.0 X\n")
        assert run("dis", "--input", source, "--ref-bitstring", "0", "--output", "dis.json") == EXIT_OK
        report = json.loads((workdir / "dis.json").read_text())
        assert report["n_classes"] == 1
        assert report["classes"][0]["representative"] == "Y"
        assert report["classes"][0]["magnitude"] == 2.0
        assert report["classes"][0]["size"] == 1

    def test_diagonal_hamiltonian(self, workdir):
        source = write(workdir / "h.txt", "0.5 ZZ\n-1.0 ZI\n")
        assert run("dis", "--input", source, "--ref-bitstring", "10", "--output", "dis.json") == EXIT_OK
        assert json.loads((workdir / "dis.json").read_text())["n_classes"] == 0

    def test_qubit_cap(self, workdir):
        source = write(workdir / "h.txt", "1.0 XXXXXXXXX\n")
        assert run("dis", "--input", source) == EXIT_CAPACITY

    def test_long_reference_hits_cap_before_allocation(self, workdir, monkeypatch):
        source = write(workdir / "h.txt", "1.0 XX\n")

        def refuse(bits):
            raise AssertionError(f"state of {len(bits)} qubits allocated")

        monkeypatch.setattr("liepool.cli.StateVector.from_bitstring", refuse)
        assert run("dis", "--input", source, "--ref-bitstring", "0" * 64) == EXIT_CAPACITY

    def test_reference_length_mismatch(self, workdir):
        source = write(workdir / "h.txt", "1.0 XX\n")
        assert run("dis", "--input", source, "--ref-bitstring", "0") == EXIT_INPUT

    def test_non_hermitian_hamiltonian(self, workdir):
        source = write(workdir / "h.txt", "0.0+1.0i X\n")
        assert run("dis", "--input", source) == EXIT_INPUT


class TestOrderscanCommand:
    def test_kappa_orderings_are_order_dependent(self, workdir):
        ansatz = write(workdir / "ansatz.json", json.dumps(KAPPA_ANSATZ))
        target = write(workdir / "target.txt", TARGET_STATE)
        assert run("orderscan", "--input", ansatz, "--objective", f"fidelity:{target}",
                   "--seed-schedule", "0-7", "--output", "scan.json") == EXIT_OK
        report = json.loads((workdir / "scan.json").read_text())
        assert report["verdict"] == "order-dependent"
        assert report["permutations_scanned"] == 6
        assert report["spread"] > 1e-3

    def test_single_factor_energy(self, workdir):
        ansatz = write(workdir / "ansatz.json", json.dumps({"n_qubits": 1, "factors": [{"pauli": ["1.0 Y"]}]}))
        hamiltonian = write(workdir / "h.txt", "1.0 Z\n")
        assert run("orderscan", "--input", ansatz, "--objective", f"energy:{hamiltonian}",
                   "--seed-schedule", "0-3", "--output", "scan.json") == EXIT_OK
        report = json.loads((workdir / "scan.json").read_text())
        assert report["verdict"] == "order-invariant"
        assert report["permutations"][0]["value"] == pytest.approx(-1.0, abs=1e-8)

    def test_factor_cap(self, workdir):
        ansatz = write(workdir / "ansatz.json",
                       json.dumps({"n_qubits": 1, "factors": [{"pauli": ["1.0 Y"]}] * 9}))
        hamiltonian = write(workdir / "h.txt", "1.0 Z\n")
        assert run("orderscan", "--input", ansatz, "--objective", f"energy:{hamiltonian}") == EXIT_CAPACITY

    def test_missing_objective(self, workdir):
        ansatz = write(workdir / "ansatz.json", json.dumps(KAPPA_ANSATZ))
        assert run("orderscan", "--input", ansatz) == EXIT_INPUT


class TestModelCommand:
    def test_default_run(self, workdir):
        assert run("model", "--seed-schedule", "0-7", "--output", "model.json") == EXIT_OK
        report = json.loads((workdir / "model.json").read_text())
        assert report["ok"]
        assert report["failed_stages"] == []

    def test_two_one_one_ordering(self, workdir):
        assert run("model", "--ordering", "211", "--seed-schedule", "0-7", "--output", "model.json") == EXIT_OK
        report = json.loads((workdir / "model.json").read_text())
        fidelity = next(stage for stage in report["stages"] if stage["name"] == "fidelity")
        assert fidelity["status"] == "expected-failure"

    def test_capacity(self, workdir):
        assert run("model", "--max-dim", "4", "--seed-schedule", "0") == EXIT_CAPACITY


class TestConfiguration:
    def test_parse_symmetries(self):
        assert parse_symmetries("ne, S2") == (SymmetryKind.NE, SymmetryKind.S2)
        assert parse_symmetries("") == ()
        with pytest.raises(ConfigError):
            parse_symmetries("sx")

    def test_config_file_then_flags(self, workdir):
        (workdir / "liepool.json").write_text(json.dumps({
            "optimizer": {"seeds": "0-3", "tolerance": 1e-8},
            "orderscan": {"max_permutations": 4}}))
        config = RunConfig.build(LiePool(["model"]).arguments)
        assert config.seeds == (0, 1, 2, 3)
        assert config.tolerance == 1e-8
        assert config.max_permutations == 4

        config = RunConfig.build(LiePool(["model", "--seed-schedule", "5,6", "--max-permutations", "2"]).arguments)
        assert config.seeds == (5, 6)
        assert config.max_permutations == 2

    def test_explicit_config_path(self, workdir):
        (workdir / "custom.json").write_text(json.dumps({"optimizer": {"seeds": [7, 9]}}))
        config = RunConfig.build(LiePool(["model", "--config", "custom.json"]).arguments)
        assert config.seeds == (7, 9)

    def test_bad_config_file(self, workdir):
        (workdir / "liepool.json").write_text("{broken")
        assert run("model") == EXIT_INPUT

    def test_bad_seed_schedule(self, workdir):
        assert run("model", "--seed-schedule", "9-3") == EXIT_INPUT

    def test_max_dim_must_be_positive(self, workdir):
        with pytest.raises(ConfigError):
            RunConfig("closure", max_dim=0)
