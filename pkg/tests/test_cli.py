"""End-to-end tests of the command-line interface."""

import csv
import io
import json
import math
from importlib import resources

import jsonschema
import numpy as np
import pytest
from click.testing import CliRunner

from qcrb_lab.cli import SCAN_COLUMNS, main

SCHEMA = json.loads(
    resources.files("qcrb_lab").joinpath("schemas/output.schema.json")
    .read_text(encoding="utf-8"))
VALIDATOR = jsonschema.Draft202012Validator(SCHEMA)


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def ghz2_spec(tmp_path):
    path = tmp_path / "ghz2.yaml"
    path.write_text(
        "state:\n  ghz: {n: 2}\n"
        "observable:\n  pauli_product: {a1: 1}\n"
        "povm: x_basis_product\n"
        "phi: pi/8\nnu: 100000\nseed: 5\ntrials: 40\n",
        encoding="utf-8")
    return str(path)


def run_json(runner, args):
    result = runner.invoke(main, args + ["--output", "json"])
    assert result.exit_code == 0, result.output
    payload = json.loads(result.output)
    VALIDATOR.validate(payload)
    return payload


class TestQfiCommand:
    def test_value_and_schema(self, runner, ghz2_spec):
        payload = run_json(runner, ["qfi", "--model", ghz2_spec])
        assert payload["command"] == "qfi"
        assert payload["rows"][0]["qfi"] == pytest.approx(4.0, abs=1e-9)

    def test_show_sld_includes_matrix(self, runner, ghz2_spec):
        payload = run_json(runner, ["qfi", "--model", ghz2_spec, "--show-sld"])
        matrix = payload["rows"][0]["sld_matrix"]
        assert len(matrix) == 16
        phi = math.pi / 8
        corner = complex(*matrix[3])
        assert corner == pytest.approx(-2j * np.exp(-2j * phi), abs=1e-9)

    def test_single_qubit(self, runner, tmp_path):
        path = tmp_path / "one.yaml"
        path.write_text("state:\n  ghz: {n: 1}\n", encoding="utf-8")
        payload = run_json(runner, ["qfi", "--model", str(path), "--phi", "0.3"])
        assert payload["rows"][0]["qfi"] == pytest.approx(1.0, abs=1e-9)

    def test_phase_independent_state(self, runner, tmp_path):
        path = tmp_path / "still.yaml"
        path.write_text(
            "state:\n  custom: {amplitudes: [[1, 0], [0, 0]]}\n"
            "parametrization:\n"
            "  generator: {matrix: [[0, 0], [0, 0], [0, 0], [0, 0]]}\n",
            encoding="utf-8")
        payload = run_json(runner, ["qfi", "--model", str(path), "--phi", "0.9"])
        assert payload["rows"][0]["qfi"] == pytest.approx(0.0, abs=1e-12)


class TestSldCommand:
    def test_diagnostics(self, runner, ghz2_spec):
        payload = run_json(runner, ["sld", "--model", ghz2_spec])
        row = payload["rows"][0]
        assert row["residual"] <= 1e-9
        assert row["kernel_dim"] == 3


class TestErrpropCommand:
    def test_report_fields(self, runner, ghz2_spec):
        payload = run_json(runner, ["errprop", "--model", ghz2_spec])
        row = payload["rows"][0]
        assert row["delta_phi_sq"] == pytest.approx(2.5e-6, rel=1e-9)
        assert row["qcrb"] == pytest.approx(2.5e-6, rel=1e-9)
        assert row["nu"] == 100000

    def test_singular_point_is_runtime_error(self, runner, ghz2_spec):
        result = runner.invoke(main, ["errprop", "--model", ghz2_spec,
                                      "--phi", "pi/2"])
        assert result.exit_code == 4


class TestCheckOptimalCommand:
    def test_optimal_exits_zero(self, runner, ghz2_spec):
        payload = run_json(runner, ["check-optimal", "--model", ghz2_spec])
        row = payload["rows"][0]
        assert row["is_optimal"] is True
        assert row["alpha"] == pytest.approx(-math.sqrt(2) / 4, abs=1e-9)

    def test_not_optimal_exits_three(self, runner, tmp_path):
        path = tmp_path / "sz.yaml"
        path.write_text(
            "state:\n  ghz: {n: 3}\nobservable:\n  pauli_product: {a3: 1}\n"
            "phi: 0.3\n", encoding="utf-8")
        result = runner.invoke(main, ["check-optimal", "--model", str(path)])
        assert result.exit_code == 3

    def test_singular_point_flagged_not_optimal(self, runner, ghz2_spec):
        result = runner.invoke(main, ["check-optimal", "--model", ghz2_spec,
                                      "--phi", "pi/2", "--output", "json"])
        assert result.exit_code == 3
        payload = json.loads(result.output)
        VALIDATOR.validate(payload)
        row = payload["rows"][0]
        assert row["singular_flag"] is True
        assert row["is_optimal"] is False

    @pytest.mark.parametrize("variant", ["pure", "pure_unitary"])
    def test_variants_available(self, runner, ghz2_spec, variant):
        payload = run_json(runner, ["check-optimal", "--model", ghz2_spec,
                                    "--variant", variant])
        assert payload["rows"][0]["condition_variant"] == variant
        assert payload["rows"][0]["is_optimal"] is True


class TestScanCommand:
    def test_csv_header_and_singular_rows(self, runner, ghz2_spec):
        result = runner.invoke(main, ["scan", "--model", ghz2_spec,
                                      "--phi-range", "0:pi:9",
                                      "--output", "csv"])
        assert result.exit_code == 0, result.output
        rows = list(csv.DictReader(io.StringIO(result.output)))
        header = result.output.splitlines()[0]
        assert header == ",".join(SCAN_COLUMNS)
        assert len(rows) == 9
        phis = [float(r["phi"]) for r in rows]
        assert phis == sorted(phis)
        singular = [r["singular_flag"] == "true" for r in rows]
        assert singular == [k in (0, 4, 8) for k in range(9)]
        for k, row in enumerate(rows):
            if singular[k]:
                assert row["delta_phi_ep"] == ""
                continue
            product = float(row["delta_phi_ep"]) * 100000 * 4
            assert product == pytest.approx(1.0, abs=1e-8)
            assert float(row["qcrb"]) == pytest.approx(2.5e-6, rel=1e-9)
            assert float(row["delta_phi_ep"]) >= float(row["qcrb"]) - 1e-9
            assert float(row["cfi"]) == pytest.approx(4.0, abs=1e-9)

    def test_json_schema_and_determinism(self, runner, ghz2_spec, tmp_path):
        args = ["scan", "--model", ghz2_spec, "--phi-range", "0:pi:5",
                "--output", "json"]
        first = runner.invoke(main, args)
        second = runner.invoke(main, args)
        assert first.exit_code == 0
        assert first.output == second.output
        VALIDATOR.validate(json.loads(first.output))

    def test_out_file_byte_identical(self, runner, ghz2_spec, tmp_path):
        out_a = tmp_path / "a.csv"
        out_b = tmp_path / "b.csv"
        for out in (out_a, out_b):
            result = runner.invoke(main, ["scan", "--model", ghz2_spec,
                                          "--phi-range", "0:pi:5",
                                          "--output", "csv", "--out", str(out)])
            assert result.exit_code == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_thread_cap_does_not_change_output(self, runner, ghz2_spec,
                                               monkeypatch):
        args = ["scan", "--model", ghz2_spec, "--phi-range", "0:pi:7",
                "--output", "json"]
        serial = runner.invoke(main, args)
        monkeypatch.setenv("QCRB_LAB_THREADS", "4")
        threaded = runner.invoke(main, args)
        assert serial.output == threaded.output

    def test_requires_range(self, runner, ghz2_spec):
        result = runner.invoke(main, ["scan", "--model", ghz2_spec])
        assert result.exit_code == 2


class TestCfiCommand:
    def test_value(self, runner, ghz2_spec):
        payload = run_json(runner, ["cfi", "--model", ghz2_spec])
        assert payload["rows"][0]["cfi"] == pytest.approx(4.0, abs=1e-9)

    def test_singular_phase_exits_four(self, runner, ghz2_spec):
        result = runner.invoke(main, ["cfi", "--model", ghz2_spec, "--phi", "0"])
        assert result.exit_code == 4


class TestLambdaCommand:
    def test_quarter_pi_values(self, runner):
        payload = run_json(runner, ["lambda", "--phi", "pi/4"])
        assert payload["singular"] is False
        assert payload["lambda_pp"] == pytest.approx(-2.0, abs=1e-9)
        assert payload["lambda_pm"] == pytest.approx(2.0, abs=1e-9)
        assert payload["lambda_mp"] == pytest.approx(2.0, abs=1e-9)
        assert payload["lambda_mm"] == pytest.approx(-2.0, abs=1e-9)

    def test_zero_phase_is_singular(self, runner):
        payload = run_json(runner, ["lambda", "--phi", "0"])
        assert payload["singular"] is True
        assert payload["lambda_pp"] is None

    def test_y_basis(self, runner):
        payload = run_json(runner, ["lambda", "--phi", "pi/4",
                                    "--basis", "y_basis"])
        assert payload["basis"] == "y_basis"
        assert payload["lambda_pp"] == pytest.approx(2.0, abs=1e-9)
        assert payload["lambda_pm"] == pytest.approx(-2.0, abs=1e-9)


class TestSimulateCommand:
    def test_deterministic_json(self, runner, ghz2_spec):
        args = ["simulate", "--model", ghz2_spec, "--nu", "2000",
                "--trials", "10", "--output", "json"]
        first = runner.invoke(main, args)
        second = runner.invoke(main, args)
        assert first.exit_code == 0, first.output
        assert first.output == second.output
        payload = json.loads(first.output)
        VALIDATOR.validate(payload)
        methods = {entry["method"] for entry in payload["results"]}
        assert methods == {"sample_mean_inversion", "maximum_likelihood"}
        for entry in payload["results"]:
            assert len(entry["estimates"]) == 10

    def test_seed_changes_estimates(self, runner, ghz2_spec):
        base = ["simulate", "--model", ghz2_spec, "--nu", "2000",
                "--trials", "8", "--output", "json"]
        a = json.loads(runner.invoke(main, base).output)
        b = json.loads(runner.invoke(main, base + ["--seed", "99"]).output)
        assert a["results"][0]["estimates"] != b["results"][0]["estimates"]

    def test_flat_likelihood_exits_four(self, runner, tmp_path):
        path = tmp_path / "flat.yaml"
        path.write_text(
            "state:\n  ghz: {n: 1}\n"
            "povm:\n  custom:\n    elements:\n"
            "      - [[1, 0], [0, 0], [0, 0], [0, 0]]\n"
            "      - [[0, 0], [0, 0], [0, 0], [1, 0]]\n"
            "phi: 0.4\nnu: 100\ntrials: 5\n",
            encoding="utf-8")
        result = runner.invoke(main, ["simulate", "--model", str(path)])
        assert result.exit_code == 4


class TestCliContract:
    def test_missing_model_is_spec_error(self, runner):
        result = runner.invoke(main, ["qfi"])
        assert result.exit_code == 2

    def test_invalid_spec_is_exit_two(self, runner, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("state:\n  ghz: {n: 0}\n", encoding="utf-8")
        result = runner.invoke(main, ["qfi", "--model", str(path)])
        assert result.exit_code == 2
        assert "state.ghz.n" in result.output

    def test_csv_limited_to_scan(self, runner, ghz2_spec):
        result = runner.invoke(main, ["qfi", "--model", ghz2_spec,
                                      "--output", "csv"])
        assert result.exit_code == 2

    def test_phi_option_overrides_file(self, runner, ghz2_spec):
        payload = run_json(runner, ["qfi", "--model", ghz2_spec, "--phi", "1.0"])
        assert payload["rows"][0]["phi"] == pytest.approx(1.0)

    def test_phi_range_option(self, runner, ghz2_spec):
        payload = run_json(runner, ["qfi", "--model", ghz2_spec,
                                    "--phi-range", "0:pi:3"])
        phis = [row["phi"] for row in payload["rows"]]
        assert phis == pytest.approx([0.0, math.pi / 2, math.pi])
