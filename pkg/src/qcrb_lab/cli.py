"""Command-line interface.

Reads a model specification file, runs the requested analysis, and emits
text, JSON, or CSV. Exit codes: 0 success, 2 specification error, 3
not-optimal verdict (``check-optimal`` only), 4 runtime or numeric error.
"""

from __future__ import annotations

import csv
import io
import json
import sys

import click
import numpy as np

from ._concurrency import parallel_map
from .errors import (
    MetrologyError,
    SingularOutcomeError,
    SingularSensitivityError,
    SpecFileError,
)
from .fisher import cfi as cfi_value
from .fisher import outcome_distribution, sld
from .ghz import X_BASIS, Y_BASIS, two_qubit_lambda_solution
from .modelspec import ModelSpec, load_model_spec, parse_angle
from .optimality import check_observable_optimality, error_propagation
from .simulate import run_mle_trials, run_sample_mean_trials

SCAN_COLUMNS = ("phi", "qfi", "cfi", "variance", "slope", "delta_phi_ep",
                "qcrb", "alpha", "residual_rel", "is_optimal", "singular_flag")

EXIT_SPEC_ERROR = 2
EXIT_NOT_OPTIMAL = 3
EXIT_RUNTIME_ERROR = 4


def _matrix_pairs(matrix: np.ndarray) -> list[list[float]]:
    """Row-major flat list of [re, im] pairs (the model-file matrix format)."""
    flat = np.asarray(matrix, dtype=complex).reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def _common_options(fn):
    options = [
        click.option("--model", "model_path", type=click.Path(), default=None,
                     help="Model specification file (YAML)."),
        click.option("--phi", "phi_text", default=None,
                     help="Phase value; accepts expressions like 'pi/8'."),
        click.option("--phi-range", "phi_range_text", default=None,
                     metavar="START:STOP:STEPS",
                     help="Phase grid; parts accept expressions."),
        click.option("--nu", type=int, default=None,
                     help="Number of measurement repetitions."),
        click.option("--seed", type=int, default=None, help="RNG seed."),
        click.option("--trials", type=int, default=None,
                     help="Number of independent simulation trials."),
        click.option("--output", "output_format",
                     type=click.Choice(["text", "json", "csv"]), default="text",
                     help="Output format."),
        click.option("--out", "out_path", type=click.Path(), default=None,
                     help="Write output to a file instead of stdout."),
        click.option("--tol", type=float, default=None,
                     help="Relative residual tolerance for optimality verdicts."),
        click.option("--show-sld", is_flag=True, default=False,
                     help="Include the SLD matrix in qfi output."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def _load_spec(model_path, phi_text, phi_range_text, nu, seed, trials) -> ModelSpec:
    if model_path is None:
        raise SpecFileError("a --model specification file is required")
    spec = load_model_spec(model_path)
    phis, phi_is_range = spec.phis, spec.phi_is_range
    if phi_text is not None and phi_range_text is not None:
        raise SpecFileError("--phi and --phi-range are mutually exclusive")
    if phi_text is not None:
        phis, phi_is_range = np.array([parse_angle(phi_text)]), False
    elif phi_range_text is not None:
        parts = phi_range_text.split(":")
        if len(parts) != 3:
            raise SpecFileError("--phi-range must be START:STOP:STEPS")
        try:
            steps = int(parts[2])
        except ValueError as exc:
            raise SpecFileError("--phi-range STEPS must be an integer") from exc
        if steps < 2:
            raise SpecFileError("--phi-range STEPS must be >= 2")
        phis = np.linspace(parse_angle(parts[0], fieldname="phi-range.start"),
                           parse_angle(parts[1], fieldname="phi-range.stop"),
                           steps)
        phi_is_range = True
    if nu is not None and nu < 1:
        raise SpecFileError("--nu must be a positive integer")
    if trials is not None and trials < 2:
        raise SpecFileError("--trials must be at least 2")
    return ModelSpec(
        model=spec.model, observable=spec.observable, povm=spec.povm,
        phis=phis, phi_is_range=phi_is_range,
        nu=spec.nu if nu is None else nu,
        seed=spec.seed if seed is None else seed,
        trials=spec.trials if trials is None else trials,
        n_qubits=spec.n_qubits, tolerances=spec.tolerances)


def _opt_tol(spec: ModelSpec, tol: float | None) -> float:
    if tol is not None:
        return tol
    return spec.tolerances.get("optimality", 1e-8)


def _emit(text: str, out_path: str | None) -> None:
    if out_path is None:
        click.echo(text, nl=False)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _to_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _rows_as_text(rows: list[dict], columns) -> str:
    widths = {c: max(len(c), *(len(_fmt(r.get(c))) for r in rows)) for c in columns}
    lines = ["  ".join(c.ljust(widths[c]) for c in columns)]
    for row in rows:
        lines.append("  ".join(_fmt(row.get(c)).ljust(widths[c]) for c in columns))
    return "\n".join(lines) + "\n"


def _render_rows(command: str, rows: list[dict], columns, output_format: str,
                 extra: dict | None = None) -> str:
    if output_format == "json":
        payload = {"command": command, "rows": rows}
        if extra:
            payload.update(extra)
        return _to_json(payload)
    if output_format == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
        return buffer.getvalue()
    return _rows_as_text(rows, columns)


class _ExitWith(Exception):
    def __init__(self, code: int):
        self.code = code


def _run(fn) -> None:
    try:
        fn()
    except _ExitWith as stop:
        sys.exit(stop.code)
    except SpecFileError as exc:
        click.echo(f"specification error: {exc}", err=True)
        sys.exit(EXIT_SPEC_ERROR)
    except ValueError as exc:
        click.echo(f"specification error: {exc}", err=True)
        sys.exit(EXIT_SPEC_ERROR)
    except MetrologyError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME_ERROR)
    except ArithmeticError as exc:
        click.echo(f"numeric error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME_ERROR)


@click.group()
def main() -> None:
    """Quantum Fisher information and Cramér-Rao saturation toolkit."""


@main.command(name="qfi")
@_common_options
def cmd_qfi(model_path, phi_text, phi_range_text, nu, seed, trials,
            output_format, out_path, tol, show_sld):
    """Quantum Fisher information at each phase."""

    def impl():
        if output_format == "csv":
            raise SpecFileError("csv output is only available for 'scan'")
        spec = _load_spec(model_path, phi_text, phi_range_text, nu, seed, trials)
        rows = []
        for phi in spec.phis:
            result = sld(spec.model, float(phi))
            row = {"phi": float(phi), "qfi": result.qfi}
            if show_sld:
                row["sld_matrix"] = _matrix_pairs(result.L.matrix)
            rows.append(row)
        columns = ("phi", "qfi") + (("sld_matrix",) if show_sld else ())
        _emit(_render_rows("qfi", rows, columns, output_format), out_path)

    _run(impl)


@main.command(name="sld")
@_common_options
def cmd_sld(model_path, phi_text, phi_range_text, nu, seed, trials,
            output_format, out_path, tol, show_sld):
    """SLD operator, residual, and kernel dimension at each phase."""

    def impl():
        if output_format == "csv":
            raise SpecFileError("csv output is only available for 'scan'")
        spec = _load_spec(model_path, phi_text, phi_range_text, nu, seed, trials)
        rows = []
        for phi in spec.phis:
            result = sld(spec.model, float(phi))
            rows.append({"phi": float(phi), "qfi": result.qfi,
                         "residual": result.residual,
                         "kernel_dim": result.kernel_dim,
                         "matrix": _matrix_pairs(result.L.matrix)})
        columns = ("phi", "qfi", "residual", "kernel_dim", "matrix")
        _emit(_render_rows("sld", rows, columns, output_format), out_path)

    _run(impl)


@main.command(name="errprop")
@_common_options
def cmd_errprop(model_path, phi_text, phi_range_text, nu, seed, trials,
                output_format, out_path, tol, show_sld):
    """Error-propagation phase variance of the observable at each phase."""

    def impl():
        if output_format == "csv":
            raise SpecFileError("csv output is only available for 'scan'")
        spec = _load_spec(model_path, phi_text, phi_range_text, nu, seed, trials)
        if spec.observable is None:
            raise SpecFileError("errprop requires an observable", field="observable")
        rows = []
        for phi in spec.phis:
            report = error_propagation(spec.model, float(phi), spec.observable,
                                       spec.nu)
            rows.append({"phi": float(phi), "variance": report.variance,
                         "slope": report.slope, "nu": report.nu,
                         "delta_phi_sq": report.delta_phi_sq,
                         "intermediate_bound": report.intermediate_bound,
                         "qcrb": report.qcrb, "qfi": report.qfi,
                         "mean": report.mean,
                         "second_moment": report.second_moment})
        columns = ("phi", "variance", "slope", "nu", "delta_phi_sq",
                   "intermediate_bound", "qcrb", "qfi", "mean", "second_moment")
        _emit(_render_rows("errprop", rows, columns, output_format), out_path)

    _run(impl)


@main.command(name="check-optimal")
@_common_options
@click.option("--variant", type=click.Choice(["mixed", "pure", "pure_unitary"]),
              default="mixed", help="Saturation-condition variant.")
def cmd_check_optimal(model_path, phi_text, phi_range_text, nu, seed, trials,
                      output_format, out_path, tol, show_sld, variant):
    """Certify (exit 0) or refute (exit 3) observable optimality."""

    def impl():
        if output_format == "csv":
            raise SpecFileError("csv output is only available for 'scan'")
        spec = _load_spec(model_path, phi_text, phi_range_text, nu, seed, trials)
        if spec.observable is None:
            raise SpecFileError("check-optimal requires an observable",
                                field="observable")
        rows = []
        all_optimal = True
        for phi in spec.phis:
            report = check_observable_optimality(
                spec.model, float(phi), spec.observable, variant,
                tol=_opt_tol(spec, tol))
            singular = False
            try:
                error_propagation(spec.model, float(phi), spec.observable, spec.nu)
            except SingularSensitivityError:
                singular = True
            is_optimal = bool(report.is_optimal and not singular)
            all_optimal = all_optimal and is_optimal
            rows.append({"phi": float(phi), "alpha": report.alpha,
                         "residual_rel": report.residual_rel,
                         "im_part": report.im_part,
                         "anticommutator_mean": report.anticommutator_mean,
                         "is_optimal": is_optimal,
                         "condition_variant": report.condition_variant,
                         "singular_flag": singular,
                         "diagnostic": report.diagnostic})
        columns = ("phi", "alpha", "residual_rel", "im_part",
                   "anticommutator_mean", "is_optimal", "condition_variant",
                   "singular_flag", "diagnostic")
        _emit(_render_rows("check_optimal", rows, columns, output_format),
              out_path)
        if not all_optimal:
            raise _ExitWith(EXIT_NOT_OPTIMAL)

    _run(impl)


def _scan_row(spec: ModelSpec, phi: float, opt_tol: float) -> dict:
    row: dict = {c: None for c in SCAN_COLUMNS}
    row["phi"] = phi
    result = sld(spec.model, phi)
    row["qfi"] = result.qfi
    row["qcrb"] = 1.0 / (spec.nu * result.qfi) if result.qfi > 0.0 else None
    singular = False
    if spec.povm is not None:
        try:
            row["cfi"] = cfi_value(outcome_distribution(spec.model, phi, spec.povm))
        except SingularOutcomeError:
            singular = True
    if spec.observable is not None:
        try:
            report = error_propagation(spec.model, phi, spec.observable, spec.nu)
            row["variance"] = report.variance
            row["slope"] = report.slope
            row["delta_phi_ep"] = report.delta_phi_sq
            check = check_observable_optimality(spec.model, phi, spec.observable,
                                                tol=opt_tol)
            row["alpha"] = check.alpha
            row["residual_rel"] = check.residual_rel
            row["is_optimal"] = bool(check.is_optimal)
        except SingularSensitivityError:
            singular = True
            row["is_optimal"] = False
    row["singular_flag"] = singular
    return row


@main.command(name="scan")
@_common_options
def cmd_scan(model_path, phi_text, phi_range_text, nu, seed, trials,
             output_format, out_path, tol, show_sld):
    """One row per grid phase: QFI, CFI, error propagation, optimality."""

    def impl():
        spec = _load_spec(model_path, phi_text, phi_range_text, nu, seed, trials)
        if not spec.phi_is_range or spec.phis.shape[0] < 2:
            raise SpecFileError("scan requires a phi range with steps >= 2",
                                field="phi")
        opt_tol = _opt_tol(spec, tol)
        rows = parallel_map(lambda phi: _scan_row(spec, float(phi), opt_tol),
                            list(spec.phis))
        _emit(_render_rows("scan", rows, SCAN_COLUMNS, output_format), out_path)

    _run(impl)


@main.command(name="cfi")
@_common_options
def cmd_cfi(model_path, phi_text, phi_range_text, nu, seed, trials,
            output_format, out_path, tol, show_sld):
    """Classical Fisher information of the POVM at each phase."""

    def impl():
        if output_format == "csv":
            raise SpecFileError("csv output is only available for 'scan'")
        spec = _load_spec(model_path, phi_text, phi_range_text, nu, seed, trials)
        if spec.povm is None:
            raise SpecFileError("cfi requires a povm", field="povm")
        rows = []
        for phi in spec.phis:
            value = cfi_value(outcome_distribution(spec.model, float(phi),
                                                   spec.povm))
            rows.append({"phi": float(phi), "cfi": value})
        _emit(_render_rows("cfi", rows, ("phi", "cfi"), output_format), out_path)

    _run(impl)


@main.command(name="lambda")
@_common_options
@click.option("--basis", type=click.Choice([X_BASIS, Y_BASIS]), default=X_BASIS,
              help="Two-qubit product basis for the diagonal SLD ansatz.")
def cmd_lambda(model_path, phi_text, phi_range_text, nu, seed, trials,
               output_format, out_path, tol, show_sld, basis):
    """Diagonal-projector SLD coefficients for the two-qubit GHZ state."""

    def impl():
        if output_format == "csv":
            raise SpecFileError("csv output is only available for 'scan'")
        phi = 0.0
        if phi_text is not None:
            phi = parse_angle(phi_text)
        elif model_path is not None:
            spec = load_model_spec(model_path)
            phi = float(spec.phis[0])
        solution = two_qubit_lambda_solution(phi, basis)
        payload = {"command": "lambda", "phi": phi, "basis": solution.basis,
                   "singular": solution.singular,
                   "lambda_pp": solution.lambda_pp,
                   "lambda_pm": solution.lambda_pm,
                   "lambda_mp": solution.lambda_mp,
                   "lambda_mm": solution.lambda_mm}
        if output_format == "json":
            _emit(_to_json(payload), out_path)
        else:
            lines = [f"{key}: {_fmt(payload[key])}"
                     for key in ("phi", "basis", "singular", "lambda_pp",
                                 "lambda_pm", "lambda_mp", "lambda_mm")]
            _emit("\n".join(lines) + "\n", out_path)

    _run(impl)


@main.command(name="simulate")
@_common_options
def cmd_simulate(model_path, phi_text, phi_range_text, nu, seed, trials,
                 output_format, out_path, tol, show_sld):
    """Monte Carlo estimation trials with per-trial RNG streams."""

    def impl():
        if output_format == "csv":
            raise SpecFileError("csv output is only available for 'scan'")
        spec = _load_spec(model_path, phi_text, phi_range_text, nu, seed, trials)
        if spec.observable is None and spec.povm is None:
            raise SpecFileError("simulate requires an observable or a povm",
                                field="observable")
        phi = float(spec.phis[0])
        results = []
        if spec.observable is not None:
            results.append(run_sample_mean_trials(
                spec.model, spec.observable, phi, spec.nu, spec.trials,
                spec.seed))
        if spec.povm is not None:
            results.append(run_mle_trials(
                spec.model, spec.povm, phi, spec.nu, spec.trials, spec.seed))
        payload = {
            "command": "simulate", "phi": phi, "nu": spec.nu,
            "trials": spec.trials, "seed": spec.seed,
            "rng_algorithm": results[0].rng_algorithm,
            "results": [{
                "method": summary.method,
                "estimates": [float(x) for x in summary.estimates],
                "mse": summary.mse,
                "variance_term": summary.decomposition.variance_term,
                "bias_term": summary.decomposition.bias_term,
                "se_empirical": summary.se_empirical,
                "predicted_delta_phi_sq": summary.predicted_delta_phi_sq,
                "qcrb": summary.qcrb,
                "n_clipped": summary.n_clipped,
            } for summary in results],
        }
        if output_format == "json":
            _emit(_to_json(payload), out_path)
        else:
            lines = [f"phi: {phi!r}", f"nu: {spec.nu}", f"trials: {spec.trials}",
                     f"seed: {spec.seed}"]
            for entry in payload["results"]:
                lines.append(f"[{entry['method']}]")
                for key in ("mse", "variance_term", "bias_term", "se_empirical",
                            "predicted_delta_phi_sq", "qcrb", "n_clipped"):
                    lines.append(f"  {key}: {_fmt(entry[key])}")
            _emit("\n".join(lines) + "\n", out_path)

    _run(impl)


if __name__ == "__main__":
    main()
