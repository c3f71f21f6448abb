"""Model specification files for the command-line interface.

One YAML document describes the state, its parametrization, the measurement
(observable and/or POVM), the phase point or grid, and run parameters.
Angles accept arithmetic expressions over ``pi`` (e.g. ``pi/8``); matrices
are row-major flat lists of ``[re, im]`` pairs.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field

import numpy as np
import yaml

from .core import (
    DensityMatrix,
    HermitianObservable,
    Povm,
    PureState,
    collective_spin,
    eigenprojector_povm,
    product_basis_povm,
    product_observable,
)
from .errors import SpecFileError
from .fisher import ParametricModel, unitary_model
from .ghz import ghz_state, parity_observable

__all__ = [
    "ModelSpec",
    "parse_angle",
    "parse_matrix",
    "parse_vector",
    "load_model_spec",
    "build_model_spec",
    "KNOWN_TOLERANCES",
]

KNOWN_TOLERANCES = ("optimality", "slope", "support_cutoff")

_ANGLE_CONSTANTS = {"pi": math.pi, "tau": math.tau, "e": math.e}
_BIN_OPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY_OPS = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def parse_angle(value, *, fieldname: str = "phi") -> float:
    """Parse a number or a constant arithmetic expression over pi/tau/e."""
    if isinstance(value, bool):
        raise SpecFileError("expected a number or expression", field=fieldname)
    if isinstance(value, (int, float)):
        return float(value)
    if not isinstance(value, str):
        raise SpecFileError(f"expected a number or expression, got {value!r}",
                            field=fieldname)
    try:
        tree = ast.parse(value, mode="eval")
    except SyntaxError as exc:
        raise SpecFileError(f"invalid expression {value!r}", field=fieldname) from exc

    def evaluate(node: ast.AST) -> float:
        if isinstance(node, ast.Expression):
            return evaluate(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id in _ANGLE_CONSTANTS:
            return _ANGLE_CONSTANTS[node.id]
        if isinstance(node, ast.BinOp) and type(node.op) in _BIN_OPS:
            return _BIN_OPS[type(node.op)](evaluate(node.left), evaluate(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY_OPS:
            return _UNARY_OPS[type(node.op)](evaluate(node.operand))
        raise SpecFileError(
            f"unsupported syntax in expression {value!r}", field=fieldname)

    try:
        result = evaluate(tree)
    except (ZeroDivisionError, OverflowError) as exc:
        raise SpecFileError(f"cannot evaluate expression {value!r}: {exc}",
                            field=fieldname) from exc
    if not math.isfinite(result):
        raise SpecFileError(f"expression {value!r} is not finite", field=fieldname)
    return float(result)


def _complex_pairs(entries, *, fieldname: str) -> np.ndarray:
    if not isinstance(entries, (list, tuple)) or not entries:
        raise SpecFileError("expected a non-empty list of [re, im] pairs",
                            field=fieldname)
    values = []
    for k, pair in enumerate(entries):
        if (not isinstance(pair, (list, tuple)) or len(pair) != 2
                or any(isinstance(x, bool) or not isinstance(x, (int, float))
                       for x in pair)):
            raise SpecFileError(f"entry {k} is not an [re, im] pair: {pair!r}",
                                field=fieldname)
        values.append(complex(float(pair[0]), float(pair[1])))
    return np.array(values, dtype=complex)


def parse_vector(entries, *, fieldname: str) -> np.ndarray:
    """Complex vector from a list of ``[re, im]`` pairs."""
    return _complex_pairs(entries, fieldname=fieldname)


def parse_matrix(entries, *, fieldname: str) -> np.ndarray:
    """Square complex matrix from a row-major flat list of ``[re, im]``
    pairs."""
    flat = _complex_pairs(entries, fieldname=fieldname)
    dim = math.isqrt(flat.shape[0])
    if dim * dim != flat.shape[0]:
        raise SpecFileError(
            f"{flat.shape[0]} entries do not form a square matrix",
            field=fieldname)
    return flat.reshape(dim, dim)


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Parsed and validated model specification."""

    model: ParametricModel
    observable: HermitianObservable | None
    povm: Povm | None
    phis: np.ndarray
    phi_is_range: bool
    nu: int
    seed: int
    trials: int
    n_qubits: int | None
    tolerances: dict[str, float] = field(default_factory=dict)


def _require_mapping(data, *, fieldname: str) -> dict:
    if not isinstance(data, dict):
        raise SpecFileError(f"expected a mapping, got {type(data).__name__}",
                            field=fieldname)
    return data


def _qubit_count(dim: int, *, fieldname: str) -> int:
    n = dim.bit_length() - 1
    if 2 ** n != dim:
        raise SpecFileError(
            f"dimension {dim} is not a power of two", field=fieldname)
    return n


def _build_state(data, *, fieldname: str = "state"):
    data = _require_mapping(data, fieldname=fieldname)
    if len(data) != 1:
        raise SpecFileError("expected exactly one of 'ghz' or 'custom'",
                            field=fieldname)
    if "ghz" in data:
        ghz = _require_mapping(data["ghz"], fieldname=f"{fieldname}.ghz")
        n = ghz.get("n")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise SpecFileError("'n' must be a positive integer",
                                field=f"{fieldname}.ghz.n")
        return ghz_state(n, 0.0), n
    if "custom" in data:
        custom = _require_mapping(data["custom"], fieldname=f"{fieldname}.custom")
        if "amplitudes" in custom:
            amps = parse_vector(custom["amplitudes"],
                                fieldname=f"{fieldname}.custom.amplitudes")
            try:
                state = PureState(amps)
            except ValueError as exc:
                raise SpecFileError(str(exc),
                                    field=f"{fieldname}.custom.amplitudes") from exc
        elif "density" in custom:
            matrix = parse_matrix(custom["density"],
                                  fieldname=f"{fieldname}.custom.density")
            try:
                state = DensityMatrix(matrix)
            except ValueError as exc:
                raise SpecFileError(str(exc),
                                    field=f"{fieldname}.custom.density") from exc
        else:
            raise SpecFileError("expected 'amplitudes' or 'density'",
                                field=f"{fieldname}.custom")
        dim = state.dim
        n = dim.bit_length() - 1 if 2 ** (dim.bit_length() - 1) == dim else None
        return state, n
    raise SpecFileError("expected 'ghz' or 'custom'", field=fieldname)


def _build_generator(data, n_qubits, *, fieldname: str = "parametrization"):
    if data is None:
        if n_qubits is None:
            raise SpecFileError(
                "parametrization required for non-qubit custom states",
                field=fieldname)
        return collective_spin("z", n_qubits)
    data = _require_mapping(data, fieldname=fieldname)
    if "blackbox" in data:
        raise SpecFileError("blackbox parametrization is not supported in files",
                            field=f"{fieldname}.blackbox")
    if "generator" not in data:
        raise SpecFileError("expected 'generator'", field=fieldname)
    gen = data["generator"]
    if gen == "half_sigma_z_sum":
        if n_qubits is None:
            raise SpecFileError(
                "named generator 'half_sigma_z_sum' needs a qubit system",
                field=f"{fieldname}.generator")
        return collective_spin("z", n_qubits)
    if isinstance(gen, dict) and "matrix" in gen:
        matrix = parse_matrix(gen["matrix"],
                              fieldname=f"{fieldname}.generator.matrix")
        try:
            return HermitianObservable(matrix)
        except ValueError as exc:
            raise SpecFileError(str(exc),
                                field=f"{fieldname}.generator.matrix") from exc
    raise SpecFileError(
        f"expected 'half_sigma_z_sum' or a matrix mapping, got {gen!r}",
        field=f"{fieldname}.generator")


def _coefficient_quadruple(data, *, fieldname: str) -> tuple[float, float, float, float]:
    if isinstance(data, dict):
        unknown = set(data) - {"a0", "a1", "a2", "a3"}
        if unknown:
            raise SpecFileError(f"unknown coefficients {sorted(unknown)}",
                                field=fieldname)
        quad = tuple(float(data.get(key, 0.0)) for key in ("a0", "a1", "a2", "a3"))
    elif isinstance(data, (list, tuple)) and len(data) == 4:
        quad = tuple(float(x) for x in data)
    else:
        raise SpecFileError(
            "expected {a0, a1, a2, a3} or a 4-element list", field=fieldname)
    return quad


def _build_observable(data, n_qubits, *, fieldname: str = "observable"):
    if data is None:
        return None
    data = _require_mapping(data, fieldname=fieldname)
    if len(data) != 1:
        raise SpecFileError(
            "expected exactly one of 'pauli_product', 'parity', 'custom'",
            field=fieldname)
    if "pauli_product" in data:
        if n_qubits is None:
            raise SpecFileError("pauli_product needs a qubit system",
                                field=f"{fieldname}.pauli_product")
        entry = data["pauli_product"]
        if isinstance(entry, list) and entry and isinstance(entry[0], (list, dict)):
            if len(entry) != n_qubits:
                raise SpecFileError(
                    f"{len(entry)} site quadruples for {n_qubits} qubits",
                    field=f"{fieldname}.pauli_product")
            quads = [_coefficient_quadruple(
                q, fieldname=f"{fieldname}.pauli_product[{k}]")
                for k, q in enumerate(entry)]
        else:
            quads = [_coefficient_quadruple(
                entry, fieldname=f"{fieldname}.pauli_product")] * n_qubits
        return product_observable(quads)
    if "parity" in data:
        if data["parity"] is not True:
            raise SpecFileError("expected 'parity: true'",
                                field=f"{fieldname}.parity")
        if n_qubits is None:
            raise SpecFileError("parity needs a qubit system",
                                field=f"{fieldname}.parity")
        return parity_observable(n_qubits)
    if "custom" in data:
        matrix = parse_matrix(data["custom"], fieldname=f"{fieldname}.custom")
        try:
            return HermitianObservable(matrix)
        except ValueError as exc:
            raise SpecFileError(str(exc), field=f"{fieldname}.custom") from exc
    raise SpecFileError(
        "expected 'pauli_product', 'parity', or 'custom'", field=fieldname)


def _build_povm(data, n_qubits, observable, *, fieldname: str = "povm"):
    if data is None:
        return None
    if isinstance(data, str):
        if data in ("x_basis_product", "y_basis_product"):
            if n_qubits is None:
                raise SpecFileError(f"{data} needs a qubit system", field=fieldname)
            return product_basis_povm(data[0], n_qubits)
        if data == "eigenprojectors_of_observable":
            if observable is None:
                raise SpecFileError(
                    "eigenprojectors_of_observable needs an observable",
                    field=fieldname)
            return eigenprojector_povm(observable)
        raise SpecFileError(f"unknown POVM name {data!r}", field=fieldname)
    data = _require_mapping(data, fieldname=fieldname)
    if set(data) != {"custom"}:
        raise SpecFileError("expected a POVM name or a 'custom' mapping",
                            field=fieldname)
    custom = _require_mapping(data["custom"], fieldname=f"{fieldname}.custom")
    raw_elements = custom.get("elements")
    if not isinstance(raw_elements, list) or not raw_elements:
        raise SpecFileError("expected a non-empty 'elements' list",
                            field=f"{fieldname}.custom.elements")
    elements = tuple(
        parse_matrix(m, fieldname=f"{fieldname}.custom.elements[{k}]")
        for k, m in enumerate(raw_elements))
    labels = tuple(custom.get("labels", ()))
    try:
        return Povm(elements, labels)
    except ValueError as exc:
        raise SpecFileError(str(exc), field=f"{fieldname}.custom") from exc


def _build_phis(data, *, fieldname: str = "phi") -> tuple[np.ndarray, bool]:
    if data is None:
        return np.array([0.0]), False
    if isinstance(data, dict):
        unknown = set(data) - {"start", "stop", "steps"}
        if unknown:
            raise SpecFileError(f"unknown range keys {sorted(unknown)}",
                                field=fieldname)
        for key in ("start", "stop", "steps"):
            if key not in data:
                raise SpecFileError(f"range needs '{key}'",
                                    field=f"{fieldname}.{key}")
        steps = data["steps"]
        if isinstance(steps, bool) or not isinstance(steps, int) or steps < 2:
            raise SpecFileError("'steps' must be an integer >= 2",
                                field=f"{fieldname}.steps")
        start = parse_angle(data["start"], fieldname=f"{fieldname}.start")
        stop = parse_angle(data["stop"], fieldname=f"{fieldname}.stop")
        return np.linspace(start, stop, steps), True
    return np.array([parse_angle(data, fieldname=fieldname)]), False


def _positive_int(data, default: int, *, fieldname: str) -> int:
    if data is None:
        return default
    if isinstance(data, bool) or not isinstance(data, int) or data < 1:
        raise SpecFileError("must be a positive integer", field=fieldname)
    return data


def _build_tolerances(data, *, fieldname: str = "tolerances") -> dict[str, float]:
    if data is None:
        return {}
    data = _require_mapping(data, fieldname=fieldname)
    out: dict[str, float] = {}
    for key, value in data.items():
        if key not in KNOWN_TOLERANCES:
            raise SpecFileError(
                f"unknown tolerance {key!r}; known: {KNOWN_TOLERANCES}",
                field=f"{fieldname}.{key}")
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value <= 0:
            raise SpecFileError("must be a positive number",
                                field=f"{fieldname}.{key}")
        out[key] = float(value)
    return out


def build_model_spec(data: dict) -> ModelSpec:
    """Build a validated :class:`ModelSpec` from a parsed mapping."""
    data = _require_mapping(data, fieldname="<document>")
    known = {"state", "parametrization", "observable", "povm", "phi", "nu",
             "seed", "trials", "tolerances"}
    unknown = set(data) - known
    if unknown:
        raise SpecFileError(f"unknown top-level keys {sorted(unknown)}",
                            field="<document>")
    if "state" not in data:
        raise SpecFileError("missing required 'state' section", field="state")
    state, n_qubits = _build_state(data["state"])
    generator = _build_generator(data.get("parametrization"), n_qubits)
    if generator.dim != state.dim:
        raise SpecFileError(
            f"generator dimension {generator.dim} != state dimension {state.dim}",
            field="parametrization.generator")
    model = unitary_model(state, generator)
    observable = _build_observable(data.get("observable"), n_qubits)
    if observable is not None and observable.dim != state.dim:
        raise SpecFileError(
            f"observable dimension {observable.dim} != state dimension {state.dim}",
            field="observable")
    povm = _build_povm(data.get("povm"), n_qubits, observable)
    if povm is not None and povm.dim != state.dim:
        raise SpecFileError(
            f"POVM dimension {povm.dim} != state dimension {state.dim}",
            field="povm")
    phis, phi_is_range = _build_phis(data.get("phi"))
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise SpecFileError("must be an integer", field="seed")
    return ModelSpec(
        model=model, observable=observable, povm=povm, phis=phis,
        phi_is_range=phi_is_range,
        nu=_positive_int(data.get("nu"), 1, fieldname="nu"),
        seed=seed,
        trials=_positive_int(data.get("trials"), 100, fieldname="trials"),
        n_qubits=n_qubits,
        tolerances=_build_tolerances(data.get("tolerances")))


def load_model_spec(path: str) -> ModelSpec:
    """Parse a model specification file (YAML)."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle)
    except OSError as exc:
        raise SpecFileError(f"cannot read {path!r}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise SpecFileError(f"invalid YAML in {path!r}: {exc}") from exc
    if data is None:
        raise SpecFileError(f"{path!r} is empty")
    return build_model_spec(data)
