"""Dense complex linear algebra and quantum state/observable primitives.

Conventions used throughout the package:

* operators are dense complex ``numpy`` arrays;
* qubit site 0 is the leftmost (most significant) Kronecker factor, so the
  computational-basis index of ``|b_0 b_1 ... b_{N-1}>`` is the integer with
  binary digits ``b_0 b_1 ... b_{N-1}``;
* all values are immutable after construction and safe to share between
  workers.
"""

from __future__ import annotations

import itertools
from dataclasses import InitVar, dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DimensionMismatchError,
    NotHermitianError,
    NotPositiveError,
)

__all__ = [
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "IDENTITY_2",
    "PAULIS",
    "VALIDATION_ATOL",
    "ALGORITHMIC_ATOL",
    "as_complex_matrix",
    "hermiticity_defect",
    "require_hermitian",
    "tensor_product",
    "tensor_power",
    "hermitian_eigendecomposition",
    "matrix_sqrt_psd",
    "collective_spin",
    "single_site_observable",
    "product_observable",
    "PureState",
    "DensityMatrix",
    "HermitianObservable",
    "Povm",
    "eigenprojector_povm",
    "product_basis_povm",
    "product_basis_vectors",
]

IDENTITY_2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = {"i": IDENTITY_2, "x": SIGMA_X, "y": SIGMA_Y, "z": SIGMA_Z}
for _m in PAULIS.values():
    _m.setflags(write=False)

#: tolerance for validating user-supplied states/observables
VALIDATION_ATOL = 1e-10
#: tolerance for Hermiticity gates inside algorithms
ALGORITHMIC_ATOL = 1e-8
#: relative eigenvalue cutoff classifying the support of a PSD matrix
SUPPORT_CUTOFF_REL = 1e-12


# ---------------------------------------------------------------------------
# validation helpers
# ---------------------------------------------------------------------------

def as_complex_matrix(value, *, name: str = "matrix") -> np.ndarray:
    """Coerce ``value`` to an owned 2-D complex array with finite entries."""
    arr = np.array(value, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def _require_square(arr: np.ndarray, *, name: str = "matrix") -> None:
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")


def hermiticity_defect(arr: np.ndarray) -> float:
    """Frobenius norm of the anti-Hermitian part gap ``m - m^dagger``."""
    return float(np.linalg.norm(arr - arr.conj().T))


def require_hermitian(value, *, atol: float = VALIDATION_ATOL,
                      name: str = "matrix") -> np.ndarray:
    """Validate Hermiticity within ``atol`` and return the symmetrized matrix."""
    arr = as_complex_matrix(value, name=name)
    _require_square(arr, name=name)
    defect = hermiticity_defect(arr)
    if defect > atol:
        raise NotHermitianError(
            f"{name} is not Hermitian: defect {defect:.3e} > {atol:.1e}")
    return (arr + arr.conj().T) / 2.0


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def tensor_product(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of square matrices, in list order (site 0 leftmost)."""
    if len(factors) == 0:
        raise ValueError("tensor_product requires at least one factor")
    out: np.ndarray | None = None
    for k, factor in enumerate(factors):
        arr = as_complex_matrix(factor, name=f"factor {k}")
        if arr.shape[0] != arr.shape[1]:
            raise ValueError(f"factor {k} is not square: shape {arr.shape}")
        out = arr if out is None else np.kron(out, arr)
    return out


def tensor_power(factor: np.ndarray, n: int) -> np.ndarray:
    """Kronecker product of ``n`` copies of ``factor``."""
    if n < 1:
        raise ValueError("tensor_power requires n >= 1")
    return tensor_product([factor] * n)


def hermitian_eigendecomposition(matrix, *, atol: float = ALGORITHMIC_ATOL):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues ascending and
    eigenvectors as the columns of a unitary matrix, so that
    ``matrix = V diag(w) V^dagger``.
    """
    herm = require_hermitian(matrix, atol=atol)
    eigenvalues, eigenvectors = np.linalg.eigh(herm)
    return eigenvalues, eigenvectors


def matrix_sqrt_psd(matrix, *, negative_tol: float = 1e-8,
                    zero_cutoff: float = SUPPORT_CUTOFF_REL) -> np.ndarray:
    """Hermitian PSD square root ``S`` with ``S @ S == matrix``.

    Eigenvalues in ``[-negative_tol, 0)`` are treated as numerical noise and
    clamped to zero; anything more negative raises :class:`NotPositiveError`.
    Eigenvalues below ``zero_cutoff`` times the trace are zeroed before
    square-rooting, which keeps rank-deficient inputs from turning O(eps)
    eigenvalue noise into O(sqrt(eps)) output noise.
    """
    eigenvalues, eigenvectors = hermitian_eigendecomposition(matrix)
    smallest = float(eigenvalues[0])
    if smallest < -negative_tol:
        raise NotPositiveError(
            f"matrix has negative eigenvalue {smallest:.3e} < -{negative_tol:.1e}")
    clamped = np.clip(eigenvalues, 0.0, None)
    if zero_cutoff > 0.0:
        clamped[clamped <= zero_cutoff * float(np.sum(clamped))] = 0.0
    return (eigenvectors * np.sqrt(clamped)) @ eigenvectors.conj().T


def collective_spin(axis: str, n_qubits: int) -> "HermitianObservable":
    """Collective spin component ``J_axis = (1/2) sum_i sigma_axis^(i)``."""
    if axis not in ("x", "y", "z"):
        raise ValueError(f"axis must be one of 'x', 'y', 'z', got {axis!r}")
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    sigma = PAULIS[axis]
    dim = 2 ** n_qubits
    total = np.zeros((dim, dim), dtype=complex)
    for site in range(n_qubits):
        factors = [IDENTITY_2] * n_qubits
        factors[site] = sigma
        total += tensor_product(factors)
    return HermitianObservable(total / 2.0, check=False)


def single_site_observable(coeffs: Sequence[float]) -> np.ndarray:
    """2x2 Hermitian matrix ``a0*I + a1*sx + a2*sy + a3*sz``."""
    a0, a1, a2, a3 = (float(c) for c in coeffs)
    return a0 * IDENTITY_2 + a1 * SIGMA_X + a2 * SIGMA_Y + a3 * SIGMA_Z


def product_observable(site_coeffs: Sequence[Sequence[float]]) -> "HermitianObservable":
    """Tensor product of per-site ``a0*I + a.sigma`` factors.

    The coefficient quadruples are recorded on the result as its
    ``product_form``.
    """
    sites = [tuple(float(c) for c in quad) for quad in site_coeffs]
    if not sites:
        raise ValueError("product_observable requires at least one site")
    for k, quad in enumerate(sites):
        if len(quad) != 4:
            raise ValueError(f"site {k} must have 4 coefficients, got {len(quad)}")
    matrix = tensor_product([single_site_observable(quad) for quad in sites])
    return HermitianObservable(matrix, product_form=tuple(sites), check=False)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized state vector of a d-dimensional system."""

    amplitudes: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if check:
            if not np.all(np.isfinite(amps)):
                raise ValueError("amplitudes contain non-finite entries")
            norm = float(np.linalg.norm(amps))
            if abs(norm - 1.0) > VALIDATION_ATOL:
                raise ValueError(
                    f"state vector not normalized: ||psi|| = {norm!r}")
        object.__setattr__(self, "amplitudes", _freeze(amps))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def density(self) -> "DensityMatrix":
        """Rank-one density matrix ``|psi><psi|``."""
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()),
                             check=False)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Hermitian, unit-trace, PSD matrix describing a quantum state."""

    matrix: np.ndarray
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        arr = as_complex_matrix(self.matrix, name="density matrix")
        _require_square(arr, name="density matrix")
        if check:
            arr = require_hermitian(arr, atol=VALIDATION_ATOL, name="density matrix")
            trace = complex(np.trace(arr))
            if abs(trace - 1.0) > VALIDATION_ATOL:
                raise ValueError(f"density matrix trace {trace!r} != 1")
            smallest = float(np.linalg.eigvalsh(arr)[0])
            if smallest < -VALIDATION_ATOL:
                raise NotPositiveError(
                    f"density matrix has negative eigenvalue {smallest:.3e}")
        object.__setattr__(self, "matrix", _freeze(arr))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)

    def is_pure(self, *, atol: float = ALGORITHMIC_ATOL) -> bool:
        return abs(self.purity() - 1.0) <= atol

    def expectation(self, operator: np.ndarray) -> complex:
        return complex(np.trace(self.matrix @ operator))


@dataclass(frozen=True, eq=False)
class HermitianObservable:
    """Measurement observable (dense Hermitian matrix).

    ``product_form``, when present, is a tuple of per-site coefficient
    quadruples ``(a0, a1, a2, a3)`` such that the matrix equals the tensor
    product of the corresponding single-qubit factors.
    """

    matrix: np.ndarray
    product_form: tuple[tuple[float, float, float, float], ...] | None = None
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        if check:
            arr = require_hermitian(self.matrix, atol=VALIDATION_ATOL,
                                    name="observable")
            if self.product_form is not None:
                rebuilt = tensor_product(
                    [single_site_observable(q) for q in self.product_form])
                gap = float(np.linalg.norm(arr - rebuilt))
                if gap > 1e-12:
                    raise ValueError(
                        f"matrix does not match product_form: gap {gap:.3e}")
        else:
            arr = as_complex_matrix(self.matrix, name="observable")
            _require_square(arr, name="observable")
        object.__setattr__(self, "matrix", _freeze(arr))
        if self.product_form is not None:
            object.__setattr__(
                self, "product_form",
                tuple(tuple(float(c) for c in q) for q in self.product_form))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Povm:
    """Positive-operator-valued measure: PSD elements summing to identity."""

    elements: tuple[np.ndarray, ...]
    labels: tuple = ()
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        elements = tuple(as_complex_matrix(e, name=f"POVM element {k}")
                         for k, e in enumerate(self.elements))
        if not elements:
            raise ValueError("POVM requires at least one element")
        dim = elements[0].shape[0]
        for k, element in enumerate(elements):
            _require_square(element, name=f"POVM element {k}")
            if element.shape[0] != dim:
                raise DimensionMismatchError(
                    f"POVM element {k} has dimension {element.shape[0]} != {dim}")
        if check:
            for k, element in enumerate(elements):
                herm = require_hermitian(element, atol=VALIDATION_ATOL,
                                         name=f"POVM element {k}")
                smallest = float(np.linalg.eigvalsh(herm)[0])
                if smallest < -VALIDATION_ATOL:
                    raise NotPositiveError(
                        f"POVM element {k} has negative eigenvalue {smallest:.3e}")
            total = sum(elements)
            gap = float(np.linalg.norm(total - np.eye(dim)))
            if gap > VALIDATION_ATOL * max(1.0, dim):
                raise ValueError(
                    f"POVM elements do not sum to identity: gap {gap:.3e}")
        labels = tuple(self.labels) if self.labels else tuple(range(len(elements)))
        if len(labels) != len(elements):
            raise ValueError(
                f"{len(labels)} labels for {len(elements)} POVM elements")
        object.__setattr__(self, "elements", tuple(_freeze(e) for e in elements))
        object.__setattr__(self, "labels", labels)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self) -> int:
        return len(self.elements)


def eigenprojector_povm(obs: HermitianObservable, *,
                        degeneracy_tol: float = 1e-8) -> Povm:
    """Projective measurement of an observable, one outcome per distinct
    eigenvalue.

    Eigenvalues closer than ``degeneracy_tol`` (relative to the spectral
    spread) are merged into one outcome; labels are the merged eigenvalues.
    """
    eigenvalues, eigenvectors = hermitian_eigendecomposition(obs.matrix)
    spread = max(1.0, float(eigenvalues[-1] - eigenvalues[0]))
    groups: list[list[int]] = [[0]]
    for idx in range(1, len(eigenvalues)):
        if eigenvalues[idx] - eigenvalues[groups[-1][-1]] <= degeneracy_tol * spread:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    elements = []
    labels = []
    for group in groups:
        vecs = eigenvectors[:, group]
        elements.append(vecs @ vecs.conj().T)
        labels.append(float(np.mean(eigenvalues[group])))
    return Povm(tuple(elements), tuple(labels))


_XY_BASIS_VECTORS = {
    "x": {
        "+": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
        "-": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
    },
    "y": {
        "+": np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2.0),
        "-": np.array([1.0, -1.0j], dtype=complex) / np.sqrt(2.0),
    },
}


def product_basis_vectors(axis: str, n_qubits: int) -> tuple[tuple[str, np.ndarray], ...]:
    """Per-outcome product vectors of the single-qubit ``axis`` eigenbasis.

    Outcomes are ordered ``++..+, ++..-, ..., --..-`` and labelled by their
    sign strings.
    """
    if axis not in ("x", "y"):
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")
    if n_qubits < 1:
        raise ValueError("n_qubits must be >= 1")
    single = _XY_BASIS_VECTORS[axis]
    out = []
    for signs in itertools.product("+-", repeat=n_qubits):
        vec = np.array([1.0], dtype=complex)
        for sign in signs:
            vec = np.kron(vec, single[sign])
        out.append(("".join(signs), vec))
    return tuple(out)


def product_basis_povm(axis: str, n_qubits: int) -> Povm:
    """Projective POVM onto the product ``axis in {x, y}`` eigenbasis."""
    entries = product_basis_vectors(axis, n_qubits)
    elements = tuple(np.outer(vec, vec.conj()) for _, vec in entries)
    labels = tuple(label for label, _ in entries)
    return Povm(elements, labels)
