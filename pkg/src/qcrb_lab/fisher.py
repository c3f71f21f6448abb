"""Parametric state families, SLD operators, and Fisher information.

A :class:`ParametricModel` maps a real phase (radians) to a density matrix,
either through a fixed Hermitian generator (``rho_phi = e^{-iG phi} rho_in
e^{iG phi}``) or through an arbitrary user-supplied function differentiated
by central finite differences.
"""

from __future__ import annotations

from dataclasses import InitVar, dataclass
from functools import cached_property
from typing import Callable, Literal

import numpy as np

from .core import (
    ALGORITHMIC_ATOL,
    SUPPORT_CUTOFF_REL,
    DensityMatrix,
    HermitianObservable,
    Povm,
    PureState,
    hermiticity_defect,
)
from .errors import (
    DimensionMismatchError,
    EvaluationFailureError,
    SingularOutcomeError,
    SldUnsolvableError,
    VariantInapplicableError,
)

__all__ = [
    "ParametricModel",
    "unitary_model",
    "blackbox_model",
    "SldResult",
    "OutcomeDistribution",
    "state_derivative",
    "second_state_derivative",
    "sld",
    "qfi",
    "qfi_from_generator_variance",
    "outcome_distribution",
    "cfi",
    "SUPPORT_CUTOFF_REL",
]

_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True, eq=False)
class ParametricModel:
    """One-parameter family of density matrices ``phi -> rho_phi``.

    ``unitary_generator`` kind evolves ``initial_state`` with
    ``exp(-i * generator * phi)``; ``blackbox`` kind delegates to
    ``state_fn`` and differentiates numerically.
    """

    kind: Literal["unitary_generator", "blackbox"]
    initial_state: DensityMatrix | PureState | None = None
    generator: HermitianObservable | None = None
    state_fn: Callable[[float], DensityMatrix] | None = None
    blackbox_dim: InitVar[int | None] = None

    def __post_init__(self, blackbox_dim: int | None) -> None:
        if self.kind == "unitary_generator":
            if self.initial_state is None or self.generator is None:
                raise ValueError(
                    "unitary_generator models need initial_state and generator")
            if self.initial_state.dim != self.generator.dim:
                raise DimensionMismatchError(
                    f"state dimension {self.initial_state.dim} != "
                    f"generator dimension {self.generator.dim}")
            object.__setattr__(self, "_dim", self.initial_state.dim)
        elif self.kind == "blackbox":
            if self.state_fn is None:
                raise ValueError("blackbox models need state_fn")
            if blackbox_dim is None or blackbox_dim < 1:
                raise ValueError("blackbox models need a positive dimension")
            object.__setattr__(self, "_dim", int(blackbox_dim))
        else:
            raise ValueError(f"unknown model kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return self._dim  # type: ignore[attr-defined]

    @cached_property
    def _generator_basis(self) -> tuple[np.ndarray, np.ndarray]:
        return np.linalg.eigh(self.generator.matrix)

    def _unitary(self, phi: float) -> np.ndarray:
        eigenvalues, eigenvectors = self._generator_basis
        phases = np.exp(-1j * eigenvalues * phi)
        return (eigenvectors * phases) @ eigenvectors.conj().T

    def pure_amplitudes(self, phi: float) -> np.ndarray | None:
        """Evolved state vector, or ``None`` if the model is not a pure
        unitary family."""
        if self.kind != "unitary_generator" or not isinstance(self.initial_state,
                                                              PureState):
            return None
        return self._unitary(phi) @ self.initial_state.amplitudes

    def density(self, phi: float) -> DensityMatrix:
        """Evaluate ``rho_phi``."""
        if self.kind == "unitary_generator":
            amps = self.pure_amplitudes(phi)
            if amps is not None:
                return DensityMatrix(np.outer(amps, amps.conj()), check=False)
            u = self._unitary(phi)
            rho = u @ self.initial_state.matrix @ u.conj().T
            return DensityMatrix((rho + rho.conj().T) / 2.0, check=False)
        try:
            out = self.state_fn(float(phi))
        except Exception as exc:  # noqa: BLE001 - user callables may fail arbitrarily
            raise EvaluationFailureError(
                f"state_fn failed at phi={phi!r}: {exc}") from exc
        state = out if isinstance(out, DensityMatrix) else DensityMatrix(out)
        if state.dim != self.dim:
            raise EvaluationFailureError(
                f"state_fn returned dimension {state.dim}, expected {self.dim}")
        return state


def unitary_model(initial_state: DensityMatrix | PureState,
                  generator: HermitianObservable) -> ParametricModel:
    """Family ``rho_phi = e^{-iG phi} rho_in e^{iG phi}``."""
    return ParametricModel(kind="unitary_generator", initial_state=initial_state,
                           generator=generator)


def blackbox_model(state_fn: Callable[[float], DensityMatrix],
                   dim: int) -> ParametricModel:
    """Family given by an arbitrary callable, differentiated numerically."""
    return ParametricModel(kind="blackbox", state_fn=state_fn, blackbox_dim=dim)


def _fd_step(phi: float, order: int) -> float:
    # standard optimal steps for 2nd-order central differences
    base = _EPS ** (1.0 / 3.0) if order == 1 else _EPS ** 0.25
    return base * max(1.0, abs(phi))


def state_derivative(model: ParametricModel, phi: float) -> np.ndarray:
    """Derivative ``d rho_phi / d phi`` as a Hermitian matrix.

    Exact commutator ``-i[G, rho]`` for generator models, central finite
    difference for blackbox models.
    """
    if model.kind == "unitary_generator":
        g = model.generator.matrix
        rho = model.density(phi).matrix
        deriv = -1j * (g @ rho - rho @ g)
    else:
        h = _fd_step(phi, order=1)
        deriv = (model.density(phi + h).matrix
                 - model.density(phi - h).matrix) / (2.0 * h)
    defect = hermiticity_defect(deriv)
    if defect > 1e-9 * max(1.0, float(np.linalg.norm(deriv))):
        raise EvaluationFailureError(
            f"state derivative is not Hermitian: defect {defect:.3e}")
    return (deriv + deriv.conj().T) / 2.0


def second_state_derivative(model: ParametricModel, phi: float) -> np.ndarray:
    """Second derivative ``d^2 rho_phi / d phi^2`` (Hermitian)."""
    if model.kind == "unitary_generator":
        g = model.generator.matrix
        rho = model.density(phi).matrix
        deriv2 = -(g @ g @ rho - 2.0 * (g @ rho @ g) + rho @ g @ g)
    else:
        h = _fd_step(phi, order=2)
        deriv2 = (model.density(phi + h).matrix - 2.0 * model.density(phi).matrix
                  + model.density(phi - h).matrix) / (h * h)
    return (deriv2 + deriv2.conj().T) / 2.0


@dataclass(frozen=True, eq=False)
class SldResult:
    """SLD operator with its defining derivative and diagnostics.

    ``residual`` is the Frobenius norm of
    ``drho - (rho L + L rho) / 2``; ``kernel_dim`` counts eigenvalues of
    ``rho`` below the support cutoff, where the zero-block gauge was applied.
    """

    L: HermitianObservable
    drho: np.ndarray
    qfi: float
    residual: float
    kernel_dim: int


def sld(model: ParametricModel, phi: float, *,
        support_cutoff: float = SUPPORT_CUTOFF_REL,
        solvability_tol: float = 1e-8) -> SldResult:
    """Solve ``drho = (rho L + L rho) / 2`` for the Hermitian operator L.

    Works in the eigenbasis of ``rho``: ``L_jk = 2 drho_jk / (p_j + p_k)``.
    On the kernel-kernel block (``p_j + p_k`` below the cutoff) L is gauged
    to zero, the minimal-norm choice among the valid solutions.
    """
    rho = model.density(phi).matrix
    drho = state_derivative(model, phi)
    eigenvalues, eigenvectors = np.linalg.eigh(rho)
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    cutoff = support_cutoff * float(np.sum(eigenvalues))
    drho_eig = eigenvectors.conj().T @ drho @ eigenvectors
    kernel = eigenvalues <= cutoff
    kernel_dim = int(np.count_nonzero(kernel))
    drho_norm = float(np.linalg.norm(drho))
    if kernel_dim:
        block = drho_eig[np.ix_(kernel, kernel)]
        block_norm = float(np.linalg.norm(block))
        if block_norm > solvability_tol * max(1.0, drho_norm):
            raise SldUnsolvableError(
                "state derivative has weight on the kernel of rho "
                f"(block norm {block_norm:.3e}); the SLD equation has no solution")
    denom = eigenvalues[:, None] + eigenvalues[None, :]
    solvable = denom > cutoff
    l_eig = np.where(solvable, 2.0 * drho_eig / np.where(solvable, denom, 1.0), 0.0)
    l_matrix = eigenvectors @ l_eig @ eigenvectors.conj().T
    l_matrix = (l_matrix + l_matrix.conj().T) / 2.0
    qfi_value = max(float(np.trace(rho @ l_matrix @ l_matrix).real), 0.0)
    residual = float(np.linalg.norm(drho - (rho @ l_matrix + l_matrix @ rho) / 2.0))
    return SldResult(L=HermitianObservable(l_matrix, check=False), drho=drho,
                     qfi=qfi_value, residual=residual, kernel_dim=kernel_dim)


def qfi(model: ParametricModel, phi: float) -> float:
    """Quantum Fisher information ``Tr(rho L^2)``."""
    return sld(model, phi).qfi


def qfi_from_generator_variance(model: ParametricModel, phi: float = 0.0) -> float:
    """Independent QFI route for pure unitary families: ``4 Var(G)``.

    Raises :class:`VariantInapplicableError` for mixed states or blackbox
    models, where this closed form does not hold.
    """
    if model.kind != "unitary_generator":
        raise VariantInapplicableError(
            "generator-variance QFI needs a unitary_generator model")
    amps = model.pure_amplitudes(phi)
    if amps is None:
        raise VariantInapplicableError(
            "generator-variance QFI needs a pure initial state")
    g = model.generator.matrix
    g_amps = g @ amps
    mean = float(np.vdot(amps, g_amps).real)
    second = float(np.vdot(g_amps, g_amps).real)
    return 4.0 * max(second - mean * mean, 0.0)


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Outcome probabilities of a POVM measurement and their phase
    derivatives.

    ``second_derivatives`` is optional extra information used to detect
    outcomes whose probability vanishes to first but not second order (the
    0/0 points where the classical Fisher information exists only as a
    limit).
    """

    labels: tuple
    probabilities: np.ndarray
    derivatives: np.ndarray
    second_derivatives: np.ndarray | None = None

    def __post_init__(self) -> None:
        probs = np.asarray(self.probabilities, dtype=float)
        derivs = np.asarray(self.derivatives, dtype=float)
        labels = tuple(self.labels)
        if not (len(labels) == probs.shape[0] == derivs.shape[0]):
            raise ValueError("labels, probabilities, derivatives must align")
        total = float(np.sum(probs))
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {total!r}, expected 1")
        deriv_total = float(np.sum(derivs))
        if abs(deriv_total) > 1e-8:
            raise ValueError(
                f"probability derivatives sum to {deriv_total!r}, expected 0")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "probabilities", probs)
        object.__setattr__(self, "derivatives", derivs)
        if self.second_derivatives is not None:
            object.__setattr__(self, "second_derivatives",
                               np.asarray(self.second_derivatives, dtype=float))


def outcome_distribution(model: ParametricModel, phi: float, povm: Povm, *,
                         second_order: bool = True) -> OutcomeDistribution:
    """Outcome distribution ``p(x) = Tr(rho_phi M_x)`` with derivatives."""
    if povm.dim != model.dim:
        raise DimensionMismatchError(
            f"POVM dimension {povm.dim} != model dimension {model.dim}")
    rho = model.density(phi).matrix
    drho = state_derivative(model, phi)
    d2rho = second_state_derivative(model, phi) if second_order else None
    probs = np.array([float(np.trace(rho @ m).real) for m in povm.elements])
    probs = np.clip(probs, 0.0, 1.0)
    derivs = np.array([float(np.trace(drho @ m).real) for m in povm.elements])
    second = None
    if d2rho is not None:
        second = np.array([float(np.trace(d2rho @ m).real) for m in povm.elements])
    return OutcomeDistribution(labels=povm.labels, probabilities=probs,
                               derivatives=derivs, second_derivatives=second)


def cfi(dist: OutcomeDistribution, *,
        prob_floor: float = 1e-12,
        derivative_floor: float = 1e-9,
        curvature_floor: float = 1e-6) -> float:
    """Classical Fisher information ``sum_x (dp)^2 / p`` of a distribution.

    Outcomes with ``p <= prob_floor`` are skipped only when both their first
    derivative and (when available) second derivative vanish, i.e. when the
    outcome never fires near this phase. A vanishing probability with a
    nonzero derivative means a divergent or limit-only Fisher information
    and raises :class:`SingularOutcomeError` instead of being dropped.
    """
    second = dist.second_derivatives
    total = 0.0
    for idx, label in enumerate(dist.labels):
        p = float(dist.probabilities[idx])
        dp = float(dist.derivatives[idx])
        if p > prob_floor:
            total += dp * dp / p
            continue
        if abs(dp) > derivative_floor:
            raise SingularOutcomeError(
                f"outcome {label!r} has p <= {prob_floor:.1e} but dp = {dp:.3e}: "
                "classical Fisher information diverges at this phase")
        if second is not None and abs(float(second[idx])) > curvature_floor:
            raise SingularOutcomeError(
                f"outcome {label!r} has p and dp ~ 0 but d2p = "
                f"{float(second[idx]):.3e}: classical Fisher information is "
                "defined only as a limit at this phase")
    return total


def _pure_vector(model: ParametricModel, phi: float, *,
                 atol: float = ALGORITHMIC_ATOL) -> np.ndarray:
    """State vector of a pure model at ``phi`` (any global phase).

    Raises :class:`VariantInapplicableError` when the state is mixed.
    """
    amps = model.pure_amplitudes(phi)
    if amps is not None:
        return amps
    state = model.density(phi)
    if not state.is_pure(atol=atol):
        raise VariantInapplicableError(
            f"state at phi={phi!r} is mixed (purity {state.purity()!r})")
    eigenvalues, eigenvectors = np.linalg.eigh(state.matrix)
    return eigenvectors[:, -1]

