"""Error-propagation bounds and optimal-measurement certification.

The central check: an observable saturates the quantum Cramér-Rao bound via
error propagation if and only if ``(O - <O>) sqrt(rho) = alpha L sqrt(rho)``
for some nonzero real ``alpha``, where ``L`` is the SLD operator. The
analogous per-outcome condition ``sqrt(M_x) sqrt(rho) = u_x sqrt(M_x) L
sqrt(rho)`` certifies a POVM as attaining the quantum Fisher information.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np

from .core import HermitianObservable, Povm, matrix_sqrt_psd
from .errors import (
    DimensionMismatchError,
    InsufficientSamplesError,
    SingularSensitivityError,
    VariantInapplicableError,
)
from .fisher import ParametricModel, _pure_vector, sld

__all__ = [
    "ErrorPropagationReport",
    "OptimalityReport",
    "PovmOptimalityReport",
    "ErrorDecomposition",
    "observable_expectations",
    "error_propagation",
    "check_observable_optimality",
    "check_povm_optimality",
    "estimator_error_decomposition",
    "OPTIMALITY_RTOL",
    "SLOPE_RTOL",
    "NO_INFORMATION",
]

#: relative residual below which the saturation condition counts as satisfied
OPTIMALITY_RTOL = 1e-8
#: slope magnitudes below this fraction of sqrt(<O^2> * QFI) are singular
SLOPE_RTOL = 1e-10
#: diagnostic value reported when the state carries no phase information
NO_INFORMATION = "no_information"

ConditionVariant = Literal["mixed", "pure", "pure_unitary"]


def _require_same_dim(model: ParametricModel, operator_dim: int) -> None:
    if operator_dim != model.dim:
        raise DimensionMismatchError(
            f"operator dimension {operator_dim} != model dimension {model.dim}")


@dataclass(frozen=True)
class ErrorPropagationReport:
    """Error-propagation variance analysis of one observable at one phase.

    ``delta_phi_sq`` is the squared phase error ``Var(O) / (nu * slope^2)``;
    ``intermediate_bound`` is the observable-specific lower bound
    ``(1/(nu*F)) * (1 + |<[O,L]>|^2 / <[O,L]_+>^2)`` sitting between it and
    the Cramér-Rao bound ``qcrb = 1/(nu*F)``.
    """

    variance: float
    slope: float
    nu: int
    delta_phi_sq: float
    intermediate_bound: float
    qcrb: float
    qfi: float
    mean: float
    second_moment: float


def observable_expectations(model: ParametricModel, phi: float,
                            obs: HermitianObservable) -> tuple[float, float]:
    """First and second moments ``(Tr(rho O), Tr(rho O^2))``."""
    _require_same_dim(model, obs.dim)
    rho = model.density(phi).matrix
    o = obs.matrix
    mean = complex(np.trace(rho @ o))
    second = complex(np.trace(rho @ o @ o))
    scale = max(1.0, abs(mean), abs(second))
    if max(abs(mean.imag), abs(second.imag)) > 1e-10 * scale:
        raise ArithmeticError(
            f"expectation values are not real: {mean!r}, {second!r}")
    return mean.real, second.real


def error_propagation(model: ParametricModel, phi: float,
                      obs: HermitianObservable, nu: int = 1, *,
                      slope_rtol: float = SLOPE_RTOL) -> ErrorPropagationReport:
    """Evaluate the phase error obtained by measuring the mean of ``obs``.

    Raises :class:`SingularSensitivityError` where the mean has zero slope
    (relative to the natural scale ``sqrt(<O^2> * QFI)``), i.e. at the phases
    where this observable carries no first-order information.
    """
    _require_same_dim(model, obs.dim)
    if nu < 1:
        raise ValueError("nu must be a positive integer")
    sld_result = sld(model, phi)
    rho = model.density(phi).matrix
    o = obs.matrix
    l_matrix = sld_result.L.matrix
    mean, second = observable_expectations(model, phi, obs)
    variance = max(second - mean * mean, 0.0)
    slope = float(np.trace(sld_result.drho @ o).real)
    cross = complex(np.trace(rho @ o @ l_matrix))
    anticommutator_mean = 2.0 * cross.real
    slope_scale = float(np.sqrt(max(second, 0.0) * sld_result.qfi))
    if abs(slope - anticommutator_mean / 2.0) > 1e-7 * max(1.0, abs(slope), slope_scale):
        raise ArithmeticError(
            f"slope identity violated: Tr(drho O) = {slope!r} but "
            f"<[O,L]+>/2 = {anticommutator_mean / 2.0!r}")
    if abs(slope) <= slope_rtol * slope_scale or slope_scale == 0.0:
        raise SingularSensitivityError(
            f"observable mean has zero slope at phi={phi!r}; "
            "the error-propagation estimate is undefined here")
    delta_phi_sq = variance / (nu * slope * slope)
    qcrb = 1.0 / (nu * sld_result.qfi)
    commutator_sq = abs(complex(np.trace(rho @ (o @ l_matrix - l_matrix @ o)))) ** 2
    intermediate = qcrb * (1.0 + commutator_sq / (anticommutator_mean ** 2))
    return ErrorPropagationReport(
        variance=variance, slope=slope, nu=nu, delta_phi_sq=delta_phi_sq,
        intermediate_bound=intermediate, qcrb=qcrb, qfi=sld_result.qfi,
        mean=mean, second_moment=second)


@dataclass(frozen=True)
class OptimalityReport:
    """Verdict of the saturation condition for one observable.

    ``alpha`` is the real least-squares coefficient projecting
    ``(O - <O>) sqrt(rho)`` onto ``L sqrt(rho)``; ``residual_rel`` the
    relative norm left over; ``im_part`` the imaginary part of ``<O L>``
    (must vanish for saturation).
    """

    alpha: float
    residual_rel: float
    im_part: float
    anticommutator_mean: float
    is_optimal: bool
    condition_variant: ConditionVariant
    diagnostic: str | None = None


def check_observable_optimality(model: ParametricModel, phi: float,
                                obs: HermitianObservable,
                                variant: ConditionVariant = "mixed", *,
                                tol: float = OPTIMALITY_RTOL,
                                alpha_rtol: float = 1e-10) -> OptimalityReport:
    """Test whether measuring ``obs`` saturates the quantum Cramér-Rao bound.

    Variants express the same condition on different carriers and agree
    wherever they all apply:

    * ``"mixed"``: ``(O - <O>) sqrt(rho) = alpha L sqrt(rho)`` (any state);
    * ``"pure"``: ``(O - <O>) |psi> = alpha L |psi>`` (pure states);
    * ``"pure_unitary"``: ``(O - <O>) |psi> = -2i alpha (G - <G>) |psi>``
      (pure states under a unitary generator).
    """
    _require_same_dim(model, obs.dim)
    sld_result = sld(model, phi)
    rho = model.density(phi).matrix
    o = obs.matrix
    l_matrix = sld_result.L.matrix
    mean = float(np.trace(rho @ o).real)
    delta_o = o - mean * np.eye(obs.dim)
    cross = complex(np.trace(rho @ o @ l_matrix))
    im_part = cross.imag
    anticommutator_mean = 2.0 * cross.real

    if variant == "mixed":
        sqrt_rho = matrix_sqrt_psd(rho)
        lhs = delta_o @ sqrt_rho
        rhs = l_matrix @ sqrt_rho
    elif variant == "pure":
        psi = _pure_vector(model, phi)
        lhs = delta_o @ psi
        rhs = l_matrix @ psi
    elif variant == "pure_unitary":
        if model.kind != "unitary_generator":
            raise VariantInapplicableError(
                "pure_unitary variant needs a unitary_generator model")
        psi = _pure_vector(model, phi)
        g = model.generator.matrix
        g_mean = float(np.vdot(psi, g @ psi).real)
        lhs = delta_o @ psi
        rhs = -2.0j * ((g @ psi) - g_mean * psi)
    else:
        raise VariantInapplicableError(f"unknown condition variant {variant!r}")

    lhs_norm = float(np.linalg.norm(lhs))
    rhs_norm = float(np.linalg.norm(rhs))
    if rhs_norm * rhs_norm <= 1e-14:
        # L sqrt(rho) ~ 0 means QFI ~ 0: the state carries no information
        return OptimalityReport(
            alpha=0.0, residual_rel=(1.0 if lhs_norm > 0.0 else 0.0),
            im_part=im_part, anticommutator_mean=anticommutator_mean,
            is_optimal=False, condition_variant=variant,
            diagnostic=NO_INFORMATION)
    alpha = float(np.vdot(rhs, lhs).real) / (rhs_norm * rhs_norm)
    residual = float(np.linalg.norm(lhs - alpha * rhs))
    scale = max(lhs_norm, abs(alpha) * rhs_norm)
    residual_rel = residual / scale if scale > 0.0 else 0.0
    variance = max(float(np.trace(rho @ o @ o).real) - mean * mean, 0.0)
    im_scale = max(1.0, float(np.sqrt(variance * sld_result.qfi)))
    alpha_ok = abs(alpha) * rhs_norm > alpha_rtol * lhs_norm and lhs_norm > 0.0
    is_optimal = (residual_rel <= tol) and alpha_ok and (abs(im_part) <= tol * im_scale)
    return OptimalityReport(
        alpha=alpha, residual_rel=residual_rel, im_part=im_part,
        anticommutator_mean=anticommutator_mean, is_optimal=is_optimal,
        condition_variant=variant)


@dataclass(frozen=True, eq=False)
class PovmOptimalityReport:
    """Per-outcome verdict of the QFI-attainment condition for a POVM."""

    per_outcome_u: np.ndarray
    per_outcome_residual: np.ndarray
    is_optimal: bool


def check_povm_optimality(model: ParametricModel, phi: float, povm: Povm, *,
                          tol: float = OPTIMALITY_RTOL) -> PovmOptimalityReport:
    """Test whether a POVM attains the quantum Fisher information.

    Fits, for each outcome, the real ``u_x`` minimizing
    ``|| sqrt(M_x) sqrt(rho) - u_x sqrt(M_x) L sqrt(rho) ||`` and requires
    every relative residual to vanish. Outcomes where both sides vanish
    (the outcome never fires) are trivially satisfied with ``u_x = 0``.
    """
    _require_same_dim(model, povm.dim)
    sld_result = sld(model, phi)
    rho = model.density(phi).matrix
    sqrt_rho = matrix_sqrt_psd(rho)
    l_sqrt_rho = sld_result.L.matrix @ sqrt_rho
    u_values = np.zeros(len(povm))
    residuals = np.zeros(len(povm))
    for idx, element in enumerate(povm.elements):
        sqrt_m = matrix_sqrt_psd(element)
        lhs = sqrt_m @ sqrt_rho
        rhs = sqrt_m @ l_sqrt_rho
        lhs_norm = float(np.linalg.norm(lhs))
        rhs_norm = float(np.linalg.norm(rhs))
        if rhs_norm * rhs_norm <= 1e-14 * max(1.0, lhs_norm):
            u = 0.0
            residual = 0.0 if lhs_norm <= 1e-14 else 1.0
        else:
            u = float(np.vdot(rhs, lhs).real) / (rhs_norm * rhs_norm)
            scale = max(lhs_norm, abs(u) * rhs_norm)
            residual = (float(np.linalg.norm(lhs - u * rhs)) / scale
                        if scale > 0.0 else 0.0)
        u_values[idx] = u
        residuals[idx] = residual
    return PovmOptimalityReport(per_outcome_u=u_values,
                                per_outcome_residual=residuals,
                                is_optimal=bool(np.all(residuals <= tol)))


class ErrorDecomposition(NamedTuple):
    total: float
    variance_term: float
    bias_term: float


def estimator_error_decomposition(samples, phi_true: float, *,
                                  slope_normalizer: float = 1.0) -> ErrorDecomposition:
    """Split the units-corrected mean-square estimator error into spread
    plus squared bias.

    ``slope_normalizer`` is ``|d<phi_est>/d phi|``; the default 1 applies to
    already-calibrated estimators. The identity ``total = variance_term +
    bias_term`` is exact up to rounding.
    """
    values = np.asarray(samples, dtype=float).reshape(-1)
    if values.shape[0] < 2:
        raise InsufficientSamplesError(
            f"need at least 2 samples, got {values.shape[0]}")
    norm = abs(float(slope_normalizer))
    if norm == 0.0:
        raise SingularSensitivityError("slope normalizer must be nonzero")
    scaled = values / norm
    total = float(np.mean((scaled - phi_true) ** 2))
    variance_term = float(np.mean((scaled - np.mean(scaled)) ** 2))
    bias_term = float((np.mean(scaled) - phi_true) ** 2)
    return ErrorDecomposition(total, variance_term, bias_term)
