"""Monte Carlo shot sampling and phase estimators.

Shots are multinomial draws from a measurement's outcome distribution using
numpy's PCG64 generator; per-trial streams are derived from ``(seed, trial
index)`` via ``SeedSequence`` spawn keys, so trial results are reproducible
and independent of execution order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ._concurrency import parallel_map
from .core import HermitianObservable, Povm, eigenprojector_povm
from .errors import FlatLikelihoodError, InsufficientTrialsError
from .fisher import (
    OutcomeDistribution,
    ParametricModel,
    cfi,
    outcome_distribution,
    qfi,
    state_derivative,
)
from .optimality import (
    ErrorDecomposition,
    error_propagation,
    estimator_error_decomposition,
    observable_expectations,
)

__all__ = [
    "ShotRecord",
    "EstimatorResult",
    "CltReport",
    "SimulationSummary",
    "sample_shots",
    "exact_record",
    "estimate_phi_sample_mean",
    "estimate_phi_mle",
    "verify_clt_link",
    "default_mle_interval",
    "run_sample_mean_trials",
    "run_mle_trials",
    "RNG_ALGORITHM",
]

#: algorithm behind every random draw in this module
RNG_ALGORITHM = "numpy PCG64 (default_rng), per-trial SeedSequence spawn keys"

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True, eq=False)
class ShotRecord:
    """Outcome counts of ``nu`` repeated measurements.

    ``stream`` distinguishes independent draws sharing one base seed (the
    trial index in multi-trial runs).
    """

    labels: tuple
    counts: np.ndarray
    nu: int
    seed: int
    stream: int | None = None

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape[0] != len(self.labels):
            raise ValueError("counts and labels must align")
        if int(counts.sum()) != self.nu:
            raise ValueError(
                f"counts sum to {int(counts.sum())}, expected nu = {self.nu}")
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "counts", counts)

    def frequencies(self) -> np.ndarray:
        return self.counts / self.nu


def _rng(seed: int, stream: int | None) -> np.random.Generator:
    if stream is None:
        return np.random.default_rng(seed)
    return np.random.default_rng(
        np.random.SeedSequence(entropy=seed, spawn_key=(stream,)))


def sample_shots(dist: OutcomeDistribution, nu: int, seed: int, *,
                 stream: int | None = None) -> ShotRecord:
    """Multinomial draw of ``nu`` shots from an outcome distribution."""
    if nu < 1:
        raise ValueError("nu must be a positive integer")
    probs = np.clip(dist.probabilities, 0.0, None)
    probs = probs / probs.sum()
    counts = _rng(seed, stream).multinomial(nu, probs)
    return ShotRecord(labels=dist.labels, counts=counts, nu=nu, seed=seed,
                      stream=stream)


def exact_record(dist: OutcomeDistribution, nu: int) -> ShotRecord:
    """Noiseless record with counts proportional to the exact probabilities.

    Counts are rounded to integers; the largest outcome absorbs the rounding
    remainder. Intended for noiseless sanity checks, not statistics.
    """
    probs = np.clip(dist.probabilities, 0.0, None)
    counts = np.rint(probs * nu).astype(np.int64)
    counts[int(np.argmax(counts))] += nu - int(counts.sum())
    return ShotRecord(labels=dist.labels, counts=counts, nu=nu, seed=-1)


@dataclass(frozen=True)
class EstimatorResult:
    """A single phase estimate with its predicted standard error.

    ``branch`` is the monotone inversion interval (sample-mean method) or
    the search interval (MLE); ``phi_hat`` always lies inside it.
    ``out_of_branch`` marks sample means outside the branch image, where the
    estimate was clipped to the branch endpoint.
    """

    phi_hat: float
    method: str
    se_predicted: float | None
    se_empirical: float | None = None
    out_of_branch: bool = False
    branch: tuple[float, float] | None = None


def _slope_at(model: ParametricModel, phi: float, obs: HermitianObservable) -> float:
    return float(np.trace(state_derivative(model, phi) @ obs.matrix).real)


def _branch_interval(model: ParametricModel, obs: HermitianObservable,
                     center: float, step: float) -> tuple[float, float]:
    """Monotone interval of the mean curve around ``center``: walk outward
    until the slope changes sign, then bisect for the stationary point."""
    slope_center = _slope_at(model, center, obs)
    sign_center = math.copysign(1.0, slope_center)

    def boundary(direction: float) -> float:
        prev = center
        for k in range(1, int(2.0 * math.pi / step) + 2):
            here = center + direction * k * step
            slope = _slope_at(model, here, obs)
            if slope == 0.0:
                return here
            if math.copysign(1.0, slope) != sign_center:
                return brentq(lambda x: _slope_at(model, x, obs), min(prev, here),
                              max(prev, here), xtol=1e-12)
            prev = here
        return prev

    return boundary(-1.0), boundary(+1.0)


def estimate_phi_sample_mean(record: ShotRecord, obs: HermitianObservable,
                             model: ParametricModel, branch_center: float, *,
                             branch_step: float | None = None) -> EstimatorResult:
    """Invert the observable's mean curve at the empirical sample mean.

    The record's labels must be the numeric outcome values of ``obs`` (as
    produced by measuring its eigenprojector POVM). Inversion is local to
    the monotone branch containing ``branch_center``, which must not be a
    stationary point of the mean.
    """
    try:
        values = np.array([float(label) for label in record.labels])
    except (TypeError, ValueError) as exc:
        raise ValueError("record labels must be numeric outcome values") from exc
    empirical_mean = float(values @ record.frequencies())
    # raises SingularSensitivityError when branch_center carries no slope
    report = error_propagation(model, branch_center, obs, record.nu)
    se_predicted = math.sqrt(report.delta_phi_sq)
    if branch_step is None:
        n_sites = max(1, math.ceil(math.log2(model.dim)))
        branch_step = math.pi / (8.0 * n_sites)
    lo, hi = _branch_interval(model, obs, branch_center, branch_step)
    mean_lo = observable_expectations(model, lo, obs)[0]
    mean_hi = observable_expectations(model, hi, obs)[0]
    low_value, high_value = sorted((mean_lo, mean_hi))
    if empirical_mean < low_value or empirical_mean > high_value:
        phi_hat = lo if abs(mean_lo - empirical_mean) <= abs(mean_hi - empirical_mean) else hi
        return EstimatorResult(phi_hat=float(phi_hat), method="sample_mean_inversion",
                               se_predicted=se_predicted, out_of_branch=True,
                               branch=(lo, hi))
    if empirical_mean == mean_lo:
        phi_hat = lo
    elif empirical_mean == mean_hi:
        phi_hat = hi
    else:
        phi_hat = brentq(
            lambda x: observable_expectations(model, x, obs)[0] - empirical_mean,
            lo, hi, xtol=1e-12)
    return EstimatorResult(phi_hat=float(phi_hat), method="sample_mean_inversion",
                           se_predicted=se_predicted, branch=(lo, hi))


def _log_likelihood(record: ShotRecord, dist: OutcomeDistribution, *,
                    floor: float = 1e-300) -> float:
    total = 0.0
    for count, p in zip(record.counts, dist.probabilities):
        if count == 0:
            continue
        if p <= floor:
            return -math.inf
        total += float(count) * math.log(float(p))
    return total


def _golden_max(fn, lo: float, hi: float, xtol: float) -> float:
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = fn(c), fn(d)
    while hi - lo > xtol:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = fn(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = fn(d)
    return (lo + hi) / 2.0


def estimate_phi_mle(record: ShotRecord, model: ParametricModel, povm: Povm,
                     search_interval: tuple[float, float], *,
                     grid_points: int = 65, xtol: float = 1e-10) -> EstimatorResult:
    """Maximum-likelihood phase estimate over a search interval.

    Coarse grid scan followed by golden-section refinement of the best cell;
    grid ties are broken toward the interval center. Raises
    :class:`FlatLikelihoodError` when the likelihood carries no phase
    dependence over the interval.
    """
    lo, hi = (float(search_interval[0]), float(search_interval[1]))
    if not hi > lo:
        raise ValueError("search interval must have positive length")

    def loglik(phi: float) -> float:
        return _log_likelihood(
            record, outcome_distribution(model, phi, povm, second_order=False))

    grid = np.linspace(lo, hi, grid_points)
    values = np.array([loglik(p) for p in grid])
    finite = np.isfinite(values)
    if not finite.any():
        raise FlatLikelihoodError(
            "log-likelihood is -inf over the whole search interval")
    best = float(values[finite].max())
    spread = best - float(values[finite].min())
    if spread <= 1e-12 * max(1.0, abs(best)):
        raise FlatLikelihoodError(
            "likelihood does not depend on the phase over the search interval")
    center = (lo + hi) / 2.0
    tie_tol = 1e-9 * max(1.0, abs(best))
    candidates = [i for i in range(grid_points)
                  if finite[i] and values[i] >= best - tie_tol]
    best_idx = min(candidates, key=lambda i: (abs(grid[i] - center), i))
    bracket_lo = grid[max(best_idx - 1, 0)]
    bracket_hi = grid[min(best_idx + 1, grid_points - 1)]
    phi_hat = _golden_max(loglik, float(bracket_lo), float(bracket_hi), xtol)
    try:
        info = cfi(outcome_distribution(model, phi_hat, povm))
        se_predicted = 1.0 / math.sqrt(record.nu * info) if info > 0.0 else None
    except Exception:  # noqa: BLE001 - singular outcomes leave se undefined
        se_predicted = None
    return EstimatorResult(phi_hat=float(phi_hat), method="maximum_likelihood",
                           se_predicted=se_predicted, branch=(lo, hi))


@dataclass(frozen=True)
class CltReport:
    """Comparison of the spread of sample means against ``Var(O)/nu``."""

    n_trials: int
    empirical_variance: float
    predicted_variance: float
    stderr: float
    within_three_se: bool


def verify_clt_link(means, observable_variance: float, nu: int, *,
                    min_trials: int = 100) -> CltReport:
    """Check that sample means fluctuate with variance ``Var(O)/nu``.

    The tolerance is three standard errors of a variance estimate from
    ``n_trials`` approximately Gaussian samples.
    """
    values = np.asarray(means, dtype=float).reshape(-1)
    n_trials = values.shape[0]
    if n_trials < min_trials:
        raise InsufficientTrialsError(
            f"need at least {min_trials} trials, got {n_trials}")
    empirical = float(np.var(values, ddof=1))
    predicted = float(observable_variance) / nu
    stderr = predicted * math.sqrt(2.0 / (n_trials - 1))
    return CltReport(n_trials=n_trials, empirical_variance=empirical,
                     predicted_variance=predicted, stderr=stderr,
                     within_three_se=abs(empirical - predicted) <= 3.0 * stderr)


def default_mle_interval(model: ParametricModel, branch_center: float) -> tuple[float, float]:
    """Search interval staying inside one monotone branch of a GHZ-type
    likelihood: ``branch_center +- 0.9 * pi / (2 N)``."""
    n_sites = max(1, math.ceil(math.log2(model.dim)))
    half_width = 0.9 * math.pi / (2.0 * n_sites)
    return branch_center - half_width, branch_center + half_width


@dataclass(frozen=True, eq=False)
class SimulationSummary:
    """Aggregate of repeated independent estimation trials."""

    method: str
    phi_true: float
    nu: int
    trials: int
    seed: int
    estimates: np.ndarray
    mse: float
    decomposition: ErrorDecomposition
    se_empirical: float
    predicted_delta_phi_sq: float | None
    qcrb: float
    n_clipped: int
    rng_algorithm: str = RNG_ALGORITHM


def _summarize(method: str, phi_true: float, nu: int, seed: int,
               results: list[EstimatorResult],
               predicted_delta_phi_sq: float | None,
               qcrb: float) -> SimulationSummary:
    estimates = np.array([r.phi_hat for r in results])
    decomposition = estimator_error_decomposition(estimates, phi_true)
    return SimulationSummary(
        method=method, phi_true=phi_true, nu=nu, trials=len(results), seed=seed,
        estimates=estimates, mse=decomposition.total, decomposition=decomposition,
        se_empirical=float(np.std(estimates, ddof=1)),
        predicted_delta_phi_sq=predicted_delta_phi_sq, qcrb=qcrb,
        n_clipped=sum(1 for r in results if r.out_of_branch))


def run_sample_mean_trials(model: ParametricModel, obs: HermitianObservable,
                           phi_true: float, nu: int, trials: int, seed: int, *,
                           branch_center: float | None = None) -> SimulationSummary:
    """Repeat (sample nu shots of obs, invert the mean curve) ``trials``
    times with independent RNG streams."""
    if trials < 2:
        raise InsufficientTrialsError("need at least 2 trials")
    center = phi_true if branch_center is None else branch_center
    report = error_propagation(model, center, obs, nu)
    povm = eigenprojector_povm(obs)
    dist = outcome_distribution(model, phi_true, povm, second_order=False)

    def one_trial(index: int) -> EstimatorResult:
        record = sample_shots(dist, nu, seed, stream=index)
        return estimate_phi_sample_mean(record, obs, model, center)

    results = parallel_map(one_trial, range(trials))
    return _summarize("sample_mean_inversion", phi_true, nu, seed, results,
                      predicted_delta_phi_sq=report.delta_phi_sq,
                      qcrb=report.qcrb)


def run_mle_trials(model: ParametricModel, povm: Povm, phi_true: float,
                   nu: int, trials: int, seed: int, *,
                   search_interval: tuple[float, float] | None = None) -> SimulationSummary:
    """Repeat (sample nu shots of the POVM, maximize the likelihood)
    ``trials`` times with independent RNG streams."""
    if trials < 2:
        raise InsufficientTrialsError("need at least 2 trials")
    interval = (default_mle_interval(model, phi_true)
                if search_interval is None else search_interval)
    dist = outcome_distribution(model, phi_true, povm, second_order=False)
    try:
        info = cfi(outcome_distribution(model, phi_true, povm))
        predicted = 1.0 / (nu * info) if info > 0.0 else None
    except Exception:  # noqa: BLE001 - singular phase: no pointwise prediction
        predicted = None
    qcrb = 1.0 / (nu * qfi(model, phi_true))

    def one_trial(index: int) -> EstimatorResult:
        record = sample_shots(dist, nu, seed, stream=index)
        return estimate_phi_mle(record, model, povm, interval)

    results = parallel_map(one_trial, range(trials))
    return _summarize("maximum_likelihood", phi_true, nu, seed, results,
                      predicted_delta_phi_sq=predicted, qcrb=qcrb)
