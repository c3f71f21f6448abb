"""Tests for parametric derivatives, SLD solving, and Fisher information."""

import numpy as np
import pytest

from qcrb_lab import (
    DensityMatrix,
    DimensionMismatchError,
    HermitianObservable,
    OutcomeDistribution,
    Povm,
    PureState,
    SingularOutcomeError,
    SldUnsolvableError,
    VariantInapplicableError,
    blackbox_model,
    cfi,
    collective_spin,
    ghz_model,
    ghz_sld_closed_form,
    ghz_state,
    outcome_distribution,
    product_basis_povm,
    qfi,
    qfi_from_generator_variance,
    sld,
    state_derivative,
    unitary_model,
)

from conftest import random_density, random_hermitian, random_povm


def computational_povm(dim):
    elements = tuple(np.diag([1.0 if i == k else 0.0 for i in range(dim)])
                     .astype(complex) for k in range(dim))
    return Povm(elements)


def plus_state():
    return PureState(np.array([1.0, 1.0]) / np.sqrt(2.0))


class TestStateDerivative:
    def test_half_sigma_z_on_plus(self):
        """-i[G, rho] for G = sigma_z/2, rho = |+><+| at phi = 0."""
        model = unitary_model(plus_state(), collective_spin("z", 1))
        deriv = state_derivative(model, 0.0)
        expected = np.array([[0.0, -0.5j], [0.5j, 0.0]])
        assert np.allclose(deriv, expected, atol=1e-12)

    def test_constant_family_has_zero_derivative(self):
        zero_gen = HermitianObservable(np.zeros((2, 2), dtype=complex))
        model = unitary_model(plus_state(), zero_gen)
        assert np.allclose(state_derivative(model, 1.3), 0.0, atol=1e-15)

    def test_two_qubit_ghz_corner_entry(self):
        """d rho has the |00><11| entry -i e^{-2i phi}, magnitude 1."""
        model = ghz_model(2)
        deriv = state_derivative(model, 0.0)
        assert deriv[0, 3] == pytest.approx(-1j, abs=1e-12)
        assert deriv[3, 0] == pytest.approx(1j, abs=1e-12)
        phi = 0.37
        deriv = state_derivative(model, phi)
        assert deriv[0, 3] == pytest.approx(-1j * np.exp(-2j * phi), abs=1e-12)

    @pytest.mark.parametrize("seed", range(5))
    def test_blackbox_matches_analytic(self, seed):
        rng = np.random.default_rng(seed)
        dim = int(rng.integers(2, 7))
        model = unitary_model(random_density(rng, dim), random_hermitian(rng, dim))
        boxed = blackbox_model(model.density, dim)
        phi = float(rng.uniform(-2, 2))
        gap = np.linalg.norm(state_derivative(model, phi)
                             - state_derivative(boxed, phi))
        assert gap <= 1e-6


class TestSld:
    def test_ghz_action_closed_form(self):
        """L|psi> = (N/sqrt(2)) (-i|0..0> + i e^{iN phi}|1..1>)."""
        n, phi = 3, 0.51
        result = sld(ghz_model(n), phi)
        psi = ghz_state(n, phi).amplitudes
        action = result.L.matrix @ psi
        expected = np.zeros(2 ** n, dtype=complex)
        expected[0] = -1j * n / np.sqrt(2.0)
        expected[-1] = 1j * n * np.exp(1j * n * phi) / np.sqrt(2.0)
        assert np.allclose(action, expected, atol=1e-9)

    def test_constant_family_gives_zero(self):
        zero_gen = HermitianObservable(np.zeros((2, 2), dtype=complex))
        result = sld(unitary_model(plus_state(), zero_gen), 0.9)
        assert np.allclose(result.L.matrix, 0.0, atol=1e-12)
        assert result.qfi == pytest.approx(0.0, abs=1e-12)

    def test_two_qubit_matrix_matches_closed_form(self):
        phi = 0.61
        solved = sld(ghz_model(2), phi).L.matrix
        closed = ghz_sld_closed_form(2, phi).matrix
        assert np.allclose(solved, closed, atol=1e-9)
        assert solved[0, 3] == pytest.approx(-2j * np.exp(-2j * phi), abs=1e-9)

    def test_kernel_dim_reported(self):
        result = sld(ghz_model(3), 0.2)
        assert result.kernel_dim == 7

    def test_trace_rho_l_vanishes(self, rng):
        model = unitary_model(random_density(rng, 6), random_hermitian(rng, 6))
        result = sld(model, 0.8)
        rho = model.density(0.8).matrix
        assert abs(np.trace(rho @ result.L.matrix).real) <= 1e-8

    def test_residual_invariant_random_full_rank(self, rng):
        for _ in range(100):
            dim = int(rng.integers(2, 17))
            model = unitary_model(random_density(rng, dim),
                                  random_hermitian(rng, dim))
            phi = float(rng.uniform(-3, 3))
            result = sld(model, phi)
            bound = 1e-8 * max(1.0, np.linalg.norm(result.drho))
            assert result.residual <= bound

    def test_unsolvable_derivative_raises(self):
        # support shrinks linearly: the derivative keeps weight on the kernel
        def family(phi):
            return DensityMatrix(
                np.diag([1.0 - phi, phi, 0.0]).astype(complex), check=False)

        model = blackbox_model(family, 3)
        with pytest.raises(SldUnsolvableError):
            sld(model, 0.0)

    def test_failing_state_fn_is_wrapped(self):
        def broken(phi):
            raise RuntimeError("backend down")

        from qcrb_lab import EvaluationFailureError
        model = blackbox_model(broken, 2)
        with pytest.raises(EvaluationFailureError, match="backend down"):
            state_derivative(model, 0.1)

    def test_wrong_dimension_state_fn_is_wrapped(self):
        from qcrb_lab import EvaluationFailureError
        model = blackbox_model(ghz_model(2).density, 8)
        with pytest.raises(EvaluationFailureError, match="dimension"):
            model.density(0.2)


class TestQfi:
    @pytest.mark.parametrize("n", [1, 2, 4, 6])
    def test_ghz_scaling(self, n):
        assert qfi(ghz_model(n), 0.4) == pytest.approx(n * n, abs=1e-9)

    def test_plus_state_single_qubit(self):
        model = unitary_model(plus_state(), collective_spin("z", 1))
        assert qfi(model, 0.0) == pytest.approx(1.0, abs=1e-10)

    def test_maximally_mixed_has_none(self, rng):
        dim = 4
        mixed = DensityMatrix(np.eye(dim, dtype=complex) / dim)
        model = unitary_model(mixed, random_hermitian(rng, dim))
        assert qfi(model, 0.7) == pytest.approx(0.0, abs=1e-10)

    def test_phase_independence_for_pure_unitary(self, rng):
        for _ in range(5):
            dim = int(rng.integers(2, 8))
            amps = rng.normal(size=dim) + 1j * rng.normal(size=dim)
            state = PureState(amps / np.linalg.norm(amps))
            model = unitary_model(state, random_hermitian(rng, dim))
            phi_a, phi_b = rng.uniform(-3, 3, 2)
            assert qfi(model, float(phi_a)) == pytest.approx(
                qfi(model, float(phi_b)), abs=1e-8)

    def test_generator_variance_route_matches_solver(self, rng):
        for n in (1, 3, 5):
            model = ghz_model(n)
            assert qfi_from_generator_variance(model) == pytest.approx(
                qfi(model, 0.9), abs=1e-9)

    def test_generator_variance_needs_pure_state(self, rng):
        model = unitary_model(random_density(rng, 4, rank=3),
                              random_hermitian(rng, 4))
        with pytest.raises(VariantInapplicableError):
            qfi_from_generator_variance(model)

    def test_generator_variance_needs_unitary_kind(self):
        model = blackbox_model(ghz_model(2).density, 4)
        with pytest.raises(VariantInapplicableError):
            qfi_from_generator_variance(model)


class TestOutcomeDistribution:
    def test_plus_minus_basis_probabilities(self):
        """p(++) = p(--) = (1 + cos 2phi)/4, p(+-) = p(-+) = (1 - cos 2phi)/4."""
        phi = 0.44
        dist = outcome_distribution(ghz_model(2), phi, product_basis_povm("x", 2))
        same = (1.0 + np.cos(2.0 * phi)) / 4.0
        diff = (1.0 - np.cos(2.0 * phi)) / 4.0
        assert np.allclose(dist.probabilities, [same, diff, diff, same], atol=1e-12)
        assert np.allclose(dist.derivatives,
                           [-np.sin(2 * phi) / 2, np.sin(2 * phi) / 2,
                            np.sin(2 * phi) / 2, -np.sin(2 * phi) / 2], atol=1e-12)

    def test_identity_povm(self):
        povm = Povm((np.eye(4, dtype=complex),))
        dist = outcome_distribution(ghz_model(2), 0.3, povm)
        assert dist.probabilities[0] == pytest.approx(1.0, abs=1e-12)
        assert dist.derivatives[0] == pytest.approx(0.0, abs=1e-12)

    def test_computational_basis_is_phase_blind(self):
        dist = outcome_distribution(ghz_model(3), 0.9, computational_povm(8))
        assert dist.probabilities[0] == pytest.approx(0.5, abs=1e-12)
        assert dist.probabilities[-1] == pytest.approx(0.5, abs=1e-12)
        assert np.allclose(dist.derivatives, 0.0, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            outcome_distribution(ghz_model(2), 0.1, computational_povm(8))

    def test_probability_sum_validated(self):
        with pytest.raises(ValueError, match="sum"):
            OutcomeDistribution(labels=(0, 1),
                                probabilities=np.array([0.6, 0.6]),
                                derivatives=np.array([0.0, 0.0]))

    def test_derivative_sum_validated(self):
        with pytest.raises(ValueError, match="derivatives sum"):
            OutcomeDistribution(labels=(0, 1),
                                probabilities=np.array([0.5, 0.5]),
                                derivatives=np.array([0.1, 0.0]))


class TestCfi:
    def test_plus_minus_basis_attains_qfi(self):
        dist = outcome_distribution(ghz_model(2), np.pi / 8, product_basis_povm("x", 2))
        assert cfi(dist) == pytest.approx(4.0, abs=1e-9)

    def test_computational_basis_gives_zero(self):
        dist = outcome_distribution(ghz_model(2), 0.7, computational_povm(4))
        assert cfi(dist) == 0.0

    def test_singular_at_zero_phase(self):
        """At phi = 0 two outcomes vanish to first but not second order."""
        dist = outcome_distribution(ghz_model(2), 0.0, product_basis_povm("x", 2))
        with pytest.raises(SingularOutcomeError, match="limit"):
            cfi(dist)

    def test_divergent_outcome_raises(self):
        dist = OutcomeDistribution(labels=("a", "b"),
                                   probabilities=np.array([0.0, 1.0]),
                                   derivatives=np.array([0.1, -0.1]))
        with pytest.raises(SingularOutcomeError, match="diverges"):
            cfi(dist)

    def test_dead_outcome_skipped_without_second_derivatives(self):
        dist = OutcomeDistribution(labels=("a", "b", "c"),
                                   probabilities=np.array([0.5, 0.5, 0.0]),
                                   derivatives=np.array([0.2, -0.2, 0.0]))
        assert cfi(dist) == pytest.approx(0.04 / 0.5 * 2.0)

    def test_quantum_bound_over_random_povms(self, rng):
        for _ in range(25):
            dim = int(rng.integers(2, 7))
            model = unitary_model(random_density(rng, dim),
                                  random_hermitian(rng, dim))
            povm = random_povm(rng, dim, int(rng.integers(2, 6)))
            phi = float(rng.uniform(-2, 2))
            dist = outcome_distribution(model, phi, povm)
            try:
                value = cfi(dist)
            except SingularOutcomeError:
                continue
            assert value <= qfi(model, phi) + 1e-7
