#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

import numpy as np
import pytest
from scipy import stats

from constants import MODEL_NAMES
from core.errors import DomainViolationError, StudyConfigError
from diffusions.birth_death import BirthDeath
from diffusions.catalog import CATALOG, build_model, get_entry
from diffusions.euler import em_forward_step, em_log_density, em_mean_cov, gaussian_sample
from diffusions.gene_expression import GeneExpression
from diffusions.lotka_volterra import STOICHIOMETRY, LotkaVolterra
from diffusions.time_varying import SineDiffusion


def test_birth_death_euler_moments(birth_death):
    """x=50, dt=0.01: mean 49.65 and covariance 0.45."""
    # When
    mean, cov = em_mean_cov(birth_death, np.array([50.0]), 0.0, 0.01)
    # Then
    assert mean[0] == pytest.approx(49.65, rel=1e-12)
    assert cov[0, 0] == pytest.approx(0.45, rel=1e-12)


def test_lotka_volterra_euler_moments(lotka_volterra):
    """Moments at (71, 79) against the hazards evaluated by hand."""
    # Given
    x, dt = np.array([71.0, 79.0]), 0.1
    births, predation, deaths = 0.5 * 71.0, 0.0025 * 71.0 * 79.0, 0.3 * 79.0
    # When
    mean, cov = em_mean_cov(lotka_volterra, x, 0.0, dt)
    # Then
    np.testing.assert_allclose(
        mean, x + dt * np.array([births - predation, predation - deaths]), rtol=1e-12
    )
    np.testing.assert_allclose(
        cov,
        dt * np.array([[births + predation, -predation], [-predation, predation + deaths]]),
        rtol=1e-12,
    )


def test_euler_rejects_bad_inputs(birth_death):
    """Non-positive steps and states outside the domain are refused."""
    # When / Then
    with pytest.raises(ValueError):
        em_mean_cov(birth_death, np.array([50.0]), 0.0, 0.0)
    with pytest.raises(DomainViolationError):
        em_mean_cov(birth_death, np.array([-1.0]), 0.0, 0.01)


@pytest.mark.parametrize("seed", range(10))
def test_em_log_density_matches_dense_oracle(seed):
    """The transition density agrees with scipy at random states of the predator-prey model."""
    # Given
    rng = np.random.default_rng(seed)
    model = LotkaVolterra()
    x = rng.uniform(20.0, 120.0, size=2)
    x_next = x + rng.normal(size=2)
    mean, cov = em_mean_cov(model, x, 0.0, 0.1)
    # When
    value = em_log_density(model, x_next, x, 0.0, 0.1)
    # Then
    expected = stats.multivariate_normal(mean=mean, cov=cov).logpdf(x_next)
    assert value == pytest.approx(expected, rel=1e-10)


def test_em_forward_step_with_unit_noise():
    """Zero drift and unit volatility over dt=1 moves the state by the noise."""
    # Given
    model = SineDiffusion(theta=(0.0, 1.0, 0.0))
    z = np.array([0.3])
    # When
    x_next = em_forward_step(model, np.array([0.0]), 0.0, 1.0, z)
    # Then
    np.testing.assert_array_equal(x_next, z)


@pytest.mark.parametrize("name", ["lotka_volterra", "gene_expression"])
def test_em_forward_step_without_noise_is_the_euler_mean(name, request):
    """Zero noise leaves exactly x + dt mu(x, t)."""
    # Given
    model = request.getfixturevalue(name)
    x, t, dt = model.x0 * 1.1, 0.3, 0.05
    # When
    x_next = em_forward_step(model, x, t, dt, np.zeros(model.noise_dim))
    # Then
    mean, _ = em_mean_cov(model, x, t, dt)
    np.testing.assert_array_equal(x_next, mean)


def test_em_forward_step_samples_the_euler_moments(lotka_volterra, rng):
    """A hundred thousand steps from one state reproduce the Euler mean and covariance."""
    # Given
    x, t, dt = np.array([71.0, 79.0]), 0.0, 0.1
    noise = rng.normal(size=(100_000, lotka_volterra.noise_dim))
    mean, cov = em_mean_cov(lotka_volterra, x, t, dt)
    # When
    samples = em_forward_step(lotka_volterra, x, t, dt, noise)
    # Then
    standard_error = np.sqrt(np.diag(cov) / len(samples))
    assert np.all(np.abs(samples.mean(axis=0) - mean) < 4.0 * standard_error)
    np.testing.assert_allclose(np.cov(samples, rowvar=False), cov, atol=0.02 * np.abs(cov).max())


def test_gaussian_sample_cases(rng):
    """Zero covariance returns the mean; otherwise the factor maps the noise."""
    # Given
    mean = np.array([1.0, 2.0])
    cov = np.array([[2.0, 1.0], [1.0, 2.0]])
    # When
    columns = np.stack(
        [gaussian_sample(mean, cov, e) - mean for e in np.eye(2)], axis=-1
    )
    # Then
    np.testing.assert_array_equal(gaussian_sample(mean, np.zeros((2, 2)), rng.normal(size=2)), mean)
    np.testing.assert_array_equal(gaussian_sample(mean, np.eye(2), np.array([0.5, -1.0])), mean + [0.5, -1.0])
    np.testing.assert_allclose(columns @ columns.T, cov, rtol=1e-12)


def test_lotka_volterra_factorization(lotka_volterra):
    """S Lambda^2 S* and sigma sigma* both reproduce the displayed volatility."""
    # Given
    x = np.array([71.0, 79.0])
    rates = lotka_volterra.rates(x, 0.0)
    sigma = lotka_volterra.diffusion(x, 0.0)
    # When
    zeta = lotka_volterra.volatility(x, 0.0)
    # Then
    np.testing.assert_allclose(STOICHIOMETRY @ np.diag(rates**2) @ STOICHIOMETRY.T, zeta, rtol=1e-12)
    np.testing.assert_allclose(sigma @ sigma.T, zeta, rtol=1e-12)
    assert lotka_volterra.is_factorized


def test_lotka_volterra_without_predation_decouples():
    """theta2 = 0 leaves no off-diagonal volatility."""
    # Given
    model = LotkaVolterra(theta=(0.5, 0.0, 0.3))
    # When
    zeta = model.volatility(np.array([71.0, 79.0]), 0.0)
    # Then
    assert zeta[0, 1] == 0.0 and zeta[1, 0] == 0.0


def test_gene_expression_transcription_rate(gene_expression):
    """k_R peaks at t = b2 with value b0 + b3, and is constant when b0 = 0."""
    # When / Then
    assert gene_expression.transcription_rate(2.0) == pytest.approx(130.0)
    flat = GeneExpression(theta=(0.7, 0.72, 3.0, 0.0, 0.05, 2.0, 50.0))
    assert flat.transcription_rate(0.0) == flat.transcription_rate(3.7) == 50.0


def test_gene_expression_volatility_is_time_inhomogeneous(gene_expression):
    """The same state has different volatility at t=0 and t=2."""
    # Given
    x = np.array([70.0, 70.0])
    # When
    early, peak = gene_expression.volatility(x, 0.0), gene_expression.volatility(x, 2.0)
    # Then
    assert peak[0, 0] > early[0, 0]
    np.testing.assert_allclose(
        gene_expression.diffusion(x, 1.0) @ gene_expression.diffusion(x, 1.0).T,
        gene_expression.volatility(x, 1.0),
        rtol=1e-12,
    )


def test_birth_death_balanced_rates_have_no_drift():
    """theta1 = theta2 gives zero drift."""
    # Given
    model = BirthDeath(theta=(0.4, 0.4))
    # Then
    assert model.drift(np.array([50.0]), 0.0)[0] == 0.0


def test_lamperti_transform(lamperti):
    """The transformed state starts at 2 sqrt(50 / 0.9) with unit volatility."""
    # Then
    assert lamperti.x0[0] == pytest.approx(14.9071, abs=1e-4)
    assert lamperti.to_population(lamperti.x0)[0] == pytest.approx(50.0, rel=1e-12)
    np.testing.assert_array_equal(lamperti.volatility(np.array([[3.0], [9.0]]), 0.0), np.ones((2, 1, 1)))
    assert not lamperti.is_valid(np.array([0.0]))


@pytest.mark.parametrize("name", MODEL_NAMES)
def test_analytic_jacobian_matches_finite_differences(name):
    """Analytic Jacobians agree with central differences at the initial state."""
    # Given
    model = build_model(name)
    x = np.asarray(model.x0) + 0.5
    # When
    analytic = model.jacobian(x, 1.0)
    numeric = model.finite_difference_jacobian(x, 1.0)
    # Then
    assert np.max(np.abs(analytic - numeric)) <= 1e-5


def test_lotka_volterra_jacobian_by_hand(lotka_volterra):
    """[[th1 - th2 x2, -th2 x1], [th2 x2, th2 x1 - th3]]."""
    # Given
    x1, x2 = 71.0, 79.0
    # When
    jac = lotka_volterra.jacobian(np.array([x1, x2]), 0.0)
    # Then
    np.testing.assert_allclose(
        jac,
        [[0.5 - 0.0025 * x2, -0.0025 * x1], [0.0025 * x2, 0.0025 * x1 - 0.3]],
        rtol=1e-12,
    )


def test_batched_states_broadcast(lotka_volterra, rng):
    """Every coefficient accepts a stack of states."""
    # Given
    x = rng.uniform(10.0, 100.0, size=(5, 2))
    # When / Then
    assert lotka_volterra.drift(x, 0.0).shape == (5, 2)
    assert lotka_volterra.diffusion(x, 0.0).shape == (5, 2, 3)
    assert lotka_volterra.volatility(x, 0.0).shape == (5, 2, 2)
    assert lotka_volterra.jacobian(x, 0.0).shape == (5, 2, 2)
    np.testing.assert_allclose(
        lotka_volterra.volatility(x, 0.0)[3], lotka_volterra.volatility(x[3], 0.0), rtol=1e-14
    )


def test_check_state_names_the_index(birth_death):
    """Domain violations carry the grid index."""
    # When / Then
    with pytest.raises(DomainViolationError) as err:
        birth_death.check_state(np.array([-0.5]), index=4)
    assert err.value.index == 4
    assert err.value.to_dict()["index"] == 4


def test_catalog_defaults():
    """Every model is registered with its study defaults."""
    # Then
    assert set(CATALOG) == set(MODEL_NAMES)
    lv = get_entry("lv")
    assert lv.theta == (0.5, 0.0025, 0.3)
    assert lv.x0 == (71.0, 79.0)
    assert lv.dt == 0.1
    assert lv.horizons == tuple(float(t) for t in range(1, 11))
    assert get_entry("ge").theta == (0.7, 0.72, 3.0, 80.0, 0.05, 2.0, 50.0)
    assert get_entry("bd").has_analytic_oracle
    for entry in CATALOG.values():
        model = entry.build()
        assert model.name == entry.name
        assert np.all(model.is_valid(model.x0))


def test_catalog_rejects_bad_overrides():
    """Unknown names and wrongly sized overrides raise configuration errors."""
    # When / Then
    with pytest.raises(StudyConfigError):
        get_entry("sir")
    with pytest.raises(StudyConfigError) as err:
        build_model("bd", theta=(0.1,))
    assert err.value.invalid == ["theta"]
    with pytest.raises(StudyConfigError):
        build_model("lv", x0=(1.0,))
