#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

import numpy as np
import pytest

from bridges.conditionals import (
    fs_step_conditional,
    mdb_conditional,
    rb_conditional,
    rbbar_conditional,
    rbbar_terminal_cov,
    residual_shift,
    sigma_suffix_stats,
)
from constants import PATH_ODE, RBBAR_LNA
from core.domain import DeterministicPath, ObservationModel, TimeGrid
from core.errors import NumericFailureError
from diffusions.time_varying import SineDiffusion
from helpers import (
    RandomLinearDiffusion,
    joint_gaussian_conditional,
    random_observation,
    random_path,
)
from paths.deterministic import build_xi


@pytest.fixture
def lv_grid() -> TimeGrid:
    return TimeGrid.from_horizon(1.0, 0.1)


@pytest.fixture
def lv_obs() -> ObservationModel:
    return ObservationModel.full(np.array([80.0, 70.0]), 0.5)


def direct_terminal_cov(model, x, k, grid, path):
    """dt sum_{j=k}^{K-1} (sigma(x) - sigma(xi_k) + sigma(xi_j))(...)*, summed term by term."""
    shift = model.diffusion(x, grid.time(k)) - path.sigma[k]
    total = np.zeros((model.dim, model.dim))
    for j in range(k, grid.K):
        a = path.sigma[j] + shift
        total += a @ a.T
    return grid.dt * total


@pytest.mark.parametrize("seed", range(5))
def test_mdb_matches_joint_gaussian(seed, lotka_volterra, lv_grid, lv_obs):
    """The modified diffusion bridge is the conditional of the frozen joint Gaussian."""
    # Given
    rng = np.random.default_rng(seed)
    x = rng.uniform(40.0, 110.0, size=2)
    k = int(rng.integers(0, lv_grid.K))
    t, tau = lv_grid.time(k), lv_grid.remaining(k)
    mu, zeta = lotka_volterra.drift(x, t), lotka_volterra.volatility(x, t)
    # When
    step = mdb_conditional(lotka_volterra, x, k, lv_grid, lv_obs)
    # Then
    mean, cov = joint_gaussian_conditional(
        x, mu, zeta, lv_grid.dt, x + tau * mu, tau * zeta, lv_obs
    )
    np.testing.assert_allclose(step.mean, mean, rtol=1e-8)
    np.testing.assert_allclose(step.cov, cov, rtol=1e-8, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_rb_matches_joint_gaussian(seed, lotka_volterra, lv_grid, lv_obs):
    """The residual bridge shifts the terminal mean by the skeleton increments."""
    # Given
    rng = np.random.default_rng(seed)
    path = build_xi(PATH_ODE, lotka_volterra, lv_grid)
    x = rng.uniform(40.0, 110.0, size=2)
    k = int(rng.integers(0, lv_grid.K))
    t, tau = lv_grid.time(k), lv_grid.remaining(k)
    mu, zeta = lotka_volterra.drift(x, t), lotka_volterra.volatility(x, t)
    # When
    step = rb_conditional(lotka_volterra, x, k, lv_grid, lv_obs, path)
    # Then
    mean, cov = joint_gaussian_conditional(
        x, mu, zeta, lv_grid.dt, x + tau * mu + residual_shift(path, k), tau * zeta, lv_obs
    )
    np.testing.assert_allclose(step.mean, mean, rtol=1e-8)
    np.testing.assert_allclose(step.cov, cov, rtol=1e-8, atol=1e-10)


@pytest.mark.parametrize("seed", range(5))
def test_rbbar_matches_joint_gaussian(seed, lotka_volterra, lv_grid, lv_obs):
    """Tracking sigma along the skeleton changes only the terminal covariance."""
    # Given
    rng = np.random.default_rng(seed)
    path = build_xi(PATH_ODE, lotka_volterra, lv_grid)
    stats = sigma_suffix_stats(path, lotka_volterra, lv_grid)
    x = rng.uniform(40.0, 110.0, size=2)
    k = int(rng.integers(0, lv_grid.K))
    t, tau = lv_grid.time(k), lv_grid.remaining(k)
    mu, zeta = lotka_volterra.drift(x, t), lotka_volterra.volatility(x, t)
    # When
    step = rbbar_conditional(lotka_volterra, x, k, lv_grid, lv_obs, path, stats)
    # Then
    mean, cov = joint_gaussian_conditional(
        x,
        mu,
        zeta,
        lv_grid.dt,
        x + tau * mu + residual_shift(path, k),
        direct_terminal_cov(lotka_volterra, x, k, lv_grid, path),
        lv_obs,
    )
    np.testing.assert_allclose(step.mean, mean, rtol=1e-8)
    np.testing.assert_allclose(step.cov, cov, rtol=1e-8, atol=1e-10)


def test_brownian_bridge_example():
    """Unit Brownian motion with an exact observation gives the Brownian bridge step."""
    # Given
    model = SineDiffusion(theta=(0.0, 1.0, 0.0))
    grid = TimeGrid.from_horizon(1.0, 0.1)
    obs = ObservationModel.full(np.array([2.0]), 0.0)
    x, k = np.array([0.5]), 3
    tau, dt = grid.remaining(k), grid.dt
    # When
    step = mdb_conditional(model, x, k, grid, obs)
    # Then
    assert step.mean[0] == pytest.approx(0.5 + dt * 1.5 / tau, rel=1e-12)
    assert step.cov[0, 0] == pytest.approx(dt * (tau - dt) / tau, rel=1e-12)
    last = mdb_conditional(model, x, grid.K - 1, grid, obs)
    assert last.mean[0] == pytest.approx(2.0, rel=1e-12)
    assert abs(last.cov[0, 0]) <= 1e-15


def test_uninformative_observation_recovers_forward_step(birth_death, short_grid):
    """Sigma = 1e12 leaves the Euler-Maruyama step almost untouched."""
    # Given
    obs = ObservationModel.full(np.array([40.0]), 1e12)
    x = np.array([50.0])
    # When
    step = mdb_conditional(birth_death, x, 5, short_grid, obs)
    forward = fs_step_conditional(birth_death, x, 5, short_grid)
    # Then
    np.testing.assert_allclose(step.mean, forward.mean, rtol=1e-9)
    np.testing.assert_allclose(step.cov, forward.cov, rtol=1e-9)


def test_constant_skeleton_collapses_to_mdb(birth_death, short_grid):
    """A flat skeleton adds no shift, and constant sigma along it adds nothing to track."""
    # Given
    K = short_grid.K
    path = DeterministicPath(
        kind=PATH_ODE,
        xi=np.full((K + 1, 1), 50.0),
        grid=short_grid,
        sigma=np.full((K + 1, 1, 1), np.sqrt(0.9 * 50.0)),
    )
    stats = sigma_suffix_stats(path, birth_death, short_grid)
    obs = ObservationModel.full(np.array([45.0]), 0.01)
    x = np.array([[47.0], [60.0]])
    # When
    mdb = mdb_conditional(birth_death, x, 4, short_grid, obs)
    rb = rb_conditional(birth_death, x, 4, short_grid, obs, path)
    rbbar = rbbar_conditional(birth_death, x, 4, short_grid, obs, path, stats)
    # Then
    np.testing.assert_array_equal(rb.mean, mdb.mean)
    np.testing.assert_array_equal(rb.cov, mdb.cov)
    np.testing.assert_allclose(rbbar.mean, rb.mean, rtol=1e-10)
    np.testing.assert_allclose(rbbar.cov, rb.cov, rtol=1e-10)


def test_step_covariance_does_not_depend_on_the_observed_value(lotka_volterra, lv_grid):
    """Only the mean moves with y."""
    # Given
    path = build_xi(PATH_ODE, lotka_volterra, lv_grid)
    stats = sigma_suffix_stats(path, lotka_volterra, lv_grid)
    low = ObservationModel.full(np.array([60.0, 60.0]), 0.5)
    high = low.with_observation(np.array([110.0, 90.0]))
    x = np.array([70.0, 80.0])
    # When
    first = rbbar_conditional(lotka_volterra, x, 2, lv_grid, low, path, stats)
    second = rbbar_conditional(lotka_volterra, x, 2, lv_grid, high, path, stats)
    # Then
    np.testing.assert_array_equal(first.cov, second.cov)
    assert not np.array_equal(first.mean, second.mean)


def test_suffix_stats_on_two_steps(birth_death):
    """With K = 2 only sigma(xi_1) enters, and only at k = 0."""
    # Given
    grid = TimeGrid.from_horizon(0.02, 0.01)
    path = build_xi(PATH_ODE, birth_death, grid)
    # When
    stats = sigma_suffix_stats(path, birth_death, grid)
    # Then
    assert stats.count.tolist() == [1.0, 0.0]
    np.testing.assert_array_equal(stats.sum_sigma[0], path.sigma[1])
    np.testing.assert_array_equal(stats.sum_sigma[1], np.zeros((1, 1)))
    np.testing.assert_array_equal(stats.sum_outer[1], np.zeros((1, 1)))


def test_suffix_stats_recurrence(lotka_volterra, lv_grid):
    """S_k = sigma(xi_{k+1}) + S_{k+1}."""
    # Given
    path = build_xi(PATH_ODE, lotka_volterra, lv_grid)
    # When
    stats = sigma_suffix_stats(path, lotka_volterra, lv_grid, factorized=False)
    # Then
    for k in range(lv_grid.K - 1):
        np.testing.assert_allclose(
            stats.sum_sigma[k], path.sigma[k + 1] + stats.sum_sigma[k + 1], rtol=1e-13
        )
    assert not stats.factorized


@pytest.mark.parametrize("seed", range(5))
def test_tracked_covariance_matches_direct_sum(seed, lotka_volterra, lv_grid):
    """Dense suffix sums reproduce the term-by-term sum, and the factorized form agrees."""
    # Given
    rng = np.random.default_rng(seed)
    path = build_xi(PATH_ODE, lotka_volterra, lv_grid)
    dense = sigma_suffix_stats(path, lotka_volterra, lv_grid, factorized=False)
    factorized = sigma_suffix_stats(path, lotka_volterra, lv_grid, factorized=True)
    x = rng.uniform(40.0, 110.0, size=2)
    k = int(rng.integers(0, lv_grid.K))
    # When
    from_dense = rbbar_terminal_cov(lotka_volterra, x, k, lv_grid, path, dense)
    from_rates = rbbar_terminal_cov(lotka_volterra, x, k, lv_grid, path, factorized)
    # Then
    expected = direct_terminal_cov(lotka_volterra, x, k, lv_grid, path)
    np.testing.assert_allclose(from_dense, expected, rtol=1e-12, atol=1e-12 * np.abs(expected).max())
    np.testing.assert_allclose(from_rates, from_dense, rtol=1e-10, atol=1e-10 * np.abs(expected).max())
    assert factorized.factorized


def test_tracked_covariance_on_the_last_step(lotka_volterra, lv_grid):
    """One step from the end the tracked covariance is dt zeta(x)."""
    # Given
    path = build_xi(PATH_ODE, lotka_volterra, lv_grid)
    stats = sigma_suffix_stats(path, lotka_volterra, lv_grid)
    x = np.array([65.0, 90.0])
    k = lv_grid.K - 1
    # When
    cov = rbbar_terminal_cov(lotka_volterra, x, k, lv_grid, path, stats)
    # Then
    np.testing.assert_allclose(
        cov, lv_grid.dt * lotka_volterra.volatility(x, lv_grid.time(k)), rtol=1e-14
    )


def test_batched_states_match_single_states(lotka_volterra, lv_grid, lv_obs, rng):
    """A stack of states gives the same conditionals as one state at a time."""
    # Given
    path = build_xi(PATH_ODE, lotka_volterra, lv_grid)
    stats = sigma_suffix_stats(path, lotka_volterra, lv_grid)
    x = rng.uniform(40.0, 110.0, size=(4, 2))
    # When
    batch = rbbar_conditional(lotka_volterra, x, 3, lv_grid, lv_obs, path, stats, kind=RBBAR_LNA)
    # Then
    assert batch.kind == RBBAR_LNA
    assert batch.ok.shape == (4,)
    for i in range(4):
        single = rbbar_conditional(lotka_volterra, x[i], 3, lv_grid, lv_obs, path, stats)
        np.testing.assert_allclose(batch.mean[i], single.mean, rtol=1e-12)
        np.testing.assert_allclose(batch.cov[i], single.cov, rtol=1e-12, atol=1e-12)


def test_singular_innovation():
    """No volatility and an exact observation leave nothing to condition with."""
    # Given
    model = SineDiffusion(theta=(0.0, 0.0, 0.0))
    grid = TimeGrid.from_horizon(1.0, 0.1)
    obs = ObservationModel.full(np.array([1.0]), 0.0)
    x = np.array([0.0])
    # When / Then
    with pytest.raises(NumericFailureError):
        mdb_conditional(model, x, 2, grid, obs)
    relaxed = mdb_conditional(model, x, 2, grid, obs, strict=False)
    assert not relaxed.ok
    assert np.all(np.isnan(relaxed.mean))


def test_no_step_leaves_the_terminal_index(birth_death, short_grid):
    """k = K has no conditional."""
    # Given
    obs = ObservationModel.full(np.array([45.0]), 0.01)
    # When / Then
    with pytest.raises(ValueError):
        mdb_conditional(birth_death, np.array([50.0]), short_grid.K, short_grid, obs)


def random_instance(d: int, instance: int):
    """Model, grid, skeleton, observation, state and step index drawn from one seed."""
    rng = np.random.default_rng([d, instance])
    model = RandomLinearDiffusion(rng, d)
    grid = TimeGrid.from_horizon(1.0, 0.1)
    path = random_path(rng, model, grid)
    obs = random_observation(rng, d)
    x = rng.normal(size=d)
    k = int(rng.integers(0, grid.K))
    return model, grid, path, obs, x, k


def skeleton_terminal_mean(model, x, k, grid, path):
    """x + tau mu(x) + (xi_K - xi_k) - tau (xi_{k+1} - xi_k) / dt."""
    K, dt = grid.K, grid.dt
    tau = (K - k) * dt
    xi = path.xi
    mu = model.drift(x, grid.time(k))
    return x + tau * mu + (xi[K] - xi[k]) - tau * (xi[k + 1] - xi[k]) / dt


def tracked_terminal_cov(model, x, k, grid, path):
    """dt zeta(x) + dt sum_{j=k+1}^{K-1} (sigma(xi_j) + sigma(x) - sigma(xi_k))(...)*."""
    t = grid.time(k)
    shift = model.diffusion(x, t) - model.diffusion(path.xi[k], t)
    total = model.volatility(x, t)
    for j in range(k + 1, grid.K):
        a = model.diffusion(path.xi[j], grid.time(j)) + shift
        total = total + a @ a.T
    return grid.dt * total


@pytest.mark.parametrize("d", [1, 2])
def test_mdb_matches_joint_gaussian_on_random_instances(d):
    """A hundred random drifts, volatilities and observations agree with the dense oracle."""
    for instance in range(100):
        # Given
        model, grid, _, obs, x, k = random_instance(d, instance)
        t, tau = grid.time(k), grid.remaining(k)
        mu, zeta = model.drift(x, t), model.volatility(x, t)
        # When
        step = mdb_conditional(model, x, k, grid, obs)
        # Then
        mean, cov = joint_gaussian_conditional(x, mu, zeta, grid.dt, x + tau * mu, tau * zeta, obs)
        np.testing.assert_allclose(step.mean, mean, rtol=1e-7, atol=1e-9, err_msg=f"{instance}")
        np.testing.assert_allclose(step.cov, cov, rtol=1e-7, atol=1e-9, err_msg=f"{instance}")


@pytest.mark.parametrize("d", [1, 2])
def test_rb_matches_joint_gaussian_on_random_instances(d):
    """Random skeletons shift the terminal mean by their increments and nothing else."""
    for instance in range(100):
        # Given
        model, grid, path, obs, x, k = random_instance(d, instance)
        t, tau = grid.time(k), grid.remaining(k)
        mu, zeta = model.drift(x, t), model.volatility(x, t)
        # When
        step = rb_conditional(model, x, k, grid, obs, path)
        # Then
        mean, cov = joint_gaussian_conditional(
            x, mu, zeta, grid.dt, skeleton_terminal_mean(model, x, k, grid, path), tau * zeta, obs
        )
        np.testing.assert_allclose(step.mean, mean, rtol=1e-7, atol=1e-9, err_msg=f"{instance}")
        np.testing.assert_allclose(step.cov, cov, rtol=1e-7, atol=1e-9, err_msg=f"{instance}")


@pytest.mark.parametrize("d", [1, 2])
def test_rbbar_matches_joint_gaussian_on_random_instances(d):
    """The tracked terminal covariance matches a term-by-term sum over random skeletons."""
    for instance in range(100):
        # Given
        model, grid, path, obs, x, k = random_instance(d, instance)
        stats = sigma_suffix_stats(path, model, grid)
        t = grid.time(k)
        mu, zeta = model.drift(x, t), model.volatility(x, t)
        # When
        step = rbbar_conditional(model, x, k, grid, obs, path, stats)
        # Then
        mean, cov = joint_gaussian_conditional(
            x,
            mu,
            zeta,
            grid.dt,
            skeleton_terminal_mean(model, x, k, grid, path),
            tracked_terminal_cov(model, x, k, grid, path),
            obs,
        )
        np.testing.assert_allclose(step.mean, mean, rtol=1e-7, atol=1e-9, err_msg=f"{instance}")
        np.testing.assert_allclose(step.cov, cov, rtol=1e-7, atol=1e-9, err_msg=f"{instance}")


@pytest.mark.parametrize("tracked", [False, True])
def test_uninformative_observation_recovers_forward_step_around_a_skeleton(
    tracked, birth_death, short_grid
):
    """Sigma = 1e12 reduces both residual bridges to the Euler-Maruyama step."""
    # Given
    obs = ObservationModel.full(np.array([40.0]), 1e12)
    path = build_xi(PATH_ODE, birth_death, short_grid)
    x = np.array([50.0])
    # When
    if tracked:
        stats = sigma_suffix_stats(path, birth_death, short_grid)
        step = rbbar_conditional(birth_death, x, 5, short_grid, obs, path, stats)
    else:
        step = rb_conditional(birth_death, x, 5, short_grid, obs, path)
    forward = fs_step_conditional(birth_death, x, 5, short_grid)
    # Then
    np.testing.assert_allclose(step.mean, forward.mean, rtol=1e-9)
    np.testing.assert_allclose(step.cov, forward.cov, rtol=1e-9)
