#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""One-step Gaussian conditionals of the bridge proposals.

Every bridge step freezes the dynamics at x_k, writes the joint Gaussian of
(X_{k+1}, Y) and conditions on Y = y. The proposals differ only in the mean
and covariance they assume for the terminal state:

* modified diffusion bridge: x + tau mu, tau zeta
* residual bridge: shifted by the skeleton increments, tau zeta
* residual bridge tracking volatility: as above, with sigma followed along the skeleton

with tau = T - t_k. States may be a single ``(d,)`` vector or a stack ``(n, d)``.
"""

import numpy as np

from constants import FS, MDB, RB_ODE, RBBAR_ODE
from core.domain import (
    DeterministicPath,
    ObservationModel,
    SigmaSuffixStats,
    StepConditional,
    TimeGrid,
)
from core.errors import NumericFailureError
from diffusions.base import DiffusionModel
from utils.linalg import cho_solve, cholesky_stack, symmetrize, transpose


def _finish(conditional: StepConditional, strict: bool) -> StepConditional:
    if strict and not np.all(conditional.ok):
        raise NumericFailureError(
            f"{conditional.kind} innovation matrix is singular beyond the jitter tolerance",
            matrix_name=f"{conditional.kind} innovation",
        )
    return conditional


def condition_on_observation(
    kind: str,
    x: np.ndarray,
    mu: np.ndarray,
    zeta: np.ndarray,
    dt: float,
    terminal_mean: np.ndarray,
    terminal_cov: np.ndarray,
    obs: ObservationModel,
) -> StepConditional:
    """Condition the step x + dt mu + sqrt(dt) sigma Z on Y = P X_T + e.

    X_T is taken Gaussian with ``terminal_mean`` and ``terminal_cov``, and its
    covariance with X_{k+1} is dt zeta.
    """
    P = obs.P
    coupling = dt * zeta @ P.T
    innovation = P @ terminal_cov @ P.T + obs.Sigma
    residual = obs.y - terminal_mean @ P.T

    factor, ok = cholesky_stack(innovation, name=f"{kind} innovation")
    factor = np.where(ok[..., None, None], factor, np.eye(P.shape[0]))
    gain = transpose(cho_solve(factor, transpose(coupling)))
    mean = x + dt * mu + (gain @ residual[..., None])[..., 0]
    cov = symmetrize(dt * zeta - gain @ transpose(coupling))

    mask = ok[..., None]
    return StepConditional(
        kind=kind,
        mean=np.where(mask, mean, np.nan),
        cov=np.where(mask[..., None], cov, np.nan),
        ok=ok,
    )


def fs_step_conditional(
    model: DiffusionModel, x: np.ndarray, k: int, grid: TimeGrid
) -> StepConditional:
    """Forward simulation: the Euler-Maruyama step, ignoring the observation."""
    x = np.asarray(x, dtype=float)
    t = grid.time(k)
    return StepConditional(
        kind=FS,
        mean=x + grid.dt * model.drift(x, t),
        cov=grid.dt * model.volatility(x, t),
        ok=np.ones(x.shape[:-1], dtype=bool),
    )


def mdb_conditional(
    model: DiffusionModel,
    x: np.ndarray,
    k: int,
    grid: TimeGrid,
    obs: ObservationModel,
    strict: bool = True,
) -> StepConditional:
    """Modified diffusion bridge step from x_k.

    Raises:
        NumericFailureError: with ``strict`` set, when the innovation matrix is singular.
    """
    if k >= grid.K:
        raise ValueError(f"No step leaves the terminal index {k}")
    x = np.asarray(x, dtype=float)
    t, tau = grid.time(k), grid.remaining(k)
    mu, zeta = model.drift(x, t), model.volatility(x, t)
    conditional = condition_on_observation(
        MDB, x, mu, zeta, grid.dt, x + tau * mu, tau * zeta, obs
    )
    return _finish(conditional, strict)


def residual_shift(path: DeterministicPath, k: int) -> np.ndarray:
    """(xi_K - xi_k) - (T - t_k) (xi_{k+1} - xi_k) / dt, with the chord as derivative."""
    K = path.grid.K
    return (path.xi[K] - path.xi[k]) - (K - k) * path.chord(k)


def rb_conditional(
    model: DiffusionModel,
    x: np.ndarray,
    k: int,
    grid: TimeGrid,
    obs: ObservationModel,
    path: DeterministicPath,
    strict: bool = True,
    kind: str = RB_ODE,
) -> StepConditional:
    """Residual bridge step: the modified diffusion bridge applied to x - xi.

    Raises:
        NumericFailureError: with ``strict`` set, when the innovation matrix is singular.
    """
    if k >= grid.K:
        raise ValueError(f"No step leaves the terminal index {k}")
    x = np.asarray(x, dtype=float)
    t, tau = grid.time(k), grid.remaining(k)
    mu, zeta = model.drift(x, t), model.volatility(x, t)
    terminal_mean = x + tau * mu + residual_shift(path, k)
    conditional = condition_on_observation(
        kind, x, mu, zeta, grid.dt, terminal_mean, tau * zeta, obs
    )
    return _finish(conditional, strict)


def _suffix(terms: np.ndarray, K: int) -> np.ndarray:
    """Suffix sums S_k = sum_{j=k+1}^{K-1} terms[j] for k = 0..K-1."""
    inner = terms[1:K]
    tail = np.cumsum(inner[::-1], axis=0)[::-1]
    return np.concatenate([tail, np.zeros((1, *terms.shape[1:]))], axis=0)


def sigma_suffix_stats(
    path: DeterministicPath,
    model: DiffusionModel,
    grid: TimeGrid,
    factorized: bool | None = None,
) -> SigmaSuffixStats:
    """Suffix sums of sigma(xi_j, t_j) along the skeleton, in one backward pass.

    The factorized (S, Lambda) variant is used by default whenever the model
    provides it.

    Raises:
        DomainViolationError: when the skeleton leaves the model domain.
    """
    for k, state in enumerate(path.xi):
        model.check_state(state, index=k)
    K = grid.K
    count = np.arange(K - 1, -1, -1, dtype=float)
    if factorized is None:
        factorized = model.is_factorized and path.rates is not None
    if factorized:
        if path.rates is None:
            raise ValueError("The skeleton does not cache factorized rates")
        return SigmaSuffixStats(
            count=count,
            sum_rates=_suffix(path.rates, K),
            sum_rates_sq=_suffix(path.rates**2, K),
        )
    sigma = path.sigma
    return SigmaSuffixStats(
        count=count,
        sum_sigma=_suffix(sigma, K),
        sum_outer=_suffix(sigma @ transpose(sigma), K),
    )


def rbbar_terminal_cov(
    model: DiffusionModel,
    x: np.ndarray,
    k: int,
    grid: TimeGrid,
    path: DeterministicPath,
    stats: SigmaSuffixStats,
) -> np.ndarray:
    """dt zeta(x_k) + dt sum_{j=k+1}^{K-1} (A_j + D)(A_j + D)*, A_j = sigma(xi_j), D = sigma(x_k) - sigma(xi_k)."""
    x = np.asarray(x, dtype=float)
    t = grid.time(k)
    zeta = model.volatility(x, t)
    n = stats.count[k]
    if stats.factorized:
        assert stats.sum_rates is not None and stats.sum_rates_sq is not None
        assert path.rates is not None and model.factor_matrix is not None
        S = model.factor_matrix
        delta = model.rates(x, t) - path.rates[k]
        diagonal = stats.sum_rates_sq[k] + 2.0 * delta * stats.sum_rates[k] + n * delta**2
        tracked = (S * diagonal[..., None, :]) @ S.T
    else:
        assert stats.sum_sigma is not None and stats.sum_outer is not None
        shift = model.diffusion(x, t) - path.sigma[k]
        cross = stats.sum_sigma[k] @ transpose(shift)
        tracked = stats.sum_outer[k] + cross + transpose(cross) + n * (shift @ transpose(shift))
    return grid.dt * symmetrize(zeta + tracked)


def rbbar_conditional(
    model: DiffusionModel,
    x: np.ndarray,
    k: int,
    grid: TimeGrid,
    obs: ObservationModel,
    path: DeterministicPath,
    stats: SigmaSuffixStats,
    strict: bool = True,
    kind: str = RBBAR_ODE,
) -> StepConditional:
    """Residual bridge step whose terminal covariance follows sigma along the skeleton.

    Raises:
        NumericFailureError: with ``strict`` set, when the innovation matrix is singular.
    """
    if k >= grid.K:
        raise ValueError(f"No step leaves the terminal index {k}")
    x = np.asarray(x, dtype=float)
    t, tau = grid.time(k), grid.remaining(k)
    mu, zeta = model.drift(x, t), model.volatility(x, t)
    terminal_mean = x + tau * mu + residual_shift(path, k)
    terminal_cov = rbbar_terminal_cov(model, x, k, grid, path, stats)
    conditional = condition_on_observation(
        kind, x, mu, zeta, grid.dt, terminal_mean, terminal_cov, obs
    )
    return _finish(conditional, strict)
