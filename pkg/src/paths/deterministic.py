#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Deterministic skeletons: the drift-only path and the linear noise approximation.

The linear noise approximation writes the residual R_t = X_t - eta_t as
dR = J(eta_t, t) R dt + sigma(eta_t, t) dB with generator G_t and covariance
phi_t. Conditioning R on the observation gives the skeleton a residual bridge
follows.
"""

import logging

import numpy as np

from constants import ODE_ATOL, ODE_RTOL, PATH_LNA, PATH_ODE, SINGULAR_CONDITION
from core.domain import DeterministicPath, ObservationModel, OdeSolution, TimeGrid
from core.errors import NumericFailureError
from diffusions.base import DiffusionModel
from paths.ode import integrate_on_grid
from utils.linalg import spd_solve, symmetrize, transpose

logger = logging.getLogger(__name__)


def _check_same_grid(solution: OdeSolution, grid: TimeGrid, name: str) -> None:
    if solution.grid != grid:
        raise ValueError(f"{name} was solved on {solution.grid}, expected {grid}")


def jacobian(model: DiffusionModel, x: np.ndarray, t: float) -> np.ndarray:
    """Entry (i, j) is d mu_i / d x_j at (x, t)."""
    return model.jacobian(np.asarray(x, dtype=float), t)


def solve_eta(
    model: DiffusionModel, grid: TimeGrid, rtol: float = ODE_RTOL, atol: float = ODE_ATOL
) -> OdeSolution:
    """Solve d eta / dt = mu(eta, t), eta_0 = x0."""
    model.check_state(model.x0, index=0)
    values, nfev = integrate_on_grid(
        lambda t, y: model.drift(y, t), model.x0, grid, rtol=rtol, atol=atol
    )
    return OdeSolution(values=values, grid=grid, n_evaluations=nfev)


def _split(y: np.ndarray, d: int) -> tuple[np.ndarray, ...]:
    return y[..., :d], y[..., d : d + d * d].reshape(*y.shape[:-1], d, d), y[
        ..., d + d * d :
    ].reshape(*y.shape[:-1], d, d)


def solve_lna(
    model: DiffusionModel,
    grid: TimeGrid,
    eta: OdeSolution,
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
) -> tuple[OdeSolution, OdeSolution]:
    """Solve dG/dt = J G, G_0 = I and dphi/dt = J phi + phi J* + zeta(eta), phi_0 = 0.

    The three systems are integrated jointly from eta_0 so that the linearization
    point is evaluated at the solver's own stages.
    """
    _check_same_grid(eta, grid, "eta")
    d = model.dim

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        path, gen, cov = _split(y, d)
        cov = symmetrize(cov)
        jac = model.jacobian(path, t)
        d_cov = jac @ cov + cov @ jac.T + model.volatility(path, t)
        return np.concatenate([model.drift(path, t), (jac @ gen).ravel(), d_cov.ravel()])

    y0 = np.concatenate([eta.initial, np.eye(d).ravel(), np.zeros(d * d)])
    values, nfev = integrate_on_grid(rhs, y0, grid, rtol=rtol, atol=atol)
    _, gen, cov = _split(values, d)
    return (
        OdeSolution(values=gen, grid=grid, n_evaluations=nfev),
        OdeSolution(values=symmetrize(cov), grid=grid, n_evaluations=nfev),
    )


def solve_psi(
    model: DiffusionModel,
    grid: TimeGrid,
    eta: OdeSolution,
    G: OdeSolution,
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
) -> OdeSolution:
    """Solve dpsi/dt = G^-1 zeta(eta) G^-*, psi_0 = 0, so that phi = G psi G*.

    Raises:
        NumericFailureError: when G is near-singular at some grid point.
    """
    _check_same_grid(eta, grid, "eta")
    _check_same_grid(G, grid, "G")
    conditions = np.linalg.cond(G.values)
    if np.any(~np.isfinite(conditions) | (conditions > SINGULAR_CONDITION)):
        index = int(np.argmax(np.where(np.isfinite(conditions), conditions, np.inf)))
        raise NumericFailureError(
            f"G is near-singular at grid index {index} (condition {conditions[index]:.3e})",
            matrix_name="G",
        )
    d = model.dim

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        path, gen, _ = _split(y, d)
        try:
            left = np.linalg.solve(gen, model.volatility(path, t))
            d_psi = np.linalg.solve(gen, left.T).T
        except np.linalg.LinAlgError as err:
            raise NumericFailureError(f"G is singular at t={t}: {err}", matrix_name="G") from err
        jac = model.jacobian(path, t)
        return np.concatenate(
            [model.drift(path, t), (jac @ gen).ravel(), symmetrize(d_psi).ravel()]
        )

    y0 = np.concatenate([eta.initial, np.eye(d).ravel(), np.zeros(d * d)])
    values, nfev = integrate_on_grid(rhs, y0, grid, rtol=rtol, atol=atol)
    _, _, psi = _split(values, d)
    return OdeSolution(values=symmetrize(psi), grid=grid, n_evaluations=nfev)


def conditioned_residual_mean(
    G: OdeSolution,
    phi: OdeSolution,
    eta: OdeSolution,
    obs: ObservationModel,
    grid: TimeGrid,
) -> np.ndarray:
    """E(R_t | y) = phi_t G_t^-* G_T* P* (P phi_T P* + Sigma)^-1 (y - P eta_T), at every t_k.

    Returns an array of shape (K + 1, d).

    Raises:
        NumericFailureError: when the innovation matrix is singular beyond the jitter ladder
            or G is singular at a grid point.
    """
    for name, solution in (("G", G), ("phi", phi), ("eta", eta)):
        _check_same_grid(solution, grid, name)
    P = obs.P
    innovation = P @ phi.terminal @ P.T + obs.Sigma
    residual = obs.y - P @ eta.terminal
    weights, ok = spd_solve(innovation, residual[:, None], name="LNA innovation")
    if not ok:
        raise NumericFailureError(
            "LNA innovation matrix is singular beyond the jitter tolerance",
            matrix_name="LNA innovation",
        )
    pulled = G.terminal.T @ (P.T @ weights[:, 0])
    # G_t^-* applied by solving against G_t*, one grid point at a time
    try:
        shifted = np.linalg.solve(
            transpose(G.values), np.broadcast_to(pulled, eta.values.shape)[..., None]
        )
    except np.linalg.LinAlgError as err:
        raise NumericFailureError(f"G is singular on the grid: {err}", matrix_name="G") from err
    return (phi.values @ shifted)[..., 0]


def _cache_coefficients(
    model: DiffusionModel, xi: np.ndarray, grid: TimeGrid
) -> tuple[np.ndarray, np.ndarray | None]:
    for k, state in enumerate(xi):
        model.check_state(state, index=k)
    sigma = np.stack([model.diffusion(xi[k], grid.time(k)) for k in range(grid.K + 1)])
    rates = None
    if model.is_factorized:
        rates = np.stack([model.rates(xi[k], grid.time(k)) for k in range(grid.K + 1)])
    return sigma, rates


def build_xi(
    kind: str,
    model: DiffusionModel,
    grid: TimeGrid,
    obs: ObservationModel | None = None,
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
) -> DeterministicPath:
    """Build the skeleton xi of a residual bridge.

    ``ode`` follows the drift-only path; ``lna`` adds the residual mean of the
    linear noise approximation conditioned on the observation.

    Raises:
        DomainViolationError: when xi leaves the model domain, naming the grid index.
    """
    eta = solve_eta(model, grid, rtol=rtol, atol=atol)
    if kind == PATH_ODE:
        xi = eta.values
    elif kind == PATH_LNA:
        if obs is None:
            raise ValueError("The LNA skeleton needs an observation")
        G, phi = solve_lna(model, grid, eta, rtol=rtol, atol=atol)
        xi = eta.values + conditioned_residual_mean(G, phi, eta, obs, grid)
    else:
        raise ValueError(f"Unknown skeleton kind {kind!r}")

    sigma, rates = _cache_coefficients(model, xi, grid)
    logger.debug(f"Built {kind} skeleton for {model.name} over {grid.K} steps")
    return DeterministicPath(kind=kind, xi=xi, grid=grid, sigma=sigma, rates=rates)
