#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""ODE integration sampled on the points of a time grid."""

import logging
from collections.abc import Callable

import numpy as np
from scipy.integrate import solve_ivp

from constants import ODE_ATOL, ODE_METHOD, ODE_RTOL
from core.domain import TimeGrid
from core.errors import IntegrationError

logger = logging.getLogger(__name__)

VectorField = Callable[[float, np.ndarray], np.ndarray]


def integrate_on_grid(
    fun: VectorField,
    y0: np.ndarray,
    grid: TimeGrid,
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
) -> tuple[np.ndarray, int]:
    """Integrate y' = fun(t, y) from y0 with an embedded Runge-Kutta 4(5) pair.

    The adaptive solver is forced to report the solution at every grid point.

    Returns:
        The solution at t_0..t_K, shape (K + 1, len(y0)), and the number of
        vector field evaluations.

    Raises:
        IntegrationError: when the solver stops before T or produces non-finite values.
    """
    y0 = np.asarray(y0, dtype=float)
    result = solve_ivp(
        fun,
        (0.0, grid.T),
        y0,
        method=ODE_METHOD,
        t_eval=grid.times,
        rtol=rtol,
        atol=atol,
    )
    if not result.success or result.y.shape[1] != grid.K + 1:
        raise IntegrationError(f"Integration failed before T={grid.T}: {result.message}")
    values = result.y.T
    if not np.all(np.isfinite(values)):
        raise IntegrationError("Integration produced non-finite values")
    # initial conditions are exact
    values[0] = y0
    logger.debug(f"Integrated {y0.size} equations over {grid.K} steps with {result.nfev} calls")
    return values, int(result.nfev)


def rk4_reference(
    fun: VectorField, y0: np.ndarray, grid: TimeGrid, substeps: int = 100
) -> np.ndarray:
    """Classic fixed-step RK4 with ``substeps`` steps inside every grid interval.

    Returns the solution at t_0..t_K, shape (K + 1, len(y0)).
    """
    y = np.asarray(y0, dtype=float).copy()
    h = grid.dt / substeps
    values = np.empty((grid.K + 1, y.size))
    values[0] = y
    for k in range(grid.K):
        t = k * grid.dt
        for i in range(substeps):
            s = t + i * h
            k1 = fun(s, y)
            k2 = fun(s + 0.5 * h, y + 0.5 * h * k1)
            k3 = fun(s + 0.5 * h, y + 0.5 * h * k2)
            k4 = fun(s + h, y + h * k3)
            y = y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        values[k + 1] = y
    return values
