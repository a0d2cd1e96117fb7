#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Linear birth-death diffusion and its unit-volatility transform."""

from collections.abc import Sequence

import numpy as np

from constants import BIRTH_DEATH, BIRTH_DEATH_LAMPERTI
from diffusions.base import DiffusionModel


class BirthDeath(DiffusionModel):
    """dX = (theta1 - theta2) X dt + sqrt((theta1 + theta2) X) dB.

    The drift is linear, so the deterministic path and the linear noise
    approximation have closed forms, exposed as ``analytic_*``.
    """

    name = BIRTH_DEATH
    dim = 1
    noise_dim = 1

    def __init__(self, theta: Sequence[float] = (0.1, 0.8), x0: Sequence[float] = (50.0,)):
        super().__init__(theta, x0)

    @property
    def growth(self) -> float:
        """theta1 - theta2."""
        return float(self.theta[0] - self.theta[1])

    @property
    def spread(self) -> float:
        """theta1 + theta2."""
        return float(self.theta[0] + self.theta[1])

    def drift(self, x: np.ndarray, t: float) -> np.ndarray:
        return self.growth * np.asarray(x, dtype=float)

    def diffusion(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.sqrt(self.spread * np.asarray(x, dtype=float))[..., None]

    def volatility(self, x: np.ndarray, t: float) -> np.ndarray:
        return (self.spread * np.asarray(x, dtype=float))[..., None]

    def jacobian(self, x: np.ndarray, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.full((*x.shape, 1), self.growth)

    def analytic_eta(self, t: np.ndarray) -> np.ndarray:
        """eta_t = x0 exp((theta1 - theta2) t)."""
        return self.x0[0] * np.exp(self.growth * np.asarray(t))

    def analytic_generator(self, t: np.ndarray) -> np.ndarray:
        """G_t = exp((theta1 - theta2) t)."""
        return np.exp(self.growth * np.asarray(t))

    def analytic_covariance(self, t: np.ndarray) -> np.ndarray:
        """phi_t of the linear noise approximation."""
        t = np.asarray(t, dtype=float)
        if self.growth == 0.0:
            return self.spread * self.x0[0] * t
        return self.spread / self.growth * self.analytic_eta(t) * (np.exp(self.growth * t) - 1.0)


class TransformedBirthDeath(DiffusionModel):
    """Birth-death diffusion under Y = 2 sqrt(X / (theta1 + theta2)), with unit volatility.

    ``x0`` is given on the original scale and transformed on construction.
    """

    name = BIRTH_DEATH_LAMPERTI
    dim = 1
    noise_dim = 1

    def __init__(self, theta: Sequence[float] = (0.1, 0.8), x0: Sequence[float] = (50.0,)):
        theta_arr = np.asarray(theta, dtype=float)
        y0 = 2.0 * np.sqrt(np.asarray(x0, dtype=float) / (theta_arr[0] + theta_arr[1]))
        super().__init__(theta, y0)

    def drift(self, x: np.ndarray, t: float) -> np.ndarray:
        y = np.asarray(x, dtype=float)
        return 0.5 * (self.theta[0] - self.theta[1]) * y - 0.5 / y

    def diffusion(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.ones((*np.shape(x), 1))

    def volatility(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.ones((*np.shape(x), 1))

    def is_valid(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        return np.all(np.isfinite(x) & (x > 0.0), axis=-1)

    def jacobian(self, x: np.ndarray, t: float) -> np.ndarray:
        y = np.asarray(x, dtype=float)
        return (0.5 * (self.theta[0] - self.theta[1]) + 0.5 / y**2)[..., None]

    def to_population(self, y: np.ndarray) -> np.ndarray:
        """Map states back to the original scale, X = (theta1 + theta2) Y^2 / 4."""
        return (self.theta[0] + self.theta[1]) * np.asarray(y) ** 2 / 4.0
