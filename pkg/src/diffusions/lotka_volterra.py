#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Chemical Langevin approximation of the stochastic Lotka-Volterra model."""

from collections.abc import Sequence

import numpy as np

from constants import LOTKA_VOLTERRA
from diffusions.base import DiffusionModel

# Reactions in order: prey birth, predation, predator death
STOICHIOMETRY = np.array([[1.0, -1.0, 0.0], [0.0, 1.0, -1.0]])
STOICHIOMETRY.setflags(write=False)


class LotkaVolterra(DiffusionModel):
    """Prey x1 and predators x2 with rates theta1 x1, theta2 x1 x2 and theta3 x2."""

    name = LOTKA_VOLTERRA
    dim = 2
    noise_dim = 3
    factor_matrix = STOICHIOMETRY

    def __init__(
        self,
        theta: Sequence[float] = (0.5, 0.0025, 0.3),
        x0: Sequence[float] = (71.0, 79.0),
    ):
        super().__init__(theta, x0)

    def propensities(self, x: np.ndarray, t: float) -> np.ndarray:
        """Reaction hazards, shape (..., 3)."""
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        th1, th2, th3 = self.theta
        return np.stack([th1 * x1, th2 * x1 * x2, th3 * x2], axis=-1)

    def drift(self, x: np.ndarray, t: float) -> np.ndarray:
        return self.propensities(x, t) @ STOICHIOMETRY.T

    def rates(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.sqrt(self.propensities(x, t))

    def diffusion(self, x: np.ndarray, t: float) -> np.ndarray:
        return STOICHIOMETRY * self.rates(x, t)[..., None, :]

    def volatility(self, x: np.ndarray, t: float) -> np.ndarray:
        h = self.propensities(x, t)
        births, predation, deaths = h[..., 0], h[..., 1], h[..., 2]
        return np.stack(
            [
                np.stack([births + predation, -predation], axis=-1),
                np.stack([-predation, predation + deaths], axis=-1),
            ],
            axis=-2,
        )

    def jacobian(self, x: np.ndarray, t: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        th1, th2, th3 = self.theta
        return np.stack(
            [
                np.stack([th1 - th2 * x2, -th2 * x1], axis=-1),
                np.stack([th2 * x2, th2 * x1 - th3], axis=-1),
            ],
            axis=-2,
        )
