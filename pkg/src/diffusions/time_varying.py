#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Scalar diffusion with state-independent, time-varying coefficients."""

from collections.abc import Sequence

import numpy as np

from constants import SINE
from diffusions.base import DiffusionModel


class SineDiffusion(DiffusionModel):
    """dX = theta1 sin(t) dt + (theta2 + theta3 sin(t)) dB on the whole real line.

    The transition law is Gaussian, so residual bridges around the drift-only
    path with volatility tracked along the grid sample near-exact bridges.
    """

    name = SINE
    dim = 1
    noise_dim = 1

    def __init__(self, theta: Sequence[float] = (1.0, 1.0, 0.5), x0: Sequence[float] = (0.0,)):
        super().__init__(theta, x0)

    def drift(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.full(np.shape(x), self.theta[0] * np.sin(t))

    def diffusion(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.full((*np.shape(x), 1), self.theta[1] + self.theta[2] * np.sin(t))

    def is_valid(self, x: np.ndarray) -> np.ndarray:
        return np.all(np.isfinite(np.asarray(x)), axis=-1)

    def jacobian(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.zeros((*np.shape(x), 1))
