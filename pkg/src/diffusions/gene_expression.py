#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Gene expression with a time-inhomogeneous transcription rate."""

from collections.abc import Sequence

import numpy as np

from constants import GENE_EXPRESSION
from diffusions.base import DiffusionModel


class GeneExpression(DiffusionModel):
    """mRNA R and protein P with transcription rate k_R(t) = b0 exp(-b1 (t - b2)^2) + b3.

    theta = (gamma_R, gamma_P, k_P, b0, b1, b2, b3).
    """

    name = GENE_EXPRESSION
    dim = 2
    noise_dim = 2

    def __init__(
        self,
        theta: Sequence[float] = (0.7, 0.72, 3.0, 80.0, 0.05, 2.0, 50.0),
        x0: Sequence[float] = (70.0, 70.0),
    ):
        super().__init__(theta, x0)

    def transcription_rate(self, t: float) -> float:
        """k_R(t)."""
        b0, b1, b2, b3 = self.theta[3:]
        return float(b0 * np.exp(-b1 * (t - b2) ** 2) + b3)

    def _hazards(self, x: np.ndarray, t: float) -> tuple[np.ndarray, ...]:
        x = np.asarray(x, dtype=float)
        mrna, protein = x[..., 0], x[..., 1]
        gamma_r, gamma_p, k_p = self.theta[:3]
        k_r = np.full_like(mrna, self.transcription_rate(t))
        return k_r, gamma_r * mrna, k_p * mrna, gamma_p * protein

    def drift(self, x: np.ndarray, t: float) -> np.ndarray:
        k_r, decay_r, translation, decay_p = self._hazards(x, t)
        return np.stack([k_r - decay_r, translation - decay_p], axis=-1)

    def diffusion(self, x: np.ndarray, t: float) -> np.ndarray:
        k_r, decay_r, translation, decay_p = self._hazards(x, t)
        zeros = np.zeros_like(k_r)
        return np.stack(
            [
                np.stack([np.sqrt(k_r + decay_r), zeros], axis=-1),
                np.stack([zeros, np.sqrt(translation + decay_p)], axis=-1),
            ],
            axis=-2,
        )

    def volatility(self, x: np.ndarray, t: float) -> np.ndarray:
        k_r, decay_r, translation, decay_p = self._hazards(x, t)
        zeros = np.zeros_like(k_r)
        return np.stack(
            [
                np.stack([k_r + decay_r, zeros], axis=-1),
                np.stack([zeros, translation + decay_p], axis=-1),
            ],
            axis=-2,
        )

    def jacobian(self, x: np.ndarray, t: float) -> np.ndarray:
        shape = np.shape(x)[:-1]
        gamma_r, gamma_p, k_p = self.theta[:3]
        return np.broadcast_to(np.array([[-gamma_r, 0.0], [k_p, -gamma_p]]), (*shape, 2, 2)).copy()
