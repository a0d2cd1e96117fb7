#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Euler-Maruyama primitives shared by the target density and every proposal."""

import numpy as np

from diffusions.base import DiffusionModel
from utils.linalg import cholesky_factor, gaussian_log_density


def em_mean_cov(
    model: DiffusionModel, x: np.ndarray, t: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Return (x + dt mu(x, t), dt zeta(x, t)).

    Raises:
        DomainViolationError: when x lies outside the model domain.
        ValueError: when dt is not positive.
    """
    if dt <= 0:
        raise ValueError(f"Step size must be positive, got {dt}")
    x = np.asarray(x, dtype=float)
    model.check_state(x)
    return x + dt * model.drift(x, t), dt * model.volatility(x, t)


def em_log_density(
    model: DiffusionModel, x_next: np.ndarray, x: np.ndarray, t: float, dt: float
) -> np.ndarray:
    """Log of the Euler-Maruyama transition density f(x_next | x).

    Raises:
        NumericFailureError: when dt zeta(x, t) is singular beyond the jitter ladder.
    """
    mean, cov = em_mean_cov(model, x, t, dt)
    return gaussian_log_density(x_next, mean, cov, name="euler covariance")


def em_forward_step(
    model: DiffusionModel, x: np.ndarray, t: float, dt: float, noise: np.ndarray
) -> np.ndarray:
    """Return x + dt mu(x, t) + sqrt(dt) sigma(x, t) noise for r-dimensional noise."""
    x = np.asarray(x, dtype=float)
    model.check_state(x)
    sigma = model.diffusion(x, t)
    return x + dt * model.drift(x, t) + np.sqrt(dt) * (sigma @ np.asarray(noise)[..., None])[..., 0]


def gaussian_sample(mean: np.ndarray, cov: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Return mean + L noise with L L* = cov.

    Raises:
        NumericFailureError: when cov is not PSD beyond the jitter ladder.
    """
    cov = np.asarray(cov, dtype=float)
    if not np.any(cov):
        return np.array(mean, dtype=float)
    factor = cholesky_factor(cov, name="sample covariance", allow_singular=True)
    return np.asarray(mean) + factor @ np.asarray(noise)
