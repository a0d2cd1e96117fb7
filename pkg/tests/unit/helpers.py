#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Oracles shared by the unit tests."""

import numpy as np

from constants import PATH_ODE
from core.domain import DeterministicPath, ObservationModel, TimeGrid
from diffusions.base import DiffusionModel


def random_spd(rng: np.random.Generator, d: int, floor: float = 0.1) -> np.ndarray:
    """Random symmetric positive-definite matrix with eigenvalues above ``floor``."""
    a = rng.normal(size=(d, d))
    return a @ a.T + floor * np.eye(d)


def joint_gaussian_conditional(
    x: np.ndarray,
    mu: np.ndarray,
    zeta: np.ndarray,
    dt: float,
    terminal_mean: np.ndarray,
    terminal_cov: np.ndarray,
    obs: ObservationModel,
) -> tuple[np.ndarray, np.ndarray]:
    """Condition the dense joint law of (X_{k+1}, Y) on Y = y with explicit inverses."""
    d = x.shape[-1]
    P = obs.P
    joint_mean = np.concatenate([x + dt * mu, P @ terminal_mean])
    top = np.hstack([dt * zeta, dt * zeta @ P.T])
    bottom = np.hstack([P @ (dt * zeta), P @ terminal_cov @ P.T + obs.Sigma])
    joint_cov = np.vstack([top, bottom])
    c11, c12 = joint_cov[:d, :d], joint_cov[:d, d:]
    c21, c22 = joint_cov[d:, :d], joint_cov[d:, d:]
    inverse = np.linalg.inv(c22)
    mean = joint_mean[:d] + c12 @ inverse @ (obs.y - joint_mean[d:])
    cov = c11 - c12 @ inverse @ c21
    return mean, cov


class RandomLinearDiffusion(DiffusionModel):
    """Linear drift A x + b with sigma(x) = L diag(exp(c x)); every finite state is valid."""

    name = "random-linear"

    def __init__(self, rng: np.random.Generator, dim: int):
        self.dim = dim
        self.noise_dim = dim
        self.A = rng.normal(scale=0.5, size=(dim, dim))
        self.b = rng.normal(size=dim)
        self.L = np.tril(rng.normal(scale=0.5, size=(dim, dim)), k=-1) + np.diag(
            rng.uniform(0.3, 1.5, size=dim)
        )
        self.c = rng.uniform(-0.2, 0.2, size=dim)
        super().__init__(theta=(), x0=np.zeros(dim))

    def drift(self, x: np.ndarray, t: float) -> np.ndarray:
        return np.asarray(x) @ self.A.T + self.b

    def diffusion(self, x: np.ndarray, t: float) -> np.ndarray:
        return self.L * np.exp(self.c * np.asarray(x))[..., None, :]

    def is_valid(self, x: np.ndarray) -> np.ndarray:
        return np.all(np.isfinite(np.asarray(x)), axis=-1)


def random_path(
    rng: np.random.Generator, model: DiffusionModel, grid: TimeGrid
) -> DeterministicPath:
    """A random-walk skeleton with sigma cached from ``model`` at every grid point."""
    steps = rng.normal(scale=0.3, size=(grid.K + 1, model.dim))
    xi = np.cumsum(steps, axis=0)
    sigma = np.stack([model.diffusion(xi[j], grid.time(j)) for j in range(grid.K + 1)])
    return DeterministicPath(kind=PATH_ODE, xi=xi, grid=grid, sigma=sigma)


def random_observation(rng: np.random.Generator, d: int) -> ObservationModel:
    """Observation of 1..d random linear combinations with random SPD noise."""
    p = int(rng.integers(1, d + 1))
    return ObservationModel(
        P=rng.normal(size=(p, d)), Sigma=random_spd(rng, p), y=rng.normal(scale=3.0, size=p)
    )
