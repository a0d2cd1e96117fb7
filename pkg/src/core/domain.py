#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Domain records shared by the simulation modules.

Arrays stored on these records are treated as read-only once constructed.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from pydantic import BaseModel, Field

from constants import GRID_TOLERANCE, PSD_TOLERANCE
from core.errors import StudyConfigError
from utils.linalg import gaussian_log_density, symmetrize
from utils.random import substream


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class TimeGrid:
    """Equispaced partition t_k = k * dt of [0, T] with K steps."""

    T: float
    dt: float
    K: int

    def __post_init__(self):
        if self.K < 1:
            raise StudyConfigError(f"A grid needs at least one step, got K={self.K}")
        if self.dt <= 0 or self.T <= 0:
            raise StudyConfigError(f"Invalid grid T={self.T}, dt={self.dt}")
        if abs(self.K * self.dt - self.T) > GRID_TOLERANCE * self.T:
            raise StudyConfigError(f"K * dt = {self.K * self.dt} does not match T = {self.T}")

    @classmethod
    def from_horizon(cls, T: float, dt: float) -> "TimeGrid":
        """Build the grid for horizon T and step dt, requiring T / dt to be an integer."""
        if dt <= 0 or T <= 0:
            raise StudyConfigError(f"Invalid grid T={T}, dt={dt}", invalid=["T", "dt"])
        K = int(round(T / dt))
        if K < 1 or abs(K * dt - T) > GRID_TOLERANCE * T:
            raise StudyConfigError(
                f"dt={dt} does not divide T={T} (K would be {T / dt})", invalid=["T", "dt"]
            )
        return cls(T=T, dt=dt, K=K)

    def time(self, k: int) -> float:
        """Return t_k, with t_K equal to T exactly."""
        return self.T if k == self.K else k * self.dt

    def remaining(self, k: int) -> float:
        """Return T - t_k as (K - k) * dt."""
        return (self.K - k) * self.dt

    @cached_property
    def times(self) -> np.ndarray:
        """All grid points t_0..t_K."""
        return _frozen([self.time(k) for k in range(self.K + 1)])


@dataclass(frozen=True)
class ObservationModel:
    """Linear-Gaussian observation y = P x_T + e, e ~ N(0, Sigma)."""

    P: np.ndarray
    Sigma: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        P = np.atleast_2d(np.asarray(self.P, dtype=float))
        Sigma = np.atleast_2d(np.asarray(self.Sigma, dtype=float))
        y = np.atleast_1d(np.asarray(self.y, dtype=float))
        p = P.shape[0]
        if Sigma.shape != (p, p) or y.shape != (p,):
            raise ValueError(
                f"Shapes do not match: P {P.shape}, Sigma {Sigma.shape}, y {y.shape}"
            )
        if not np.allclose(Sigma, Sigma.T, rtol=0.0, atol=PSD_TOLERANCE * (1 + abs(Sigma).max())):
            raise ValueError("Observation covariance must be symmetric")
        eigvals = np.linalg.eigvalsh(symmetrize(Sigma))
        if eigvals.min() < -PSD_TOLERANCE * max(abs(eigvals).max(), 1.0):
            raise ValueError("Observation covariance must be positive semi-definite")
        object.__setattr__(self, "P", _frozen(P))
        object.__setattr__(self, "Sigma", _frozen(symmetrize(Sigma)))
        object.__setattr__(self, "y", _frozen(y))

    @classmethod
    def full(cls, y: np.ndarray, sigma_obs: float) -> "ObservationModel":
        """Observe every coordinate with isotropic noise sigma_obs * I."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        d = y.shape[0]
        return cls(P=np.eye(d), Sigma=sigma_obs * np.eye(d), y=y)

    @property
    def dim(self) -> int:
        """Observation dimension."""
        return self.P.shape[0]

    @property
    def is_exact(self) -> bool:
        """Whether the observation noise vanishes."""
        return not np.any(self.Sigma)

    def with_observation(self, y: np.ndarray) -> "ObservationModel":
        """Return the same observation model around a different observed value."""
        return ObservationModel(P=self.P, Sigma=self.Sigma, y=y)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Return P x for states of shape (..., d)."""
        return np.asarray(x) @ self.P.T

    def log_density(self, x: np.ndarray) -> np.ndarray:
        """Log of g(y | x) for terminal states of shape (..., d)."""
        return gaussian_log_density(self.y, self.project(x), self.Sigma, name="observation")


@dataclass(frozen=True)
class RandomSource:
    """A reproducible standard-normal stream identified by (seed, stream index)."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return substream(self.seed, self.stream)

    def normals(self, shape: int | tuple[int, ...]) -> np.ndarray:
        """Draw standard normals from the start of the stream."""
        return self.generator().standard_normal(shape)


@dataclass(frozen=True)
class SkeletonPath:
    """States x_0..x_K of one path on a grid."""

    states: np.ndarray
    grid: TimeGrid

    def __post_init__(self):
        states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if states.shape[0] != self.grid.K + 1:
            raise ValueError(f"Expected {self.grid.K + 1} states, got {states.shape[0]}")
        object.__setattr__(self, "states", _frozen(states))

    @property
    def initial(self) -> np.ndarray:
        """x_0."""
        return self.states[0]

    @property
    def terminal(self) -> np.ndarray:
        """x_K."""
        return self.states[-1]


@dataclass(frozen=True)
class OdeSolution:
    """An ODE solution sampled at every grid point."""

    values: np.ndarray
    grid: TimeGrid
    n_evaluations: int = 0
    message: str = ""

    def __post_init__(self):
        if self.values.shape[0] != self.grid.K + 1:
            raise ValueError(
                f"Solution has {self.values.shape[0]} points, grid has {self.grid.K + 1}"
            )
        object.__setattr__(self, "values", _frozen(self.values))

    def __getitem__(self, k: int) -> np.ndarray:
        return self.values[k]

    @property
    def initial(self) -> np.ndarray:
        """Value at t_0."""
        return self.values[0]

    @property
    def terminal(self) -> np.ndarray:
        """Value at t_K."""
        return self.values[-1]


@dataclass(frozen=True)
class DeterministicPath:
    """The skeleton xi a residual bridge is built around.

    ``sigma`` caches sigma(xi_k, t_k) at every grid point and ``rates`` the
    factorized Lambda(xi_k, t_k) diagonals when the model has a (S, Lambda) form.
    """

    kind: str
    xi: np.ndarray
    grid: TimeGrid
    sigma: np.ndarray
    rates: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "xi", _frozen(self.xi))
        object.__setattr__(self, "sigma", _frozen(self.sigma))
        if self.rates is not None:
            object.__setattr__(self, "rates", _frozen(self.rates))

    def chord(self, k: int) -> np.ndarray:
        """Return xi_{k+1} - xi_k."""
        return self.xi[k + 1] - self.xi[k]


@dataclass(frozen=True)
class StepConditional:
    """Gaussian proposal N(mean, cov) for x_{k+1} given x_k.

    ``ok`` marks the batch entries whose innovation solve succeeded; failed
    entries hold NaN.
    """

    kind: str
    mean: np.ndarray
    cov: np.ndarray
    ok: np.ndarray = field(default_factory=lambda: np.array(True))


@dataclass(frozen=True)
class SigmaSuffixStats:
    """Suffix sums over j = k+1..K-1 of sigma(xi_j, t_j) quantities, for k = 0..K-1.

    ``sum_sigma`` has shape (K, d, r) and ``sum_outer`` (K, d, d); the factorized
    variant stores ``sum_rates`` and ``sum_rates_sq`` of shape (K, r) instead of
    the dense sums.
    """

    count: np.ndarray
    sum_sigma: np.ndarray | None = None
    sum_outer: np.ndarray | None = None
    sum_rates: np.ndarray | None = None
    sum_rates_sq: np.ndarray | None = None

    @property
    def factorized(self) -> bool:
        """Whether the statistics use the (S, Lambda) form."""
        return self.sum_rates is not None


class ResultRow(BaseModel):
    """One row of a study table."""

    model: str
    proposal: str
    T: float
    dt: float
    observation: str
    observation_value: str
    n_paths: int
    rel_ess: float = Field(ge=0.0, le=1.0)
    ess: float = Field(ge=0.0)
    ess_per_s: float = Field(ge=0.0)
    wall_time: float
    setup_time: float
    sampling_time: float
    domain_rejections: int
    numeric_rejections: int
    seed: int
    status: str
    message: str = ""
