#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Forward simulation of observation clouds and selection of the study observations."""

import logging
from dataclasses import dataclass, field

import numpy as np

from constants import (
    CENTRE_LABEL,
    DEFAULT_BLOCK_SIZE,
    PSD_TOLERANCE,
    RESAMPLE_BUDGET_FACTOR,
    SCHEME_CENTRE,
    SCHEME_PCA,
    SCHEME_QUANTILES,
)
from core.domain import TimeGrid
from core.errors import ResampleBudgetError
from core.statuses import CellStatuses, StatusObject
from diffusions.base import DiffusionModel
from diffusions.euler import em_forward_step
from utils.linalg import cholesky_factor
from utils.logging import WithLogging
from utils.random import block_normals

logger = logging.getLogger(__name__)


@dataclass
class EndpointCloud:
    """Noisy observations of forward-simulated terminal states."""

    values: np.ndarray
    states: np.ndarray
    attempts: int
    resampled: int


@dataclass
class Observation:
    """A labelled observation vector."""

    label: str
    value: np.ndarray


@dataclass
class ObservationSelection:
    """Observations picked from a cloud, with the statuses raised while picking them."""

    observations: list[Observation]
    statuses: list[StatusObject] = field(default_factory=list)


class EndpointManager(WithLogging):
    """Simulates endpoint clouds by forward Euler-Maruyama paths."""

    def __init__(self, model: DiffusionModel, block_size: int = DEFAULT_BLOCK_SIZE):
        self.model = model
        self.block_size = block_size

    def _forward(
        self,
        grid: TimeGrid,
        seed: int,
        start: int,
        stop: int,
        P: np.ndarray,
        noise_factor: np.ndarray | None,
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        model = self.model
        r, p = model.noise_dim, P.shape[0]
        draws = block_normals(seed, start, stop, (grid.K * r + p,))
        path_noise = draws[:, : grid.K * r].reshape(stop - start, grid.K, r)

        x = np.broadcast_to(model.x0, (stop - start, model.dim)).copy()
        valid = np.ones(stop - start, dtype=bool)
        for k in range(grid.K):
            current = np.where(valid[:, None], x, model.x0)
            stepped = em_forward_step(model, current, grid.time(k), grid.dt, path_noise[:, k])
            x = np.where(valid[:, None], stepped, x)
            valid &= model.is_valid(x)

        observed = x @ P.T
        if noise_factor is not None:
            observed = observed + draws[:, grid.K * r :] @ noise_factor.T
        return observed, x, valid

    def simulate(
        self,
        grid: TimeGrid,
        n_samples: int,
        seed: int,
        P: np.ndarray | None = None,
        Sigma: np.ndarray | None = None,
    ) -> EndpointCloud:
        """Draw ``n_samples`` observations P x_K + e of forward paths.

        Paths leaving the model domain are replaced by fresh ones, up to
        RESAMPLE_BUDGET_FACTOR * n_samples paths in total.

        Raises:
            ResampleBudgetError: when the budget runs out.
        """
        if n_samples < 2:
            raise ValueError(f"An endpoint cloud needs at least 2 samples, got {n_samples}")
        d = self.model.dim
        P = np.eye(d) if P is None else np.atleast_2d(P)
        Sigma = np.zeros((P.shape[0], P.shape[0])) if Sigma is None else np.atleast_2d(Sigma)
        noise_factor = (
            cholesky_factor(Sigma, name="observation", allow_singular=True)
            if np.any(Sigma)
            else None
        )

        budget = RESAMPLE_BUDGET_FACTOR * n_samples
        values, states = [], []
        accepted, attempts = 0, 0
        while accepted < n_samples:
            if attempts >= budget:
                raise ResampleBudgetError(
                    f"Only {accepted} of {n_samples} forward paths stayed in the domain",
                    attempts=attempts,
                    budget=budget,
                )
            stop = attempts + min(self.block_size, budget - attempts)
            observed, terminal, valid = self._forward(grid, seed, attempts, stop, P, noise_factor)
            values.append(observed[valid])
            states.append(terminal[valid])
            accepted += int(valid.sum())
            attempts = stop

        cloud = EndpointCloud(
            values=np.concatenate(values)[:n_samples],
            states=np.concatenate(states)[:n_samples],
            attempts=attempts,
            resampled=attempts - accepted,
        )
        self.logger.info(
            f"Simulated {n_samples} endpoints of {self.model.name} at T={grid.T} "
            f"({cloud.resampled} paths resampled)"
        )
        return cloud


def simulate_endpoints(
    model: DiffusionModel,
    grid: TimeGrid,
    n_samples: int,
    seed: int,
    P: np.ndarray | None = None,
    Sigma: np.ndarray | None = None,
) -> EndpointCloud:
    """Observation cloud of ``n_samples`` forward paths; see EndpointManager.simulate."""
    return EndpointManager(model).simulate(grid, n_samples, seed, P=P, Sigma=Sigma)


def _centre(cloud: np.ndarray) -> np.ndarray:
    """Median of a scalar cloud, mean otherwise."""
    if cloud.shape[1] == 1:
        return np.quantile(cloud, 0.5, axis=0)
    return cloud.mean(axis=0)


def _principal_points(cloud: np.ndarray) -> ObservationSelection:
    mean = cloud.mean(axis=0)
    selection = ObservationSelection(observations=[Observation(CENTRE_LABEL, mean)])
    cov = np.atleast_2d(np.cov(cloud, rowvar=False))
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    floor = PSD_TOLERANCE * max(float(eigvals.max()), 0.0)
    for axis, index in enumerate(order, start=1):
        if eigvals[index] <= floor:
            status = CellStatuses.degenerate_axis_skipped(axis)
            logger.warning(status.message)
            selection.statuses.append(status)
            continue
        direction = eigvecs[:, index]
        # orient each axis so that its largest component is positive
        direction = direction * np.sign(direction[np.argmax(np.abs(direction))])
        projections = (cloud - mean) @ direction
        upper, lower = np.quantile(projections, [0.9, 0.1])
        selection.observations.append(Observation(f"pc{axis}+", mean + upper * direction))
        selection.observations.append(Observation(f"pc{axis}-", mean + lower * direction))
    return selection


def select_observations(cloud: np.ndarray, scheme: str) -> ObservationSelection:
    """Pick the observations of a study from an endpoint cloud of shape (M, p).

    ``pca-90`` gives the mean and, per principal axis, the points at the 90% and
    10% quantiles of the projections; ``quantiles-5-50-95`` the coordinatewise
    quantiles; ``centre`` the centre only. Quantiles interpolate linearly
    between order statistics.
    """
    cloud = np.asarray(cloud, dtype=float)
    if cloud.ndim == 1:
        cloud = cloud[:, None]
    if cloud.shape[0] < 2:
        raise ValueError(f"Observation selection needs at least 2 samples, got {cloud.shape[0]}")

    if scheme == SCHEME_PCA:
        return _principal_points(cloud)
    if scheme == SCHEME_QUANTILES:
        low, median, high = np.quantile(cloud, [0.05, 0.5, 0.95], axis=0)
        return ObservationSelection(
            observations=[
                Observation("q05", low),
                Observation(CENTRE_LABEL, median),
                Observation("q95", high),
            ]
        )
    if scheme == SCHEME_CENTRE:
        return ObservationSelection(observations=[Observation(CENTRE_LABEL, _centre(cloud))])
    raise ValueError(f"Unknown observation scheme {scheme!r}")
