#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Importance sampling of bridge paths against the Euler-Maruyama target."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.special import logsumexp

from bridges.proposals import BridgeProposal
from constants import DEFAULT_BLOCK_SIZE
from core.domain import ObservationModel, RandomSource, SkeletonPath
from core.errors import NumericFailureError
from diffusions.base import DiffusionModel
from diffusions.euler import em_log_density
from utils.linalg import cholesky_stack, log_density_from_factor, log_density_from_noise
from utils.logging import WithLogging
from utils.random import block_normals

logger = logging.getLogger(__name__)


def normalize_log_weights(log_weights: np.ndarray) -> np.ndarray:
    """Normalized weights exp(l_j - logsumexp(l)); entries at -inf get weight exactly 0."""
    log_weights = np.asarray(log_weights, dtype=float)
    finite = np.isfinite(log_weights)
    weights = np.zeros_like(log_weights)
    if not np.any(finite):
        logger.warning(f"All {log_weights.size} log-weights are -inf")
        return weights
    weights[finite] = np.exp(log_weights[finite] - logsumexp(log_weights[finite]))
    return weights


def relative_ess(weights: np.ndarray) -> float:
    """N^-1 (sum w~^2)^-1 for normalized weights; 0 when every weight vanishes."""
    weights = np.asarray(weights, dtype=float)
    total = float(np.sum(weights**2))
    if total == 0.0:
        logger.warning("Relative ESS of an ensemble without surviving paths is 0")
        return 0.0
    return min(1.0, 1.0 / (weights.size * total))


def ess_per_second(weights: np.ndarray, wall_time: float) -> float:
    """(sum w~^2)^-1 / wall time."""
    if wall_time <= 0:
        raise ValueError(f"Wall time must be positive, got {wall_time}")
    total = float(np.sum(np.asarray(weights, dtype=float) ** 2))
    if total == 0.0:
        return 0.0
    return 1.0 / total / wall_time


@dataclass
class WeightedEnsemble:
    """N weighted bridge paths and their diagnostics."""

    kind: str
    log_weights: np.ndarray
    endpoints: np.ndarray
    seed: int
    domain_rejections: int = 0
    numeric_rejections: int = 0
    wall_time: float = 0.0
    paths: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_paths(self) -> int:
        """Ensemble size N, rejected paths included."""
        return int(self.log_weights.shape[0])

    @property
    def rejections(self) -> int:
        """Total number of rejected paths."""
        return self.domain_rejections + self.numeric_rejections

    @cached_property
    def weights(self) -> np.ndarray:
        """Normalized weights; rejected paths have weight 0."""
        return normalize_log_weights(self.log_weights)

    @property
    def relative_ess(self) -> float:
        """Relative effective sample size."""
        return relative_ess(self.weights)

    @property
    def ess(self) -> float:
        """Effective sample size (sum w~^2)^-1."""
        return self.n_paths * self.relative_ess


@dataclass
class BlockResult:
    """Raw output of a contiguous block of paths."""

    start: int
    log_weights: np.ndarray
    endpoints: np.ndarray
    domain_rejected: np.ndarray
    numeric_rejected: np.ndarray
    paths: np.ndarray | None = None


def log_target(path: SkeletonPath, model: DiffusionModel, obs: ObservationModel) -> float:
    """Euler-Maruyama log-density of the path plus log g(y | x_K); -inf outside the domain."""
    states, grid = path.states, path.grid
    if not np.all(model.is_valid(states)):
        return -np.inf
    try:
        total = sum(
            float(em_log_density(model, states[k + 1], states[k], grid.time(k), grid.dt))
            for k in range(grid.K)
        )
        return total + float(obs.log_density(states[-1]))
    except NumericFailureError as err:
        logger.debug(f"Target density undefined: {err}")
        return -np.inf


def _safe_factor(cov: np.ndarray, name: str) -> tuple[np.ndarray, np.ndarray]:
    factor, ok = cholesky_stack(cov, name=name)
    factor = np.where(ok[..., None, None], factor, np.eye(cov.shape[-1]))
    # zero pivots make the log-density infinite
    ok &= np.all(np.diagonal(factor, axis1=-2, axis2=-1) > 0.0, axis=-1)
    return np.where(ok[..., None, None], factor, np.eye(cov.shape[-1])), ok


def simulate_block(
    proposal: BridgeProposal, seed: int, start: int, stop: int, keep_paths: bool = False
) -> BlockResult:
    """Simulate paths start..stop-1, each driven by its own substream of ``seed``.

    A path whose proposal or target step fails numerically, or which leaves the
    model domain, keeps its last state from then on and gets log-weight -inf.
    """
    model, grid, obs = proposal.model, proposal.grid, proposal.obs
    n, d, dt = stop - start, model.dim, grid.dt
    noise = block_normals(seed, start, stop, (grid.K, d))

    x = np.broadcast_to(model.x0, (n, d)).copy()
    log_w = np.zeros(n)
    domain_bad = np.zeros(n, dtype=bool)
    numeric_bad = np.zeros(n, dtype=bool)
    paths = np.empty((n, grid.K + 1, d)) if keep_paths else None
    if paths is not None:
        paths[:, 0] = x

    for k in range(grid.K):
        t = grid.time(k)
        alive = ~(domain_bad | numeric_bad)
        current = np.where(alive[:, None], x, model.x0)

        step = proposal.conditional(current, k, strict=False)
        factor, ok = _safe_factor(
            np.where(step.ok[:, None, None], step.cov, np.eye(d)), f"{proposal.kind} step"
        )
        ok &= step.ok
        z = noise[:, k]
        proposed = np.where(ok[:, None], step.mean, current) + (factor @ z[..., None])[..., 0]
        log_q = log_density_from_noise(z, factor)

        target_factor, target_ok = _safe_factor(dt * model.volatility(current, t), "euler step")
        log_p = log_density_from_factor(
            proposed - current - dt * model.drift(current, t), target_factor
        )

        failed = alive & ~(ok & target_ok & np.isfinite(log_q) & np.isfinite(log_p))
        numeric_bad |= failed
        moving = alive & ~failed
        domain_bad |= moving & ~model.is_valid(proposed)
        log_w = np.where(moving, log_w + (log_p - log_q), log_w)
        x = np.where(moving[:, None], proposed, x)
        if paths is not None:
            paths[:, k + 1] = x

    alive = ~(domain_bad | numeric_bad)
    log_g = obs.log_density(np.where(alive[:, None], x, model.x0))
    log_w = np.where(alive, log_w + log_g, -np.inf)
    return BlockResult(
        start=start,
        log_weights=log_w,
        endpoints=x,
        domain_rejected=domain_bad,
        numeric_rejected=numeric_bad,
        paths=paths,
    )


def simulate_bridge(proposal: BridgeProposal, source: RandomSource) -> tuple[SkeletonPath, float]:
    """Simulate one path from ``source`` and return it with its log-weight."""
    block = simulate_block(proposal, source.seed, source.stream, source.stream + 1, True)
    assert block.paths is not None
    return SkeletonPath(states=block.paths[0], grid=proposal.grid), float(block.log_weights[0])


class EnsembleRunner(WithLogging):
    """Runs ensembles in fixed-size blocks, optionally over a pool of worker processes.

    Blocks have the same boundaries whatever the number of workers and are merged
    in block order, so the ensemble only depends on the seed.
    """

    def __init__(self, workers: int = 1, block_size: int = DEFAULT_BLOCK_SIZE):
        if workers < 1 or block_size < 1:
            raise ValueError("workers and block_size must be positive")
        self.workers = workers
        self.block_size = block_size

    def _blocks(self, n_paths: int) -> list[tuple[int, int]]:
        return [
            (start, min(start + self.block_size, n_paths))
            for start in range(0, n_paths, self.block_size)
        ]

    def run(
        self, proposal: BridgeProposal, n_paths: int, seed: int, keep_paths: bool = False
    ) -> WeightedEnsemble:
        """Simulate ``n_paths`` paths; the wall time covers sampling only."""
        if n_paths < 1:
            raise ValueError(f"An ensemble needs at least one path, got {n_paths}")
        blocks = self._blocks(n_paths)
        started = time.perf_counter()
        if self.workers == 1 or len(blocks) == 1:
            results = [
                simulate_block(proposal, seed, start, stop, keep_paths) for start, stop in blocks
            ]
        else:
            with ProcessPoolExecutor(max_workers=self.workers) as pool:
                futures = [
                    pool.submit(simulate_block, proposal, seed, start, stop, keep_paths)
                    for start, stop in blocks
                ]
                results = [future.result() for future in futures]
        wall_time = time.perf_counter() - started

        for block in results:
            self.logger.debug(f"Block at {block.start}: {int(np.sum(~np.isfinite(block.log_weights)))} rejected")

        ensemble = WeightedEnsemble(
            kind=proposal.kind,
            log_weights=np.concatenate([block.log_weights for block in results]),
            endpoints=np.concatenate([block.endpoints for block in results]),
            seed=seed,
            domain_rejections=int(sum(block.domain_rejected.sum() for block in results)),
            numeric_rejections=int(sum(block.numeric_rejected.sum() for block in results)),
            wall_time=wall_time,
            paths=(
                np.concatenate([block.paths for block in results if block.paths is not None])
                if keep_paths
                else None
            ),
        )
        if ensemble.rejections == n_paths:
            self.logger.warning(f"All {n_paths} {proposal.kind} paths were rejected")
        return ensemble


def run_ensemble(
    proposal: BridgeProposal,
    n_paths: int,
    seed: int,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
    keep_paths: bool = False,
) -> WeightedEnsemble:
    """Simulate a weighted ensemble of ``n_paths`` bridge paths."""
    return EnsembleRunner(workers=workers, block_size=block_size).run(
        proposal, n_paths, seed, keep_paths=keep_paths
    )
