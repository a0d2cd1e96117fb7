#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Bridge proposals: a per-kind step conditional bound to one model, grid and observation."""

from abc import ABC, abstractmethod

import numpy as np

from bridges.conditionals import (
    fs_step_conditional,
    mdb_conditional,
    rb_conditional,
    rbbar_conditional,
    sigma_suffix_stats,
)
from constants import (
    FS,
    MDB,
    ODE_ATOL,
    ODE_RTOL,
    PROPOSAL_KINDS,
    PROPOSAL_PATH_KIND,
    RBBAR_KINDS,
)
from core.domain import (
    DeterministicPath,
    ObservationModel,
    SigmaSuffixStats,
    StepConditional,
    TimeGrid,
)
from diffusions.base import DiffusionModel
from paths.deterministic import build_xi
from utils.logging import WithLogging


class BridgeProposal(ABC, WithLogging):
    """Proposal q(x_{k+1} | x_k) for the paths of a conditioned diffusion."""

    kind: str = ""

    def __init__(self, model: DiffusionModel, grid: TimeGrid, obs: ObservationModel):
        self.model = model
        self.grid = grid
        self.obs = obs

    def __repr__(self) -> str:
        return f"{type(self).__name__}(model={self.model!r}, T={self.grid.T}, dt={self.grid.dt})"

    @abstractmethod
    def conditional(self, x: np.ndarray, k: int, strict: bool = True) -> StepConditional:
        """Gaussian law of x_{k+1} given x_k, for states of shape (..., d)."""
        ...


class ForwardSimulation(BridgeProposal):
    """Euler-Maruyama steps that ignore the observation."""

    kind = FS

    def conditional(self, x: np.ndarray, k: int, strict: bool = True) -> StepConditional:
        return fs_step_conditional(self.model, x, k, self.grid)


class ModifiedDiffusionBridge(BridgeProposal):
    """Conditions the step frozen at x_k on the observation."""

    kind = MDB

    def conditional(self, x: np.ndarray, k: int, strict: bool = True) -> StepConditional:
        return mdb_conditional(self.model, x, k, self.grid, self.obs, strict=strict)


class ResidualBridge(BridgeProposal):
    """Modified diffusion bridge on the residual x - xi around a deterministic skeleton."""

    def __init__(
        self,
        model: DiffusionModel,
        grid: TimeGrid,
        obs: ObservationModel,
        path: DeterministicPath,
        kind: str,
    ):
        super().__init__(model, grid, obs)
        if path.grid != grid:
            raise ValueError("The skeleton was built on a different grid")
        self.path = path
        self.kind = kind

    def conditional(self, x: np.ndarray, k: int, strict: bool = True) -> StepConditional:
        return rb_conditional(
            self.model, x, k, self.grid, self.obs, self.path, strict=strict, kind=self.kind
        )


class TrackingResidualBridge(ResidualBridge):
    """Residual bridge whose terminal covariance follows sigma along the skeleton."""

    def __init__(
        self,
        model: DiffusionModel,
        grid: TimeGrid,
        obs: ObservationModel,
        path: DeterministicPath,
        kind: str,
        stats: SigmaSuffixStats | None = None,
    ):
        super().__init__(model, grid, obs, path, kind)
        self.stats = stats if stats is not None else sigma_suffix_stats(path, model, grid)

    def conditional(self, x: np.ndarray, k: int, strict: bool = True) -> StepConditional:
        return rbbar_conditional(
            self.model,
            x,
            k,
            self.grid,
            self.obs,
            self.path,
            self.stats,
            strict=strict,
            kind=self.kind,
        )


def build_proposal(
    kind: str,
    model: DiffusionModel,
    grid: TimeGrid,
    obs: ObservationModel,
    path: DeterministicPath | None = None,
    stats: SigmaSuffixStats | None = None,
    rtol: float = ODE_RTOL,
    atol: float = ODE_ATOL,
) -> BridgeProposal:
    """Return the proposal of ``kind``, building its skeleton and suffix sums when not given.

    ``rtol`` and ``atol`` are the integrator tolerances of a skeleton built here.
    """
    if kind not in PROPOSAL_KINDS:
        raise ValueError(f"Unknown proposal {kind!r}, expected one of {PROPOSAL_KINDS}")
    if kind == FS:
        return ForwardSimulation(model, grid, obs)
    if kind == MDB:
        return ModifiedDiffusionBridge(model, grid, obs)

    path_kind = PROPOSAL_PATH_KIND[kind]
    if path is None:
        path = build_xi(path_kind, model, grid, obs, rtol=rtol, atol=atol)
    elif path.kind != path_kind:
        raise ValueError(f"Proposal {kind} needs a {path_kind} skeleton, got {path.kind}")
    if kind in RBBAR_KINDS:
        return TrackingResidualBridge(model, grid, obs, path, kind, stats=stats)
    return ResidualBridge(model, grid, obs, path, kind)
