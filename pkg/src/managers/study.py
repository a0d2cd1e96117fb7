#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Manager for simulation studies over observation times, observations, step sizes and proposals."""

import time
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from bridges.proposals import BridgeProposal, build_proposal
from constants import (
    CENTRE_LABEL,
    COMPARISON_MIN_ESS,
    COMPARISON_PAIRS,
    RBBAR_KINDS,
    TIMING_COLUMNS,
)
from core.config import StudyConfig
from core.domain import ObservationModel, ResultRow, TimeGrid
from core.errors import BridgeError, StudyConfigError
from core.statuses import CellStatuses, StatusObject
from managers.endpoints import EndpointManager, Observation, select_observations
from managers.ensemble import EnsembleRunner, WeightedEnsemble, ess_per_second
from managers.output import OutputManager, format_vector
from utils.logging import WithLogging
from utils.random import derive_seed


@dataclass
class StudyResult:
    """Rows of a study and the observations they were computed for."""

    rows: list[ResultRow] = field(default_factory=list)
    comparisons: list[dict[str, Any]] = field(default_factory=list)
    observations: dict[float, list[Observation]] = field(default_factory=dict)
    clouds: dict[float, np.ndarray] = field(default_factory=dict)
    statuses: list[StatusObject] = field(default_factory=list)


def compare_proposals(rows: list[ResultRow]) -> list[dict[str, Any]]:
    """ESS/s ratios of the proposal pairs, for cells where both reach the minimum ESS."""
    cells: dict[tuple[float, float, str], dict[str, ResultRow]] = {}
    for row in rows:
        cells.setdefault((row.T, row.dt, row.observation), {})[row.proposal] = row
    comparisons = []
    for (T, dt, label), by_kind in cells.items():
        for numerator, denominator in COMPARISON_PAIRS:
            top, bottom = by_kind.get(numerator), by_kind.get(denominator)
            if top is None or bottom is None:
                continue
            if min(top.ess, bottom.ess) < COMPARISON_MIN_ESS or bottom.ess_per_s == 0:
                continue
            comparisons.append(
                {
                    "model": top.model,
                    "T": T,
                    "dt": dt,
                    "observation": label,
                    "numerator": numerator,
                    "denominator": denominator,
                    "ess_per_s_ratio": top.ess_per_s / bottom.ess_per_s,
                    "rel_ess_ratio": top.rel_ess / bottom.rel_ess,
                }
            )
    return comparisons


def strip_timing(row: ResultRow) -> dict[str, Any]:
    """The fields of a row that do not depend on the machine clock."""
    return row.model_dump(exclude=set(TIMING_COLUMNS))


class StudyManager(WithLogging):
    """Runs the (T, observation, dt, proposal) grid of a study."""

    def __init__(self, config: StudyConfig, output: OutputManager | None = None):
        self.config = config
        self.model = config.build_model()
        self.output = output
        self.runner = EnsembleRunner(workers=config.workers, block_size=config.block_size)
        self.clouds: dict[float, np.ndarray] = {}

    @property
    def horizons(self) -> list[float]:
        """Observation times of the study."""
        return list(self.config.horizons or [])

    @property
    def steps(self) -> list[float]:
        """Step sizes of the study."""
        return list(self.config.steps or [])

    def observation_model(self, y: np.ndarray) -> ObservationModel:
        """Full observation of the state with noise sigma_obs * I."""
        return ObservationModel.full(y, self.config.sigma_obs)

    def endpoint_cloud(self, t_index: int, T: float) -> np.ndarray:
        """Observation cloud at T, simulated with the first step size of the study."""
        grid = TimeGrid.from_horizon(T, self.steps[0])
        d = self.model.dim
        cloud = EndpointManager(self.model, block_size=self.config.block_size).simulate(
            grid,
            self.config.n_endpoints,
            derive_seed(self.config.seed, t_index),
            P=np.eye(d),
            Sigma=self.config.sigma_obs * np.eye(d),
        )
        return cloud.values

    def select(self, t_index: int, T: float) -> tuple[list[Observation], list[StatusObject]]:
        """Observations of time T: explicit ones from the config, or picked from a cloud."""
        if self.config.observations is not None:
            observations = [
                Observation(f"obs{i + 1}", np.asarray(y, dtype=float))
                for i, y in enumerate(self.config.observations)
            ]
            return observations, []
        assert self.config.scheme is not None
        self.clouds[T] = self.endpoint_cloud(t_index, T)
        selection = select_observations(self.clouds[T], self.config.scheme)
        return selection.observations, selection.statuses

    def proposal(self, kind: str, grid: TimeGrid, observation: Observation) -> BridgeProposal:
        """Build the proposal of one cell with the configured solver tolerances."""
        return build_proposal(
            kind,
            self.model,
            grid,
            self.observation_model(observation.value),
            rtol=self.config.solver.rtol,
            atol=self.config.solver.atol,
        )

    def run_cell(
        self, kind: str, grid: TimeGrid, observation: Observation, seed: int
    ) -> tuple[ResultRow, WeightedEnsemble | None]:
        """Run one cell: build the proposal, then sample its ensemble ``reps`` times."""
        base = {
            "model": self.model.name,
            "proposal": kind,
            "T": grid.T,
            "dt": grid.dt,
            "observation": observation.label,
            "observation_value": format_vector(observation.value),
            "n_paths": self.config.n_paths,
            "seed": seed,
        }
        try:
            started = time.perf_counter()
            proposal = self.proposal(kind, grid, observation)
            setup_time = time.perf_counter() - started
            ensembles = [
                self.runner.run(proposal, self.config.n_paths, seed)
                for _ in range(self.config.reps)
            ]
        except BridgeError as err:
            self.logger.error(f"Cell {base} failed: {err}")
            status = CellStatuses.cell_failed(err)
            return (
                ResultRow(
                    **base,
                    rel_ess=0.0,
                    ess=0.0,
                    ess_per_s=0.0,
                    wall_time=0.0,
                    setup_time=0.0,
                    sampling_time=0.0,
                    domain_rejections=0,
                    numeric_rejections=0,
                    status=status.status,
                    message=status.message,
                ),
                None,
            )

        ensemble = ensembles[0]
        sampling_time = float(np.mean([run.wall_time for run in ensembles]))
        wall_time = setup_time + sampling_time
        status = (
            CellStatuses.all_paths_rejected(ensemble.n_paths)
            if ensemble.rejections == ensemble.n_paths
            else CellStatuses.OK.value
        )
        row = ResultRow(
            **base,
            rel_ess=ensemble.relative_ess,
            ess=ensemble.ess,
            ess_per_s=ess_per_second(ensemble.weights, wall_time) if wall_time > 0 else 0.0,
            wall_time=wall_time,
            setup_time=setup_time,
            sampling_time=sampling_time,
            domain_rejections=ensemble.domain_rejections,
            numeric_rejections=ensemble.numeric_rejections,
            status=status.status,
            message=status.message,
        )
        self.logger.info(
            f"{kind} T={grid.T} dt={grid.dt} {observation.label}: "
            f"rel. ESS {row.rel_ess:.4f}, ESS/s {row.ess_per_s:.1f}"
        )
        return row, ensemble

    def run(self, proposals: list[str] | None = None) -> StudyResult:
        """Run every cell, streaming rows to the output directory when one is set."""
        if self.config.sigma_obs <= 0:
            raise StudyConfigError(
                "Bridge proposals need a positive observation noise", invalid=["sigma-obs"]
            )
        kinds = proposals or self.config.proposals
        result = StudyResult()
        if self.output is not None:
            self.output.prepare()
            self.output.write_config(self.config.echo())
            self.output.start_results()

        for t_index, T in enumerate(self.horizons):
            observations, statuses = self.select(t_index, T)
            result.observations[T] = observations
            result.statuses.extend(statuses)
            for o_index, observation in enumerate(observations):
                # shared by every step size and proposal of this observation
                seed = derive_seed(self.config.seed, t_index, o_index)
                for dt in self.steps:
                    grid = TimeGrid.from_horizon(T, dt)
                    for kind in kinds:
                        row, _ = self.run_cell(kind, grid, observation, seed)
                        result.rows.append(row)
                        if self.output is not None:
                            self.output.append_result(row)

        result.comparisons = compare_proposals(result.rows)
        result.clouds = dict(self.clouds)
        if self.output is not None:
            self.output.write_comparisons(result.comparisons)
            if result.clouds:
                self.output.write_endpoints(result.clouds)
            self.output.write_metadata({"observation_scheme": self.config.scheme})
            self.output.write_summary(
                config=self.config.echo(),
                rows=result.rows,
                comparisons=result.comparisons,
                statuses=result.statuses,
            )
        return result


def run_study(config: StudyConfig, output: OutputManager | None = None) -> StudyResult:
    """Run the full study grid of ``config``."""
    return StudyManager(config, output).run()


def dt_table(rows: list[ResultRow]) -> list[dict[str, Any]]:
    """Group rows by observation time, with step sizes in decreasing order inside each group."""
    groups = []
    for T in sorted({row.T for row in rows}):
        members = [row for row in rows if row.T == T]
        steps = sorted({row.dt for row in members}, reverse=True)
        lines: dict[tuple[str, str], dict[float, float]] = {}
        for row in members:
            lines.setdefault((row.observation, row.proposal), {})[row.dt] = row.rel_ess
        groups.append(
            {
                "T": T,
                "steps": steps,
                "lines": [
                    {"observation": label, "proposal": kind, "values": [values.get(dt) for dt in steps]}
                    for (label, kind), values in lines.items()
                ],
            }
        )
    return groups


def dt_robustness_study(config: StudyConfig, output: OutputManager | None = None) -> StudyResult:
    """Run the tracking residual bridges across the configured step sizes.

    Raises:
        StudyConfigError: when fewer than two step sizes are configured.
    """
    steps = config.steps or []
    if len(steps) < 2:
        raise StudyConfigError(
            "The step-size study needs at least two values of dt", invalid=["dt"]
        )
    kinds = [kind for kind in config.proposals if kind in RBBAR_KINDS] or list(RBBAR_KINDS)
    config = config.model_copy(update={"steps": sorted(steps, reverse=True)})
    result = StudyManager(config, output).run(kinds)
    if output is not None:
        output.write_dt_table(model=config.diffusion, groups=dt_table(result.rows))
    return result


def emit_paths(config: StudyConfig, output: OutputManager) -> WeightedEnsemble:
    """Write a few weighted paths of the first proposal, T and dt of ``config`` for plotting.

    The observation is the first explicit one, else the centre of the first cloud.
    """
    manager = StudyManager(config, output)
    T, dt, kind = manager.horizons[0], manager.steps[0], config.proposals[0]
    observations, _ = manager.select(0, T)
    observation = next(
        (obs for obs in observations if obs.label == CENTRE_LABEL), observations[0]
    )
    grid = TimeGrid.from_horizon(T, dt)
    proposal = manager.proposal(kind, grid, observation)
    ensemble = manager.runner.run(
        proposal, config.figure_paths, derive_seed(config.seed, 0, 0), keep_paths=True
    )
    assert ensemble.paths is not None
    output.prepare()
    output.write_paths(ensemble.paths, ensemble.weights, grid)
    output.write_config(config.echo())
    manager.logger.info(
        f"Wrote {config.figure_paths} {kind} paths; largest weight {ensemble.weights.max():.3f}"
    )
    return ensemble


def emit_endpoints(config: StudyConfig, output: OutputManager) -> dict[float, list[Observation]]:
    """Write the endpoint cloud of every T and record the observations picked from it."""
    manager = StudyManager(config, output)
    output.prepare()
    selected: dict[float, list[Observation]] = {}
    statuses: list[StatusObject] = []
    for t_index, T in enumerate(manager.horizons):
        selected[T], found = manager.select(t_index, T)
        statuses.extend(found)
    if manager.clouds:
        output.write_endpoints(manager.clouds)
    output.write_config(config.echo())
    output.write_metadata(
        {
            "observation_scheme": config.scheme,
            "observations": {
                repr(T): {obs.label: obs.value.tolist() for obs in observations}
                for T, observations in selected.items()
            },
            "statuses": [status.model_dump() for status in statuses],
        }
    )
    return selected
