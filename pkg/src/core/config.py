#!/usr/bin/env python3

# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Definition of the study config model classes."""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Any

import yaml
from pydantic import (
    AfterValidator,
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    ValidationError,
    model_validator,
)

from constants import (
    DEFAULT_BLOCK_SIZE,
    DEFAULT_FIGURE_PATHS,
    DEFAULT_M,
    DEFAULT_N,
    DEFAULT_REPS,
    DEFAULT_SEED,
    DEFAULT_SIGMA_OBS,
    MODEL_NAMES,
    OBSERVATION_SCHEMES,
    ODE_ATOL,
    ODE_RTOL,
    PAPER_SCALE_N,
    PAPER_SCALE_REPS,
    PROPOSAL_KINDS,
)
from core.domain import TimeGrid
from core.errors import StudyConfigError
from diffusions.base import DiffusionModel
from diffusions.catalog import ModelCatalogEntry, get_entry


def as_list(value: Any) -> Any:
    """Accept a scalar wherever a list is expected."""
    if value is None or isinstance(value, (list, tuple)):
        return value
    return [value]


def validate_model_name(name: str) -> str:
    """Validate the model against the catalog."""
    if name not in MODEL_NAMES:
        raise ValueError(f"Unknown model {name!r}, expected one of {list(MODEL_NAMES)}")
    return name


def validate_proposals(kinds: list[str]) -> list[str]:
    """Validate proposal kinds, dropping duplicates but keeping their order."""
    unknown = [kind for kind in kinds if kind not in PROPOSAL_KINDS]
    if unknown:
        raise ValueError(f"Unknown proposals {unknown}, expected some of {list(PROPOSAL_KINDS)}")
    return list(dict.fromkeys(kinds))


def validate_scheme(scheme: str | None) -> str | None:
    """Validate the observation selection scheme."""
    if scheme is not None and scheme not in OBSERVATION_SCHEMES:
        raise ValueError(f"Unknown scheme {scheme!r}, expected one of {list(OBSERVATION_SCHEMES)}")
    return scheme


def validate_positive(values: list[float] | None) -> list[float] | None:
    """Require strictly positive entries."""
    if values is not None and any(value <= 0 for value in values):
        raise ValueError(f"Values must be positive, got {values}")
    return values


def validate_non_empty(values: list[Any] | None) -> list[Any] | None:
    """Reject explicitly empty lists."""
    if values is not None and len(values) == 0:
        raise ValueError("List must not be empty")
    return values


class BaseConfigModel(BaseModel):
    """Base class of the configuration models."""

    model_config = ConfigDict(populate_by_name=True, extra="forbid")


class SolverSettings(BaseConfigModel):
    """Tolerances of the adaptive ODE integrator."""

    rtol: float = Field(ODE_RTOL, gt=0)
    atol: float = Field(ODE_ATOL, gt=0)


class StudyConfig(BaseConfigModel):
    """Model for a simulation study, mirroring the command line flags.

    Unset model-dependent values fall back to the catalog entry of the model.
    """

    diffusion: Annotated[str, AfterValidator(validate_model_name)] = Field(alias="model")
    theta: list[float] | None = Field(None, alias="theta")
    x0: list[float] | None = Field(None, alias="x0")
    horizons: Annotated[
        list[float] | None,
        BeforeValidator(as_list),
        AfterValidator(validate_non_empty),
        AfterValidator(validate_positive),
    ] = Field(None, alias="T")
    steps: Annotated[
        list[float] | None,
        BeforeValidator(as_list),
        AfterValidator(validate_non_empty),
        AfterValidator(validate_positive),
    ] = Field(None, alias="dt")
    proposals: Annotated[
        list[str],
        BeforeValidator(as_list),
        AfterValidator(validate_non_empty),
        AfterValidator(validate_proposals),
    ] = Field(default_factory=lambda: list(PROPOSAL_KINDS), alias="proposal")
    n_paths: int = Field(DEFAULT_N, ge=1, alias="N")
    n_endpoints: int = Field(DEFAULT_M, ge=1, alias="M")
    scheme: Annotated[str | None, AfterValidator(validate_scheme)] = Field(None, alias="scheme")
    observations: Annotated[
        list[list[float]] | None, AfterValidator(validate_non_empty)
    ] = Field(None, alias="observations")
    sigma_obs: float = Field(DEFAULT_SIGMA_OBS, ge=0, alias="sigma-obs")
    reps: int = Field(DEFAULT_REPS, ge=1, alias="reps")
    seed: int = Field(DEFAULT_SEED, ge=0, alias="seed")
    out: Path | None = Field(None, alias="out")
    paper_scale: bool = Field(False, alias="paper-scale")
    workers: int = Field(1, ge=1, alias="workers")
    block_size: int = Field(DEFAULT_BLOCK_SIZE, ge=1, alias="block-size")
    figure_paths: int = Field(DEFAULT_FIGURE_PATHS, ge=1, alias="n-paths")
    solver: SolverSettings = Field(default_factory=SolverSettings, alias="solver")

    @model_validator(mode="before")
    @classmethod
    def remove_value_if_none(cls, data: Any) -> Any:
        """Drop keys set to None so that defaults apply."""
        if isinstance(data, dict):
            return {key: value for key, value in data.items() if value is not None}
        return data

    @model_validator(mode="after")
    def fill_from_catalog(self) -> StudyConfig:
        """Fill model defaults, apply paper scale and check every grid is exact."""
        entry = self.entry
        if self.horizons is None:
            self.horizons = list(entry.horizons)
        if self.steps is None:
            self.steps = [entry.dt]
        if self.scheme is None:
            self.scheme = entry.scheme
        if self.paper_scale:
            self.n_paths = PAPER_SCALE_N
            self.reps = PAPER_SCALE_REPS
        if self.theta is not None and len(self.theta) != len(entry.theta):
            raise ValueError(f"theta needs {len(entry.theta)} entries for {self.diffusion}")
        if self.x0 is not None and len(self.x0) != len(entry.x0):
            raise ValueError(f"x0 needs {len(entry.x0)} entries for {self.diffusion}")
        if self.observations is not None:
            dim = len(entry.x0)
            if any(len(y) != dim for y in self.observations):
                raise ValueError(f"Observations must have {dim} coordinates")
        for T in self.horizons:
            for dt in self.steps:
                TimeGrid.from_horizon(T, dt)
        return self

    @property
    def entry(self) -> ModelCatalogEntry:
        """Catalog entry of the configured model."""
        return get_entry(self.diffusion)

    def build_model(self) -> DiffusionModel:
        """Instantiate the configured model."""
        return self.entry.build(self.theta, self.x0)

    def grid(self, T: float, dt: float) -> TimeGrid:
        """Time grid of one study cell."""
        return TimeGrid.from_horizon(T, dt)

    def echo(self) -> dict[str, Any]:
        """JSON-serializable copy keyed by flag names."""
        return self.model_dump(mode="json", by_alias=True)


def parse_config(data: dict[str, Any]) -> StudyConfig:
    """Validate a configuration mapping.

    Raises:
        StudyConfigError: listing the missing and the invalid fields.
    """
    try:
        return StudyConfig(**data)
    except ValidationError as err:
        missing = [
            str(error["loc"][0]) if error["loc"] else "config"
            for error in err.errors()
            if error["type"] == "missing"
        ]
        invalid = [
            str(error["loc"][0]) if error["loc"] else "config"
            for error in err.errors()
            if error["type"] != "missing"
        ]
        raise StudyConfigError(str(err), missing=missing, invalid=invalid) from None


def load_config(path: Path | str | None, overrides: dict[str, Any] | None = None) -> StudyConfig:
    """Read a YAML or JSON config file and apply ``overrides`` on top of it.

    Raises:
        StudyConfigError: when the file cannot be read or the result does not validate.
    """
    data: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, encoding="utf-8") as handle:
                data = yaml.safe_load(handle) or {}
        except (OSError, yaml.YAMLError) as err:
            raise StudyConfigError(f"Cannot read config file {path}: {err}") from None
        if not isinstance(data, dict):
            raise StudyConfigError(f"Config file {path} must hold a mapping", invalid=["config"])
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    return parse_config(data)
