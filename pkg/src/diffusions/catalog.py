#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Named catalog of the study models and their default study settings."""

from collections.abc import Sequence
from dataclasses import dataclass

from constants import (
    BIRTH_DEATH,
    BIRTH_DEATH_LAMPERTI,
    GENE_EXPRESSION,
    LOTKA_VOLTERRA,
    SCHEME_CENTRE,
    SCHEME_PCA,
    SCHEME_QUANTILES,
    SINE,
)
from core.errors import StudyConfigError
from diffusions.base import DiffusionModel
from diffusions.birth_death import BirthDeath, TransformedBirthDeath
from diffusions.gene_expression import GeneExpression
from diffusions.lotka_volterra import LotkaVolterra
from diffusions.time_varying import SineDiffusion


@dataclass(frozen=True)
class ModelCatalogEntry:
    """A model factory with the settings of its simulation study."""

    name: str
    factory: type[DiffusionModel]
    theta: tuple[float, ...]
    x0: tuple[float, ...]
    dt: float
    horizons: tuple[float, ...]
    scheme: str
    has_analytic_oracle: bool = False
    description: str = ""

    def build(
        self, theta: Sequence[float] | None = None, x0: Sequence[float] | None = None
    ) -> DiffusionModel:
        """Instantiate the model, falling back to the catalog defaults."""
        theta = tuple(theta) if theta is not None else self.theta
        x0 = tuple(x0) if x0 is not None else self.x0
        if len(theta) != len(self.theta):
            raise StudyConfigError(
                f"Model {self.name} takes {len(self.theta)} parameters, got {len(theta)}",
                invalid=["theta"],
            )
        if len(x0) != len(self.x0):
            raise StudyConfigError(
                f"Model {self.name} has dimension {len(self.x0)}, got x0 of length {len(x0)}",
                invalid=["x0"],
            )
        return self.factory(theta, x0)  # type: ignore[call-arg]


CATALOG: dict[str, ModelCatalogEntry] = {
    entry.name: entry
    for entry in (
        ModelCatalogEntry(
            name=LOTKA_VOLTERRA,
            factory=LotkaVolterra,
            theta=(0.5, 0.0025, 0.3),
            x0=(71.0, 79.0),
            dt=0.1,
            horizons=tuple(float(t) for t in range(1, 11)),
            scheme=SCHEME_PCA,
            description="Lotka-Volterra predator-prey chemical Langevin equation",
        ),
        ModelCatalogEntry(
            name=GENE_EXPRESSION,
            factory=GeneExpression,
            theta=(0.7, 0.72, 3.0, 80.0, 0.05, 2.0, 50.0),
            x0=(70.0, 70.0),
            dt=0.01,
            horizons=tuple(round(0.4 * i, 10) for i in range(1, 11)),
            scheme=SCHEME_PCA,
            description="Gene expression with time-inhomogeneous transcription",
        ),
        ModelCatalogEntry(
            name=BIRTH_DEATH,
            factory=BirthDeath,
            theta=(0.1, 0.8),
            x0=(50.0,),
            dt=0.01,
            horizons=tuple(round(0.2 * i, 10) for i in range(1, 11)),
            scheme=SCHEME_QUANTILES,
            has_analytic_oracle=True,
            description="Linear birth-death process",
        ),
        ModelCatalogEntry(
            name=BIRTH_DEATH_LAMPERTI,
            factory=TransformedBirthDeath,
            theta=(0.1, 0.8),
            x0=(50.0,),
            dt=0.01,
            horizons=tuple(round(0.2 * i, 10) for i in range(1, 11)),
            scheme=SCHEME_QUANTILES,
            description="Birth-death process transformed to unit volatility (x0 on the original scale)",
        ),
        ModelCatalogEntry(
            name=SINE,
            factory=SineDiffusion,
            theta=(1.0, 1.0, 0.5),
            x0=(0.0,),
            dt=0.001,
            horizons=(1.0,),
            scheme=SCHEME_CENTRE,
            description="Gaussian diffusion with sinusoidal drift and volatility",
        ),
    )
}


def get_entry(name: str) -> ModelCatalogEntry:
    """Return the catalog entry registered under ``name``."""
    try:
        return CATALOG[name]
    except KeyError:
        raise StudyConfigError(
            f"Unknown model {name!r}, expected one of {sorted(CATALOG)}", invalid=["model"]
        ) from None


def build_model(
    name: str, theta: Sequence[float] | None = None, x0: Sequence[float] | None = None
) -> DiffusionModel:
    """Instantiate a catalog model by name."""
    return get_entry(name).build(theta, x0)
