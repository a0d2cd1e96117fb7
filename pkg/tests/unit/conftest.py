#!/usr/bin/env python3

# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

import numpy as np
from pytest import fixture

from core.config import StudyConfig, parse_config
from core.domain import TimeGrid
from diffusions.birth_death import BirthDeath, TransformedBirthDeath
from diffusions.gene_expression import GeneExpression
from diffusions.lotka_volterra import LotkaVolterra
from diffusions.time_varying import SineDiffusion


@fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@fixture
def birth_death() -> BirthDeath:
    return BirthDeath()


@fixture
def lamperti() -> TransformedBirthDeath:
    return TransformedBirthDeath()


@fixture
def lotka_volterra() -> LotkaVolterra:
    return LotkaVolterra()


@fixture
def gene_expression() -> GeneExpression:
    return GeneExpression()


@fixture
def sine() -> SineDiffusion:
    return SineDiffusion()


@fixture
def short_grid() -> TimeGrid:
    return TimeGrid.from_horizon(0.2, 0.01)


@fixture
def small_study(tmp_path) -> StudyConfig:
    """A birth-death study small enough to run in a unit test."""
    return parse_config(
        {
            "model": "bd",
            "T": [0.2],
            "dt": [0.01],
            "proposal": ["fs", "mdb", "rbbar-ode"],
            "N": 200,
            "M": 100,
            "reps": 1,
            "sigma-obs": 0.01,
            "seed": 7,
            "out": str(tmp_path / "out"),
        }
    )
