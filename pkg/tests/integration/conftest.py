#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

import numpy as np
import pytest

from constants import SCHEME_CENTRE
from core.domain import ObservationModel, TimeGrid
from diffusions.base import DiffusionModel
from managers.endpoints import select_observations, simulate_endpoints


def centre_observation(
    model: DiffusionModel, grid: TimeGrid, sigma_obs: float, n_endpoints: int = 2000, seed: int = 1
) -> ObservationModel:
    """Observe the centre of the forward endpoint cloud with variance ``sigma_obs``."""
    cloud = simulate_endpoints(model, grid, n_endpoints, seed=seed)
    (centre,) = select_observations(cloud.values, SCHEME_CENTRE).observations
    return ObservationModel.full(np.asarray(centre.value), sigma_obs)


@pytest.fixture
def observe():
    return centre_observation
