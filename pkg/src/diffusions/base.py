#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Base class for diffusion models dX = mu(X, t) dt + sigma(X, t) dB."""

from abc import ABC, abstractmethod
from collections.abc import Sequence

import numpy as np

from constants import FD_STEP
from core.errors import DomainViolationError
from utils.linalg import transpose
from utils.logging import WithLogging


class DiffusionModel(ABC, WithLogging):
    """A d-dimensional diffusion driven by an r-dimensional Brownian motion.

    States are arrays of shape ``(..., d)`` and times are scalars; every method
    broadcasts over the leading axes. The parameter vector theta is bound at
    construction.
    """

    name: str = ""
    dim: int = 1
    noise_dim: int = 1
    # Constant S of a factorized volatility sigma = S diag(Lambda), if any
    factor_matrix: np.ndarray | None = None

    def __init__(self, theta: Sequence[float], x0: Sequence[float]):
        self.theta = np.asarray(theta, dtype=float)
        self.theta.setflags(write=False)
        x0 = np.atleast_1d(np.asarray(x0, dtype=float))
        if x0.shape != (self.dim,):
            raise ValueError(f"{self.name}: initial state must have shape ({self.dim},)")
        x0.setflags(write=False)
        self.x0 = x0

    def __repr__(self) -> str:
        return f"{type(self).__name__}(theta={self.theta.tolist()}, x0={self.x0.tolist()})"

    @abstractmethod
    def drift(self, x: np.ndarray, t: float) -> np.ndarray:
        """mu(x, t), shape (..., d)."""
        ...

    @abstractmethod
    def diffusion(self, x: np.ndarray, t: float) -> np.ndarray:
        """sigma(x, t), shape (..., d, r)."""
        ...

    def volatility(self, x: np.ndarray, t: float) -> np.ndarray:
        """zeta(x, t) = sigma sigma*, shape (..., d, d)."""
        sigma = self.diffusion(x, t)
        return sigma @ transpose(sigma)

    def rates(self, x: np.ndarray, t: float) -> np.ndarray:
        """Diagonal of Lambda(x, t), shape (..., r), for factorized models."""
        raise NotImplementedError(f"{self.name} has no factorized volatility")

    @property
    def is_factorized(self) -> bool:
        """Whether sigma = S diag(Lambda) with a constant S."""
        return self.factor_matrix is not None

    def is_valid(self, x: np.ndarray) -> np.ndarray:
        """Domain predicate, shape (...): finite and componentwise non-negative."""
        x = np.asarray(x)
        return np.all(np.isfinite(x) & (x >= 0.0), axis=-1)

    def check_state(self, x: np.ndarray, index: int | None = None) -> None:
        """Raise a domain violation when any state in ``x`` is invalid."""
        if not np.all(self.is_valid(x)):
            where = "" if index is None else f" at grid index {index}"
            raise DomainViolationError(
                f"{self.name}: state {np.asarray(x).tolist()} outside the domain{where}",
                index=index,
                state=np.asarray(x).tolist(),
            )

    def jacobian(self, x: np.ndarray, t: float) -> np.ndarray:
        """d mu_i / d x_j, shape (..., d, d); central differences unless overridden."""
        return self.finite_difference_jacobian(x, t)

    def finite_difference_jacobian(self, x: np.ndarray, t: float) -> np.ndarray:
        """Central differences with h_j = FD_STEP * (1 + |x_j|)."""
        x = np.asarray(x, dtype=float)
        columns = []
        for j in range(self.dim):
            h = FD_STEP * (1.0 + np.abs(x[..., j]))
            shift = np.zeros_like(x)
            shift[..., j] = h
            diff = self.drift(x + shift, t) - self.drift(x - shift, t)
            columns.append(diff / (2.0 * h)[..., None])
        return np.stack(columns, axis=-1)
