#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Exceptions raised by the bridge simulation library and the study driver."""

from typing import Any


class BridgeError(Exception):
    """Base class of every error raised by this project."""

    def to_dict(self) -> dict[str, Any]:
        """Return a machine-readable description of the error."""
        return {"error": type(self).__name__, "message": str(self)}


class DomainViolationError(BridgeError, ValueError):
    """A state lies outside the domain of the diffusion model."""

    def __init__(self, message: str, index: int | None = None, state: Any = None):
        super().__init__(message)
        self.index = index
        self.state = state

    def to_dict(self) -> dict[str, Any]:
        """Return a machine-readable description of the error."""
        return super().to_dict() | {"index": self.index}


class NumericFailureError(BridgeError, ArithmeticError):
    """A factorization or linear solve failed after the whole jitter ladder."""

    def __init__(self, message: str, matrix_name: str = "", jitter: float | None = None):
        super().__init__(message)
        self.matrix_name = matrix_name
        self.jitter = jitter

    def to_dict(self) -> dict[str, Any]:
        """Return a machine-readable description of the error."""
        return super().to_dict() | {"matrix": self.matrix_name, "jitter": self.jitter}


class IntegrationError(NumericFailureError):
    """The ODE integrator could not reach the end of the grid."""


class ResampleBudgetError(BridgeError, RuntimeError):
    """Too many forward paths left the model domain while simulating endpoints."""

    def __init__(self, message: str, attempts: int, budget: int):
        super().__init__(message)
        self.attempts = attempts
        self.budget = budget

    def to_dict(self) -> dict[str, Any]:
        """Return a machine-readable description of the error."""
        return super().to_dict() | {"attempts": self.attempts, "budget": self.budget}


class StudyConfigError(BridgeError, ValueError):
    """The study configuration is missing fields or holds invalid values."""

    def __init__(
        self, message: str, missing: list[str] | None = None, invalid: list[str] | None = None
    ):
        super().__init__(message)
        self.missing = missing or []
        self.invalid = invalid or []

    def to_dict(self) -> dict[str, Any]:
        """Return a machine-readable description of the error."""
        return super().to_dict() | {"missing": self.missing, "invalid": self.invalid}
