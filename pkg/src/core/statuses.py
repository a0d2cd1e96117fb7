#!/usr/bin/env python3

# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""File containing all possible statuses of a study cell."""

from enum import Enum

from pydantic import BaseModel


class StatusObject(BaseModel):
    """A status attached to a study result row."""

    status: str
    message: str = ""
    action: str = ""


class CellStatuses(Enum):
    """Status objects related to the cells of a simulation study."""

    OK = StatusObject(status="ok")

    @staticmethod
    def all_paths_rejected(n_paths: int) -> StatusObject:
        """Every path of the ensemble left the domain or failed numerically."""
        return StatusObject(
            status="degenerate",
            message=f"All {n_paths} paths rejected",
            action="Inspect the rejection counters; decrease dt or change the observation",
        )

    @staticmethod
    def cell_failed(error: Exception) -> StatusObject:
        """The cell raised before producing an ensemble."""
        return StatusObject(
            status="failed",
            message=f"{type(error).__name__}: {error}",
            action="See the log for the full traceback",
        )

    @staticmethod
    def degenerate_axis_skipped(axis: int) -> StatusObject:
        """A principal axis of the endpoint cloud had zero variance."""
        return StatusObject(
            status="warning",
            message=f"Principal axis {axis} has zero variance and was skipped",
        )
