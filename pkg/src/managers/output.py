#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Manager for the files written by a study."""

import csv
import json
import os
import platform
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np
import scipy
from jinja2 import Environment, FileSystemLoader, Template

from constants import (
    COMPARISONS_FILE,
    CONFIG_ECHO_FILE,
    DT_TABLE_FILE,
    ENDPOINTS_FILE,
    METADATA_FILE,
    PATHS_FILE,
    PCA_INTERPRETATION,
    QUANTILE_RULE,
    RESULTS_FILE,
    SUMMARY_FILE,
    TIMING_NOTE,
)
from core.domain import ResultRow, TimeGrid
from utils.logging import WithLogging

CURRENT_DIR = os.path.dirname(os.path.abspath(__file__))
SRC_DIR = os.path.dirname(CURRENT_DIR)
TEMPLATE_DIR = os.path.join(SRC_DIR, "templates")

RESULT_COLUMNS = tuple(ResultRow.model_fields)
COMPARISON_COLUMNS = (
    "model",
    "T",
    "dt",
    "observation",
    "numerator",
    "denominator",
    "ess_per_s_ratio",
    "rel_ess_ratio",
)


def format_vector(value: Sequence[float] | np.ndarray) -> str:
    """Render a vector as space-separated shortest float representations."""
    return " ".join(repr(float(v)) for v in np.atleast_1d(value))


class OutputManager(WithLogging):
    """Writes CSV tables, JSON records and rendered summaries into one directory."""

    def __init__(self, out_dir: Path | str):
        self.out_dir = Path(out_dir)
        self.env = Environment(
            loader=FileSystemLoader(TEMPLATE_DIR),
            autoescape=False,
            trim_blocks=True,
            lstrip_blocks=True,
            keep_trailing_newline=True,
        )

    @property
    def summary_template(self) -> Template:
        """Return template for the study summary."""
        return self.env.get_template("study-summary.md.tpl")

    @property
    def dt_table_template(self) -> Template:
        """Return template for the step-size robustness table."""
        return self.env.get_template("dt-table.md.tpl")

    def path(self, name: str) -> Path:
        """Location of an output file."""
        return self.out_dir / name

    def prepare(self) -> None:
        """Create the output directory."""
        self.out_dir.mkdir(parents=True, exist_ok=True)

    def _write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
        target = self.path(name)
        with open(target, "w", encoding="utf-8", newline="") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        self.logger.debug(f"Wrote {target}")
        return target

    def start_results(self) -> Path:
        """Write the header of the results table."""
        return self._write_csv(RESULTS_FILE, RESULT_COLUMNS, [])

    def append_result(self, row: ResultRow) -> None:
        """Append one row to the results table."""
        record = row.model_dump()
        with open(self.path(RESULTS_FILE), "a", encoding="utf-8", newline="") as handle:
            csv.writer(handle, lineterminator="\n").writerow(
                [record[column] for column in RESULT_COLUMNS]
            )

    def write_comparisons(self, rows: Sequence[dict[str, Any]]) -> Path:
        """Write the pairwise efficiency comparisons."""
        return self._write_csv(
            COMPARISONS_FILE,
            COMPARISON_COLUMNS,
            ([row[column] for column in COMPARISON_COLUMNS] for row in rows),
        )

    def write_json(self, name: str, data: dict[str, Any]) -> Path:
        """Write a JSON document with sorted keys."""
        target = self.path(name)
        with open(target, "w", encoding="utf-8", newline="\n") as handle:
            json.dump(data, handle, indent=2, sort_keys=True)
            handle.write("\n")
        return target

    def write_config(self, config: dict[str, Any]) -> Path:
        """Echo the resolved configuration."""
        return self.write_json(CONFIG_ECHO_FILE, config)

    def write_metadata(self, extra: dict[str, Any] | None = None) -> Path:
        """Record the conventions and library versions the tables depend on."""
        metadata = {
            "quantile_rule": QUANTILE_RULE,
            "pca_interpretation": PCA_INTERPRETATION,
            "timing": TIMING_NOTE,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        } | (extra or {})
        return self.write_json(METADATA_FILE, metadata)

    def write_endpoints(self, clouds: dict[float, np.ndarray]) -> Path:
        """Write endpoint clouds keyed by observation time."""
        dim = next(iter(clouds.values())).shape[1] if clouds else 0
        header = ["T", "sample", *(f"y{i + 1}" for i in range(dim))]
        rows = (
            [T, index, *(repr(float(v)) for v in sample)]
            for T, cloud in clouds.items()
            for index, sample in enumerate(cloud)
        )
        return self._write_csv(ENDPOINTS_FILE, header, rows)

    def write_paths(self, paths: np.ndarray, weights: np.ndarray, grid: TimeGrid) -> Path:
        """Write one record per (path, grid point) with the path's weight and transparency.

        Transparency is the weight divided by the largest weight.
        """
        largest = float(np.max(weights)) if weights.size else 0.0
        alpha = weights / largest if largest > 0 else np.zeros_like(weights)
        dim = paths.shape[-1]
        header = ["path_id", "t", *(f"x{i + 1}" for i in range(dim)), "weight", "alpha"]
        rows = (
            [
                path_id,
                repr(float(t)),
                *(repr(float(v)) for v in paths[path_id, k]),
                repr(float(weights[path_id])),
                repr(float(alpha[path_id])),
            ]
            for path_id in range(paths.shape[0])
            for k, t in enumerate(grid.times)
        )
        return self._write_csv(PATHS_FILE, header, rows)

    def write_summary(self, **context: Any) -> Path:
        """Render the study summary."""
        target = self.path(SUMMARY_FILE)
        target.write_text(self.summary_template.render(**context), encoding="utf-8")
        return target

    def write_dt_table(self, **context: Any) -> Path:
        """Render the step-size robustness table."""
        target = self.path(DT_TABLE_FILE)
        target.write_text(self.dt_table_template.render(**context), encoding="utf-8")
        return target
