#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Project constants."""

# Model catalog names
LOTKA_VOLTERRA = "lv"
GENE_EXPRESSION = "ge"
BIRTH_DEATH = "bd"
BIRTH_DEATH_LAMPERTI = "bd-lamperti"
SINE = "sine"

MODEL_NAMES = (LOTKA_VOLTERRA, GENE_EXPRESSION, BIRTH_DEATH, BIRTH_DEATH_LAMPERTI, SINE)

# Proposal kinds
FS = "fs"
MDB = "mdb"
RB_ODE = "rb-ode"
RB_LNA = "rb-lna"
RBBAR_ODE = "rbbar-ode"
RBBAR_LNA = "rbbar-lna"

PROPOSAL_KINDS = (FS, MDB, RB_ODE, RB_LNA, RBBAR_ODE, RBBAR_LNA)
RBBAR_KINDS = (RBBAR_ODE, RBBAR_LNA)

# Deterministic path provenance
PATH_ODE = "ode"
PATH_LNA = "lna"

PROPOSAL_PATH_KIND = {
    FS: None,
    MDB: None,
    RB_ODE: PATH_ODE,
    RB_LNA: PATH_LNA,
    RBBAR_ODE: PATH_ODE,
    RBBAR_LNA: PATH_LNA,
}

# Pairs compared by ESS/s ratio in the study summary, (numerator, denominator)
COMPARISON_PAIRS = (
    (RB_ODE, MDB),
    (RB_LNA, RB_ODE),
    (RBBAR_ODE, RB_ODE),
    (RBBAR_LNA, RB_LNA),
)
# Cells enter a comparison only when both proposals reach this effective sample size
COMPARISON_MIN_ESS = 100.0

# Observation selection schemes
SCHEME_PCA = "pca-90"
SCHEME_QUANTILES = "quantiles-5-50-95"
SCHEME_CENTRE = "centre"
OBSERVATION_SCHEMES = (SCHEME_PCA, SCHEME_QUANTILES, SCHEME_CENTRE)
CENTRE_LABEL = "centre"

# Covariance regularization: jitter = eps * trace(cov) / d * I, eps escalating x10
JITTER_LADDER = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8)
# Negative eigenvalues down to this fraction of the largest one count as zero
PSD_TOLERANCE = 1e-10
# Generators whose condition number exceeds this are treated as singular
SINGULAR_CONDITION = 1e12

# Finite-difference Jacobian step, h = FD_STEP * (1 + |x_j|)
FD_STEP = 1e-5

# ODE integrator defaults
ODE_METHOD = "RK45"
ODE_RTOL = 1e-9
ODE_ATOL = 1e-10

# Grid exactness tolerance on T / dt
GRID_TOLERANCE = 1e-9

# Ensemble defaults (desk scale) and paper scale
DEFAULT_N = 100_000
DEFAULT_M = 10_000
DEFAULT_REPS = 3
PAPER_SCALE_N = 1_000_000
PAPER_SCALE_REPS = 10
DEFAULT_SIGMA_OBS = 1e-12
DEFAULT_SEED = 20170101
DEFAULT_BLOCK_SIZE = 2048
DEFAULT_FIGURE_PATHS = 50
FIGURE_SIGMA_OBS = 5.0

# Endpoint simulation may draw at most this many paths per requested endpoint
RESAMPLE_BUDGET_FACTOR = 10

# Output files
RESULTS_FILE = "results.csv"
COMPARISONS_FILE = "comparisons.csv"
CONFIG_ECHO_FILE = "config.json"
METADATA_FILE = "metadata.json"
SUMMARY_FILE = "summary.md"
DT_TABLE_FILE = "dt-table.md"
ENDPOINTS_FILE = "endpoints.csv"
PATHS_FILE = "paths.csv"

# Columns depending on the machine clock, excluded from determinism checks
TIMING_COLUMNS = ("wall_time", "setup_time", "sampling_time", "ess_per_s")

QUANTILE_RULE = "linear interpolation between order statistics (type 7)"
PCA_INTERPRETATION = (
    "sample mean plus the 90% and 10% empirical quantiles of the signed projections onto "
    "each principal axis of the sample covariance, mapped back to observation space"
)
TIMING_NOTE = (
    "wall_time = setup_time (deterministic path and suffix statistics) + sampling_time "
    "(average over the configured repetitions); ESS/s divides by wall_time"
)
