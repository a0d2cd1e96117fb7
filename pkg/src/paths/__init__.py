# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Deterministic paths tracked by the residual bridges."""
