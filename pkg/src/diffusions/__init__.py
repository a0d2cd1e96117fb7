# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Diffusion models and the Euler-Maruyama scheme."""
