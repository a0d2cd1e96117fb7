# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Bridge proposals conditioned on a terminal observation."""
