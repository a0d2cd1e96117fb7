#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Reproducible per-path random substreams."""

from collections.abc import Sequence

import numpy as np


def substream(seed: int | Sequence[int], stream: int) -> np.random.Generator:
    """Return the PCG64 generator of substream ``stream`` under ``seed``.

    Substreams are spawned children of one seed sequence, so the draws of a
    path depend on (seed, stream) only and never on how paths are batched.
    """
    sequence = np.random.SeedSequence(seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(sequence))


def block_normals(
    seed: int | Sequence[int], start: int, stop: int, shape: tuple[int, ...]
) -> np.ndarray:
    """Standard normals of shape ``(stop - start, *shape)`` for streams start..stop-1."""
    out = np.empty((stop - start, *shape))
    for row, stream in enumerate(range(start, stop)):
        out[row] = substream(seed, stream).standard_normal(shape)
    return out


def derive_seed(seed: int, *indices: int) -> int:
    """Derive a 63-bit child seed from ``seed`` and a tuple of cell indices."""
    state = np.random.SeedSequence([seed, *indices]).generate_state(2, dtype=np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))
