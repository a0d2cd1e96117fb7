#!/usr/bin/env python3
# Copyright 2025 Canonical Ltd.
# See LICENSE file for licensing details.

"""Gaussian linear algebra shared by the Euler-Maruyama steps and the bridge proposals.

Every function accepts a single matrix ``(d, d)`` or a stack ``(..., d, d)``.
"""

import logging
import math

import numpy as np
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from constants import JITTER_LADDER, PSD_TOLERANCE
from core.errors import NumericFailureError

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


def transpose(a: np.ndarray) -> np.ndarray:
    """Swap the two trailing axes."""
    return np.swapaxes(a, -1, -2)


def symmetrize(a: np.ndarray) -> np.ndarray:
    """Return (A + A*) / 2."""
    return 0.5 * (a + transpose(a))


def _jitter_scale(cov: np.ndarray) -> float:
    d = cov.shape[-1]
    return max(float(np.trace(cov)) / d, 0.0)


def _eigen_sqrt(cov: np.ndarray, name: str) -> np.ndarray:
    """Square root of a PSD matrix through its eigendecomposition."""
    eigvals, eigvecs = np.linalg.eigh(cov)
    floor = -PSD_TOLERANCE * max(float(np.max(np.abs(eigvals))), np.finfo(float).tiny)
    if eigvals.min() < floor:
        raise NumericFailureError(
            f"{name} is not positive semi-definite (smallest eigenvalue {eigvals.min():.3e})",
            matrix_name=name,
            jitter=JITTER_LADDER[-1],
        )
    return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def cholesky_factor(
    cov: np.ndarray, name: str = "covariance", allow_singular: bool = False
) -> np.ndarray:
    """Return L with L L* = cov for a single symmetric PSD matrix.

    The lower Cholesky factor is tried without jitter first and then with
    ``eps * trace(cov) / d * I`` for every rung of the jitter ladder. When
    ``allow_singular`` is set, an exactly singular PSD matrix falls back to its
    eigendecomposition square root (which is not triangular).

    Raises:
        NumericFailureError: when no rung succeeds and the eigendecomposition
            fallback is disabled or finds a negative eigenvalue.
    """
    cov = symmetrize(np.asarray(cov, dtype=float))
    if not np.all(np.isfinite(cov)):
        raise NumericFailureError(f"{name} has non-finite entries", matrix_name=name)

    scale = _jitter_scale(cov)
    identity = np.eye(cov.shape[-1])
    try:
        for attempt in Retrying(
            stop=stop_after_attempt(len(JITTER_LADDER)),
            retry=retry_if_exception_type(np.linalg.LinAlgError),
            reraise=True,
        ):
            with attempt:
                eps = JITTER_LADDER[attempt.retry_state.attempt_number - 1]
                if eps > JITTER_LADDER[1]:
                    logger.warning(f"Escalating jitter on {name} to eps={eps:.0e}")
                factor = np.linalg.cholesky(cov + eps * scale * identity)
                if np.all(np.isfinite(factor)):
                    return factor
                raise np.linalg.LinAlgError(f"{name} factor has non-finite entries")
    except np.linalg.LinAlgError:
        pass

    if not allow_singular:
        raise NumericFailureError(
            f"{name} is singular beyond the jitter tolerance",
            matrix_name=name,
            jitter=JITTER_LADDER[-1],
        )
    return _eigen_sqrt(cov, name)


def cholesky_stack(
    cov: np.ndarray, name: str = "covariance", allow_singular: bool = False
) -> tuple[np.ndarray, np.ndarray]:
    """Factor a stack of covariances without raising.

    Returns:
        The factors (NaN where the factorization failed) and a boolean mask of
        the entries that succeeded, both shaped like the leading axes of ``cov``.
    """
    cov = symmetrize(np.asarray(cov, dtype=float))
    lead, d = cov.shape[:-2], cov.shape[-1]
    try:
        factor = np.linalg.cholesky(cov)
        ok = np.asarray(np.all(np.isfinite(factor), axis=(-2, -1)))
        if np.all(ok):
            return factor, ok
    except np.linalg.LinAlgError:
        pass

    flat = cov.reshape(-1, d, d)
    factors = np.full_like(flat, np.nan)
    ok = np.zeros(flat.shape[0], dtype=bool)
    for i, matrix in enumerate(flat):
        try:
            factors[i] = cholesky_factor(matrix, name=name, allow_singular=allow_singular)
            ok[i] = True
        except NumericFailureError as err:
            logger.debug(f"Entry {i} of {name} rejected: {err}")
    return factors.reshape(cov.shape), ok.reshape(lead)


def triangular_solve(factor: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve L z = b for stacked lower-triangular L and vector b.

    numpy has no batched triangular solver and scipy.linalg.solve_triangular takes a
    single matrix, so the stack goes through the general batched solver.
    """
    return np.linalg.solve(factor, rhs[..., None])[..., 0]


def log_density_from_factor(residual: np.ndarray, factor: np.ndarray) -> np.ndarray:
    """Gaussian log-density of ``residual`` under N(0, L L*) given the factor L."""
    z = triangular_solve(factor, residual)
    d = residual.shape[-1]
    log_det = np.sum(np.log(np.abs(np.diagonal(factor, axis1=-2, axis2=-1))), axis=-1)
    return -0.5 * np.sum(z * z, axis=-1) - log_det - 0.5 * d * LOG_2PI


def log_density_from_noise(noise: np.ndarray, factor: np.ndarray) -> np.ndarray:
    """Log-density of ``mean + L @ noise`` under N(mean, L L*), read off the noise."""
    d = noise.shape[-1]
    log_det = np.sum(np.log(np.abs(np.diagonal(factor, axis1=-2, axis2=-1))), axis=-1)
    return -0.5 * np.sum(noise * noise, axis=-1) - log_det - 0.5 * d * LOG_2PI


def gaussian_log_density(
    x: np.ndarray, mean: np.ndarray, cov: np.ndarray, name: str = "covariance"
) -> np.ndarray:
    """Log of the multivariate normal density phi(x; mean, cov).

    Raises:
        NumericFailureError: when ``cov`` is singular beyond the jitter ladder.
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim == 2:
        factor = cholesky_factor(cov, name=name)
    else:
        factor, ok = cholesky_stack(cov, name=name)
        if not np.all(ok):
            raise NumericFailureError(f"{name} is singular beyond the jitter tolerance", name)
    return log_density_from_factor(np.asarray(x) - np.asarray(mean), factor)


def cho_solve(factor: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve (L L*) X = B given the lower factor L, for matrix right-hand sides (..., p, m)."""
    return np.linalg.solve(transpose(factor), np.linalg.solve(factor, rhs))


def spd_solve(
    matrix: np.ndarray, rhs: np.ndarray, name: str = "innovation"
) -> tuple[np.ndarray, np.ndarray]:
    """Solve S X = B for symmetric positive-definite S through its Cholesky factor.

    ``rhs`` is a matrix stack ``(..., p, m)``. Returns the solution and the mask
    of entries whose factorization succeeded (NaN rows elsewhere).
    """
    factor, ok = cholesky_stack(matrix, name=name)
    factor = np.where(ok[..., None, None], factor, np.eye(factor.shape[-1]))
    return np.where(ok[..., None, None], cho_solve(factor, rhs), np.nan), ok
