"""Dense symmetric linear algebra: eigendecomposition, cone projection,
norms, Cholesky factorization, and seeded multivariate normal sampling.

All functions validate and symmetrize their input once on entry; inner
loops elsewhere in the package use the private ``_*_sym`` fast paths on
matrices that are already exactly symmetric.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import InvalidInput, NotPositiveDefinite

# Constructors reject input whose asymmetry exceeds this relative level;
# anything smaller is treated as float accumulation and averaged away.
SYMMETRY_RTOL = 1e-8


class EigenSystem(NamedTuple):
    """Full symmetric eigensystem, eigenvalues sorted nonincreasing."""

    values: np.ndarray
    vectors: np.ndarray  # orthonormal eigenvectors as columns, same order


def symmetrize(a, *, name: str = "matrix") -> np.ndarray:
    """Validate a square real matrix and return its exact symmetric part.

    Rejects non-square, non-finite, or materially asymmetric input
    (max |a - a.T| > SYMMETRY_RTOL * max(1, ||a||_F)).
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInput(f"{name} must be square, got shape {a.shape}")
    if a.shape[0] < 1:
        raise InvalidInput(f"{name} must have dimension >= 1")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{name} has non-finite entries")
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    scale = max(1.0, float(np.linalg.norm(a)))
    if asym > SYMMETRY_RTOL * scale:
        raise InvalidInput(
            f"{name} is not symmetric: max asymmetry {asym:.3e} "
            f"exceeds {SYMMETRY_RTOL:.0e} * max(1, ||a||_F)"
        )
    return (a + a.T) / 2.0


def eigh(a) -> EigenSystem:
    """Full eigensystem of a symmetric matrix, eigenvalues nonincreasing."""
    a = symmetrize(a)
    values, vectors = np.linalg.eigh(a)
    return EigenSystem(values[::-1].copy(), vectors[:, ::-1].copy())


def _psd_project_sym(a: np.ndarray, epsilon: float):
    """Projection onto {X >= epsilon * I} for an exactly symmetric ``a``.

    Returns (projected matrix, clamped eigenvalues). The clamped spectrum
    is the certificate: the result's eigenvalues are these values by
    construction, so min(clamped) >= epsilon holds exactly.
    """
    values, vectors = np.linalg.eigh(a)
    clamped = np.maximum(values, epsilon)
    out = (vectors * clamped) @ vectors.T
    out = (out + out.T) / 2.0
    return out, clamped


def psd_project(a, epsilon: float) -> np.ndarray:
    """Clamp eigenvalues at ``epsilon``: sum_i max(lambda_i, epsilon) v_i v_i'."""
    if epsilon < 0:
        raise InvalidInput(f"epsilon must be nonnegative, got {epsilon}")
    a = symmetrize(a)
    out, _ = _psd_project_sym(a, float(epsilon))
    return out


def frobenius_norm(a) -> float:
    """sqrt(sum of squared entries)."""
    a = symmetrize(a)
    return float(np.linalg.norm(a))


def spectral_norm(a) -> float:
    """Largest absolute eigenvalue (symmetric case)."""
    a = symmetrize(a)
    return float(np.max(np.abs(np.linalg.eigvalsh(a))))


def cholesky(a) -> np.ndarray:
    """Lower-triangular L with L L' = a; raises NotPositiveDefinite otherwise."""
    a = symmetrize(a)
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        lam_min = float(np.min(np.linalg.eigvalsh(a)))
        raise NotPositiveDefinite(
            f"matrix is not positive definite (lambda_min = {lam_min:.6e})",
            lambda_min=lam_min,
        ) from None


def mvn_sample(cov, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` i.i.d. zero-mean rows with covariance ``cov``.

    Uses the Cholesky transform of i.i.d. standard normals, so output is
    a deterministic function of the generator state.
    """
    if n < 1:
        raise InvalidInput(f"n must be positive, got {n}")
    L = cholesky(cov)
    z = rng.standard_normal((n, L.shape[0]))
    return z @ L.T
