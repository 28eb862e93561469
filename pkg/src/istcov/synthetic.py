"""Ground-truth covariance constructors and interval data generators.

Covariance structures (entries indexed by lag k = |i - j|):

    ma1: rho^k for k <= 1, else 0            (banded)
    ar1: rho^k                               (exponential decay)
    lr:  0.5 * ((k+1)^{2H} - 2 k^{2H} + (k-1)^{2H}) for k >= 1, diagonal 1
         (long-range dependent; H = 0.5 gives the identity)

Interval recipes, all driven by one seeded generator:

    dgp1: lower ~ MVN(0, cov), upper = lower + constant
    dgp2: center ~ MVN(0, cov), bounds = center -/+ constant
    dgp3: center ~ MVN(0, cov), bounds = center - E1 / center + E2 with
          E1, E2 i.i.d. nonnegative draws per entry
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidInput, NotPositiveDefinite
from .intervals import IntervalMatrix
from .linalg import mvn_sample

COV_KINDS = ("ma1", "ar1", "lr")
DGP_KINDS = ("dgp1", "dgp2", "dgp3")
NOISE_KINDS = ("lognormal", "beta", "gamma", "exponential")

# Default shape parameters for the dgp3 noise families. Fixed so that
# benchmark runs are reproducible; override via DgpSpec.noise_params.
NOISE_DEFAULTS = {
    "lognormal": (0.0, 0.5),  # (mean, sigma) of the underlying normal
    "beta": (2.0, 2.0),  # (a, b)
    "gamma": (2.0, 0.5),  # (shape, scale)
    "exponential": (1.0,),  # (scale,) = 1 / rate
}


@dataclass(frozen=True)
class CovSpec:
    """Ground-truth covariance structure; only the parameter matching
    ``kind`` is consulted."""

    kind: str
    p: int
    rho: Optional[float] = None
    hurst: Optional[float] = None

    def __post_init__(self):
        if self.kind not in COV_KINDS:
            raise InvalidInput(f"kind must be one of {COV_KINDS}, got {self.kind!r}")
        if self.p < 1:
            raise InvalidInput(f"p must be positive, got {self.p}")
        if self.kind in ("ma1", "ar1"):
            if self.rho is None or not (-1.0 < self.rho < 1.0):
                raise InvalidInput(f"{self.kind} needs rho in (-1, 1), got {self.rho}")
        else:
            if self.hurst is None or not (0.5 <= self.hurst <= 1.0):
                raise InvalidInput(f"lr needs hurst in [0.5, 1], got {self.hurst}")


@dataclass(frozen=True)
class DgpSpec:
    """One interval data-generating configuration."""

    dgp: str
    cov: CovSpec
    n: int
    seed: int
    constant: float = 1.0
    noise: Optional[str] = None
    noise_params: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if self.dgp not in DGP_KINDS:
            raise InvalidInput(f"dgp must be one of {DGP_KINDS}, got {self.dgp!r}")
        if self.n < 1:
            raise InvalidInput(f"n must be positive, got {self.n}")
        if self.dgp in ("dgp1", "dgp2") and self.constant <= 0:
            raise InvalidInput(f"constant must be positive, got {self.constant}")
        if self.dgp == "dgp3":
            if self.noise not in NOISE_KINDS:
                raise InvalidInput(
                    f"dgp3 needs noise in {NOISE_KINDS}, got {self.noise!r}"
                )


def build_covariance(spec: CovSpec, *, check_pd: bool = True) -> np.ndarray:
    """Materialize the p x p ground-truth matrix for ``spec``.

    Raises NotPositiveDefinite (with the offending smallest eigenvalue)
    when the formula produces an indefinite matrix, which happens for
    strong first-band correlations under ma1.
    """
    k = np.abs(np.subtract.outer(np.arange(spec.p), np.arange(spec.p))).astype(float)
    if spec.kind == "ma1":
        out = np.where(k <= 1.0, float(spec.rho) ** k, 0.0)
    elif spec.kind == "ar1":
        out = float(spec.rho) ** k
    else:
        h2 = 2.0 * float(spec.hurst)
        km1 = np.where(k >= 1.0, k - 1.0, 0.0)
        g = 0.5 * ((k + 1.0) ** h2 - 2.0 * k**h2 + km1**h2)
        out = np.where(k == 0.0, 1.0, g)
    out = (out + out.T) / 2.0
    if check_pd:
        lam_min = float(np.min(np.linalg.eigvalsh(out)))
        if lam_min <= 0.0:
            raise NotPositiveDefinite(
                f"{spec.kind} covariance with rho={spec.rho}, hurst={spec.hurst}, "
                f"p={spec.p} is not positive definite (lambda_min = {lam_min:.6e})",
                lambda_min=lam_min,
            )
    return out


def noise_variance(noise: str, params: Optional[Tuple[float, ...]] = None) -> float:
    """Analytic variance of one dgp3 noise draw."""
    params = params if params is not None else NOISE_DEFAULTS[noise]
    if noise == "lognormal":
        mean, sigma = params
        return float((math.exp(sigma**2) - 1.0) * math.exp(2.0 * mean + sigma**2))
    if noise == "beta":
        a, b = params
        return float(a * b / ((a + b) ** 2 * (a + b + 1.0)))
    if noise == "gamma":
        shape, scale = params
        return float(shape * scale**2)
    if noise == "exponential":
        (scale,) = params
        return float(scale**2)
    raise InvalidInput(f"unknown noise family {noise!r}")


def _draw_noise(rng: np.random.Generator, noise: str, params, size) -> np.ndarray:
    if noise == "lognormal":
        return rng.lognormal(mean=params[0], sigma=params[1], size=size)
    if noise == "beta":
        return rng.beta(params[0], params[1], size=size)
    if noise == "gamma":
        return rng.gamma(shape=params[0], scale=params[1], size=size)
    if noise == "exponential":
        return rng.exponential(scale=params[0], size=size)
    raise InvalidInput(f"unknown noise family {noise!r}")


def intervals_from_covariance(spec: DgpSpec, cov: np.ndarray) -> IntervalMatrix:
    """Generate intervals per ``spec`` sampling Gaussians from an explicit
    covariance matrix.

    Draw order within the seeded stream is fixed: the n x p Gaussian
    block first, then (dgp3 only) E1 and E2. Exposed separately from
    generate_intervals so benchmark code can substitute a repaired
    sampling covariance when the formula matrix is indefinite.
    """
    rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
    base = mvn_sample(cov, spec.n, rng)
    if spec.dgp == "dgp1":
        lower = base
        upper = base + spec.constant
    elif spec.dgp == "dgp2":
        lower = base - spec.constant
        upper = base + spec.constant
    else:
        params = (
            spec.noise_params
            if spec.noise_params is not None
            else NOISE_DEFAULTS[spec.noise]
        )
        e1 = _draw_noise(rng, spec.noise, params, base.shape)
        e2 = _draw_noise(rng, spec.noise, params, base.shape)
        lower = base - e1
        upper = base + e2
    return IntervalMatrix(lower, upper)


def generate_intervals(spec: DgpSpec) -> IntervalMatrix:
    """Build the ground-truth covariance and generate one interval sample."""
    cov = build_covariance(spec.cov)
    return intervals_from_covariance(spec, cov)
