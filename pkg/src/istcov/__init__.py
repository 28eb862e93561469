"""Sparse positive-definite covariance estimation from interval-valued
data, with simulation generators, an OHLC ingestion pipeline, and
benchmark harnesses."""

__version__ = "0.1.0"

from .errors import (
    DuplicateBar,
    EmptyInput,
    InsufficientData,
    InvalidInput,
    IstcovError,
    MissingBar,
    NotPositiveDefinite,
    ParseError,
    UsageError,
)
from .estimator import (
    AdmmConfig,
    EstimateResult,
    KktReport,
    admm_solve,
    d_norm_jump,
    kkt_residuals,
    lambda_rate,
    objective,
    select_lambda_cv,
    soft_threshold,
    support_size,
)
from .hfsim import HfSimSpec, block_aggregate, run_guided_experiment, simulate_paths
from .ingest import (
    CandleBar,
    PanelSpec,
    bars_to_intervals,
    read_candles,
    read_interval_csv,
    read_matrix_csv,
    write_interval_csv,
    write_matrix_csv,
)
from .intervals import IntervalMatrix, bound_covariances
from .linalg import (
    EigenSystem,
    cholesky,
    eigh,
    frobenius_norm,
    mvn_sample,
    psd_project,
    spectral_norm,
    symmetrize,
)
from .synthetic import (
    CovSpec,
    DgpSpec,
    build_covariance,
    generate_intervals,
    intervals_from_covariance,
    noise_variance,
)

__all__ = [
    "AdmmConfig",
    "CandleBar",
    "CovSpec",
    "DgpSpec",
    "DuplicateBar",
    "EigenSystem",
    "EmptyInput",
    "EstimateResult",
    "HfSimSpec",
    "InsufficientData",
    "IntervalMatrix",
    "InvalidInput",
    "IstcovError",
    "KktReport",
    "MissingBar",
    "NotPositiveDefinite",
    "PanelSpec",
    "ParseError",
    "UsageError",
    "admm_solve",
    "bars_to_intervals",
    "block_aggregate",
    "bound_covariances",
    "build_covariance",
    "cholesky",
    "d_norm_jump",
    "eigh",
    "frobenius_norm",
    "generate_intervals",
    "intervals_from_covariance",
    "kkt_residuals",
    "lambda_rate",
    "mvn_sample",
    "noise_variance",
    "objective",
    "psd_project",
    "read_candles",
    "read_interval_csv",
    "read_matrix_csv",
    "run_guided_experiment",
    "select_lambda_cv",
    "simulate_paths",
    "soft_threshold",
    "spectral_norm",
    "support_size",
    "symmetrize",
    "write_interval_csv",
    "write_matrix_csv",
]
