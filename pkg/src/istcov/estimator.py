"""Sparse positive-definite covariance estimation from interval bounds.

Solves, for empirical bound covariances S_l and S_u,

    minimize   0.5 ||X - S_l||_F^2 + 0.5 ||X - S_u||_F^2 + lam * sum_{i != j} |x_ij|
    subject to X >= epsilon * I

by alternating-direction splitting on the consensus form X = G:

    X step:  X = S(beta * (S_l + S_u + L) + G, beta * lam) / (2 * beta + 1)
    G step:  G = proj_{>= epsilon I}(X - beta * L)
    L step:  L = L - (X - G) / beta

where S is off-diagonal soft thresholding and L is the scaled dual matrix.
The G iterate carries the positive-definiteness certificate and is the
returned estimate; the X iterate carries the exact sparsity pattern.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InsufficientData, InvalidInput
from .intervals import IntervalMatrix, bound_covariances
from .linalg import _psd_project_sym, symmetrize

# Entries at or below this magnitude count as structural zeros in the
# subgradient check and in support-size reporting.
ZERO_TOL = 1e-12


@dataclass(frozen=True)
class AdmmConfig:
    """Tuning parameters for the alternating-direction solver.

    ``tol_primal`` and ``tol_change`` default to 1e-7 * p when left None,
    scaling the stopping rule with the problem dimension.
    """

    lam: float
    beta: float = 1.0
    epsilon: float = 1e-4
    tol_primal: Optional[float] = None
    tol_change: Optional[float] = None
    max_iter: int = 5000
    seed: int = 0  # reserved for randomized tie-breaking; unused by default

    def __post_init__(self):
        if self.lam < 0:
            raise InvalidInput(f"lam must be nonnegative, got {self.lam}")
        if self.beta <= 0:
            raise InvalidInput(f"beta must be positive, got {self.beta}")
        if self.epsilon <= 0:
            raise InvalidInput(f"epsilon must be positive, got {self.epsilon}")
        for fname in ("tol_primal", "tol_change"):
            v = getattr(self, fname)
            if v is not None and v <= 0:
                raise InvalidInput(f"{fname} must be positive, got {v}")
        if self.max_iter < 1:
            raise InvalidInput(f"max_iter must be >= 1, got {self.max_iter}")

    def resolved_tolerances(self, p: int) -> Tuple[float, float]:
        tp = self.tol_primal if self.tol_primal is not None else 1e-7 * p
        tc = self.tol_change if self.tol_change is not None else 1e-7 * p
        return tp, tc


@dataclass(frozen=True)
class KktReport:
    """First-order optimality residuals at an iterate.

    ``offdiag_subgrad_max`` is None when lam == 0 (the subgradient
    inclusion is vacuous); all other fields are nonnegative reals.
    """

    offdiag_subgrad_max: Optional[float]
    diag_residual_max: float
    primal_gap: float
    cone_violation: float


@dataclass
class EstimateResult:
    """Solver output: estimates, traces, and optimality diagnostics."""

    sigma: np.ndarray  # sparse iterate (exact zeros off-diagonal)
    gamma: np.ndarray  # cone-certified iterate; the headline estimate
    lambda_dual: np.ndarray
    iterations: int
    converged: bool
    primal_residual_trace: List[float]
    change_trace: List[float]
    kkt: KktReport
    min_eigenvalue: float


def soft_threshold(g, eta: float) -> np.ndarray:
    """Off-diagonal soft thresholding; diagonal entries pass through."""
    if eta < 0:
        raise InvalidInput(f"eta must be nonnegative, got {eta}")
    g = symmetrize(g, name="g")
    return _soft_threshold_sym(g, float(eta))


def _soft_threshold_sym(g: np.ndarray, eta: float) -> np.ndarray:
    out = np.sign(g) * np.maximum(np.abs(g) - eta, 0.0)
    np.fill_diagonal(out, np.diag(g))
    return out


def objective(sigma, s_l, s_u, lam: float) -> float:
    """Penalized fit value: two half squared Frobenius fit terms plus the
    off-diagonal l1 penalty."""
    sigma = symmetrize(sigma, name="sigma")
    s_l = symmetrize(s_l, name="s_l")
    s_u = symmetrize(s_u, name="s_u")
    if sigma.shape != s_l.shape or sigma.shape != s_u.shape:
        raise InvalidInput(
            f"dimension mismatch: sigma {sigma.shape}, s_l {s_l.shape}, "
            f"s_u {s_u.shape}"
        )
    return _objective_sym(sigma, s_l, s_u, float(lam))


def _objective_sym(sigma, s_l, s_u, lam: float) -> float:
    fit = 0.5 * np.linalg.norm(sigma - s_l) ** 2
    fit += 0.5 * np.linalg.norm(sigma - s_u) ** 2
    penalty = float(np.abs(sigma).sum() - np.abs(np.diag(sigma)).sum())
    return float(fit + lam * penalty)


def d_norm_jump(prev, nxt, beta: float) -> float:
    """Block-weighted distance between (dual, primal) iterate pairs:
    sqrt(beta * ||dL||_F^2 + (2 / beta) * ||dX||_F^2)."""
    if beta <= 0:
        raise InvalidInput(f"beta must be positive, got {beta}")
    lam_prev, sig_prev = prev
    lam_next, sig_next = nxt
    dl = np.asarray(lam_next, dtype=float) - np.asarray(lam_prev, dtype=float)
    ds = np.asarray(sig_next, dtype=float) - np.asarray(sig_prev, dtype=float)
    return math.sqrt(
        beta * float(np.linalg.norm(dl)) ** 2
        + (2.0 / beta) * float(np.linalg.norm(ds)) ** 2
    )


def kkt_residuals(
    sigma,
    gamma,
    lambda_dual,
    s_l,
    s_u,
    config: AdmmConfig,
    *,
    gamma_min_eigenvalue: Optional[float] = None,
) -> KktReport:
    """Optimality residuals of an (estimate, cone iterate, dual) triple.

    ``gamma_min_eigenvalue`` lets the solver pass the exact clamped
    spectrum from its final projection instead of re-decomposing gamma.
    """
    sigma = symmetrize(sigma, name="sigma")
    gamma = symmetrize(gamma, name="gamma")
    lambda_dual = symmetrize(lambda_dual, name="lambda_dual")
    s_l = symmetrize(s_l, name="s_l")
    s_u = symmetrize(s_u, name="s_u")
    if not (sigma.shape == gamma.shape == lambda_dual.shape == s_l.shape == s_u.shape):
        raise InvalidInput("kkt_residuals: all matrices must share one shape")
    p = sigma.shape[0]

    off = ~np.eye(p, dtype=bool)
    if config.lam > 0:
        t = (lambda_dual - 2.0 * sigma + s_l + s_u) / config.lam
        nonzero = off & (np.abs(sigma) > ZERO_TOL)
        zero = off & ~nonzero
        viol = 0.0
        if np.any(nonzero):
            viol = max(viol, float(np.max(np.abs(t[nonzero] - np.sign(sigma[nonzero])))))
        if np.any(zero):
            viol = max(viol, float(np.max(np.maximum(np.abs(t[zero]) - 1.0, 0.0))))
        offdiag_subgrad_max = viol
    else:
        offdiag_subgrad_max = None

    diag_res = np.diag(2.0 * sigma - s_l - s_u - lambda_dual)
    diag_residual_max = float(np.max(np.abs(diag_res)))
    primal_gap = float(np.linalg.norm(sigma - gamma))
    if gamma_min_eigenvalue is None:
        gamma_min_eigenvalue = float(np.min(np.linalg.eigvalsh(gamma)))
    cone_violation = max(0.0, config.epsilon - gamma_min_eigenvalue)
    return KktReport(
        offdiag_subgrad_max=offdiag_subgrad_max,
        diag_residual_max=diag_residual_max,
        primal_gap=primal_gap,
        cone_violation=cone_violation,
    )


def admm_solve(
    s_l,
    s_u,
    config: AdmmConfig,
    warm_start: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    callback: Optional[Callable[[int, np.ndarray, np.ndarray, np.ndarray], None]] = None,
) -> EstimateResult:
    """Run the three-step alternating-direction solver.

    Parameters
    ----------
    s_l, s_u : array-like
        Symmetric empirical covariance matrices of the lower and upper
        bound observations, same dimension.
    config : AdmmConfig
        lam / beta / epsilon and stopping controls.
    warm_start : (gamma0, lambda0), optional
        Starting cone iterate and dual matrix. Default: gamma0 is the
        cone projection of (s_l + s_u) / 2, lambda0 = 0.
    callback : callable, optional
        Called after each iteration as callback(q, sigma, gamma, dual)
        with 1-based q. Intended for convergence diagnostics.

    Returns
    -------
    EstimateResult
        ``gamma`` is the certified estimate (min eigenvalue >= epsilon by
        construction of the projection); ``sigma`` carries exact zeros.
        Hitting max_iter is reported via ``converged=False``, not raised.

    Stops when both the primal residual ||sigma - gamma||_F and the
    block-weighted jump between consecutive (dual, sigma) pairs fall at
    or below their tolerances.
    """
    s_l = symmetrize(s_l, name="s_l")
    s_u = symmetrize(s_u, name="s_u")
    if s_l.shape != s_u.shape:
        raise InvalidInput(f"dimension mismatch: s_l {s_l.shape} vs s_u {s_u.shape}")
    p = s_l.shape[0]
    tol_primal, tol_change = config.resolved_tolerances(p)
    beta = config.beta
    eps = config.epsilon

    if warm_start is not None:
        gamma = symmetrize(warm_start[0], name="warm_start gamma")
        dual = symmetrize(warm_start[1], name="warm_start lambda")
        if gamma.shape != s_l.shape or dual.shape != s_l.shape:
            raise InvalidInput("warm_start matrices must match the problem dimension")
        clamped = np.linalg.eigvalsh(gamma)
    else:
        gamma, clamped = _psd_project_sym((s_l + s_u) / 2.0, eps)
        dual = np.zeros_like(s_l)

    base = s_l + s_u
    scale = 2.0 * beta + 1.0
    thresh = beta * config.lam
    # Jump convention for the very first iteration: the pre-loop sigma
    # stands at the feasible start gamma.
    sigma_prev = gamma
    dual_prev = dual

    primal_trace: List[float] = []
    change_trace: List[float] = []
    converged = False
    iterations = 0
    sigma = gamma

    for q in range(1, config.max_iter + 1):
        sigma = _soft_threshold_sym(beta * (base + dual) + gamma, thresh) / scale
        gamma, clamped = _psd_project_sym(sigma - beta * dual, eps)
        dual = dual - (sigma - gamma) / beta

        primal = float(np.linalg.norm(sigma - gamma))
        jump = d_norm_jump((dual_prev, sigma_prev), (dual, sigma), beta)
        primal_trace.append(primal)
        change_trace.append(jump)
        iterations = q
        if callback is not None:
            callback(q, sigma, gamma, dual)
        if primal <= tol_primal and jump <= tol_change:
            converged = True
            break
        sigma_prev = sigma
        dual_prev = dual

    min_eigenvalue = float(np.min(clamped))
    kkt = kkt_residuals(
        sigma,
        gamma,
        dual,
        s_l,
        s_u,
        config,
        gamma_min_eigenvalue=min_eigenvalue,
    )
    return EstimateResult(
        sigma=sigma,
        gamma=gamma,
        lambda_dual=dual,
        iterations=iterations,
        converged=converged,
        primal_residual_trace=primal_trace,
        change_trace=change_trace,
        kkt=kkt,
        min_eigenvalue=min_eigenvalue,
    )


def lambda_rate(n: int, p: int, c: float) -> float:
    """Penalty level c * sqrt(ln(p) / n) (natural logarithm)."""
    if n < 2 or p < 2:
        raise InvalidInput(f"need n, p >= 2, got n={n}, p={p}")
    if c <= 0:
        raise InvalidInput(f"c must be positive, got {c}")
    return float(c * math.sqrt(math.log(p) / n))


def support_size(sigma) -> int:
    """Number of off-diagonal entries with magnitude above ZERO_TOL."""
    sigma = np.asarray(sigma, dtype=float)
    off = ~np.eye(sigma.shape[0], dtype=bool)
    return int(np.count_nonzero(np.abs(sigma[off]) > ZERO_TOL))


def select_lambda_cv(
    data: IntervalMatrix,
    grid: Sequence[float],
    folds: int,
    config: AdmmConfig,
    rng: np.random.Generator,
):
    """Random-split K-fold selection of the penalty level.

    For each fold, estimates on the training rows and scores
    0.5 * ||est - S_l_val||_F^2 + 0.5 * ||est - S_u_val||_F^2 on the
    held-out rows. Returns (best lam, [(lam, mean loss)] sorted by lam);
    ties break toward the larger (sparser) value. The fold split is a
    deterministic function of the generator state, so parallel and
    serial evaluation orders agree.
    """
    if folds < 2:
        raise InvalidInput(f"folds must be >= 2, got {folds}")
    grid = [float(g) for g in grid]
    if not grid:
        raise InvalidInput("grid must be nonempty")
    if any(g < 0 for g in grid):
        raise InvalidInput("grid values must be nonnegative")
    if data.n < folds:
        raise InsufficientData(f"n={data.n} observations < folds={folds}")

    perm = rng.permutation(data.n)
    fold_idx = np.array_split(perm, folds)
    splits = []
    for k in range(folds):
        val = np.sort(fold_idx[k])
        train = np.sort(np.concatenate([fold_idx[j] for j in range(folds) if j != k]))
        s_l_tr, s_u_tr = bound_covariances(data.take_rows(train))
        s_l_va, s_u_va = bound_covariances(data.take_rows(val))
        splits.append((s_l_tr, s_u_tr, s_l_va, s_u_va))

    unique = sorted(set(grid))
    table = []
    for lam in unique:
        cfg = replace(config, lam=lam)
        losses = []
        for s_l_tr, s_u_tr, s_l_va, s_u_va in splits:
            est = admm_solve(s_l_tr, s_u_tr, cfg).gamma
            loss = 0.5 * np.linalg.norm(est - s_l_va) ** 2
            loss += 0.5 * np.linalg.norm(est - s_u_va) ** 2
            losses.append(float(loss))
        table.append((lam, float(np.mean(losses))))

    best_loss = min(loss for _, loss in table)
    best_lam = max(lam for lam, loss in table if loss == best_loss)
    return best_lam, table
