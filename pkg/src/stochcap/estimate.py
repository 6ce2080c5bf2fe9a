"""Capacity distribution estimators.

Three estimators are provided:

* :func:`plm_estimate`, the product-limit (Kaplan-Meier) survival function
  with the at-risk set taken as every record at or above a level;
* ``fit_mle(..., kind="old")``, the Weibull fit whose likelihood uses the
  density for breakdown records;
* ``fit_mle(..., kind="new")``, the Weibull fit whose likelihood uses the
  CDF, i.e. each record is a Bernoulli trial with breakdown probability
  ``F(I)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from scipy.optimize import minimize

from .model import ObservationSet, StepSurvivalFunction, WeibullParams

Likelihood = Literal["new", "old"]

#: Probabilities are clamped to at least this before taking logs.
PROB_FLOOR = 1e-300
LOG_FLOOR = np.log(PROB_FLOOR)


class EstimationError(RuntimeError):
    """Raised when a fit cannot produce usable parameters.

    ``best`` holds the best parameters seen so far, if any.
    """

    def __init__(self, message, best: Optional[WeibullParams] = None):
        super().__init__(message)
        self.best = best


def _z(scale, shape, intensity):
    return (np.asarray(intensity, dtype=float) / scale) ** shape


def weibull_cdf(params: WeibullParams, intensity):
    """Breakdown probability ``1 - exp(-(I/scale)**shape)``."""
    x = np.asarray(intensity, dtype=float)
    if np.any(x < 0):
        raise ValueError("intensity must be non-negative")
    out = -np.expm1(-_z(params.scale, params.shape, x))
    return out if out.ndim else float(out)


def weibull_pdf(params: WeibullParams, intensity):
    x = np.asarray(intensity, dtype=float)
    if np.any(x < 0):
        raise ValueError("intensity must be non-negative")
    lam, k = params.scale, params.shape
    z = _z(lam, k, x)
    with np.errstate(divide="ignore"):  # shape < 1 has an infinite density at zero
        out = (k / lam) * (x / lam) ** (k - 1) * np.exp(-z)
    return out if out.ndim else float(out)


def survival_to_cdf(s: StepSurvivalFunction) -> np.ndarray:
    """Stepwise CDF values ``1 - S`` at each step of ``s``."""
    return 1.0 - s.survival


def plm_estimate(obs: ObservationSet) -> StepSurvivalFunction:
    """Product-limit survival estimate over integer intensity levels.

    At every level ``I_j`` with ``b_j`` breakdowns the partial survival is
    ``1 - b_j / n_j`` where ``n_j`` counts all records with intensity
    ``>= I_j``. Levels without breakdowns join the step of the preceding
    breakdown level.
    """
    if len(obs) == 0:
        raise ValueError("cannot estimate from zero observations")
    levels, brk, cens = obs.level_counts()
    total = brk + cens
    at_risk_all = np.cumsum(total[::-1])[::-1]
    hit = np.nonzero(brk)[0]
    lf = levels[hit]
    lt = np.append(lf[1:] - 1, obs.intensity_max) if hit.size else lf
    # exposure over each grouped range [lf, lt]
    group_idx = np.searchsorted(lf, levels, side="right") - 1
    exp_group = np.bincount(group_idx[group_idx >= 0], weights=total[group_idx >= 0],
                            minlength=hit.size).astype(np.int64) if hit.size else np.zeros(0, np.int64)
    partial = 1.0 - brk[hit] / at_risk_all[hit]
    return StepSurvivalFunction(
        level_from=lf,
        level_to=lt,
        events=brk[hit],
        at_risk=at_risk_all[hit],
        exposure=total[hit],
        exposure_group=exp_group,
        survival=np.cumprod(partial),
    )


def _loglik_terms(scale, shape, levels, brk, cens, kind):
    z = _z(scale, shape, levels)
    log_surv = np.maximum(-z, LOG_FLOOR)
    if kind == "new":
        log_hit = np.log(np.maximum(-np.expm1(-z), PROB_FLOOR))
    elif kind == "old":
        with np.errstate(divide="ignore"):
            log_hit = (np.log(shape / scale) + (shape - 1.0) * np.log(levels / scale) - z)
        log_hit = np.maximum(log_hit, LOG_FLOOR)
    else:
        raise ValueError(f"unknown likelihood kind {kind!r}")
    return brk @ log_hit + cens @ log_surv


def log_likelihood(params: WeibullParams, obs: ObservationSet, kind: Likelihood = "new") -> float:
    """Log-likelihood of ``obs`` under a Weibull capacity distribution.

    ``kind="new"`` sums ``ln F(I)`` over breakdowns and ``ln(1 - F(I))``
    over censored records. ``kind="old"`` replaces ``ln F(I)`` by the log
    density ``ln f(I)``. Probabilities (and the density) are floored at
    ``PROB_FLOOR`` before the log.
    """
    levels, brk, cens = obs.level_counts()
    return float(_loglik_terms(params.scale, params.shape, levels.astype(float), brk, cens, kind))


@dataclass(frozen=True)
class OptimizerConfig:
    """Settings of the grid pre-scan and Nelder-Mead search.

    The grid spans ``scale_factors`` times the largest observed intensity
    and ``shape_range``; the simplex runs over ``(ln scale, ln shape)`` and
    stops once its vertices lie within ``xatol`` of the best vertex.
    """

    grid_size: int = 20
    scale_factors: tuple = (1.0, 3.0)
    shape_range: tuple = (1.0, 20.0)
    xatol: float = 1e-8
    max_iter: int = 500


@dataclass(frozen=True)
class FitResult:
    params: WeibullParams
    loglik: float
    iterations: int
    converged: bool
    kind: str
    n_obs: int
    n_breakdowns: int


def fit_mle(obs: ObservationSet, kind: Likelihood = "new",
            opt: OptimizerConfig = OptimizerConfig()) -> FitResult:
    """Maximum likelihood Weibull fit of the capacity distribution.

    Raises
    ------
    EstimationError
        If there are no breakdowns (the likelihood keeps growing as the
        scale goes to infinity), no censored records, or the simplex does
        not converge within ``opt.max_iter`` iterations.
    """
    if kind not in ("new", "old"):
        raise ValueError(f"unknown likelihood kind {kind!r}")
    if obs.n_breakdowns == 0:
        raise EstimationError("degenerate: likelihood maximized at λ→∞")
    if obs.n_censored == 0:
        raise EstimationError("degenerate: no censored observations, likelihood maximized at λ→0")

    levels, brk, cens = obs.level_counts()
    levels = levels.astype(float)

    def nll(theta):
        return -_loglik_terms(np.exp(theta[0]), np.exp(theta[1]), levels, brk, cens, kind)

    i_max = float(levels.max())
    scales = np.linspace(opt.scale_factors[0] * i_max, opt.scale_factors[1] * i_max, opt.grid_size)
    shapes = np.linspace(opt.shape_range[0], opt.shape_range[1], opt.grid_size)
    grid = [(nll((np.log(a), np.log(b))), a, b) for a in scales for b in shapes]
    _, a0, b0 = min(grid)

    res = minimize(nll, x0=np.log([a0, b0]), method="Nelder-Mead",
                   options=dict(xatol=opt.xatol, fatol=np.inf, maxiter=opt.max_iter,
                                maxfev=20 * opt.max_iter))
    # fatol=inf leaves the simplex size as the only stopping rule
    params = WeibullParams(float(np.exp(res.x[0])), float(np.exp(res.x[1])),
                           obs.window_minutes, obs.eval_step_minutes)
    if not res.success:
        raise EstimationError(f"optimizer did not converge: {res.message}", best=params)
    return FitResult(params, float(-res.fun), int(res.nit), True, kind,
                     len(obs), obs.n_breakdowns)
