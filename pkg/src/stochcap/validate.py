"""Checking a capacity model against observed breakdown frequencies.

A valid capacity CDF applied to the observed exposure should reproduce the
number of breakdowns at every intensity level. The curves compared here are
cumulative frequencies of breakdowns (CF_B) over the integer levels from
the lowest to the highest observed intensity.
"""

from __future__ import annotations

from typing import Callable, Dict, Optional, Tuple

import numpy as np

from .estimate import FitResult, OptimizerConfig, fit_mle, plm_estimate, weibull_cdf
from .model import CfbCurve, ErrorReport, ObservationSet, StepSurvivalFunction, WeibullParams


def exposure_histogram(obs: ObservationSet, levels: Optional[np.ndarray] = None
                       ) -> Tuple[np.ndarray, np.ndarray]:
    """Records per integer intensity level, censored and uncensored alike.

    Returns ``(levels, r)`` over ``[intensity_min, intensity_max]`` unless
    ``levels`` is given. Empty levels stay in the domain with ``r = 0``.
    """
    if len(obs) == 0:
        raise ValueError("no observations")
    if levels is None:
        levels = np.arange(obs.intensity_min, obs.intensity_max + 1)
    levels = np.asarray(levels, dtype=np.int64)
    r = np.bincount(obs.intensity - levels[0], minlength=levels.size)[:levels.size]
    return levels, r


def _as_cdf(model) -> Callable:
    if isinstance(model, WeibullParams):
        return lambda x: weibull_cdf(model, x)
    if isinstance(model, StepSurvivalFunction):
        return lambda x: 1.0 - model(x)
    if callable(model):
        return model
    raise TypeError(f"cannot use {type(model).__name__} as a CDF")


def predicted_cfb(levels, exposure, cdf) -> CfbCurve:
    """Expected CF_B: per-level breakdowns ``r_j * F(I_j)`` summed cumulatively.

    ``cdf`` may be a :class:`WeibullParams`, a :class:`StepSurvivalFunction`
    or any callable mapping intensities to probabilities.
    """
    levels = np.asarray(levels, dtype=np.int64)
    exposure = np.asarray(exposure, dtype=np.int64)
    f = np.asarray(_as_cdf(cdf)(levels.astype(float)), dtype=float)
    return CfbCurve(levels, exposure * f, exposure, predicted=True)


def empirical_cfb(obs: ObservationSet) -> CfbCurve:
    levels, r = exposure_histogram(obs)
    b = np.bincount(obs.intensity[obs.breakdown] - levels[0], minlength=levels.size)[:levels.size]
    return CfbCurve(levels, b, r, predicted=False)


def error_metrics(empirical: CfbCurve, predicted: CfbCurve) -> ErrorReport:
    """SSE, RMSE, ARE and AWRE of ``predicted`` against ``empirical``.

    Relative errors use the empirical CF_B as denominator, so levels where
    it is still zero are left out of ARE and AWRE. AWRE weights each level
    by the predicted (non-cumulative) breakdowns there.
    """
    if not np.array_equal(empirical.levels, predicted.levels):
        raise ValueError("curves are defined on different intensity levels")
    cf, cf_hat = empirical.cumulative, predicted.cumulative
    diff = cf - cf_hat
    sse = float(diff @ diff)
    n = int(cf.size)
    rmse = float(np.sqrt(sse / n)) if n else 0.0
    mask = cf > 0
    re = np.abs(diff[mask] / cf[mask])
    are = float(re.mean() * 100) if re.size else 0.0
    w = predicted.breakdowns[mask]
    awre = float(w @ re / w.sum() * 100) if w.sum() > 0 else float("nan")
    return ErrorReport(sse, rmse, are, awre, n, int(mask.sum()))


def compare_methods(obs: ObservationSet, opt: OptimizerConfig = OptimizerConfig()) -> Dict[str, dict]:
    """Fit PLM, old MLE and new MLE to ``obs`` and score each CF_B prediction.

    Returns a mapping from method name (``"plm"``, ``"old"``, ``"new"``) to
    a dict with the fitted ``model``, the ``predicted`` curve and its
    ``report``; the ``"empirical"`` entry holds the benchmark curve.
    """
    emp = empirical_cfb(obs)
    out: Dict[str, dict] = {"empirical": {"curve": emp}}
    plm = plm_estimate(obs)
    models = {"plm": plm}
    for kind in ("old", "new"):
        models[kind] = fit_mle(obs, kind=kind, opt=opt)
    for name, model in models.items():
        cdf = model.params if isinstance(model, FitResult) else model
        pred = predicted_cfb(emp.levels, emp.exposure, cdf)
        out[name] = {"model": model, "predicted": pred, "report": error_metrics(emp, pred)}
    return out

