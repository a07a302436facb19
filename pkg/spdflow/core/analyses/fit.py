import logging
from pathlib import Path

import pandas as pd
from joblib import Parallel, delayed

from spdflow.core.utils.exceptions import SingularFisher, ZeroVariance
from spdflow.core.utils.folder_setup import folder_setup
from spdflow.core.utils.geometry import Geometry
from spdflow.core.utils.inference import (
    compare_restrictions,
    confidence_intervals,
    fit_diagonal,
    fit_scalar,
    r_squared,
    select_lag,
    term_norms,
)
from spdflow.core.utils.model import build_dataset
from spdflow.core.utils.pipeline import pair_attractor
from spdflow.core.utils.serialize import (
    load_matrix,
    load_series,
    save_fit,
    save_matrix,
    save_table,
)
from spdflow.core.utils.stats import frechet_mean

logger = logging.getLogger("spdflow_logger")


def resolve_attractor(
    series,
    geometry,
    policy,
    attractor_path=None,
    interictal_path=None,
    frechet_tol=1e-9,
    frechet_max_iter=200,
):
    """Attractor S* for a series under the given policy."""
    if policy == "file":
        return load_matrix(attractor_path)
    if policy == "own_mean":
        return frechet_mean(geometry, series, frechet_tol, frechet_max_iter).mean
    interictal = load_series(interictal_path)
    return pair_attractor(series, interictal, geometry, frechet_tol, frechet_max_iter)


def fit_series(
    project_path,
    series_path,
    geometry,
    model="scalar",
    restrict="full",
    lag=0,
    lag_max=None,
    attractor_policy="interictal_mean",
    attractor_path=None,
    interictal_path=None,
    level=0.95,
    frechet_tol=1e-9,
    frechet_max_iter=200,
    strict=False,
):
    """
    Fit one covariance series and write its results to ``Results/Fit/<name>``.

    Writes the fit JSON, confidence intervals, per-step squared norms of the
    model terms, the AIC table of the restricted variants and, when ``lag_max``
    is given, the lag-selection trace.

    Returns
    -------
    dict
        Summary row: series, model, restriction, L, n_used, log_lik, aic, r2.
    """
    geometry = Geometry.parse(geometry)
    name = Path(series_path).stem
    result_path = folder_setup(project_path, "fit") / name
    result_path.mkdir(parents=True, exist_ok=True)

    series = load_series(series_path)
    attractor = resolve_attractor(
        series,
        geometry,
        attractor_policy,
        attractor_path,
        interictal_path,
        frechet_tol,
        frechet_max_iter,
    )
    save_matrix(result_path / "attractor.csv", attractor)

    if lag_max is not None:
        logger.info(f"{name} - selecting lag up to {lag_max}")
        lag, trace = select_lag(geometry, series, attractor, lag_max, level, return_trace=True)
        save_table(result_path / "lag_trace.csv", trace)
        logger.info(f"{name} - selected L={lag}")

    logger.info(f"{name} - fitting {model} model (L={lag}, {geometry.value} geometry)")
    ds = build_dataset(geometry, series, lag, attractor)
    fitter = fit_scalar if model == "scalar" else fit_diagonal
    fit = fitter(ds, restricted=restrict, strict=strict)
    try:
        fit.r2 = r_squared(geometry, series, fit, ds)
    except ZeroVariance as e:
        logger.warning(f"{name} - R^2 undefined: {e}")

    save_fit(result_path / "fit.json", fit, source=name)
    try:
        save_table(result_path / "confidence_intervals.csv", confidence_intervals(fit, level))
    except SingularFisher as e:
        logger.warning(f"{name} - no confidence intervals: {e}")
    save_table(result_path / "term_norms.csv", term_norms(fit, ds))
    save_table(result_path / "restrictions.csv", compare_restrictions(ds, model))

    logger.info(
        f"{name} - log-likelihood {fit.log_lik:.4f}, AIC {fit.aic:.4f}, R^2 {fit.r2:.4f}"
    )
    return {
        "series": name,
        "model": model,
        "restriction": fit.restricted.value,
        "L": fit.L,
        "n_used": fit.n_used,
        "log_lik": fit.log_lik,
        "aic": fit.aic,
        "r2": fit.r2,
    }


def fit_batch(project_path, series_paths, nprocesses=1, **kwargs):
    """Fit several series in parallel; each worker writes its own result folder."""
    rows = Parallel(n_jobs=min(nprocesses, len(series_paths)), verbose=2)(
        delayed(fit_series)(project_path, path, **kwargs) for path in series_paths
    )
    summary = pd.DataFrame(rows)
    save_table(folder_setup(project_path, "fit") / "summary.csv", summary)
    return summary
