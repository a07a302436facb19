import logging
from pathlib import Path

import numpy as np

from spdflow.core.utils.folder_setup import folder_setup
from spdflow.core.utils.input import load_signals
from spdflow.core.utils.pipeline import (
    ReductionKind,
    apply_reduction,
    make_plan,
    retained_variance_table,
    score_plan,
    window_covariances,
)
from spdflow.core.utils.serialize import load_plan, save_plan, save_series, save_table

logger = logging.getLogger("spdflow_logger")


def reduce_signals(
    project_path,
    signal_paths,
    p=None,
    window_seconds=1.0,
    sampling_rate=None,
    kind=ReductionKind.VARIANCE_MAX,
    plan_path=None,
    report_dims=None,
):
    """
    Turn signal files into reduced covariance series sharing one reduction plan.

    The plan is built from the windows of the first signal file, unless an
    existing plan is supplied, and then applied to every file so that all series
    live in the same p-dimensional frame.

    Parameters
    ----------
    project_path : str or Path
        Output directory; results go to ``Results/Reduce``.
    signal_paths : list of Path
        Signal files (CSV or binary with JSON sidecar).
    p : int, optional
        Target dimension; ignored when ``plan_path`` is given.
    window_seconds : float, optional
        Length of the non-overlapping windows, by default 1.0.
    sampling_rate : float, optional
        Samples per second of CSV signals.
    kind : ReductionKind, optional
        variance_max or greedy_min_eig.
    plan_path : Path, optional
        Reuse this saved plan instead of building one.
    report_dims : list of int, optional
        Dimensions listed in the retained-variance table, by default [p]. With
        ``plan_path`` the table holds only the reused plan, scored on the first
        signal file.

    Returns
    -------
    ReductionPlan
    """
    result_path = folder_setup(project_path, "reduce")

    raws = []
    for path in signal_paths:
        signals = load_signals(path, sampling_rate)
        raw = window_covariances(signals, window_seconds)
        logger.info(
            f"{Path(path).stem} - {signals.q} channels, {raw.shape[0]} windows of {window_seconds} s"
        )
        raws.append((Path(path).stem, raw, signals.f))

    if plan_path is not None:
        plan = load_plan(plan_path)
        logger.info(f"Reusing reduction plan {plan_path} (p={plan.p})")
    else:
        plan = make_plan(raws[0][1], p, kind)
    save_plan(result_path / "plan.json", plan)

    if plan_path is not None:
        table = score_plan(plan, raws[0][1])
    else:
        table = retained_variance_table(raws[0][1], report_dims or [plan.p], plan.kind)
    save_table(result_path / "retained_variance.csv", table)
    logger.info(f"Retained variance\n{table.to_string(index=False)}")

    for name, raw, f in raws:
        series = apply_reduction(
            plan,
            raw,
            dt=window_seconds,
            meta={"source": name, "sampling_rate": f, "window_seconds": window_seconds},
        )
        save_series(result_path / f"{name}_series.json", series)
        logger.info(
            f"{name} - {series.n} reduced {series.p}x{series.p} covariances, "
            f"mean trace {np.mean(np.trace(series.points, axis1=1, axis2=2)):.4g}"
        )
    return plan
