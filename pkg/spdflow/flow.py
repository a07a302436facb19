import logging

from spdflow.core.analyses.compare import compare_fits
from spdflow.core.analyses.diagnose import diagnose_series
from spdflow.core.analyses.fit import fit_batch
from spdflow.core.analyses.reduce import reduce_signals
from spdflow.core.analyses.simulate import simulate_series
from spdflow.core.utils.input import load_config, validate_config
from spdflow.core.utils.logger import setup_logger


def run_reduce(cfg):
    reduce_signals(
        cfg.output,
        cfg.signals,
        p=cfg.p,
        window_seconds=cfg.window_seconds,
        sampling_rate=cfg.sampling_rate,
        kind=cfg.reduction,
        plan_path=cfg.plan,
        report_dims=cfg.report_dims,
    )


def run_fit(cfg):
    """
    Fit every configured series, in parallel when SPDFLOW_THREADS allows.

    Parameters
    ----------
    cfg : RunConfig
        Validated configuration of the fit command.

    Returns
    -------
    pandas.DataFrame
        One summary row per series.
    """
    return fit_batch(
        cfg.output,
        cfg.series,
        nprocesses=cfg.threads,
        geometry=cfg.geometry,
        model=cfg.model,
        restrict=cfg.restrict,
        lag=cfg.lag,
        lag_max=cfg.lag_max,
        attractor_policy=cfg.attractor_policy,
        attractor_path=cfg.attractor,
        interictal_path=cfg.interictal,
        level=cfg.level,
        frechet_tol=cfg.frechet_tol,
        frechet_max_iter=cfg.frechet_max_iter,
        strict=cfg.strict,
    )


def run_simulate(cfg):
    init_path = cfg.series[0] if cfg.series else None
    return simulate_series(cfg.output, cfg.params, cfg.n_steps, cfg.seed, init_path)


def run_compare(cfg):
    return compare_fits(cfg.output, cfg.fits, cfg.groups, cfg.mds_dims)


def run_diagnose(cfg):
    for path in cfg.series:
        diagnose_series(
            cfg.output,
            path,
            cfg.geometry,
            mds_dims=cfg.mds_dims,
            pca_dims=cfg.pca_dims,
            frechet_tol=cfg.frechet_tol,
            frechet_max_iter=cfg.frechet_max_iter,
        )


RUNNERS = {
    "reduce": run_reduce,
    "fit": run_fit,
    "simulate": run_simulate,
    "compare": run_compare,
    "diagnose": run_diagnose,
}


def run_spdflow(command, yaml_path=None, overrides=None):
    """
    Validate the configuration of a subcommand and run it.

    Settings come from the YAML file, if any, with ``overrides`` (command-line
    flags) taking precedence. Nothing is computed before the whole
    configuration has been validated.
    """
    raw = load_config(yaml_path) if yaml_path is not None else {}
    raw.update({key: value for key, value in (overrides or {}).items() if value is not None})
    cfg = validate_config(raw, command)

    cfg.output.mkdir(parents=True, exist_ok=True)
    logger = setup_logger(cfg.output)
    logger.info(f"Running '{command}' with output in {cfg.output.resolve()}")
    result = RUNNERS[command](cfg)
    logger.info(f"'{command}' finished.")
    return result


def reset_logger():
    """Detach handlers so that a later run can log to a different output folder."""
    logger = logging.getLogger("spdflow_logger")
    for handler in list(logger.handlers):
        handler.close()
        logger.removeHandler(handler)
