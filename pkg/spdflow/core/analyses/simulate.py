import logging
from pathlib import Path

import numpy as np

from spdflow.core.utils.folder_setup import folder_setup
from spdflow.core.utils.model import simulate
from spdflow.core.utils.serialize import load_params, load_series, save_series

logger = logging.getLogger("spdflow_logger")


def simulate_series(project_path, params_path, n_steps, seed=0, init_path=None):
    """
    Simulate a covariance series from saved model parameters.

    Parameters
    ----------
    project_path : str or Path
        Output directory; results go to ``Results/Simulate``.
    params_path : Path
        Parameter file, or a fit file whose fitted parameters are used.
    n_steps : int
        Length of the simulated series.
    seed : int, optional
        Seed of the noise generator, recorded in the series metadata.
    init_path : Path, optional
        Series whose first L + 1 points seed the lag history; by default the
        history is the attractor repeated L + 1 times.

    Returns
    -------
    Path
        The written series file.
    """
    result_path = folder_setup(project_path, "simulate")
    params = load_params(params_path)
    L = params.L

    if init_path is not None:
        init = load_series(init_path).points[: L + 1]
    else:
        init = np.repeat(params.attractor[None], L + 1, axis=0)

    logger.info(
        f"Simulating {n_steps} steps of the {type(params).__name__} model "
        f"(L={L}, {params.geometry.value} geometry, seed {seed})"
    )
    series = simulate(params, init, n_steps, np.random.default_rng(seed))
    series.meta.update({"seed": seed, "params": str(params_path)})

    output = result_path / f"{Path(params_path).stem}_seed{seed}_series.json"
    save_series(output, series)
    return output
