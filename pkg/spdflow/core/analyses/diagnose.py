import logging
from pathlib import Path

import numpy as np
import pandas as pd

from spdflow.core.utils.exceptions import InsufficientData, ZeroTangent
from spdflow.core.utils.folder_setup import folder_setup
from spdflow.core.utils.geometry import Geometry, n_coords
from spdflow.core.utils.serialize import load_series, save_table, write_json
from spdflow.core.utils.stats import (
    classical_mds,
    direction_cosines,
    frechet_mean,
    pairwise_distances,
    tangent_pca,
)

logger = logging.getLogger("spdflow_logger")

# squared-distance scale below which a spread counts as zero
DEGENERATE_VARIANCE = 1e-20


def diagnose_series(
    project_path,
    series_path,
    geometry,
    mds_dims=2,
    pca_dims=2,
    frechet_tol=1e-9,
    frechet_max_iter=200,
):
    """
    Descriptive diagnostics of a covariance series.

    Writes to ``Results/Diagnose/<name>``: the Fréchet mean and variance, the
    cosines between successive directions, tangent-PCA scores and eigenvalues,
    the pairwise distance matrix and its MDS coordinates. Diagnostics that are
    undefined for the series (e.g. a constant series) are listed under
    ``degenerate`` in ``summary.json`` instead of failing the run.

    Returns
    -------
    dict
        The summary written to ``summary.json``.
    """
    geometry = Geometry.parse(geometry)
    name = Path(series_path).stem
    result_path = folder_setup(project_path, "diagnose") / name
    result_path.mkdir(parents=True, exist_ok=True)

    series = load_series(series_path)
    degenerate = []
    logger.info(f"{name} - diagnosing {series.n} points ({geometry.value} geometry)")

    mean = frechet_mean(geometry, series, frechet_tol, frechet_max_iter)
    if mean.variance <= DEGENERATE_VARIANCE:
        degenerate.append("frechet_variance")

    try:
        cosines = direction_cosines(geometry, series)
        save_table(
            result_path / "direction_cosines.csv",
            pd.DataFrame({"step": np.arange(2, len(cosines) + 2), "cosine": cosines}),
        )
        mean_cosine = float(np.mean(cosines))
        logger.info(f"{name} - mean direction cosine {mean_cosine:.3f}")
    except (ZeroTangent, InsufficientData) as e:
        logger.warning(f"{name} - direction cosines undefined: {e}")
        degenerate.append("direction_cosines")
        mean_cosine = float("nan")

    pca_proportion = float("nan")
    if series.n >= 2:
        pca = tangent_pca(geometry, series, min(pca_dims, n_coords(series.p)))
        scores = pd.DataFrame(
            pca.scores, columns=[f"pc{i + 1}" for i in range(pca.scores.shape[1])]
        )
        scores.insert(0, "step", np.arange(1, len(scores) + 1))
        save_table(result_path / "tangent_pca_scores.csv", scores)
        save_table(
            result_path / "tangent_pca_eigenvalues.csv",
            pd.DataFrame(
                {"component": np.arange(1, len(pca.eigenvalues) + 1), "eigenvalue": pca.eigenvalues}
            ),
        )
        pca_proportion = pca.proportion
        if np.sum(pca.eigenvalues) <= DEGENERATE_VARIANCE:
            degenerate.append("tangent_pca")
    else:
        degenerate.append("tangent_pca")

    D = pairwise_distances(geometry, series)
    save_table(result_path / "distances.csv", pd.DataFrame(D))
    mds = classical_mds(D, min(mds_dims, series.n))
    coords = pd.DataFrame(mds.coords, columns=[f"dim{i + 1}" for i in range(mds.coords.shape[1])])
    coords.insert(0, "step", np.arange(1, series.n + 1))
    save_table(result_path / "mds.csv", coords)
    if np.max(D) ** 2 <= DEGENERATE_VARIANCE:
        degenerate.append("mds")

    summary = {
        "series": name,
        "geometry": geometry.value,
        "frechet_mean": mean.mean,
        "frechet_variance": mean.variance,
        "frechet_iterations": mean.iterations,
        "frechet_gradient_norm": mean.final_gradient_norm,
        "mean_direction_cosine": mean_cosine,
        "pca_proportion": pca_proportion,
        "mds_proportion": mds.proportion,
        "degenerate": degenerate,
    }
    write_json(result_path / "summary.json", summary)
    if degenerate:
        logger.warning(f"{name} - degenerate diagnostics: {', '.join(degenerate)}")
    return summary
