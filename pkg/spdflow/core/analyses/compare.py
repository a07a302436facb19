import logging

import numpy as np
import pandas as pd
from sklearn.metrics import silhouette_score

from spdflow.core.utils.folder_setup import folder_setup
from spdflow.core.utils.inference import mahalanobis_compare
from spdflow.core.utils.serialize import load_fit_summary, save_table, write_json

logger = logging.getLogger("spdflow_logger")


def compare_fits(project_path, fit_paths, groups=None, mds_dims=2):
    """
    Mahalanobis distances between scalar fits and their MDS configuration.

    Writes ``distances.csv`` (labelled square matrix) and ``mds.csv``. When group
    labels are given, the silhouette score of the labels on the distance matrix
    is written to ``silhouette.json``.

    Returns
    -------
    SeizureComparison
    """
    result_path = folder_setup(project_path, "compare")
    fits = [load_fit_summary(path) for path in fit_paths]
    labels = [fit.source for fit in fits]
    logger.info(f"Comparing {len(fits)} fits: {', '.join(labels)}")

    comparison = mahalanobis_compare(fits, mds_dims)

    distances = pd.DataFrame(comparison.distances, columns=labels)
    distances.insert(0, "series", labels)
    save_table(result_path / "distances.csv", distances)

    mds = pd.DataFrame(
        comparison.mds.coords,
        columns=[f"dim{i + 1}" for i in range(comparison.mds.coords.shape[1])],
    )
    mds.insert(0, "series", labels)
    if groups:
        mds.insert(1, "group", groups)
    save_table(result_path / "mds.csv", mds)
    logger.info(f"MDS keeps {comparison.mds.proportion:.1%} of the distance variation")

    if groups:
        n_groups = len(set(groups))
        if 2 <= n_groups <= len(groups) - 1:
            score = float(
                silhouette_score(comparison.distances, np.asarray(groups), metric="precomputed")
            )
            logger.info(f"Silhouette score of the groups: {score:.3f}")
        else:
            score = float("nan")
            logger.warning("Silhouette score needs between 2 and n-1 distinct groups.")
        write_json(result_path / "silhouette.json", {"groups": n_groups, "silhouette": score})

    return comparison
