"""Utility functions for testing spdflow."""

import os.path as op

import numpy as np

from spdflow.core.utils.geometry import exp_map
from spdflow.core.utils.model import ScalarParams, simulate


def get_test_data_path():
    """Return the path to test datasets, terminated with separator.

    Test-related data are kept in tests folder in "data".
    """
    return op.abspath(op.join(op.dirname(__file__), "data") + op.sep)


def random_spd(rng, p, spread=1.0):
    """Random SPD matrix Q diag(exp(spread * u)) Q^T with a Haar-ish rotation."""
    Q, _ = np.linalg.qr(rng.standard_normal((p, p)))
    eigvals = np.exp(spread * rng.uniform(-1.0, 1.0, p))
    return (Q * eigvals) @ Q.T


def random_sym(rng, p, scale=1.0):
    X = scale * rng.standard_normal((p, p))
    return 0.5 * (X + X.T)


def simulate_scalar(
    alpha=(-0.3,), beta=0.2, sigma=0.05, p=3, n=500, seed=0, geometry="affine", attractor=None
):
    """Series from the scalar model; the seed history walks away from the attractor."""
    rng = np.random.default_rng(seed)
    if attractor is None:
        attractor = np.eye(p)
    params = ScalarParams(np.asarray(alpha, dtype=float), beta, sigma, attractor, geometry)
    step = 0.05 * np.diag(np.linspace(1.0, 2.0, p))
    init = np.array([exp_map(geometry, params.attractor, j * step) for j in range(params.L + 1)])
    return params, simulate(params, init, n, rng)
