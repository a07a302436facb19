import numpy as np
import pytest

from spdflow.core.utils.exceptions import (
    DimensionError,
    DimensionMismatch,
    InsufficientData,
)
from spdflow.core.utils.geometry import (
    Geometry,
    dist,
    exp_map,
    from_coords,
    log_map,
    parallel_transport,
    to_coords,
)
from spdflow.core.utils.model import (
    CovSeries,
    DiagParams,
    ScalarParams,
    build_dataset,
    extract_directions,
    simulate,
)
from tests.utils import random_spd, simulate_scalar

AFFINE = Geometry.AFFINE
EUCLIDEAN = Geometry.EUCLIDEAN


@pytest.fixture(scope="module")
def short_series():
    rng = np.random.default_rng(3)
    return CovSeries(np.array([random_spd(rng, 2, 0.5) for _ in range(6)]))


def test_cov_series_symmetrizes_and_flags():
    points = np.array([[[1.0, 0.2], [0.0, 1.0]]])
    series = CovSeries(points)
    assert np.array_equal(series.points[0], series.points[0].T)
    assert series.pd_flags.tolist() == [True]
    assert (series.n, series.p, len(series)) == (1, 2, 1)
    with pytest.raises(DimensionError):
        CovSeries(np.ones((2, 2, 3)))


def test_extract_directions(short_series):
    V = extract_directions(AFFINE, short_series)
    assert V.shape == (5, 2, 2)
    assert np.allclose(exp_map(AFFINE, short_series.points[2], V[2]), short_series.points[3])
    with pytest.raises(InsufficientData):
        extract_directions(AFFINE, short_series.points[:1])


def test_series_and_point_array_agree(short_series):
    points = short_series.points
    assert np.array_equal(
        extract_directions(AFFINE, short_series), extract_directions(AFFINE, points)
    )
    from_series = build_dataset(AFFINE, short_series, 1, np.eye(2))
    from_points = build_dataset(AFFINE, list(points), 1, np.eye(2))
    assert np.array_equal(from_series.response, from_points.response)
    assert np.array_equal(from_series.lagged, from_points.lagged)


def test_build_dataset_rows(short_series):
    attractor = np.eye(2)
    ds = build_dataset(AFFINE, short_series, 2, attractor)
    points = short_series.points
    assert ds.response.shape == (3, 3)
    assert ds.lagged.shape == (3, 2, 3)
    assert ds.attractor.shape == (3, 3)
    # first row is k = 3 (1-based): V_3 at S_3 with V_2 and V_1 transported to S_3
    base = points[2]
    assert np.allclose(ds.response[0], to_coords(AFFINE, base, log_map(AFFINE, base, points[3])))
    V1 = log_map(AFFINE, points[0], points[1])
    moved = parallel_transport(AFFINE, points[0], base, V1)
    assert np.allclose(ds.lagged[0, 1], to_coords(AFFINE, base, moved))
    assert np.allclose(ds.attractor[0], to_coords(AFFINE, base, log_map(AFFINE, base, attractor)))


def test_build_dataset_lag_zero(short_series):
    ds = build_dataset(AFFINE, short_series, 0, np.eye(2))
    assert ds.n_rows == 5
    assert ds.lagged.shape == (5, 0, 3)
    assert ds.regressors().shape == (5, 1, 3)
    assert ds.regressors(use_beta=False).shape == (5, 0, 3)


def test_build_dataset_errors(short_series):
    with pytest.raises(InsufficientData):
        build_dataset(AFFINE, short_series, 5, np.eye(2))
    with pytest.raises(DimensionMismatch):
        build_dataset(AFFINE, short_series, 1, np.eye(3))


def test_build_dataset_euclidean_is_flat(short_series):
    ds = build_dataset(EUCLIDEAN, short_series, 1, np.eye(2))
    diffs = np.diff(short_series.points, axis=0)
    assert np.allclose(ds.response[0], to_coords(EUCLIDEAN, np.eye(2), diffs[1]))
    assert np.allclose(ds.lagged[0, 0], to_coords(EUCLIDEAN, np.eye(2), diffs[0]))


def test_scalar_params_drift():
    params = ScalarParams([0.5, -0.25], 0.1, 0.2, np.eye(2))
    lagged = np.array([[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]])
    assert np.allclose(params.drift(lagged, np.ones(3)), [0.6, -0.4, 0.1])
    assert params.L == 2 and params.m == 3
    assert np.allclose(params.noise_covariance(), 0.04 * np.eye(3))
    with pytest.raises(ValueError):
        ScalarParams([0.1], 0.1, -1.0, np.eye(2))


def test_diag_params_drift():
    params = DiagParams([[1.0, 2.0, 3.0]], [0.0, 1.0, 0.0], [0.1, 0.2, 0.3], np.eye(2))
    lagged = np.ones((1, 3))
    assert np.allclose(params.drift(lagged, np.full(3, 2.0)), [1.0, 4.0, 3.0])
    assert np.allclose(params.noise_covariance(), np.diag([0.01, 0.04, 0.09]))


"""Simulation"""


def test_simulate_pins_to_attractor_without_noise():
    rng = np.random.default_rng(0)
    attractor = np.diag([2.0, 0.5])
    params = ScalarParams([], 1.0, 0.0, attractor)
    series = simulate(params, [np.eye(2)], 5, rng)
    assert series.n == 5
    for point in series.points[1:]:
        assert dist(AFFINE, point, attractor) < 1e-10


def test_simulate_zero_noise_matches_recursion():
    rng = np.random.default_rng(0)
    attractor = np.eye(2)
    params = ScalarParams([0.3], 0.5, 0.0, attractor)
    init = [np.diag([1.5, 1.0]), np.diag([1.2, 0.9])]
    series = simulate(params, init, 3, rng)
    S1, S2 = init
    lagged = to_coords(AFFINE, S2, parallel_transport(AFFINE, S1, S2, log_map(AFFINE, S1, S2)))
    v = 0.3 * lagged + 0.5 * to_coords(AFFINE, S2, log_map(AFFINE, S2, attractor))
    assert np.allclose(series.points[2], exp_map(AFFINE, S2, from_coords(AFFINE, S2, v)))


def test_simulate_is_reproducible():
    _, first = simulate_scalar(n=50, seed=9)
    _, second = simulate_scalar(n=50, seed=9)
    assert np.array_equal(first.points, second.points)
    assert first.meta["source"] == "simulated"


def test_simulate_validates_history():
    params = ScalarParams([0.1, 0.1], 0.2, 0.1, np.eye(2))
    with pytest.raises(DimensionError):
        simulate(params, [np.eye(2)], 10, np.random.default_rng(0))
    with pytest.raises(DimensionMismatch):
        simulate(params, [np.eye(3)] * 3, 10, np.random.default_rng(0))


def test_simulate_euclidean_flags_non_spd_points():
    params = ScalarParams([], 0.0, 2.0, np.eye(2), EUCLIDEAN)
    series = simulate(params, [np.eye(2)], 200, np.random.default_rng(1))
    assert series.pd_flags.dtype == bool
    assert not series.pd_flags.all()


def test_simulate_affine_points_stay_spd():
    _, series = simulate_scalar(alpha=(0.2,), beta=0.1, sigma=0.3, n=100, seed=4)
    assert series.pd_flags.all()
    assert np.all(np.linalg.eigvalsh(series.points) > 0)
