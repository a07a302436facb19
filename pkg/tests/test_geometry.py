import numpy as np
import pytest

from spdflow.core.utils.exceptions import (
    DimensionMismatch,
    IndexOutOfRange,
    NonPositiveEigenvalue,
)
from spdflow.core.utils.geometry import (
    Geometry,
    MatrixFunction,
    dist,
    exp_map,
    frame,
    frame_index,
    from_coords,
    inner,
    log_map,
    n_coords,
    norm,
    parallel_transport,
    sym_matrix_fn,
    to_coords,
)
from tests.utils import random_spd, random_sym

AFFINE = Geometry.AFFINE
EUCLIDEAN = Geometry.EUCLIDEAN


def rel_err(A, B):
    return np.linalg.norm(A - B) / max(np.linalg.norm(B), 1e-300)


@pytest.fixture(scope="module")
def rng():
    return np.random.default_rng(2024)


"""Matrix function kernel"""


def test_sym_matrix_fn_diagonal_cases():
    assert np.allclose(sym_matrix_fn(np.diag([1.0, 4.0]), MatrixFunction.SQRT), np.diag([1.0, 2.0]))
    assert np.allclose(sym_matrix_fn(np.zeros((2, 2)), "exp"), np.eye(2))
    assert np.allclose(sym_matrix_fn(np.diag([4.0, 0.25]), "invsqrt"), np.diag([0.5, 2.0]))


def test_sym_matrix_fn_log_exp_roundtrip(rng):
    S = random_spd(rng, 5)
    back = sym_matrix_fn(sym_matrix_fn(S, "log"), "exp")
    assert rel_err(back, S) < 1e-10


def test_sym_matrix_fn_rejects_nonpositive():
    with pytest.raises(NonPositiveEigenvalue) as excinfo:
        sym_matrix_fn(np.diag([1.0, -1.0]), "log")
    assert excinfo.value.value == -1.0
    with pytest.raises(NonPositiveEigenvalue):
        sym_matrix_fn(np.diag([1.0, 0.0]), "sqrt")


def test_sym_matrix_fn_symmetrizes_input():
    S = np.array([[2.0, 1.0], [0.0, 2.0]])
    out = sym_matrix_fn(S, "sqrt")
    assert np.array_equal(out, out.T)


"""Inner products, norms, distances"""


def test_inner_examples():
    V = np.diag([1.0, -1.0])
    assert inner(EUCLIDEAN, random_spd(np.random.default_rng(0), 2), np.eye(2), np.eye(2)) == 2.0
    assert np.isclose(inner(AFFINE, np.eye(2), V, V), 2.0)


def test_inner_affine_scaling():
    S = 2 * np.eye(2)
    assert np.isclose(inner(AFFINE, S, np.eye(2), np.eye(2)), 0.5)


def test_inner_symmetric_bilinear(rng):
    S = random_spd(rng, 4)
    V, W, U = random_sym(rng, 4), random_sym(rng, 4), random_sym(rng, 4)
    assert np.isclose(inner(AFFINE, S, V, W), inner(AFFINE, S, W, V))
    assert np.isclose(
        inner(AFFINE, S, 2 * V + U, W), 2 * inner(AFFINE, S, V, W) + inner(AFFINE, S, U, W)
    )


def test_inner_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        inner(EUCLIDEAN, np.eye(2), np.eye(2), np.eye(3))


def test_dist_examples():
    assert np.isclose(dist(AFFINE, np.eye(2), np.e * np.eye(2)), np.sqrt(2))
    assert np.isclose(dist(EUCLIDEAN, np.eye(2), 3 * np.eye(2)), 2 * np.sqrt(2))
    assert dist(AFFINE, np.eye(3), np.eye(3)) == 0.0


@pytest.mark.parametrize("p", [2, 5, 15])
def test_dist_matches_log_norm(rng, p):
    for _ in range(20):
        S1, S2 = random_spd(rng, p), random_spd(rng, p)
        assert abs(dist(AFFINE, S1, S2) - norm(AFFINE, S1, log_map(AFFINE, S1, S2))) < 1e-9


@pytest.mark.parametrize("p", [2, 5, 15])
def test_affine_invariance(rng, p):
    for _ in range(20):
        S1, S2 = random_spd(rng, p), random_spd(rng, p)
        A = np.linalg.qr(rng.standard_normal((p, p)))[0] @ np.diag(rng.uniform(0.5, 2.0, p))
        moved = dist(AFFINE, A @ S1 @ A.T, A @ S2 @ A.T)
        assert abs(moved - dist(AFFINE, S1, S2)) < 1e-8 * max(1.0, moved)


"""Exponential and logarithm"""


def test_exp_log_examples():
    assert np.allclose(exp_map(AFFINE, np.eye(2), np.diag([1.0, 0.0])), np.diag([np.e, 1.0]))
    assert np.allclose(log_map(EUCLIDEAN, np.eye(2), 3 * np.eye(2)), 2 * np.eye(2))


@pytest.mark.parametrize("g", [AFFINE, EUCLIDEAN])
@pytest.mark.parametrize("p", [2, 5, 15])
def test_exp_log_roundtrip(rng, g, p):
    for _ in range(20):
        S1, S2 = random_spd(rng, p), random_spd(rng, p)
        assert rel_err(exp_map(g, S1, log_map(g, S1, S2)), S2) < 1e-8
        V = random_sym(rng, p, 0.3)
        assert rel_err(log_map(g, S1, exp_map(g, S1, V)), V) < 1e-8


def test_exp_affine_stays_spd(rng):
    S = random_spd(rng, 3)
    out = exp_map(AFFINE, S, random_sym(rng, 3, 5.0))
    assert np.all(np.linalg.eigvalsh(out) > 0)


def test_exp_euclidean_reports_leaving_spd():
    out, pd_flag = exp_map(EUCLIDEAN, np.eye(2), -2 * np.eye(2), return_pd_flag=True)
    assert np.allclose(out, -np.eye(2))
    assert not pd_flag


def test_log_rejects_non_spd():
    with pytest.raises(NonPositiveEigenvalue):
        log_map(AFFINE, np.eye(2), np.diag([1.0, -1.0]))


"""Parallel transport and frames"""


@pytest.mark.parametrize("p", [2, 5, 15])
def test_transport_isometry(rng, p):
    for _ in range(20):
        S1, S2 = random_spd(rng, p), random_spd(rng, p)
        V, W = random_sym(rng, p), random_sym(rng, p)
        moved_v = parallel_transport(AFFINE, S1, S2, V)
        moved_w = parallel_transport(AFFINE, S1, S2, W)
        before = inner(AFFINE, S1, V, W)
        after = inner(AFFINE, S2, moved_v, moved_w)
        assert abs(after - before) < 1e-9 * max(1.0, abs(before))


def test_transport_of_log_is_minus_log(rng):
    S1, S2 = random_spd(rng, 3), random_spd(rng, 3)
    moved = parallel_transport(AFFINE, S1, S2, log_map(AFFINE, S1, S2))
    assert rel_err(moved, -log_map(AFFINE, S2, S1)) < 1e-8


def test_transport_examples(rng):
    V = random_sym(rng, 3)
    assert np.allclose(parallel_transport(AFFINE, np.eye(3), np.eye(3), V), V)
    assert np.array_equal(parallel_transport(EUCLIDEAN, np.eye(3), random_spd(rng, 3), V), V)
    assert np.allclose(parallel_transport(AFFINE, np.eye(2), 4 * np.eye(2), V[:2, :2]), 4 * V[:2, :2])


def test_frame_index_order():
    assert frame_index(1, 3) == (1, 1)
    assert frame_index(2, 3) == (1, 2)
    assert frame_index(4, 3) == (2, 2)
    assert frame_index(6, 3) == (3, 3)
    with pytest.raises(IndexOutOfRange):
        frame_index(7, 3)
    with pytest.raises(IndexOutOfRange):
        frame_index(0, 3)


def test_frame_example():
    assert np.allclose(frame(EUCLIDEAN, np.eye(2), 2), np.array([[0, 1], [1, 0]]) / np.sqrt(2))


@pytest.mark.parametrize("p", [2, 5])
def test_frame_is_orthonormal(rng, p):
    S = random_spd(rng, p)
    m = n_coords(p)
    elements = [frame(AFFINE, S, i) for i in range(1, m + 1)]
    gram = np.array([[inner(AFFINE, S, A, B) for B in elements] for A in elements])
    assert np.abs(gram - np.eye(m)).max() < 1e-10


def test_coordinates_roundtrip_and_inner(rng):
    S = random_spd(rng, 4)
    V, W = random_sym(rng, 4), random_sym(rng, 4)
    v, w = to_coords(AFFINE, S, V), to_coords(AFFINE, S, W)
    assert v.shape == (10,)
    assert rel_err(from_coords(AFFINE, S, v), V) < 1e-10
    assert np.isclose(v @ w, inner(AFFINE, S, V, W))


def test_coordinates_of_frame_elements():
    S = np.diag([1.0, 4.0])
    assert np.allclose(to_coords(AFFINE, S, frame(AFFINE, S, 2)), [0.0, 1.0, 0.0])
