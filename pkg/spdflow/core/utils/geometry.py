"""Riemannian operations on Sym(p) (Euclidean metric) and SPD(p) (affine-invariant metric).

Points and tangent vectors are plain ``numpy.ndarray`` objects of shape (p, p).
Tangent vectors are symmetric matrices; their base point is passed explicitly to
every operation that needs it. All functions are pure and return new arrays.
"""

import logging
from enum import Enum

import numpy as np
from scipy import linalg

from spdflow.core.utils.exceptions import (
    DimensionMismatch,
    IndexOutOfRange,
    NonPositiveEigenvalue,
)

logger = logging.getLogger("spdflow_logger")

# eigenvalues must exceed EPS_PD_RELATIVE * largest eigenvalue
EPS_PD_RELATIVE = 1e-12

SQRT2 = np.sqrt(2.0)


class Geometry(str, Enum):
    EUCLIDEAN = "euclidean"
    AFFINE = "affine"

    @classmethod
    def parse(cls, name):
        """Accept enum members and the usual spellings of both geometries."""
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        if key in ("euclidean", "euclid", "frobenius"):
            return cls.EUCLIDEAN
        if key in ("affine", "affine_invariant", "affineinvariant", "riemann"):
            return cls.AFFINE
        raise ValueError(f"Unknown geometry: {name}")


class MatrixFunction(str, Enum):
    EXP = "exp"
    LOG = "log"
    SQRT = "sqrt"
    INVSQRT = "invsqrt"


_SPECTRAL_FUNCTIONS = {
    MatrixFunction.EXP: np.exp,
    MatrixFunction.LOG: np.log,
    MatrixFunction.SQRT: np.sqrt,
    MatrixFunction.INVSQRT: lambda lam: 1.0 / np.sqrt(lam),
}


def symmetrize(X):
    """Return (X + X^T) / 2 over the last two axes."""
    X = np.asarray(X, dtype=float)
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def n_coords(p):
    """Dimension m = p(p+1)/2 of Sym(p)."""
    return p * (p + 1) // 2


def dim_from_coords(m):
    """Invert m = p(p+1)/2."""
    p = int(round((np.sqrt(8 * m + 1) - 1) / 2))
    if n_coords(p) != m:
        raise DimensionMismatch(expected="triangular number", got=m)
    return p


def frame_index(i, p):
    """Map a 1-based frame index i to the 1-based pair (q, r), q <= r.

    Pairs are ordered lexicographically: 1 -> (1, 1), 2 -> (1, 2), ..., m -> (p, p).
    """
    m = n_coords(p)
    if not 1 <= i <= m:
        raise IndexOutOfRange(i, m)
    rows, cols = np.triu_indices(p)
    return int(rows[i - 1]) + 1, int(cols[i - 1]) + 1


def _check_square(X, p=None):
    X = np.asarray(X, dtype=float)
    if X.ndim < 2 or X.shape[-1] != X.shape[-2]:
        raise DimensionMismatch(expected="square matrix", got=X.shape)
    if p is not None and X.shape[-1] != p:
        raise DimensionMismatch(expected=p, got=X.shape[-1])
    return X


def _pd_threshold(eigvals, eps_pd):
    if eps_pd is not None:
        return eps_pd
    return EPS_PD_RELATIVE * max(float(np.max(eigvals)), 0.0)


def _raise_if_not_pd(eigvals, eps_pd):
    """Raise on the first eigenvalue <= threshold in each matrix of the batch."""
    eigvals = np.atleast_2d(eigvals)
    for lam in eigvals:
        threshold = _pd_threshold(lam, eps_pd)
        bad = np.flatnonzero(lam <= threshold)
        if bad.size:
            raise NonPositiveEigenvalue(index=int(bad[0]), value=float(lam[bad[0]]))


def sym_matrix_fn(S, fn, eps_pd=None):
    """
    Apply a scalar function to a symmetric matrix through its eigendecomposition.

    Parameters
    ----------
    S : numpy.ndarray
        Symmetric matrix of shape (p, p), or a stack of shape (..., p, p).
    fn : MatrixFunction or str
        One of ``exp``, ``log``, ``sqrt`` or ``invsqrt``.
    eps_pd : float, optional
        Absolute positivity threshold for ``log``, ``sqrt`` and ``invsqrt``.
        Defaults to 1e-12 times the largest eigenvalue of each matrix.

    Returns
    -------
    numpy.ndarray
        Q fn(Lambda) Q^T, re-symmetrized.

    Raises
    ------
    NonPositiveEigenvalue
        If ``fn`` needs a positive spectrum and an eigenvalue is <= eps_pd.
    """
    fn = MatrixFunction(fn)
    S = symmetrize(_check_square(S))
    if not np.all(np.isfinite(S)):
        raise NonPositiveEigenvalue(index=0, value=float("nan"))
    eigvals, eigvecs = np.linalg.eigh(S)
    if fn is not MatrixFunction.EXP:
        _raise_if_not_pd(eigvals.reshape(-1, eigvals.shape[-1]), eps_pd)
    values = _SPECTRAL_FUNCTIONS[fn](eigvals)
    out = (eigvecs * values[..., None, :]) @ np.swapaxes(eigvecs, -1, -2)
    return symmetrize(out)


def _sqrt_and_invsqrt(S):
    """Square root and inverse square root of an SPD matrix from one eigh call."""
    eigvals, eigvecs = np.linalg.eigh(S)
    _raise_if_not_pd(eigvals, None)
    root = np.sqrt(eigvals)
    sqrt_s = symmetrize((eigvecs * root) @ eigvecs.T)
    invsqrt_s = symmetrize((eigvecs / root) @ eigvecs.T)
    return sqrt_s, invsqrt_s


def check_spd(S, eps_pd=None):
    """
    Validate an SPD point and return its symmetrized copy.

    Raises
    ------
    NonPositiveEigenvalue
        If any eigenvalue is <= eps_pd (default 1e-12 x largest eigenvalue).
    """
    S = symmetrize(_check_square(S))
    if not np.all(np.isfinite(S)):
        raise NonPositiveEigenvalue(index=0, value=float("nan"))
    _raise_if_not_pd(np.linalg.eigvalsh(S), eps_pd)
    return S


def is_pd(S, eps_pd=None):
    """True when ``check_spd`` would accept S."""
    try:
        check_spd(S, eps_pd)
    except NonPositiveEigenvalue:
        return False
    return True


def _point(g, S, p=None):
    S = _check_square(S, p)
    if g is Geometry.AFFINE:
        return check_spd(S)
    return symmetrize(S)


def inner(g, S, V, W):
    """
    Riemannian inner product of tangent vectors V, W at S.

    Euclidean: tr(VW). Affine-invariant: tr(S^-1 V S^-1 W).
    """
    g = Geometry.parse(g)
    S = _point(g, S)
    p = S.shape[0]
    V = symmetrize(_check_square(V, p))
    W = symmetrize(_check_square(W, p))
    if g is Geometry.EUCLIDEAN:
        return float(np.sum(V * W))
    s_inv_v = linalg.solve(S, V, assume_a="pos")
    s_inv_w = linalg.solve(S, W, assume_a="pos")
    return float(np.sum(s_inv_v * s_inv_w.T))


def norm(g, S, V):
    """Riemannian norm of V at S."""
    return float(np.sqrt(max(inner(g, S, V, V), 0.0)))


def dist(g, S1, S2):
    """
    Geodesic distance between two points.

    Euclidean: Frobenius norm of S1 - S2. Affine-invariant: sqrt(sum log^2 lambda_r)
    over the eigenvalues of S1^-1/2 S2 S1^-1/2, obtained here as the generalized
    eigenvalues of the pencil (S2, S1).
    """
    g = Geometry.parse(g)
    S1 = _point(g, S1)
    S2 = _point(g, S2, S1.shape[0])
    if g is Geometry.EUCLIDEAN:
        return float(np.linalg.norm(S1 - S2, "fro"))
    eigvals = linalg.eigvalsh(S2, S1)
    return float(np.sqrt(np.sum(np.log(eigvals) ** 2)))


def exp_map(g, S, V, return_pd_flag=False):
    """
    Riemannian exponential of V at S.

    Parameters
    ----------
    g : Geometry
        Metric selector.
    S : numpy.ndarray
        Base point.
    V : numpy.ndarray
        Symmetric tangent vector at S.
    return_pd_flag : bool, optional
        If True, also return whether the result is positive definite. Only the
        Euclidean exponential S + V can leave SPD(p); it is returned regardless.

    Returns
    -------
    numpy.ndarray or tuple
        The point Exp_S(V), or ``(point, is_pd)`` when ``return_pd_flag`` is set.
    """
    g = Geometry.parse(g)
    S = _point(g, S)
    V = symmetrize(_check_square(V, S.shape[0]))
    if g is Geometry.EUCLIDEAN:
        out = symmetrize(S + V)
        pd_flag = is_pd(out)
        if not pd_flag:
            logger.debug("Euclidean exponential left SPD(p).")
    else:
        sqrt_s, invsqrt_s = _sqrt_and_invsqrt(S)
        inner_exp = sym_matrix_fn(invsqrt_s @ V @ invsqrt_s, MatrixFunction.EXP)
        out = symmetrize(sqrt_s @ inner_exp @ sqrt_s)
        pd_flag = True
    if return_pd_flag:
        return out, pd_flag
    return out


def log_map(g, S1, S2):
    """
    Riemannian logarithm: the tangent vector at S1 pointing to S2.

    Euclidean: S2 - S1. Affine-invariant: S1^1/2 log(S1^-1/2 S2 S1^-1/2) S1^1/2.
    """
    g = Geometry.parse(g)
    S1 = _point(g, S1)
    S2 = _point(g, S2, S1.shape[0])
    if g is Geometry.EUCLIDEAN:
        return symmetrize(S2 - S1)
    sqrt_s, invsqrt_s = _sqrt_and_invsqrt(S1)
    inner_log = sym_matrix_fn(invsqrt_s @ S2 @ invsqrt_s, MatrixFunction.LOG)
    return symmetrize(sqrt_s @ inner_log @ sqrt_s)


def transport_operator(g, S1, S2):
    """
    Matrix E such that parallel transport from S1 to S2 is V -> E V E^T.

    For the affine-invariant metric E = (S2 S1^-1)^1/2, computed through the
    congruence form S1^1/2 (S1^-1/2 S2 S1^-1/2)^1/2 S1^-1/2 so that only
    symmetric square roots are taken.
    """
    g = Geometry.parse(g)
    S1 = _point(g, S1)
    S2 = _point(g, S2, S1.shape[0])
    if g is Geometry.EUCLIDEAN:
        return np.eye(S1.shape[0])
    sqrt_s1, invsqrt_s1 = _sqrt_and_invsqrt(S1)
    middle = sym_matrix_fn(invsqrt_s1 @ S2 @ invsqrt_s1, MatrixFunction.SQRT)
    return sqrt_s1 @ middle @ invsqrt_s1


def parallel_transport(g, S1, S2, V):
    """Parallel transport of V from T_S1 to T_S2 along the connecting geodesic."""
    g = Geometry.parse(g)
    V = symmetrize(_check_square(V, np.shape(S1)[-1]))
    if g is Geometry.EUCLIDEAN:
        _check_square(S2, V.shape[0])
        return V
    E = transport_operator(g, S1, S2)
    return symmetrize(E @ V @ E.T)


def euclidean_basis(p, i):
    """Orthonormal basis element E_qr of Sym(p) for the 1-based index i."""
    q, r = frame_index(i, p)
    E = np.zeros((p, p))
    if q == r:
        E[q - 1, q - 1] = 1.0
    else:
        E[q - 1, r - 1] = E[r - 1, q - 1] = SQRT2 / 2
    return E


def frame(g, S, i):
    """
    Element i of the orthonormal parallel frame at S.

    Euclidean: E_qr. Affine-invariant: S^1/2 E_qr S^1/2.
    """
    g = Geometry.parse(g)
    S = _point(g, S)
    E = euclidean_basis(S.shape[0], i)
    if g is Geometry.EUCLIDEAN:
        return E
    sqrt_s, _ = _sqrt_and_invsqrt(S)
    return symmetrize(sqrt_s @ E @ sqrt_s)


def sym_to_vec(W):
    """Coordinates of a symmetric matrix in the Euclidean basis E_qr (last two axes)."""
    W = np.asarray(W, dtype=float)
    p = W.shape[-1]
    rows, cols = np.triu_indices(p)
    weights = np.where(rows == cols, 1.0, SQRT2)
    return W[..., rows, cols] * weights


def vec_to_sym(v, p=None):
    """Inverse of ``sym_to_vec``."""
    v = np.asarray(v, dtype=float)
    m = v.shape[-1]
    if p is None:
        p = dim_from_coords(m)
    elif n_coords(p) != m:
        raise DimensionMismatch(expected=n_coords(p), got=m)
    rows, cols = np.triu_indices(p)
    weights = np.where(rows == cols, 1.0, 1.0 / SQRT2)
    W = np.zeros(v.shape[:-1] + (p, p))
    W[..., rows, cols] = v * weights
    W[..., cols, rows] = v * weights
    return W


def to_coords(g, S, V):
    """
    Coordinate vector of V in the parallel frame at S.

    The i-th coordinate is inner(g, S, V, frame(g, S, i)); for the affine metric
    this equals the Euclidean coordinates of S^-1/2 V S^-1/2.
    """
    g = Geometry.parse(g)
    S = _point(g, S)
    V = symmetrize(_check_square(V, S.shape[0]))
    if g is Geometry.EUCLIDEAN:
        return sym_to_vec(V)
    _, invsqrt_s = _sqrt_and_invsqrt(S)
    return sym_to_vec(invsqrt_s @ V @ invsqrt_s)


def from_coords(g, S, v):
    """Tangent vector at S with coordinate vector v; inverse of ``to_coords``."""
    g = Geometry.parse(g)
    S = _point(g, S)
    W = vec_to_sym(v, S.shape[0])
    if g is Geometry.EUCLIDEAN:
        return W
    sqrt_s, _ = _sqrt_and_invsqrt(S)
    return symmetrize(sqrt_s @ W @ sqrt_s)
