"""Manifold statistics: Fréchet means, wrapped Gaussian sampling, MDS and tangent diagnostics."""

import logging
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from spdflow.core.utils.exceptions import (
    DimensionError,
    InsufficientData,
    NoConvergence,
    NotPSD,
    ZeroTangent,
)
from spdflow.core.utils.geometry import (
    Geometry,
    MatrixFunction,
    _sqrt_and_invsqrt,
    check_spd,
    dist,
    exp_map,
    from_coords,
    inner,
    log_map,
    n_coords,
    norm,
    parallel_transport,
    symmetrize,
    sym_matrix_fn,
    to_coords,
)

logger = logging.getLogger("spdflow_logger")

MAX_STEP_HALVINGS = 5
NOT_PSD_RELATIVE = 1e-10


@dataclass(frozen=True)
class FrechetResult:
    mean: np.ndarray
    variance: float
    iterations: int
    final_gradient_norm: float


@dataclass(frozen=True)
class MdsResult:
    coords: np.ndarray
    eigenvalues: np.ndarray
    proportion: float


@dataclass(frozen=True)
class TangentPcaResult:
    scores: np.ndarray
    eigenvalues: np.ndarray
    proportion: float


def _as_points(points):
    """Accept a CovSeries-like object or anything array-like of shape (n, p, p)."""
    points = getattr(points, "points", points)
    points = np.asarray(points, dtype=float)
    if points.ndim != 3 or points.shape[1] != points.shape[2]:
        raise DimensionError(f"Expected a stack of square matrices, got {points.shape}.")
    return symmetrize(points)


def frechet_mean(g, points, tol=1e-9, max_iter=200):
    """
    Fréchet sample mean and variance.

    Parameters
    ----------
    g : Geometry
        Metric selector.
    points : array-like or CovSeries
        Sample of n >= 1 points, shape (n, p, p).
    tol : float, optional
        Stop once the Riemannian norm of the mean logarithm falls below tol.
    max_iter : int, optional
        Iterations per step size before the step is halved.

    Returns
    -------
    FrechetResult
        Mean, variance (mean squared distance at the mean), iteration count and
        final gradient norm.

    Notes
    -----
    For the affine-invariant metric the update is S <- Exp_S(tau * mean_i Log_S(x_i))
    starting from the arithmetic mean with tau = 1. When the Fréchet function
    increases, or max_iter iterations pass without convergence, the last step is
    undone and tau is halved, at most MAX_STEP_HALVINGS times.
    """
    g = Geometry.parse(g)
    points = _as_points(points)
    n = points.shape[0]
    if n < 1:
        raise InsufficientData("Fréchet mean needs at least one point.")
    if tol <= 0:
        raise ValueError("tol must be positive.")

    if g is Geometry.EUCLIDEAN:
        mean = symmetrize(points.mean(axis=0))
        deviations = points - mean
        variance = float(np.mean(np.sum(deviations**2, axis=(1, 2))))
        gradient_norm = float(np.linalg.norm(deviations.mean(axis=0), "fro"))
        return FrechetResult(mean, variance, 1, gradient_norm)

    for point in points:
        check_spd(point)

    def evaluate(S):
        sqrt_s, invsqrt_s = _sqrt_and_invsqrt(S)
        logs = sym_matrix_fn(invsqrt_s @ points @ invsqrt_s, MatrixFunction.LOG)
        value = float(np.mean(np.sum(logs**2, axis=(1, 2))))
        gradient = logs.mean(axis=0)
        return sqrt_s, gradient, value, float(np.linalg.norm(gradient, "fro"))

    S = symmetrize(points.mean(axis=0))
    sqrt_s, gradient, value, gradient_norm = evaluate(S)
    step = 1.0
    iterations = 0

    for attempt in range(MAX_STEP_HALVINGS + 1):
        for _ in range(max_iter):
            if gradient_norm < tol:
                logger.debug(
                    f"Fréchet mean converged after {iterations} iterations "
                    f"(gradient norm {gradient_norm:.2e})"
                )
                return FrechetResult(S, value, iterations, gradient_norm)
            candidate = symmetrize(
                sqrt_s @ sym_matrix_fn(step * gradient, MatrixFunction.EXP) @ sqrt_s
            )
            iterations += 1
            evaluated = evaluate(candidate)
            if evaluated[2] > value * (1 + 1e-10):
                break
            S = candidate
            sqrt_s, gradient, value, gradient_norm = evaluated
        if gradient_norm < tol:
            return FrechetResult(S, value, iterations, gradient_norm)
        if attempt < MAX_STEP_HALVINGS:
            step *= 0.5
            logger.debug(f"Fréchet mean: halving step size to {step}")

    raise NoConvergence(iterations, gradient_norm)


def frechet_function(g, y, points):
    """Mean squared distance from y to the sample."""
    points = _as_points(points)
    return float(np.mean([dist(g, y, x) ** 2 for x in points]))


def _noise_factor(Sigma):
    """Left factor F with F F^T = Sigma; Cholesky first, symmetric root when singular."""
    try:
        return linalg.cholesky(Sigma, lower=True)
    except linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(Sigma)
        return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def sample_wrapped_gaussian(g, S, w, Sigma, rng, return_pd_flag=False):
    """
    Draw one point from the wrapped Gaussian centred at S.

    Y ~ N(w, Sigma) is drawn in the parallel-frame coordinates at S, mapped to the
    tangent vector U = from_coords(g, S, Y) and pushed to the manifold by Exp_S(U).

    Parameters
    ----------
    g : Geometry
        Metric selector.
    S : numpy.ndarray
        Centre point.
    w : array-like
        Mean of the tangent coordinates, length m.
    Sigma : array-like
        Covariance of the tangent coordinates, m x m, symmetric PSD.
    rng : numpy.random.Generator
        Source of randomness; the only stateful input.
    return_pd_flag : bool, optional
        Forwarded to ``exp_map``.

    Raises
    ------
    NotPSD
        If Sigma has an eigenvalue below -1e-10 times its spectral norm.
    """
    g = Geometry.parse(g)
    w = np.asarray(w, dtype=float)
    Sigma = symmetrize(np.atleast_2d(np.asarray(Sigma, dtype=float)))
    m = n_coords(np.shape(S)[-1])
    if w.shape != (m,) or Sigma.shape != (m, m):
        raise DimensionError(
            f"Wrapped Gaussian on p={np.shape(S)[-1]} needs w of length {m} "
            f"and Sigma of shape ({m}, {m})."
        )
    eigvals = np.linalg.eigvalsh(Sigma)
    scale = float(np.max(np.abs(eigvals)))
    if eigvals[0] < -NOT_PSD_RELATIVE * scale:
        raise NotPSD(float(eigvals[0]))
    y = w + _noise_factor(Sigma) @ rng.standard_normal(m)
    return exp_map(g, S, from_coords(g, S, y), return_pd_flag=return_pd_flag)


def classical_mds(D, d):
    """
    Classical (Torgerson) multidimensional scaling.

    Parameters
    ----------
    D : array-like
        Symmetric n x n matrix of nonnegative distances with zero diagonal.
    d : int
        Embedding dimension.

    Returns
    -------
    MdsResult
        Coordinates (n x d), all n eigenvalues of the double-centred matrix in
        descending order, and the eigenvalue ratio of the top d positive
        eigenvalues over all positive eigenvalues.
    """
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise DimensionError(f"Distance matrix must be square, got {D.shape}.")
    n = D.shape[0]
    if d > n:
        raise DimensionError(f"Cannot embed {n} points in {d} dimensions.")
    if not np.allclose(D, D.T, atol=1e-10) or np.any(np.diag(D) != 0) or np.any(D < 0):
        raise ValueError("D must be symmetric, nonnegative, with a zero diagonal.")

    centering = np.eye(n) - np.ones((n, n)) / n
    B = -0.5 * centering @ (D**2) @ centering
    eigvals, eigvecs = np.linalg.eigh(symmetrize(B))
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]

    tolerance = 1e-12 * max(float(np.max(np.abs(eigvals))), np.finfo(float).tiny)
    positive = eigvals > tolerance
    coords = eigvecs[:, :d] * np.sqrt(np.where(positive[:d], eigvals[:d], 0.0))
    total = float(np.sum(eigvals[positive]))
    if total > 0:
        proportion = float(np.sum(eigvals[:d][positive[:d]]) / total)
    else:
        # all points coincide
        proportion = 1.0
    return MdsResult(coords, eigvals, proportion)


def pairwise_distances(g, points):
    """Symmetric n x n matrix of geodesic distances between points."""
    points = _as_points(points)
    n = points.shape[0]
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = dist(g, points[i], points[j])
    return D


def direction_cosines(g, series):
    """
    Normalised inner products between successive tangent directions.

    For k = 2..n-1 returns g(V_k, V_{k,1}) / (|V_k| |V_{k,1}|) at S_k, where
    V_k = Log_{S_k}(S_{k+1}) and V_{k,1} is V_{k-1} transported from S_{k-1} to
    S_k. Values near -1 indicate a reversal of direction.

    Raises
    ------
    ZeroTangent
        If some V_k has (numerically) zero norm.
    """
    g = Geometry.parse(g)
    points = _as_points(series)
    n = points.shape[0]
    if n < 3:
        raise InsufficientData("Direction cosines need at least 3 points.")
    directions = [log_map(g, points[i], points[i + 1]) for i in range(n - 1)]
    norms = np.array([norm(g, points[i], V) for i, V in enumerate(directions)])
    threshold = 1e-12 * max(1.0, float(np.max(norms)))
    small = np.flatnonzero(norms <= threshold)
    if small.size:
        raise ZeroTangent(int(small[0]) + 1)

    cosines = np.empty(n - 2)
    for k in range(1, n - 1):
        lagged = parallel_transport(g, points[k - 1], points[k], directions[k - 1])
        value = inner(g, points[k], directions[k], lagged) / (norms[k] * norms[k - 1])
        cosines[k - 1] = np.clip(value, -1.0, 1.0)
    return cosines


def transported_coords(g, series, reference=None):
    """
    Coordinates at a reference point (default identity) of all directions V_i.

    Each V_i = Log_{S_i}(S_{i+1}) is transported from S_i to the reference point
    and expressed in the frame there; returns an (n-1) x m array.
    """
    g = Geometry.parse(g)
    points = _as_points(series)
    p = points.shape[1]
    reference = np.eye(p) if reference is None else np.asarray(reference, dtype=float)
    rows = []
    for i in range(points.shape[0] - 1):
        V = log_map(g, points[i], points[i + 1])
        rows.append(
            to_coords(g, reference, parallel_transport(g, points[i], reference, V))
        )
    return np.array(rows).reshape(-1, n_coords(p))


def tangent_pca(g, series, d):
    """
    PCA of tangent directions transported to the identity.

    Parameters
    ----------
    g : Geometry
        Metric selector.
    series : CovSeries or array-like
        Series of n >= 2 points.
    d : int
        Number of components to score.

    Returns
    -------
    TangentPcaResult
        Scores ((n-1) x d) of the centred coordinates, all m eigenvalues in
        descending order, and the proportion of variance in the top d.
    """
    points = _as_points(series)
    if points.shape[0] < 2:
        raise InsufficientData("Tangent PCA needs at least 2 points.")
    X = transported_coords(g, points)
    m = X.shape[1]
    if d > m:
        raise DimensionError(f"Cannot keep {d} of {m} components.")
    centred = X - X.mean(axis=0)
    covariance = centred.T @ centred / max(X.shape[0] - 1, 1)
    eigvals, eigvecs = np.linalg.eigh(symmetrize(covariance))
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    scores = centred @ eigvecs[:, :d]
    total = float(np.sum(eigvals))
    proportion = float(np.sum(eigvals[:d]) / total) if total > 0 else float("nan")
    return TangentPcaResult(scores, eigvals, proportion)
