"""The manifold-adapted VAR model with mean reversion.

In the parallel frame at S_k the model reads

    v_k = sum_l A_l v_{k,l} + B v*_k + eps_k,    S_{k+1} = Exp_{S_k}(V_k)

where v_{k,l} are the coordinates of V_{k-l} transported to S_k and v*_k the
coordinates of Log_{S_k}(S*). A_l, B and Cov(eps_k) are scalar multiples of the
identity (ScalarParams) or diagonal (DiagParams).
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from spdflow.core.utils.exceptions import (
    DimensionError,
    DimensionMismatch,
    InsufficientData,
    NonPositiveEigenvalue,
)
from spdflow.core.utils.geometry import (
    Geometry,
    check_spd,
    is_pd,
    log_map,
    n_coords,
    parallel_transport,
    symmetrize,
    to_coords,
)
from spdflow.core.utils.stats import sample_wrapped_gaussian

logger = logging.getLogger("spdflow_logger")


@dataclass
class CovSeries:
    """Ordered series of p x p covariance matrices with provenance metadata.

    ``meta`` may hold ``source`` (an identifier), ``sampling_rate`` (Hz),
    ``reduction`` (the p x q matrix U used to reduce the raw covariances) and
    ``seed`` for simulated series. ``pd_flags[i]`` is False where point i is not
    positive definite, which only happens for Euclidean simulations.
    """

    points: np.ndarray
    dt: float = 1.0
    meta: dict = field(default_factory=dict)
    pd_flags: Optional[np.ndarray] = None

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 3 or points.shape[1] != points.shape[2]:
            raise DimensionError(f"Series points must have shape (n, p, p), got {points.shape}.")
        self.points = symmetrize(points)
        if self.points.shape[0] < 1:
            raise InsufficientData("A series needs at least one point.")
        if self.pd_flags is None:
            self.pd_flags = np.ones(self.n, dtype=bool)
        else:
            self.pd_flags = np.asarray(self.pd_flags, dtype=bool)

    @property
    def n(self):
        return self.points.shape[0]

    @property
    def p(self):
        return self.points.shape[1]

    @property
    def reduction(self):
        U = self.meta.get("reduction")
        return None if U is None else np.asarray(U, dtype=float)

    def __len__(self):
        return self.n


@dataclass
class ScalarParams:
    """A_l = alpha_l I, B = beta I, Cov(eps) = sigma^2 I."""

    alpha: np.ndarray
    beta: float
    sigma: float
    attractor: np.ndarray
    geometry: Geometry = Geometry.AFFINE

    def __post_init__(self):
        self.alpha = np.atleast_1d(np.asarray(self.alpha, dtype=float)).ravel()
        self.beta = float(self.beta)
        self.sigma = float(self.sigma)
        self.attractor = symmetrize(np.asarray(self.attractor, dtype=float))
        self.geometry = Geometry.parse(self.geometry)
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative.")

    @property
    def L(self):
        return self.alpha.size

    @property
    def m(self):
        return n_coords(self.attractor.shape[0])

    def drift(self, lagged, attractor_coords):
        """Deterministic part of v_k from lagged (..., L, m) and attractor (..., m) coordinates."""
        return self.alpha @ lagged + self.beta * attractor_coords

    def noise_covariance(self):
        return self.sigma**2 * np.eye(self.m)


@dataclass
class DiagParams:
    """A_l = diag(a_l), B = diag(b), Cov(eps) = diag(sigma^2)."""

    a: np.ndarray
    b: np.ndarray
    sigma: np.ndarray
    attractor: np.ndarray
    geometry: Geometry = Geometry.AFFINE

    def __post_init__(self):
        self.attractor = symmetrize(np.asarray(self.attractor, dtype=float))
        self.geometry = Geometry.parse(self.geometry)
        m = self.m
        self.a = np.asarray(self.a, dtype=float).reshape(-1, m)
        self.b = np.asarray(self.b, dtype=float).reshape(m)
        self.sigma = np.asarray(self.sigma, dtype=float).reshape(m)
        if np.any(self.sigma < 0):
            raise ValueError("sigma must be nonnegative.")

    @property
    def L(self):
        return self.a.shape[0]

    @property
    def m(self):
        return n_coords(self.attractor.shape[0])

    def drift(self, lagged, attractor_coords):
        return np.sum(self.a * lagged, axis=-2) + self.b * attractor_coords

    def noise_covariance(self):
        return np.diag(self.sigma**2)


@dataclass(frozen=True)
class TangentDataset:
    """Regression rows k = L+1..n-1, all expressed in the frame at S_k.

    ``response`` is (N, m), ``lagged`` is (N, L, m) and ``attractor`` is (N, m)
    with N = n - 1 - L. ``attractor_point`` is the S* the rows were built with.
    """

    response: np.ndarray
    lagged: np.ndarray
    attractor: np.ndarray
    geometry: Geometry
    L: int
    attractor_point: np.ndarray

    @property
    def n_rows(self):
        return self.response.shape[0]

    @property
    def m(self):
        return self.response.shape[1]

    def regressors(self, use_alpha=True, use_beta=True):
        """Stack the selected regressors into an (N, J, m) array."""
        blocks = []
        if use_alpha and self.L > 0:
            blocks.append(self.lagged)
        if use_beta:
            blocks.append(self.attractor[:, None, :])
        if not blocks:
            return np.zeros((self.n_rows, 0, self.m))
        return np.concatenate(blocks, axis=1)


def _points(series):
    points = getattr(series, "points", series)
    return np.asarray(points, dtype=float)


def extract_directions(g, series):
    """
    Tangent directions V_i = Log_{S_i}(S_{i+1}), i = 1..n-1.

    Returns
    -------
    numpy.ndarray
        Array of shape (n-1, p, p); V_i is based at S_i.
    """
    g = Geometry.parse(g)
    points = _points(series)
    if len(points) < 2:
        raise InsufficientData("At least two points are needed for a direction.")
    return np.array([log_map(g, points[i], points[i + 1]) for i in range(len(points) - 1)])


def _lagged_coords(g, points, directions, k, L):
    """Coordinates at S_k of V_{k-l} transported from S_{k-l}, l = 1..L."""
    base = points[k]
    m = n_coords(base.shape[0])
    lagged = np.empty((L, m))
    for lag in range(1, L + 1):
        moved = parallel_transport(g, points[k - lag], base, directions[k - lag])
        lagged[lag - 1] = to_coords(g, base, moved)
    return lagged


def build_dataset(g, series, L, attractor):
    """
    Regression dataset of the model for a fixed lag and attractor.

    Parameters
    ----------
    g : Geometry
        Metric selector.
    series : CovSeries
        Observed series S_1..S_n.
    L : int
        Maximum lag, L >= 0.
    attractor : numpy.ndarray
        Attractor point S*.

    Returns
    -------
    TangentDataset
        n - 1 - L rows of response, lagged and attractor coordinates.

    Raises
    ------
    InsufficientData
        If n < L + 2.
    """
    g = Geometry.parse(g)
    points = _points(series)
    n = len(points)
    if L < 0:
        raise ValueError("L must be nonnegative.")
    if n < L + 2:
        raise InsufficientData(f"Series of length {n} is too short for lag {L}.")
    attractor = np.asarray(attractor, dtype=float)
    if attractor.shape != points[0].shape:
        raise DimensionMismatch(expected=points[0].shape, got=attractor.shape)
    if g is Geometry.AFFINE:
        attractor = check_spd(attractor)

    directions = extract_directions(g, points)
    m = n_coords(points.shape[1])
    rows = n - 1 - L
    response = np.empty((rows, m))
    lagged = np.empty((rows, L, m))
    attractor_coords = np.empty((rows, m))
    for row, k in enumerate(range(L, n - 1)):
        base = points[k]
        response[row] = to_coords(g, base, directions[k])
        lagged[row] = _lagged_coords(g, points, directions, k, L)
        attractor_coords[row] = to_coords(g, base, log_map(g, base, attractor))

    return TangentDataset(response, lagged, attractor_coords, g, L, attractor)


def simulate(params, init, n, rng):
    """
    Run the model forward from a seed history.

    Parameters
    ----------
    params : ScalarParams or DiagParams
        Model coefficients, attractor and geometry.
    init : array-like or CovSeries
        The L + 1 points S_1..S_{L+1} providing the lag history.
    n : int
        Length of the returned series, n >= L + 1.
    rng : numpy.random.Generator
        Noise source.

    Returns
    -------
    CovSeries
        Series of n points whose first L + 1 are ``init``. ``pd_flags`` marks
        Euclidean steps that left SPD(p).

    Raises
    ------
    NonPositiveEigenvalue
        With ``step`` set, if an affine-invariant step breaks down numerically.
    """
    g = params.geometry
    L = params.L
    init = symmetrize(_points(init))
    if init.ndim != 3 or init.shape[0] != L + 1:
        raise DimensionError(f"Simulation with lag {L} needs {L + 1} seed points.")
    if n < L + 1:
        raise InsufficientData(f"Cannot simulate {n} points from {L + 1} seed points.")
    if init.shape[1] != params.attractor.shape[0]:
        raise DimensionMismatch(expected=params.attractor.shape[0], got=init.shape[1])

    points = list(init)
    pd_flags = [is_pd(point) for point in points]
    if g is Geometry.AFFINE:
        for point in points:
            check_spd(point)
    directions = [log_map(g, points[i], points[i + 1]) for i in range(L)]
    Sigma = params.noise_covariance()

    for k in range(L, n - 1):
        base = points[k]
        lagged = _lagged_coords(g, points, directions, k, L)
        attractor_coords = to_coords(g, base, log_map(g, base, params.attractor))
        drift = params.drift(lagged, attractor_coords)
        try:
            new_point, pd_flag = sample_wrapped_gaussian(
                g, base, drift, Sigma, rng, return_pd_flag=True
            )
            if g is Geometry.AFFINE:
                new_point = check_spd(new_point)
        except NonPositiveEigenvalue as err:
            raise NonPositiveEigenvalue(err.index, err.value, step=k + 1) from err
        directions.append(log_map(g, base, new_point))
        points.append(new_point)
        pd_flags.append(pd_flag)

    n_outside = int(np.sum(~np.asarray(pd_flags)))
    if n_outside:
        logger.warning(f"{n_outside} of {n} simulated points lie outside SPD(p).")
    return CovSeries(np.array(points), meta={"source": "simulated"}, pd_flags=pd_flags)
