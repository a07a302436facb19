"""Maximum-likelihood inference for the scalar and diagonal models.

For fixed L and S* the likelihood of the coordinate model is Gaussian, so the
coefficient MLEs solve linear normal equations and sigma follows from the
residual sum of squares. Everything below works on a TangentDataset whose N rows
define the likelihood; N = n - 1 - L is used for every count (sigma, Fisher, AIC).
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd
from scipy import linalg
from scipy.stats import norm as normal

from spdflow.core.utils.exceptions import (
    InsufficientData,
    MixedLag,
    SingularFisher,
    SingularNormalEquations,
    ZeroVariance,
)
from spdflow.core.utils.geometry import (
    Geometry,
    from_coords,
    parallel_transport,
    to_coords,
)
from spdflow.core.utils.model import DiagParams, ScalarParams, build_dataset
from spdflow.core.utils.stats import MdsResult, classical_mds, transported_coords

logger = logging.getLogger("spdflow_logger")

CONDITION_LIMIT = 1e12
EPS = np.finfo(float).eps


class Restriction(str, Enum):
    FULL = "full"
    NO_ALPHA = "no-alpha"
    NO_BETA = "no-beta"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        return cls(str(name).strip().lower().replace("_", "-"))

    @property
    def use_alpha(self):
        return self is not Restriction.NO_ALPHA

    @property
    def use_beta(self):
        return self is not Restriction.NO_BETA


@dataclass
class FitResult:
    """Estimates and uncertainty of one model fit.

    ``estimates`` and ``param_names`` are aligned with the rows of ``fisher``:
    (alpha_1..alpha_L, beta, sigma) for the scalar model and
    (a_11..a_1m, ..., a_Lm, b_1..b_m, sigma_1..sigma_m) for the diagonal one, with
    the coefficients a restriction removes left out.
    """

    params: object
    model: str
    restricted: Restriction
    param_names: list
    estimates: np.ndarray
    fisher: np.ndarray
    std_errors: np.ndarray
    log_lik: float
    aic: float
    n_used: int
    residuals: np.ndarray
    condition_number: float
    r2: float = float("nan")
    singular_coordinates: list = field(default_factory=list)

    @property
    def L(self):
        return self.params.L

    @property
    def geometry(self):
        return self.params.geometry


def _solve_normal_equations(gram, rhs, strict, coordinate=None, scale=None):
    """Solve gram @ theta = rhs; pseudoinverse above the condition limit.

    A Gram matrix whose entries are all below EPS * scale counts as zero.
    """
    if gram.size == 0:
        return np.zeros(0), 1.0, False
    size = float(np.max(np.abs(gram)))
    negligible = size == 0 or (scale is not None and size <= EPS * scale)
    condition_number = np.inf if negligible else float(np.linalg.cond(gram))
    if not np.isfinite(condition_number) or condition_number > CONDITION_LIMIT:
        if strict:
            raise SingularNormalEquations(condition_number, coordinate)
        where = f" (coordinate {coordinate})" if coordinate is not None else ""
        logger.warning(
            f"Normal equations ill-conditioned{where}: condition number "
            f"{condition_number:.3e}; using the pseudoinverse."
        )
        return np.linalg.pinv(gram) @ rhs, condition_number, True
    return linalg.solve(gram, rhs, assume_a="sym"), condition_number, False


def _floor_sigma(sigma, response):
    """Keep sigma away from zero for the likelihood and Fisher information."""
    scale = float(np.sqrt(np.mean(response**2))) if response.size else 0.0
    floor = EPS * max(scale, 1.0)
    sigma = np.asarray(sigma, dtype=float)
    if np.any(sigma < floor):
        logger.warning("Residuals vanish; sigma is floored for the likelihood.")
    return np.maximum(sigma, floor)


def _standard_errors(fisher, invalid=None):
    """sqrt(diag(fisher^-1)) over the valid parameters; NaN elsewhere."""
    J = fisher.shape[0]
    valid = np.ones(J, dtype=bool) if invalid is None else ~np.asarray(invalid)
    std_errors = np.full(J, np.nan)
    block = fisher[np.ix_(valid, valid)]
    if block.size == 0 or not np.all(np.isfinite(block)):
        return std_errors
    if np.linalg.cond(block) > 1e15:
        return std_errors
    covariance = linalg.inv(block)
    variances = np.diag(covariance)
    std_errors[valid] = np.where(variances >= 0, np.sqrt(np.abs(variances)), np.nan)
    return std_errors


def fit_scalar(ds, L=None, restricted=Restriction.FULL, strict=False):
    """
    Closed-form MLE of the scalar-coefficient model.

    Parameters
    ----------
    ds : TangentDataset
        Regression rows from ``build_dataset``.
    L : int, optional
        Lag; must match ``ds.L`` when given.
    restricted : Restriction, optional
        ``full``, ``no-alpha`` (beta only) or ``no-beta`` (alphas only).
    strict : bool, optional
        Raise SingularNormalEquations instead of falling back to the
        pseudoinverse when the Gram matrix is ill-conditioned.

    Returns
    -------
    FitResult
    """
    restricted = Restriction.parse(restricted)
    _check_lag(ds, L)
    X = ds.regressors(restricted.use_alpha, restricted.use_beta)
    Y = ds.response
    N, m = Y.shape
    if N < ds.L + 2:
        raise InsufficientData(f"{N} rows are too few for a lag-{ds.L} fit.")

    # Gram blocks sum_k v_{kl}^T v_{ko}, accumulated in row order
    gram = np.einsum("kjr,klr->jl", X, X)
    rhs = np.einsum("kjr,kr->j", X, Y)
    theta, condition_number, _ = _solve_normal_equations(gram, rhs, strict)

    alpha = np.zeros(ds.L)
    beta = 0.0
    names = []
    if restricted.use_alpha and ds.L > 0:
        alpha = theta[: ds.L]
        names += [f"alpha_{lag}" for lag in range(1, ds.L + 1)]
    if restricted.use_beta:
        beta = float(theta[-1])
        names.append("beta")
    names.append("sigma")

    residuals = Y - np.einsum("j,kjr->kr", theta, X)
    rss = float(np.sum(residuals**2))
    sigma = float(np.sqrt(rss / (m * N)))
    params = ScalarParams(alpha, beta, sigma, ds.attractor_point, ds.geometry)

    sigma_eff = float(_floor_sigma(sigma, Y))
    log_lik = (
        -0.5 * m * N * np.log(2 * np.pi)
        - m * N * np.log(sigma_eff)
        - rss / (2 * sigma_eff**2)
    )
    fit = FitResult(
        params=params,
        model="scalar",
        restricted=restricted,
        param_names=names,
        estimates=np.append(theta, sigma),
        fisher=np.zeros((len(names), len(names))),
        std_errors=np.full(len(names), np.nan),
        log_lik=float(log_lik),
        aic=np.nan,
        n_used=N,
        residuals=residuals,
        condition_number=condition_number,
    )
    fit.fisher = fisher_information(fit, ds)
    fit.std_errors = _standard_errors(fit.fisher)
    fit.aic = aic(fit)
    return fit


def fit_diagonal(ds, L=None, restricted=Restriction.FULL, strict=False):
    """
    Closed-form MLE of the diagonal model: m independent regressions, one per
    frame coordinate, each with its own sigma_r.

    Coordinates whose Gram matrix is singular, or whose residuals vanish, are
    listed in ``singular_coordinates`` (1-based); their standard errors are NaN.
    Other coordinates are unaffected.
    """
    restricted = Restriction.parse(restricted)
    _check_lag(ds, L)
    X = ds.regressors(restricted.use_alpha, restricted.use_beta)
    Y = ds.response
    N, m = Y.shape
    J = X.shape[1]
    if N < ds.L + 2:
        raise InsufficientData(f"{N} rows are too few for a lag-{ds.L} fit.")

    theta = np.zeros((J, m))
    conditions = np.ones(m)
    singular = []
    grams = np.einsum("kjr,klr->rjl", X, X)
    scale = float(np.max(np.abs(grams))) if grams.size else 0.0
    for r in range(m):
        rhs = X[:, :, r].T @ Y[:, r]
        theta[:, r], conditions[r], flagged = _solve_normal_equations(
            grams[r], rhs, strict, coordinate=r + 1, scale=scale
        )
        if flagged:
            singular.append(r + 1)

    residuals = Y - np.einsum("jr,kjr->kr", theta, X)
    rss = np.sum(residuals**2, axis=0)
    sigma = np.sqrt(rss / N)
    for r in np.flatnonzero(sigma == 0):
        if r + 1 not in singular:
            singular.append(int(r) + 1)
    singular.sort()

    a = np.zeros((ds.L, m))
    b = np.zeros(m)
    names = []
    if restricted.use_alpha and ds.L > 0:
        a = theta[: ds.L]
        names += [f"a_{lag}_{r}" for lag in range(1, ds.L + 1) for r in range(1, m + 1)]
    if restricted.use_beta:
        b = theta[-1]
        names += [f"b_{r}" for r in range(1, m + 1)]
    names += [f"sigma_{r}" for r in range(1, m + 1)]
    params = DiagParams(a, b, sigma, ds.attractor_point, ds.geometry)

    sigma_eff = _floor_sigma(sigma, Y)
    log_lik = float(
        np.sum(-0.5 * N * np.log(2 * np.pi) - N * np.log(sigma_eff) - rss / (2 * sigma_eff**2))
    )
    fit = FitResult(
        params=params,
        model="diagonal",
        restricted=restricted,
        param_names=names,
        estimates=np.concatenate([theta.ravel(), sigma]),
        fisher=np.zeros((len(names), len(names))),
        std_errors=np.full(len(names), np.nan),
        log_lik=log_lik,
        aic=np.nan,
        n_used=N,
        residuals=residuals,
        condition_number=float(np.max(conditions)),
        singular_coordinates=singular,
    )
    fit.fisher = fisher_information(fit, ds)
    invalid = np.zeros(len(names), dtype=bool)
    for r in singular:
        invalid[r - 1 :: m] = True
    fit.std_errors = _standard_errors(fit.fisher, invalid)
    fit.aic = aic(fit)
    return fit


def _check_lag(ds, L):
    if L is not None and L != ds.L:
        raise ValueError(f"Dataset was built with L={ds.L}, not L={L}.")


def fisher_information(fit, ds):
    """
    Expected Fisher information at the fitted parameters.

    Scalar model: the Gram matrix of the regressors over sigma^2, plus the
    isolated sigma entry 2 m N / sigma^2. Diagonal model: per coordinate r the
    Gram block over sigma_r^2 and the sigma_r entry 2 N / sigma_r^2. Blocks
    between coefficients and sigmas, and between different coordinates, are zero.
    """
    restricted = fit.restricted
    X = ds.regressors(restricted.use_alpha, restricted.use_beta)
    N, J, m = X.shape
    if fit.model == "scalar":
        sigma = float(_floor_sigma(fit.params.sigma, ds.response))
        fisher = np.zeros((J + 1, J + 1))
        fisher[:J, :J] = np.einsum("kjr,klr->jl", X, X) / sigma**2
        fisher[J, J] = 2 * m * N / sigma**2
        return fisher

    sigma = _floor_sigma(fit.params.sigma, ds.response)
    size = (J + 1) * m
    fisher = np.zeros((size, size))
    for r in range(m):
        gram = X[:, :, r].T @ X[:, :, r] / sigma[r] ** 2
        index = np.arange(J) * m + r
        fisher[np.ix_(index, index)] = gram
        fisher[J * m + r, J * m + r] = 2 * N / sigma[r] ** 2
    return fisher


def confidence_intervals(fit, level=0.95):
    """
    Wald intervals estimate +/- z * std_error with z the normal quantile for level.

    Returns
    -------
    pandas.DataFrame
        Columns parameter, estimate, std_error, lower, upper.

    Raises
    ------
    SingularFisher
        If no parameter has a finite standard error.
    """
    if not np.any(np.isfinite(fit.std_errors)):
        raise SingularFisher("Fisher information is not invertible.")
    if not np.all(np.isfinite(fit.std_errors)):
        logger.warning("Some parameters have no standard error; their intervals are NaN.")
    z = normal.ppf(0.5 + level / 2)
    half_width = z * fit.std_errors
    return pd.DataFrame(
        {
            "parameter": fit.param_names,
            "estimate": fit.estimates,
            "std_error": fit.std_errors,
            "lower": fit.estimates - half_width,
            "upper": fit.estimates + half_width,
        }
    )


def aic(fit):
    """AIC = 2k - 2 log L with k counting coefficients and sigmas."""
    return float(2 * len(fit.estimates) - 2 * fit.log_lik)


def select_lag(g, series, attractor, L_max, level=0.95, return_trace=False):
    """
    Largest lag whose last autoregressive coefficient is significant.

    Scalar models are fitted for L = 1..L_max; for each, the level confidence
    interval of alpha_L is checked for excluding zero. Returns 0 if no alpha_L is
    significant.

    Returns
    -------
    int or tuple
        The selected lag, or ``(lag, trace)`` with a per-L DataFrame when
        ``return_trace`` is set.
    """
    if L_max < 1:
        raise ValueError("L_max must be at least 1.")
    n = len(getattr(series, "points", series))
    if n < 2 * L_max + 3:
        raise InsufficientData(f"Series of length {n} is too short for L_max={L_max}.")

    rows = []
    for L in range(1, L_max + 1):
        fit = fit_scalar(build_dataset(g, series, L, attractor))
        ci = confidence_intervals(fit, level).set_index("parameter").loc[f"alpha_{L}"]
        significant = bool(ci.lower > 0 or ci.upper < 0)
        rows.append(
            {
                "L": L,
                "alpha_L": ci.estimate,
                "lower": ci.lower,
                "upper": ci.upper,
                "significant": significant,
                "aic": fit.aic,
            }
        )
        logger.debug(f"lag {L}: alpha_L={ci.estimate:.4f} significant={significant}")

    trace = pd.DataFrame(rows)
    significant_lags = trace.loc[trace.significant, "L"]
    selected = int(significant_lags.max()) if len(significant_lags) else 0
    if return_trace:
        return selected, trace
    return selected


def fitted_values(fit, ds):
    """Deterministic part of the model at each dataset row, shape (N, m)."""
    return fit.params.drift(ds.lagged, ds.attractor)


def r_squared(g, series, fit, ds=None):
    """
    1 - sum |eps_k|^2 / sum |V_k - Vbar_k|^2 under the metric g.

    Vbar_k is the mean direction transported to S_k: the coordinates of all V_i
    are averaged at the identity and the mean is transported to each S_k.

    Raises
    ------
    ZeroVariance
        If every direction coincides with the transported mean.
    """
    g = Geometry.parse(g)
    if ds is None:
        ds = build_dataset(g, series, fit.params.L, fit.params.attractor)
    points = getattr(series, "points", series)
    points = np.asarray(points, dtype=float)
    p = points.shape[1]
    identity = np.eye(p)
    mean_at_identity = from_coords(g, identity, transported_coords(g, points).mean(axis=0))

    residuals = ds.response - fitted_values(fit, ds)
    numerator = float(np.sum(residuals**2))
    denominator = 0.0
    for row, k in enumerate(range(ds.L, len(points) - 1)):
        base = points[k]
        mean_here = to_coords(g, base, parallel_transport(g, identity, base, mean_at_identity))
        denominator += float(np.sum((ds.response[row] - mean_here) ** 2))
    if denominator <= 1e-20 * max(float(np.sum(ds.response**2)), np.finfo(float).tiny):
        raise ZeroVariance("All directions equal their transported mean.")
    return 1.0 - numerator / denominator


def term_norms(fit, ds):
    """
    Squared norms per step of the observed direction, the autoregressive term,
    the mean-reversion term and the residual noise.
    """
    params = fit.params
    if fit.model == "scalar":
        autoregressive = np.einsum("l,klm->km", params.alpha, ds.lagged)
        reversion = params.beta * ds.attractor
    else:
        autoregressive = np.einsum("lm,klm->km", params.a, ds.lagged)
        reversion = params.b * ds.attractor
    noise = ds.response - autoregressive - reversion
    return pd.DataFrame(
        {
            "step": np.arange(ds.L + 1, ds.L + 1 + ds.n_rows),
            "observed": np.sum(ds.response**2, axis=1),
            "autoregressive": np.sum(autoregressive**2, axis=1),
            "mean_reversion": np.sum(reversion**2, axis=1),
            "noise": np.sum(noise**2, axis=1),
        }
    )


def compare_restrictions(ds, model="scalar"):
    """AIC of the full model and both restricted variants on one dataset."""
    fitter = fit_scalar if model == "scalar" else fit_diagonal
    rows = []
    for restriction in Restriction:
        fit = fitter(ds, restricted=restriction)
        rows.append(
            {
                "restriction": restriction.value,
                "n_params": len(fit.estimates),
                "log_lik": fit.log_lik,
                "aic": fit.aic,
            }
        )
    table = pd.DataFrame(rows)
    table["delta_aic"] = table.aic - table.aic.min()
    return table


@dataclass(frozen=True)
class SeizureComparison:
    distances: np.ndarray
    mds: MdsResult


def mahalanobis_compare(fits, d=2):
    """
    Symmetrized Mahalanobis distances between scalar fits, and their d-dimensional MDS (default 2).

    d_ij = (sqrt(D^T W_i D) + sqrt(D^T W_j D)) / 2 with D = Phi_i - Phi_j and
    W_i the Fisher information (precision) of fit i.

    Raises
    ------
    MixedLag
        If the fits do not share the same lag.
    """
    if len(fits) < 2:
        raise InsufficientData("At least two fits are needed for a comparison.")
    if any(fit.model != "scalar" for fit in fits):
        raise ValueError("Mahalanobis comparison is defined for scalar fits.")
    lags = [fit.L for fit in fits]
    if len(set(lags)) > 1:
        raise MixedLag(lags)
    if len({tuple(fit.param_names) for fit in fits}) > 1:
        raise ValueError("Fits must share the same restriction.")

    n = len(fits)
    distances = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            delta = fits[i].estimates - fits[j].estimates
            forward = max(float(delta @ fits[i].fisher @ delta), 0.0)
            backward = max(float(delta @ fits[j].fisher @ delta), 0.0)
            distances[i, j] = distances[j, i] = 0.5 * (np.sqrt(forward) + np.sqrt(backward))
    return SeizureComparison(distances, classical_mds(distances, min(d, n)))
