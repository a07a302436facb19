"""From multichannel signals to a reduced series of SPD matrices.

Signals are cut into non-overlapping windows, each window gives a q x q sample
covariance, and a ReductionPlan maps those to p x p matrices either by projecting
onto the leading eigenvectors of the mean covariance or by keeping a greedily
chosen channel subset.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from spdflow.core.utils.exceptions import (
    DimensionError,
    DimensionMismatch,
    InsufficientData,
    NonPositiveEigenvalue,
    PlanMismatch,
    WindowTooShort,
)
from spdflow.core.utils.geometry import Geometry, check_spd, symmetrize
from spdflow.core.utils.model import CovSeries
from spdflow.core.utils.stats import frechet_mean

logger = logging.getLogger("spdflow_logger")


@dataclass
class SignalMatrix:
    """Samples (n_z x q, rows are time points) recorded at f samples per second."""

    samples: np.ndarray
    f: float
    channels: list = field(default_factory=list)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim == 1:
            self.samples = self.samples[:, None]
        if self.samples.ndim != 2:
            raise DimensionError(f"Signals must be n_z x q, got {self.samples.shape}.")
        if self.f <= 0:
            raise ValueError("Sampling rate must be positive.")
        if not self.channels:
            self.channels = [f"ch{c + 1}" for c in range(self.q)]
        if len(self.channels) != self.q:
            raise DimensionMismatch(expected=self.q, got=len(self.channels))

    @property
    def n_samples(self):
        return self.samples.shape[0]

    @property
    def q(self):
        return self.samples.shape[1]


class ReductionKind(str, Enum):
    VARIANCE_MAX = "variance_max"
    GREEDY_MIN_EIG = "greedy_min_eig"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        return cls(str(name).strip().lower().replace("-", "_"))


@dataclass
class ReductionPlan:
    """
    Linear map S' -> U S' U^T from q x q to p x p covariances.

    For the greedy plan U holds the selection rows of the chosen channels, so both
    kinds apply the same way. ``channels`` are 0-based column indices (greedy: the
    selection order). ``retained`` is the share of mean variance kept and ``phi``
    the mean minimum eigenvalue of the reduced training covariances.
    """

    kind: ReductionKind
    U: np.ndarray
    retained: float
    channels: list = field(default_factory=list)
    phi: float = float("nan")

    def __post_init__(self):
        self.kind = ReductionKind.parse(self.kind)
        self.U = np.atleast_2d(np.asarray(self.U, dtype=float))
        self.channels = [int(c) for c in self.channels]

    @property
    def p(self):
        return self.U.shape[0]

    @property
    def q(self):
        return self.U.shape[1]


def window_covariances(z, window_seconds=1.0):
    """
    Sample covariances of non-overlapping windows.

    Parameters
    ----------
    z : SignalMatrix
        Raw signals.
    window_seconds : float, optional
        Window length; a window holds round(window_seconds * f) samples.

    Returns
    -------
    numpy.ndarray
        Array (n, q, q) with n = floor(n_z / samples per window); the trailing
        partial window is dropped. Divisor is samples per window minus one.

    Raises
    ------
    WindowTooShort
        If a window holds fewer than 2 samples.
    """
    if window_seconds <= 0:
        raise ValueError("window_seconds must be positive.")
    width = int(round(window_seconds * z.f))
    if width < 2:
        raise WindowTooShort(width)
    n_windows = z.n_samples // width
    if n_windows < 1:
        raise InsufficientData(
            f"{z.n_samples} samples do not fill one window of {width} samples."
        )
    dropped = z.n_samples - n_windows * width
    if dropped:
        logger.debug(f"Dropping {dropped} trailing samples of a partial window.")

    windows = z.samples[: n_windows * width].reshape(n_windows, width, z.q)
    centred = windows - windows.mean(axis=1, keepdims=True)
    covariances = np.einsum("nwa,nwb->nab", centred, centred) / (width - 1)
    return symmetrize(covariances)


def _raw_stack(raw):
    raw = symmetrize(np.asarray(getattr(raw, "points", raw), dtype=float))
    if raw.ndim != 3 or raw.shape[1] != raw.shape[2]:
        raise DimensionError(f"Expected raw covariances (n, q, q), got {raw.shape}.")
    if raw.shape[0] < 1:
        raise InsufficientData("No raw covariances to reduce.")
    return raw


def _check_target(p, q):
    if not 1 <= p <= q:
        raise DimensionError(f"Target dimension p={p} must lie in 1..{q}.")


def plan_variance_max(raw, p):
    """
    Project onto the p leading eigenvectors of the mean raw covariance.

    ``retained`` is the sum of the top p eigenvalues over the sum of all of them.
    """
    raw = _raw_stack(raw)
    _check_target(p, raw.shape[1])
    eigvals, eigvecs = np.linalg.eigh(symmetrize(raw.mean(axis=0)))
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]
    total = float(np.sum(eigvals))
    retained = float(np.sum(eigvals[:p]) / total) if total > 0 else 1.0
    U = eigvecs[:, :p].T
    phi = _phi(raw, U)
    logger.info(f"Variance-maximising reduction to p={p} retains {retained:.1%} of variance")
    return ReductionPlan(ReductionKind.VARIANCE_MAX, U, retained, list(range(p)), phi)


def _phi(raw, U):
    """Mean over windows of the smallest eigenvalue of U S' U^T."""
    reduced = U @ raw @ U.T
    return float(np.mean(np.linalg.eigvalsh(symmetrize(reduced))[:, 0]))


def _selection(channels, q):
    U = np.zeros((len(channels), q))
    U[np.arange(len(channels)), channels] = 1.0
    return U


def plan_greedy_mineig(raw, p):
    """
    Greedy channel subset maximising phi(C), the mean minimum eigenvalue.

    Starts from the best single channel and repeatedly adds the channel that
    maximises phi of the enlarged set; ties go to the lowest channel index.
    """
    raw = _raw_stack(raw)
    q = raw.shape[1]
    _check_target(p, q)

    chosen = []
    phi = float("nan")
    while len(chosen) < p:
        best_channel, best_phi = None, -np.inf
        for c in range(q):
            if c in chosen:
                continue
            idx = chosen + [c]
            candidate = float(
                np.mean(np.linalg.eigvalsh(raw[:, idx][:, :, idx])[:, 0])
            )
            # strict comparison keeps the lowest index on ties
            if candidate > best_phi:
                best_channel, best_phi = c, candidate
        chosen.append(best_channel)
        phi = best_phi
        logger.debug(f"greedy reduction: added channel {best_channel + 1}, phi={phi:.4g}")

    variances = np.diagonal(raw.mean(axis=0))
    total = float(np.sum(variances))
    retained = float(np.sum(variances[chosen]) / total) if total > 0 else 1.0
    logger.info(f"Greedy reduction to p={p} keeps channels {[c + 1 for c in chosen]}")
    return ReductionPlan(ReductionKind.GREEDY_MIN_EIG, _selection(chosen, q), retained, chosen, phi)


def make_plan(raw, p, kind):
    kind = ReductionKind.parse(kind)
    if kind is ReductionKind.VARIANCE_MAX:
        return plan_variance_max(raw, p)
    return plan_greedy_mineig(raw, p)


def retained_variance_table(raw, dims, kind=ReductionKind.VARIANCE_MAX):
    """Retained variance and phi of the plan of each target dimension in dims."""
    rows = []
    for p in sorted(set(int(d) for d in dims)):
        plan = make_plan(raw, p, kind)
        rows.append({"p": p, "retained": plan.retained, "phi": plan.phi})
    return pd.DataFrame(rows)


def score_plan(plan, raw):
    """
    Retained variance and phi of an existing plan measured on raw covariances.

    U has orthonormal rows for both kinds, so the retained share is
    tr(U M U^T) / tr(M) with M the mean raw covariance. On the raw stack a plan
    was built from, this reproduces ``plan.retained`` and ``plan.phi``.
    """
    raw = _raw_stack(raw)
    if raw.shape[1] != plan.q:
        raise DimensionMismatch(expected=plan.q, got=raw.shape[1])
    mean = symmetrize(raw.mean(axis=0))
    total = float(np.trace(mean))
    retained = float(np.trace(plan.U @ mean @ plan.U.T) / total) if total > 0 else 1.0
    return pd.DataFrame([{"p": plan.p, "retained": retained, "phi": _phi(raw, plan.U)}])


def apply_reduction(plan, raw, dt=1.0, meta=None):
    """
    Reduce each raw covariance to U S' U^T and validate it as SPD.

    Returns
    -------
    CovSeries
        The reduced series with ``meta["reduction"]`` set to U.

    Raises
    ------
    NonPositiveEigenvalue
        With ``window`` set (1-based) for the first window that is not positive
        definite after reduction.
    """
    raw = _raw_stack(raw)
    if raw.shape[1] != plan.q:
        raise DimensionMismatch(expected=plan.q, got=raw.shape[1])
    reduced = symmetrize(plan.U @ raw @ plan.U.T)
    for i, S in enumerate(reduced):
        try:
            check_spd(S)
        except NonPositiveEigenvalue as err:
            raise NonPositiveEigenvalue(err.index, err.value, window=i + 1) from err
    meta = dict(meta or {})
    meta["reduction"] = plan.U.copy()
    meta.setdefault("reduction_kind", plan.kind.value)
    return CovSeries(reduced, dt=dt, meta=meta)


def pair_attractor(seizure, interictal, g, tol=1e-9, max_iter=200):
    """
    Fréchet mean of the interictal series, used as the attractor of the seizure.

    Raises
    ------
    PlanMismatch
        If the two series have different dimensions or were reduced with
        different reduction matrices.
    """
    g = Geometry.parse(g)
    if seizure.p != interictal.p:
        raise PlanMismatch(
            f"Seizure series has p={seizure.p}, interictal series p={interictal.p}."
        )
    U1, U2 = seizure.reduction, interictal.reduction
    if U1 is not None and U2 is not None:
        if U1.shape != U2.shape or not np.allclose(U1, U2, rtol=0.0, atol=1e-12):
            raise PlanMismatch("Series were prepared with different reduction plans.")
    elif U1 is not None or U2 is not None:
        logger.warning("Only one series records its reduction plan; assuming they match.")
    return frechet_mean(g, interictal, tol=tol, max_iter=max_iter).mean
