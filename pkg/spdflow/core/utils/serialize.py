"""Reading and writing matrices, series, plans, parameters and fits."""

import json
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pandas as pd

from spdflow.core.utils.exceptions import DimensionError
from spdflow.core.utils.geometry import Geometry
from spdflow.core.utils.inference import Restriction, confidence_intervals
from spdflow.core.utils.model import CovSeries, DiagParams, ScalarParams
from spdflow.core.utils.pipeline import ReductionPlan

FLOAT_FORMAT = "%.17g"


def _to_jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, (Geometry, Restriction)):
        return value.value
    if isinstance(value, dict):
        return {key: _to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_to_jsonable(item) for item in value]
    return value


def write_json(path, payload):
    with open(path, "w") as file:
        json.dump(_to_jsonable(payload), file, indent=2)


def read_json(path):
    with open(path, "r") as file:
        return json.load(file)


def _as_float(value):
    return float("nan") if value is None else float(value)


def save_matrix(path, S):
    """Write a matrix as row-major CSV (no header) or as JSON {p, data}."""
    path = Path(path)
    S = np.atleast_2d(np.asarray(S, dtype=float))
    if path.suffix == ".json":
        write_json(path, {"p": S.shape[0], "data": S})
    else:
        pd.DataFrame(S).to_csv(path, header=False, index=False, float_format=FLOAT_FORMAT)


def load_matrix(path):
    path = Path(path)
    if path.suffix == ".json":
        payload = read_json(path)
        S = np.asarray(payload["data"], dtype=float)
        if S.shape != (payload["p"], payload["p"]):
            raise DimensionError(f"{path} declares p={payload['p']} but holds {S.shape}.")
        return S
    return pd.read_csv(path, header=None).to_numpy(dtype=float)


def save_series(path, series):
    n, p = series.n, series.p
    write_json(
        path,
        {
            "p": p,
            "n": n,
            "dt": series.dt,
            "points": series.points.reshape(n, p * p),
            "meta": series.meta,
            "pd_flags": series.pd_flags,
        },
    )


def load_series(path):
    payload = read_json(path)
    p, n = payload["p"], payload["n"]
    points = np.asarray(payload["points"], dtype=float).reshape(n, p, p)
    meta = payload.get("meta", {}) or {}
    if meta.get("reduction") is not None:
        meta["reduction"] = np.asarray(meta["reduction"], dtype=float)
    return CovSeries(points, dt=payload.get("dt", 1.0), meta=meta, pd_flags=payload.get("pd_flags"))


def save_plan(path, plan):
    write_json(
        path,
        {
            "kind": plan.kind.value,
            "p": plan.p,
            "q": plan.q,
            "U": plan.U,
            "channels": plan.channels,
            "retained": plan.retained,
            "phi": plan.phi,
        },
    )


def load_plan(path):
    payload = read_json(path)
    U = np.asarray(payload["U"], dtype=float).reshape(payload["p"], payload["q"])
    return ReductionPlan(
        payload["kind"],
        U,
        float(payload["retained"]),
        payload.get("channels", []),
        _as_float(payload.get("phi")),
    )


def params_to_dict(params):
    if isinstance(params, ScalarParams):
        body = {"model": "scalar", "alpha": params.alpha, "beta": params.beta, "sigma": params.sigma}
    else:
        body = {"model": "diagonal", "a": params.a, "b": params.b, "sigma": params.sigma}
    body["geometry"] = params.geometry.value
    body["p"] = params.attractor.shape[0]
    body["attractor"] = params.attractor
    return body


def params_from_dict(payload):
    """Rebuild ScalarParams or DiagParams from a tagged dictionary."""
    model = payload.get("model", "scalar")
    geometry = Geometry.parse(payload.get("geometry", Geometry.AFFINE))
    attractor = np.asarray(payload["attractor"], dtype=float)
    if model == "scalar":
        return ScalarParams(
            payload.get("alpha", []), payload["beta"], payload["sigma"], attractor, geometry
        )
    if model == "diagonal":
        return DiagParams(payload["a"], payload["b"], payload["sigma"], attractor, geometry)
    raise ValueError(f"Unknown model tag '{model}'.")


def save_params(path, params):
    write_json(path, params_to_dict(params))


def load_params(path):
    payload = read_json(path)
    # fit files carry the parameters under "params"
    return params_from_dict(payload.get("params", payload))


def fit_to_dict(fit, source=None):
    payload = {
        "source": source,
        "model": fit.model,
        "restricted": fit.restricted.value,
        "L": fit.L,
        "n_used": fit.n_used,
        "params": params_to_dict(fit.params),
        "param_names": fit.param_names,
        "estimates": fit.estimates,
        "std_errors": fit.std_errors,
        "fisher": fit.fisher,
        "log_lik": fit.log_lik,
        "aic": fit.aic,
        "r2": fit.r2,
        "condition_number": fit.condition_number,
        "singular_coordinates": fit.singular_coordinates,
        "residual_norms": np.sum(fit.residuals**2, axis=1),
    }
    if np.any(np.isfinite(fit.std_errors)):
        ci = confidence_intervals(fit)
        payload["ci_lower"] = ci.lower.to_numpy()
        payload["ci_upper"] = ci.upper.to_numpy()
    return payload


def save_fit(path, fit, source=None):
    write_json(path, fit_to_dict(fit, source))


def load_fit_summary(path):
    """
    Read the parts of a fit file needed to compare fits.

    Returns
    -------
    types.SimpleNamespace
        With model, L, restricted, param_names, estimates, fisher, source.
    """
    payload = read_json(path)
    return SimpleNamespace(
        model=payload["model"],
        L=int(payload["L"]),
        restricted=Restriction.parse(payload["restricted"]),
        param_names=list(payload["param_names"]),
        estimates=np.array([_as_float(x) for x in payload["estimates"]]),
        fisher=np.array(
            [[_as_float(x) for x in row] for row in payload["fisher"]], dtype=float
        ),
        source=payload.get("source") or Path(path).stem,
    )


def save_table(path, table):
    """Write a pandas table as CSV with a one-line header."""
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT)
