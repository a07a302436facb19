import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd
import yaml

from spdflow.core.utils.exceptions import ConfigError, InsufficientData
from spdflow.core.utils.geometry import Geometry
from spdflow.core.utils.inference import Restriction
from spdflow.core.utils.pipeline import ReductionKind, SignalMatrix
from spdflow.core.utils.serialize import read_json

COMMANDS = ("reduce", "fit", "simulate", "compare", "diagnose")
MODELS = ("scalar", "diagonal")
ATTRACTOR_POLICIES = ("interictal_mean", "own_mean", "file")


def load_config(yaml_path):
    """Load a flat key-value configuration from a YAML file."""
    try:
        with open(yaml_path, "r") as file:
            config = yaml.safe_load(file)
    except FileNotFoundError:
        raise ConfigError("config", f"YAML file not found at path: {yaml_path}")
    except yaml.YAMLError as e:
        raise ConfigError("config", f"error loading YAML file: {e}")
    if config is None:
        return {}
    if not isinstance(config, dict):
        raise ConfigError("config", "top level must be a mapping of keys to values")
    return config


@dataclass
class RunConfig:
    """Validated settings of one subcommand run. Paths are ``pathlib.Path``."""

    command: str
    geometry: Geometry = Geometry.AFFINE
    p: Optional[int] = None
    window_seconds: float = 1.0
    sampling_rate: Optional[float] = None
    reduction: ReductionKind = ReductionKind.VARIANCE_MAX
    report_dims: list = field(default_factory=list)
    lag: Optional[int] = None
    lag_max: Optional[int] = None
    model: str = "scalar"
    restrict: Restriction = Restriction.FULL
    attractor_policy: str = "interictal_mean"
    attractor: Optional[Path] = None
    interictal: Optional[Path] = None
    plan: Optional[Path] = None
    signals: list = field(default_factory=list)
    series: list = field(default_factory=list)
    params: Optional[Path] = None
    fits: list = field(default_factory=list)
    groups: list = field(default_factory=list)
    n_steps: Optional[int] = None
    seed: int = 0
    output: Path = Path(".")
    frechet_tol: float = 1e-9
    frechet_max_iter: int = 200
    mds_dims: int = 2
    pca_dims: int = 2
    level: float = 0.95
    strict: bool = False
    threads: int = 1


def _as_list(value):
    if value is None:
        return []
    if isinstance(value, (list, tuple)):
        return list(value)
    return [value]


def _integer(raw, key, minimum=None):
    value = raw[key]
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        if isinstance(value, float) and value.is_integer():
            value = int(value)
        else:
            raise ConfigError(key, f"expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(key, f"must be at least {minimum}, got {value}")
    return int(value)


def _number(raw, key, positive=True):
    value = raw[key]
    if isinstance(value, bool):
        raise ConfigError(key, f"expected a number, got {value!r}")
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {value!r}")
    if positive and not value > 0:
        raise ConfigError(key, f"must be positive, got {value}")
    return value


def _choice(raw, key, parse, allowed):
    try:
        return parse(raw[key])
    except ValueError:
        raise ConfigError(key, f"must be one of {', '.join(allowed)}, got {raw[key]!r}")


def _existing(key, value):
    path = Path(value)
    if not path.exists():
        raise ConfigError(key, f"file not found: {path}")
    return path


def _existing_list(raw, key):
    return [_existing(key, value) for value in _as_list(raw.get(key))]


def _require(raw, key, command):
    if raw.get(key) is None or raw.get(key) == []:
        raise ConfigError(key, f"required by '{command}'")


def _threads():
    value = os.environ.get("SPDFLOW_THREADS", "1")
    try:
        threads = int(value)
    except ValueError:
        raise ConfigError("SPDFLOW_THREADS", f"expected an integer, got {value!r}")
    if threads < 1:
        raise ConfigError("SPDFLOW_THREADS", "must be at least 1")
    return threads


def validate_config(raw, command):
    """
    Check every setting needed by ``command`` and build a RunConfig.

    Parameters
    ----------
    raw : dict
        Flat mapping from YAML and command-line overrides; None values are unset.
    command : str
        One of reduce, fit, simulate, compare, diagnose.

    Returns
    -------
    RunConfig

    Raises
    ------
    ConfigError
        For the first invalid or missing field, before any computation runs.
    """
    if command not in COMMANDS:
        raise ConfigError("command", f"must be one of {', '.join(COMMANDS)}")
    known = {f.name for f in fields(RunConfig)} - {"command", "threads"}
    raw = {key: value for key, value in (raw or {}).items() if value is not None}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(unknown[0], "unknown setting")

    cfg = RunConfig(command=command, threads=_threads())

    if "geometry" in raw:
        cfg.geometry = _choice(raw, "geometry", Geometry.parse, [g.value for g in Geometry])
    if "model" in raw:
        cfg.model = _choice(raw, "model", _model, MODELS)
    if "restrict" in raw:
        cfg.restrict = _choice(raw, "restrict", Restriction.parse, [r.value for r in Restriction])
    if "reduction" in raw:
        cfg.reduction = _choice(
            raw, "reduction", ReductionKind.parse, [k.value for k in ReductionKind]
        )
    if "attractor_policy" in raw:
        cfg.attractor_policy = _choice(raw, "attractor_policy", _policy, ATTRACTOR_POLICIES)

    for key in ("p", "n_steps"):
        if key in raw:
            setattr(cfg, key, _integer(raw, key, minimum=1))
    for key in ("lag", "seed"):
        if key in raw:
            setattr(cfg, key, _integer(raw, key, minimum=0))
    for key in ("lag_max", "frechet_max_iter", "mds_dims", "pca_dims"):
        if key in raw:
            setattr(cfg, key, _integer(raw, key, minimum=1))
    for key in ("window_seconds", "sampling_rate", "frechet_tol"):
        if key in raw:
            setattr(cfg, key, _number(raw, key))
    if "level" in raw:
        cfg.level = _number(raw, "level")
        if not cfg.level < 1:
            raise ConfigError("level", f"must lie in (0, 1), got {cfg.level}")
    if "strict" in raw:
        cfg.strict = bool(raw["strict"])
    if "report_dims" in raw:
        cfg.report_dims = [
            _integer({"report_dims": d}, "report_dims", minimum=1)
            for d in _as_list(raw["report_dims"])
        ]
    if "groups" in raw:
        cfg.groups = [str(label) for label in _as_list(raw["groups"])]
    if "output" in raw:
        cfg.output = Path(raw["output"])

    if command == "reduce":
        _require(raw, "signals", command)
        cfg.signals = _existing_list(raw, "signals")
        if "plan" in raw:
            cfg.plan = _existing("plan", raw["plan"])
        else:
            _require(raw, "p", command)
        if any(path.suffix.lower() == ".csv" for path in cfg.signals):
            _require(raw, "sampling_rate", command)

    elif command == "fit":
        _require(raw, "series", command)
        cfg.series = _existing_list(raw, "series")
        if cfg.lag is not None and cfg.lag_max is not None:
            raise ConfigError("lag", "give either lag or lag_max, not both")
        if cfg.lag is None and cfg.lag_max is None:
            cfg.lag = 0
        if cfg.attractor_policy == "file":
            _require(raw, "attractor", command)
            cfg.attractor = _existing("attractor", raw["attractor"])
        elif cfg.attractor_policy == "interictal_mean":
            _require(raw, "interictal", command)
            cfg.interictal = _existing("interictal", raw["interictal"])

    elif command == "simulate":
        _require(raw, "params", command)
        _require(raw, "n_steps", command)
        cfg.params = _existing("params", raw["params"])
        if "series" in raw:
            cfg.series = _existing_list(raw, "series")

    elif command == "compare":
        _require(raw, "fits", command)
        cfg.fits = _existing_list(raw, "fits")
        if len(cfg.fits) < 2:
            raise ConfigError("fits", "at least two fit files are needed")
        if cfg.groups and len(cfg.groups) != len(cfg.fits):
            raise ConfigError("groups", f"needs one label per fit ({len(cfg.fits)})")

    elif command == "diagnose":
        _require(raw, "series", command)
        cfg.series = _existing_list(raw, "series")

    return cfg


def _model(value):
    value = str(value).strip().lower()
    if value not in MODELS:
        raise ValueError(value)
    return value


def _policy(value):
    value = str(value).strip().lower().replace("-", "_")
    if value not in ATTRACTOR_POLICIES:
        raise ValueError(value)
    return value


def _sidecar(path):
    for candidate in (path.with_name(path.name + ".json"), path.with_suffix(".json")):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"No JSON sidecar found next to {path}.")


def load_signals(path, sampling_rate=None):
    """
    Load multichannel signals as a SignalMatrix.

    CSV files have one column per channel and a header row of channel names; the
    sampling rate must then be supplied. Any other file is read as raw
    little-endian float64 samples (row-major, n_z x q) described by a JSON
    sidecar ``<file>.json`` holding q, f and n_z.

    Parameters
    ----------
    path : str or Path
        Signal file.
    sampling_rate : float, optional
        Samples per second for CSV input.

    Returns
    -------
    SignalMatrix
    """
    path = Path(path)
    if path.suffix.lower() == ".csv":
        if sampling_rate is None:
            raise ValueError("CSV signals need a sampling rate.")
        df = pd.read_csv(path)
        df.dropna(inplace=True, how="all")
        return SignalMatrix(df.to_numpy(dtype=float), float(sampling_rate), list(df.columns))

    header = read_json(_sidecar(path))
    q, f, n_z = int(header["q"]), float(header["f"]), int(header["n_z"])
    samples = np.fromfile(path, dtype="<f8")
    if samples.size != q * n_z:
        raise InsufficientData(
            f"{path} holds {samples.size} values; sidecar declares {n_z} x {q}."
        )
    return SignalMatrix(samples.reshape(n_z, q), f, header.get("channels", []))
