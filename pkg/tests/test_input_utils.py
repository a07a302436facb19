import json
import os.path as op

import numpy as np
import pandas as pd
import pytest

from spdflow.core.utils.exceptions import ConfigError, InsufficientData
from spdflow.core.utils.geometry import Geometry
from spdflow.core.utils.inference import Restriction
from spdflow.core.utils.input import load_config, load_signals, validate_config
from spdflow.core.utils.pipeline import ReductionKind, window_covariances
from tests.utils import get_test_data_path

"""Configuration files"""


def test_load_config(tmp_path):
    config_file = tmp_path / "config.yml"
    config_file.write_text("geometry: euclidean\np: 4\nreport_dims: [2, 4]\n")
    config = load_config(config_file)
    assert config == {"geometry": "euclidean", "p": 4, "report_dims": [2, 4]}

    empty = tmp_path / "empty.yml"
    empty.write_text("")
    assert load_config(empty) == {}


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError) as excinfo:
        load_config(tmp_path / "missing.yml")
    assert excinfo.value.field == "config"

    broken = tmp_path / "broken.yml"
    broken.write_text("p: [1, 2\n")
    with pytest.raises(ConfigError):
        load_config(broken)

    listing = tmp_path / "list.yml"
    listing.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_config(listing)


"""Validation per command"""


@pytest.fixture
def series_file(tmp_path):
    path = tmp_path / "series.json"
    path.write_text("{}")
    return path


def test_validate_fit_defaults(series_file):
    cfg = validate_config(
        {"series": str(series_file), "attractor_policy": "own-mean", "geometry": None}, "fit"
    )
    assert cfg.geometry is Geometry.AFFINE
    assert cfg.lag == 0 and cfg.lag_max is None
    assert cfg.attractor_policy == "own_mean"
    assert cfg.restrict is Restriction.FULL
    assert cfg.series == [series_file]


def test_validate_fit_choices(series_file):
    cfg = validate_config(
        {
            "series": [str(series_file)],
            "attractor_policy": "own_mean",
            "geometry": "Euclidean",
            "lag_max": 3,
            "model": "diagonal",
            "restrict": "no-beta",
        },
        "fit",
    )
    assert cfg.geometry is Geometry.EUCLIDEAN
    assert cfg.lag is None and cfg.lag_max == 3
    assert cfg.model == "diagonal"
    assert cfg.restrict is Restriction.NO_BETA


@pytest.mark.parametrize(
    "raw, field",
    [
        ({"attractor_policy": "own_mean"}, "series"),
        ({"attractor_policy": "own_mean", "lag": 1, "lag_max": 2}, "lag"),
        ({"attractor_policy": "own_mean", "lag": -1}, "lag"),
        ({"attractor_policy": "own_mean", "lag": 1.5}, "lag"),
        ({"attractor_policy": "own_mean", "geometry": "hyperbolic"}, "geometry"),
        ({"attractor_policy": "own_mean", "model": "full"}, "model"),
        ({"attractor_policy": "own_mean", "level": 1.0}, "level"),
        ({"attractor_policy": "own_mean", "colour": "red"}, "colour"),
        ({}, "interictal"),
        ({"attractor_policy": "file"}, "attractor"),
        ({"attractor_policy": "file", "attractor": "nowhere.csv"}, "attractor"),
    ],
)
def test_validate_fit_errors(series_file, raw, field):
    raw = dict(raw)
    if field != "series":
        raw["series"] = str(series_file)
    with pytest.raises(ConfigError) as excinfo:
        validate_config(raw, "fit")
    assert excinfo.value.field == field


def test_validate_reduce(tmp_path):
    signals = tmp_path / "z.csv"
    signals.write_text("a,b\n1,2\n")
    cfg = validate_config(
        {"signals": str(signals), "p": 2, "sampling_rate": 256, "reduction": "greedy_min_eig"},
        "reduce",
    )
    assert cfg.p == 2
    assert cfg.sampling_rate == 256.0
    assert cfg.reduction is ReductionKind.GREEDY_MIN_EIG

    with pytest.raises(ConfigError) as excinfo:
        validate_config({"signals": str(signals), "p": 2}, "reduce")
    assert excinfo.value.field == "sampling_rate"
    with pytest.raises(ConfigError) as excinfo:
        validate_config({"signals": str(signals), "sampling_rate": 256}, "reduce")
    assert excinfo.value.field == "p"
    with pytest.raises(ConfigError) as excinfo:
        validate_config({"signals": str(tmp_path / "missing.csv"), "p": 2}, "reduce")
    assert excinfo.value.field == "signals"


def test_validate_simulate_and_compare(tmp_path):
    params = tmp_path / "params.json"
    params.write_text("{}")
    cfg = validate_config({"params": str(params), "n_steps": 50, "seed": 3}, "simulate")
    assert (cfg.n_steps, cfg.seed) == (50, 3)
    with pytest.raises(ConfigError) as excinfo:
        validate_config({"params": str(params)}, "simulate")
    assert excinfo.value.field == "n_steps"

    with pytest.raises(ConfigError) as excinfo:
        validate_config({"fits": [str(params)]}, "compare")
    assert excinfo.value.field == "fits"
    with pytest.raises(ConfigError) as excinfo:
        validate_config({"fits": [str(params)] * 2, "groups": ["a"]}, "compare")
    assert excinfo.value.field == "groups"


def test_validate_threads(series_file, monkeypatch):
    raw = {"series": str(series_file), "attractor_policy": "own_mean"}
    monkeypatch.setenv("SPDFLOW_THREADS", "4")
    assert validate_config(raw, "fit").threads == 4
    monkeypatch.setenv("SPDFLOW_THREADS", "many")
    with pytest.raises(ConfigError) as excinfo:
        validate_config(raw, "fit")
    assert excinfo.value.field == "SPDFLOW_THREADS"


def test_validate_unknown_command():
    with pytest.raises(ConfigError):
        validate_config({}, "plot")


"""Signal files"""


def test_load_signals_csv(tmp_path):
    path = tmp_path / "z.csv"
    pd.DataFrame({"Fp1": [1.0, 2.0, 3.0], "Fp2": [0.0, -1.0, 0.5]}).to_csv(path, index=False)
    z = load_signals(path, sampling_rate=2.0)
    assert z.channels == ["Fp1", "Fp2"]
    assert z.f == 2.0
    assert np.array_equal(z.samples[:, 1], [0.0, -1.0, 0.5])
    with pytest.raises(ValueError):
        load_signals(path)


def test_load_signals_binary(tmp_path):
    samples = np.arange(12, dtype="<f8").reshape(6, 2)
    path = tmp_path / "z.bin"
    samples.tofile(path)
    (tmp_path / "z.bin.json").write_text(json.dumps({"q": 2, "f": 3.0, "n_z": 6}))
    z = load_signals(path)
    assert np.array_equal(z.samples, samples)
    assert z.f == 3.0
    assert z.channels == ["ch1", "ch2"]

    (tmp_path / "z.bin.json").write_text(json.dumps({"q": 2, "f": 3.0, "n_z": 7}))
    with pytest.raises(InsufficientData):
        load_signals(path)


def test_load_signals_missing_sidecar(tmp_path):
    path = tmp_path / "z.bin"
    np.zeros(4).tofile(path)
    with pytest.raises(FileNotFoundError):
        load_signals(path)


def test_load_signals_fixture_windows():
    z = load_signals(op.join(get_test_data_path(), "signals.csv"), sampling_rate=4)
    assert (z.n_samples, z.q) == (8, 3)
    covariances = window_covariances(z, 1.0)
    expected = np.array([[4 / 3, 0.0, 2 / 3], [0.0, 0.0, 0.0], [2 / 3, 0.0, 5 / 3]])
    assert np.allclose(covariances[0], expected)
    assert np.allclose(covariances[1][:2, :2], [[1 / 3, 2 / 3], [2 / 3, 4 / 3]])
    assert np.allclose(covariances[1][2], 0.0)
