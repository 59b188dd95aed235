import json
import math
import os
from pathlib import Path

import pytest

import aisbay

CONFIG_DIR = Path(os.environ.get("AISBAY_CONFIG_DIR", Path(__file__).resolve().parents[2] / "config"))


def test_closed_forms():
    assert aisbay.absence_threshold(48, 10, 10) == pytest.approx(48)
    assert aisbay.radio_horizon_km(20, 40) == pytest.approx(44.5, abs=0.05)
    assert aisbay.f_quantile(2, 188, 0.95) == pytest.approx(3.044, abs=1e-3)
    k = 188
    assert aisbay.f_quantile(2, k, 0.9) == pytest.approx(k / 2 * (0.1 ** (-2 / k) - 1), rel=1e-10)
    assert abs(aisbay.low_transit_rate(381.0, 370.8, 292.7) - 312.9) <= 0.5
    assert aisbay.fnv1a64(b"a") == "af63dc4c8601ec8c"


def test_convergence_fit_recovers_plant():
    m = list(range(1, 11))
    n = [100 * math.exp((x + 1.0) ** -0.5) for x in m]
    fit = aisbay.convergence_fit(m, n)
    assert fit["n_low"] == pytest.approx(100, rel=1e-6)
    assert fit["exponent"] == pytest.approx(-0.5, rel=1e-6)


def test_config_errors_map_to_python():
    with pytest.raises(aisbay.ConfigError):
        aisbay.load_config(text='{"unknown_key": 1}')
    cfg = aisbay.load_config(path=CONFIG_DIR / "reference.json")
    assert cfg["policy"] == "df"
    assert cfg["window"]["start"].startswith("2024-04-01")


def test_missing_artifact(tmp_path):
    with pytest.raises(aisbay.MissingArtifact):
        aisbay.run_stage("clean", CONFIG_DIR / "reference.json", tmp_path / "run")


def test_synth_and_receiver(tmp_path):
    msgs, truth = aisbay.synth_reference(1)
    first = json.loads(msgs.splitlines()[0])
    assert "mmsi" in first
    assert truth["receiver"]["lat"] == pytest.approx(35.62)

    res = aisbay.run_stage("locate-receivers", CONFIG_DIR / "reference.json", tmp_path / "run", from_scratch=True)
    assert [s for s, _ in res] == ["synth", "locate-receivers"]
    assert aisbay.verify_run(str(tmp_path / "run")) == []
    segs = (tmp_path / "run" / "synth" / "segments.geojson").read_text()
    est = aisbay.estimate_receiver(segs)
    assert len(est) == 2
    stage_out = json.loads((tmp_path / "run" / "receivers" / "receivers.json").read_text())
    assert est == stage_out
