"""Python access to the aisbay processing core."""

import json as _json

from ._aisbay import (  # noqa: F401
    ConfigError,
    MissingArtifact,
    STAGES,
    absence_threshold,
    confidence_scale,
    containment_scale,
    f_quantile,
    fnv1a64,
    low_transit_rate,
    radio_horizon_km,
    required_receiver_height_m,
    rounding_accel_spike,
    verify_run,
)
from . import _aisbay


def convergence_fit(m, n):
    """Fit N(M) = n_low * exp((M + 1)**a); returns a dict with n_low, exponent, sse."""
    return _aisbay.convergence_fit(list(map(float, m)), list(map(float, n)))


def estimate_receiver(segments_geojson, alpha=0.05, threads=1):
    """Locate receivers from shadow segments (GeoJSON text), one dict per receiver_association."""
    return _json.loads(_aisbay.estimate_receiver_json(segments_geojson, alpha, threads))


def load_config(path=None, text=None, base_dir="."):
    """Parse a run configuration and return it in canonical JSON form as a dict."""
    if (path is None) == (text is None):
        raise ValueError("give exactly one of path or text")
    raw = _aisbay.config_json(str(path)) if path is not None else _aisbay.config_from_text(text, str(base_dir))
    return _json.loads(raw)


def run_stage(stage, config, out, threads=1, from_scratch=False):
    """Run one pipeline stage; returns a list of (stage, counts) pairs."""
    return _aisbay.run_stage(stage, str(config), str(out), int(threads), bool(from_scratch))


def synth_reference(seed=1):
    """Generate the reference scenario; returns (ndjson messages, truth dict)."""
    msgs, truth = _aisbay.synth_reference(int(seed))
    return msgs, _json.loads(truth)
