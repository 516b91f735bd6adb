"""Default parameter values and config-file loading.

Defaults live in data/defaults.yaml; a user config file (YAML or JSON) can
override any subset, and CLI flags override both.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import yaml

from .bm3d import Bm3dParams
from .match_oracle import MatchParams


def load_defaults() -> dict:
    text = resources.files("bmstream").joinpath("data/defaults.yaml").read_text()
    return yaml.safe_load(text)


def load_config_file(path) -> dict:
    p = Path(path)
    text = p.read_text()
    if p.suffix.lower() == ".json":
        return json.loads(text)
    return yaml.safe_load(text)


def merge_config(base: dict, override: dict | None) -> dict:
    """Recursive dict merge; override wins on leaves."""
    if not override:
        return base
    out = dict(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = merge_config(out[key], val)
        else:
            out[key] = val
    return out


def _tau_for(section: dict, sigma: float, cfg: dict) -> float:
    if sigma > cfg.get("sigma_switch", 35.0):
        return float(section["tau_high_noise"])
    return float(section["tau"])


def match_params_from_config(
    cfg: dict, profile: str = "hard", sigma: float = 0.0, **overrides
) -> MatchParams:
    """Build MatchParams for the given profile ("hard" or "wiener")."""
    m = cfg["match"]
    s = cfg[profile]
    fields = {
        "block_size": int(m["block_size"]),
        "window_size": int(m["window_size"]),
        "stride": int(m["stride"]),
        "n_workers": int(m["n_workers"]),
        "max_matches": int(s["max_matches"]),
        "tau": _tau_for(s, sigma, cfg),
        "lambda2d": float(s["lambda2d"]),
        "sigma": sigma,
    }
    fields.update({k: v for k, v in overrides.items() if v is not None})
    return MatchParams(**fields)


def bm3d_params_from_config(cfg: dict, sigma: float, **match_overrides) -> Bm3dParams:
    f = cfg["filtering"]
    return Bm3dParams(
        hard=match_params_from_config(cfg, "hard", sigma, **match_overrides),
        wien=match_params_from_config(cfg, "wiener", sigma, **match_overrides),
        sigma=sigma,
        lambda3d=float(f["lambda3d"]),
        kaiser_beta=float(f["kaiser_beta"]),
    )


def default_match_params(sigma: float = 0.0, **overrides) -> MatchParams:
    return match_params_from_config(load_defaults(), "hard", sigma, **overrides)


def default_bm3d_params(sigma: float, **match_overrides) -> Bm3dParams:
    return bm3d_params_from_config(load_defaults(), sigma, **match_overrides)
