"""Flat key-value run configuration files.

The format is one ``key = value`` pair per line ('#' comments allowed).
Recognized keys: n_particles, percentile, budget, sim_step, sim_horizon,
obs_step, summary, distance, kernel, prior_family, prior_params, x0_v, x0_u,
seed, pilot_size, center.  ``prior_params`` is a comma-separated list laid
out per family (see priors module).
"""

from __future__ import annotations

from pathlib import Path

from .engine import EngineConfig
from .errors import ConfigError
from .priors import PriorSpec

__all__ = ["read_config", "engine_config_from_mapping", "load_engine_config", "format_config"]

_INT_KEYS = {"n_particles", "budget", "seed", "pilot_size"}
_FLOAT_KEYS = {"percentile", "sim_step", "sim_horizon", "obs_step", "x0_v", "x0_u"}
_STR_KEYS = {"summary", "distance", "kernel", "prior_family", "alpha_mode"}
_BOOL_KEYS = {"center"}
_LIST_KEYS = {"prior_params"}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS | _BOOL_KEYS | _LIST_KEYS

# mapping from file keys to EngineConfig field names where they differ
_FIELD_NAMES = {"summary": "summary_kind", "distance": "distance_kind", "kernel": "kernel_kind"}

_REQUIRED = ("budget", "sim_horizon", "obs_step", "prior_family", "prior_params")


def read_config(path) -> dict[str, str]:
    """Parse a flat key-value file into a string mapping."""
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, value = line.partition("=")
        elif ":" in line:
            key, _, value = line.partition(":")
        else:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = key.strip(), value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        mapping[key] = value
    return mapping


def _parse_bool(value: str) -> bool:
    lowered = value.lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"cannot parse boolean from {value!r}")


def engine_config_from_mapping(mapping: dict[str, str]) -> EngineConfig:
    """Build an EngineConfig from string key-value pairs (file or CLI)."""
    missing = [k for k in _REQUIRED if k not in mapping]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")

    kwargs = {}
    for key, value in mapping.items():
        if key == "prior_family":
            continue
        if key in _LIST_KEYS:
            continue
        field = _FIELD_NAMES.get(key, key)
        try:
            if key in _INT_KEYS:
                kwargs[field] = int(value)
            elif key in _FLOAT_KEYS:
                kwargs[field] = float(value)
            elif key in _BOOL_KEYS:
                kwargs[field] = _parse_bool(value)
            else:
                kwargs[field] = value
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc

    try:
        params = tuple(
            float(tok) for tok in mapping["prior_params"].replace(",", " ").split()
        )
        prior = PriorSpec(mapping["prior_family"], params)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return EngineConfig(prior=prior, **kwargs)


def load_engine_config(path, overrides: dict[str, str] | None = None) -> EngineConfig:
    """Read a config file and apply string-valued overrides on top."""
    mapping = read_config(path)
    for key, value in (overrides or {}).items():
        if key not in KNOWN_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        mapping[key] = value
    return engine_config_from_mapping(mapping)


def format_config(cfg: EngineConfig) -> str:
    """Echo an EngineConfig in the flat key-value format."""
    lines = [
        f"n_particles = {cfg.n_particles}",
        f"percentile = {cfg.percentile!r}",
        f"budget = {cfg.budget}",
        f"sim_step = {cfg.sim_step!r}",
        f"sim_horizon = {cfg.sim_horizon!r}",
        f"obs_step = {cfg.obs_step!r}",
        f"summary = {cfg.summary_kind}",
        f"distance = {cfg.distance_kind}",
        f"kernel = {cfg.kernel_kind}",
        f"prior_family = {cfg.prior.family}",
        "prior_params = " + ", ".join(repr(v) for v in cfg.prior.hyperparameters),
        f"x0_v = {cfg.x0_v!r}",
        f"x0_u = {cfg.x0_u!r}",
        f"seed = {cfg.seed}",
        f"pilot_size = {cfg.pilot_size}",
        f"center = {str(cfg.center).lower()}",
        f"alpha_mode = {cfg.alpha_mode}",
    ]
    return "\n".join(lines) + "\n"
