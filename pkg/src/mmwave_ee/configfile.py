"""Flat ``key = value`` experiment files.

Example::

    # SNR sweep with every strategy
    trials = 1000
    seed = 7
    sweep = snr
    sweep.values = -20, -10, 0, 10, 20
    methods = dm, bf, digital, analogue
    system.n_tx = 32
    system.snr_db = 10        # fixed SNR for the ntx sweep
    power.p_max = 1.0

Blank lines and ``#`` comments are ignored. Unknown keys are errors.
"""

from __future__ import annotations

from dataclasses import fields, replace
from pathlib import Path

from .channel import SystemConfig
from .power import PowerModel
from .sim import DEFAULT_SWEEP_VALUES, ConfigError, ExperimentConfig

_SYSTEM_KEYS = {f.name: f.type for f in fields(SystemConfig)}
_POWER_KEYS = {f.name for f in fields(PowerModel)}
_TOP_KEYS = {"trials", "seed", "sweep", "sweep.values", "methods", "pursuit", "output", "workers", "i_max"}


def _floats(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def _labels(text):
    return tuple(x.strip().upper() for x in text.split(",") if x.strip())


def parse_pairs(text: str, source="<string>") -> dict[str, str]:
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key = key.strip().lower()
        if key in pairs:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        pairs[key] = value.strip()
    return pairs


def build_config(pairs: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Apply parsed pairs on top of ``base`` (defaults if omitted)."""
    cfg = base or ExperimentConfig()
    system, power, top = {}, {}, {}
    try:
        for key, value in pairs.items():
            section, _, name = key.partition(".")
            if section == "system" and name == "snr_db":
                system["snr"] = 10.0 ** (float(value) / 10.0)
            elif section == "system" and name == "mean_angle_range_deg":
                system[name] = _floats(value)
            elif section == "system" and name in _SYSTEM_KEYS:
                system[name] = int(value) if name in ("n_tx", "n_rx", "n_cl", "n_ray") else float(value)
            elif section == "power" and name in _POWER_KEYS:
                power[name] = float(value)
            elif key in _TOP_KEYS:
                top[key] = value
            else:
                raise ConfigError(f"unknown configuration key {key!r}")

        changes = {}
        if system:
            changes["base"] = replace(cfg.base, **system)
        if power:
            changes["power"] = replace(cfg.power, **power)
        for key in ("trials", "seed", "workers", "i_max"):
            if key in top:
                changes[key] = int(top[key])
        if "sweep" in top:
            changes["sweep"] = top["sweep"].lower()
            changes["sweep_values"] = DEFAULT_SWEEP_VALUES.get(changes["sweep"], cfg.sweep_values)
        if "sweep.values" in top:
            changes["sweep_values"] = _floats(top["sweep.values"])
        if "methods" in top:
            changes["methods"] = _labels(top["methods"])
        if "pursuit" in top:
            changes["pursuit"] = top["pursuit"].lower()
        if "output" in top:
            changes["output_path"] = top["output"]
        return replace(cfg, **changes)
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return build_config(parse_pairs(text, str(path)))


def dump_config(cfg: ExperimentConfig) -> str:
    """Render a configuration in the same format :func:`load_config` reads."""
    lines = [
        f"trials = {cfg.trials}",
        f"seed = {cfg.seed}",
        f"sweep = {cfg.sweep}",
        "sweep.values = " + ", ".join(repr(v) for v in cfg.sweep_values),
        "methods = " + ", ".join(m.lower() for m in cfg.methods),
        f"pursuit = {cfg.pursuit}",
        f"output = {cfg.output_path}",
        f"workers = {cfg.workers}",
        f"i_max = {cfg.i_max}",
    ]
    for f in fields(SystemConfig):
        value = getattr(cfg.base, f.name)
        if f.name == "mean_angle_range_deg":
            lines.append(f"system.{f.name} = {value[0]!r}, {value[1]!r}")
        else:
            lines.append(f"system.{f.name} = {value!r}")
    for f in fields(PowerModel):
        lines.append(f"power.{f.name} = {getattr(cfg.power, f.name)!r}")
    return "\n".join(lines) + "\n"
