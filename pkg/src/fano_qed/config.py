"""Line-based ``key = value`` configuration files for SystemSpec."""

from __future__ import annotations

import math

from .coupling import SystemSpec
from .errors import ConfigError, DomainError

KEYS = ("channels", "omega", "sigma_re", "sigma_im", "chi", "t", "r_sign", "phi", "parity")


def _number(key, text):
    if key == "chi" and text.strip().lower() in ("inf", "infinity", "+inf"):
        return math.inf
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"value for '{key}' is not a number: {text!r}") from None


def _integer(key, text):
    value = _number(key, text)
    if value != int(value):
        raise ConfigError(f"value for '{key}' must be an integer: {text!r}")
    return int(value)


def parse_config(text: str) -> dict:
    """Parse config text into a dict keyed by the names in `KEYS`."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        if key in ("channels", "r_sign", "parity"):
            values[key] = _integer(key, value)
        else:
            values[key] = _number(key, value)
    return values


def load_config(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def spec_from_values(values: dict, base: SystemSpec | None = None) -> SystemSpec:
    """Build a SystemSpec, taking unspecified fields from `base` (or defaults)."""
    base = base or SystemSpec()
    unknown = set(values) - set(KEYS)
    if unknown:
        raise ConfigError(f"unknown key '{sorted(unknown)[0]}'")
    sigma = complex(values.get("sigma_re", base.sigma.real), values.get("sigma_im", base.sigma.imag))
    try:
        return SystemSpec(
            omega=values.get("omega", base.omega),
            sigma=sigma,
            chi=values.get("chi", base.chi),
            t_bg=values.get("t", base.t_bg),
            r_sign=values.get("r_sign", base.r_sign),
            phi=values.get("phi", base.phi),
            parity=values.get("parity", base.parity),
            n_channels=values.get("channels", base.n_channels),
        )
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
