"""``key = value`` run configuration with per-line error reporting.

Angles (``phi0``) are given in units of pi.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DEG90, HEADON, QuadSettings, Scenario, init_electron
from .pulse import PulseParams
from .radiation import CHANNELS
from .scan import AngularGrid

GEOMETRIES = ("headon", "deg90", "custom")


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class RunConfig:
    eta: float = 50.0
    omega_au: float = 0.043
    tau: float = 1.0
    n_c: float = 0.0
    phi0: float = 0.0
    gamma: float = 10.0
    geometry: str = "headon"
    direction: tuple | None = None
    n_theta: int = 181
    n_phi: int = 361
    tol: float = 1e-4
    max_per_period: int = 4096
    outdir: str = "out"
    channels: tuple = ("total",)
    clip_ln: tuple | None = None

    def scenario(self) -> Scenario:
        pulse = PulseParams(eta=self.eta, omega_L=self.omega_au, tau=self.tau, n_c=self.n_c,
                            phi0=self.phi0 * math.pi)
        if self.geometry == "custom":
            direction = self.direction
        else:
            direction = HEADON if self.geometry == "headon" else DEG90
        quad = QuadSettings(max_per_period=self.max_per_period, tol=self.tol)
        return Scenario(pulse, init_electron(self.gamma, direction), quad)

    def grid(self) -> AngularGrid:
        return AngularGrid(self.n_theta, self.n_phi)


def _positive(x):
    if not x > 0:
        raise ValueError("must be positive")
    return x


def _float_list(text):
    return tuple(float(t) for t in text.replace(",", " ").split())


def _direction(text):
    v = _float_list(text)
    if len(v) != 3 or abs(float(np.linalg.norm(v)) - 1) > 1e-9:
        raise ValueError("must be a unit 3-vector 'x, y, z'")
    return v


def _geometry(text):
    if text not in GEOMETRIES:
        raise ValueError(f"must be one of {', '.join(GEOMETRIES)}")
    return text


def _gamma(text):
    g = float(text)
    if not g > 1:
        raise ValueError("gamma must exceed 1")
    return g


def _grid_count(text):
    n = int(text)
    if n < 2:
        raise ValueError("must be at least 2")
    return n


def _tol(text):
    t = float(text)
    if not 0 < t < 1:
        raise ValueError("must lie in (0, 1)")
    return t


def _max_per_period(text):
    n = int(text)
    if n < QuadSettings.samples_per_period:
        raise ValueError(f"must be at least {QuadSettings.samples_per_period}")
    return n


def _channels(text):
    names = tuple(t for t in text.replace(",", " ").split())
    bad = [n for n in names if n not in CHANNELS]
    if bad or not names:
        raise ValueError(f"unknown channel(s) {bad}; choose from {', '.join(CHANNELS)}")
    return names


def _clip(text):
    v = _float_list(text)
    if len(v) != 2 or not all(map(math.isfinite, v)) or not v[0] < v[1]:
        raise ValueError("must be two finite numbers 'lo, hi' with lo < hi")
    return v


def _non_negative(text):
    x = float(text)
    if not x >= 0:
        raise ValueError("must be non-negative")
    return x


PARSERS = {
    "eta": lambda t: _positive(float(t)),
    "omega_au": lambda t: _positive(float(t)),
    "tau": lambda t: _positive(float(t)),
    "n_c": _non_negative,
    "phi0": float,
    "gamma": _gamma,
    "geometry": _geometry,
    "direction": _direction,
    "n_theta": _grid_count,
    "n_phi": _grid_count,
    "tol": _tol,
    "max_per_period": _max_per_period,
    "outdir": str,
    "channels": _channels,
    "clip_ln": _clip,
}


def _convert(key, raw, line=None):
    if key not in PARSERS:
        raise ConfigError(f"unknown key {key!r}", line)
    try:
        return PARSERS[key](raw)
    except ValueError as exc:
        raise ConfigError(f"invalid value for {key!r}: {raw!r} ({exc})", line) from None


def _check(cfg: RunConfig, lines: dict) -> RunConfig:
    if cfg.geometry == "custom" and cfg.direction is None:
        raise ConfigError("geometry = custom requires 'direction'", lines.get("geometry"))
    return cfg


def parse_config(text: str, overrides: dict | None = None) -> RunConfig:
    """Parse ``key = value`` lines; ``overrides`` (raw strings) take precedence."""
    values, lines = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        values[key] = _convert(key, value, lineno)
        lines[key] = lineno
    for key, value in (overrides or {}).items():
        if value is not None:
            values[key] = _convert(key, value) if isinstance(value, str) else value
    return _check(dataclasses.replace(RunConfig(), **values), lines)
