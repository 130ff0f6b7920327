"""Angular maps over the (theta, phi) rectangle and their file formats."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .dynamics import Scenario
from .radiation import CHANNELS, emission_batch, unit_directions

CSV_HEADER = "theta_over_pi,phi_over_pi,value_au,ln_value,converged"


@dataclass(frozen=True)
class AngularGrid:
    n_theta: int = 181
    n_phi: int = 361

    def __post_init__(self):
        if self.n_theta < 2 or self.n_phi < 2:
            raise ValueError("grid needs at least 2 cells along each axis")

    @property
    def theta(self) -> np.ndarray:
        return (np.arange(self.n_theta) + 0.5) * math.pi / self.n_theta

    @property
    def phi(self) -> np.ndarray:
        return (np.arange(self.n_phi) + 0.5) * 2 * math.pi / self.n_phi

    @property
    def d_theta(self) -> float:
        return math.pi / self.n_theta

    def directions(self) -> np.ndarray:
        t, p = np.meshgrid(self.theta, self.phi, indexing="ij")
        return unit_directions(t, p).reshape(-1, 3)


@dataclass
class AngularMap:
    grid: AngularGrid
    channel: str
    values: np.ndarray
    converged_mask: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def digest(self) -> str:
        return self.meta.get("digest", "nodigest")

    def file_stem(self) -> str:
        return f"{self.channel}_{self.digest}"


def configure_threads() -> int:
    """Cap numba workers by THOMSON_THREADS; returns the count in use."""
    limit = os.environ.get("THOMSON_THREADS")
    if limit:
        n = max(1, min(int(limit), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(n)
    return numba.get_num_threads()


def compute_map(s: Scenario, grid: AngularGrid, channels=("total",)) -> list[AngularMap]:
    """Evaluate the requested channels on every cell of ``grid``.

    Cells are independent work units written into a preallocated array,
    so the result does not depend on the worker count.
    """
    unknown = set(channels) - set(CHANNELS)
    if unknown:
        raise ValueError(f"unknown channels: {sorted(unknown)}")
    configure_threads()
    wants_approx = any(c.startswith("approx") for c in channels)
    values, _, conv = emission_batch(grid.directions(), s, track_approx=wants_approx)
    shape = (grid.n_theta, grid.n_phi)
    mask = conv.reshape(shape)
    meta = {"digest": s.digest()}
    return [
        AngularMap(grid, c, values[:, CHANNELS.index(c)].reshape(shape).copy(), mask.copy(), dict(meta))
        for c in channels
    ]


def ridge_locate(m: AngularMap, phi_index: int) -> float:
    """Cell-center theta of the column maximum; ties go to the smaller theta."""
    col = m.values[:, phi_index]
    if not m.converged_mask[:, phi_index].all():
        raise ValueError(f"column {phi_index} has unconverged cells")
    if not np.any(col > 0):
        raise ValueError(f"column {phi_index} is identically zero")
    return float(m.grid.theta[int(np.argmax(col))])


def mass_fraction(m: AngularMap, cells) -> float:
    """Solid-angle weighted share of the map carried by the boolean ``cells``."""
    w = np.sin(m.grid.theta)[:, None] * np.nan_to_num(m.values)
    return float(w[cells].sum() / w.sum())


def _g17(x: float) -> str:
    return format(x, ".17g")


def write_csv(m: AngularMap, path) -> Path:
    path = Path(path)
    lines = [CSV_HEADER]
    theta, phi = m.grid.theta / math.pi, m.grid.phi / math.pi
    for i in range(m.grid.n_theta):
        for j in range(m.grid.n_phi):
            v = float(m.values[i, j])
            ln = math.log(v) if v > 0 else (-math.inf if v == 0 else math.nan)
            lines.append(",".join([
                _g17(theta[i]), _g17(phi[j]), _g17(v), _g17(ln), "1" if m.converged_mask[i, j] else "0",
            ]))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_csv(path):
    """Parse a map CSV back into column arrays keyed by header name."""
    rows = Path(path).read_text(encoding="utf-8").splitlines()
    if rows[0] != CSV_HEADER:
        raise ValueError(f"unexpected header: {rows[0]!r}")
    data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    cols = {name: data[:, k] for k, name in enumerate(CSV_HEADER.split(","))}
    cols["converged"] = cols["converged"].astype(bool)
    return cols


def default_clip(m: AngularMap, decades: float = 20.0) -> tuple[float, float]:
    """ln-range spanning ``decades`` e-folds below the map maximum."""
    pos = m.values[(m.values > 0) & m.converged_mask]
    if pos.size == 0:
        return -1.0, 0.0
    hi = float(np.log(pos.max()))
    return hi - decades, hi


def heatmap_pixels(m: AngularMap, clip_ln_range) -> np.ndarray:
    lo, hi = clip_ln_range
    if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
        raise ValueError(f"clip range must be finite with lo < hi, got {clip_ln_range}")
    v = m.values
    good = (v > 0) & m.converged_mask
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.clip((np.log(np.where(good, v, 1.0)) - lo) / (hi - lo), 0.0, 1.0)
    pix = np.floor(65535 * frac + 0.5).astype(np.uint16)
    pix[~good] = 0
    return pix


def write_heatmap(m: AngularMap, path, clip_ln_range=None) -> Path:
    """16-bit binary PGM; row 0 is the smallest theta."""
    path = Path(path)
    clip = default_clip(m) if clip_ln_range is None else clip_ln_range
    pix = heatmap_pixels(m, clip)
    header = f"P5 {m.grid.n_phi} {m.grid.n_theta} 65535\n".encode("ascii")
    path.write_bytes(header + pix.astype(">u2").tobytes())
    return path


def read_pgm(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    head, _, body = raw.partition(b"\n")
    magic, w, h, maxval = head.split()
    if magic != b"P5" or int(maxval) != 65535:
        raise ValueError("not a 16-bit P5 file")
    return np.frombuffer(body, dtype=">u2").reshape(int(h), int(w))
