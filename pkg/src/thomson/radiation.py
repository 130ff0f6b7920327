"""Angular distribution of the radiation emitted along the closed-form orbit.

The chi-domain integrals are evaluated with composite Simpson on nested
uniform grids.  Kinematics do not depend on the observation direction, so
they are tabulated once per scenario on the finest grid and every
direction reads strided subsets of that table.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit, prange

from .dynamics import Scenario, crossing_time_grid, kinematics, ode_oracle
from .units import C, E0_SQ

N_L = np.array([0.0, 0.0, 1.0])

# Largest allowed ratio between the angular step of the sampled velocity
# direction and the local emission-cone width sqrt(2 kappa).
MAX_TRACK_STEP = 0.5

CHANNELS = ("total", "pol1", "pol2", "approx_total", "approx_pol1", "approx_pol2")
_N_OUT = 9  # six channels above plus the three 1/kappa^3 variants


class DegenerateDirection(ValueError):
    """The polarization basis is undefined for n parallel to the laser axis."""


@dataclass(frozen=True)
class Direction:
    theta: float
    phi: float

    @property
    def n(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])


@dataclass(frozen=True)
class PolarizationBasis:
    eps1: np.ndarray
    eps2: np.ndarray


@dataclass
class EmissionResult:
    total: float
    w1: float | None
    w2: float | None
    approx_total: float
    approx_w1: float | None
    approx_w2: float | None
    quad_points: int
    converged: bool


@dataclass
class TimeDomainResult:
    total: float
    w1: float | None
    w2: float | None
    points: int


def unit_directions(theta, phi) -> np.ndarray:
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def polarization_basis(n) -> PolarizationBasis:
    n = np.asarray(n, dtype=float)
    nxl = np.cross(n, N_L)
    norm = np.linalg.norm(nxl)
    if norm < 1e-12:
        raise DegenerateDirection("n is parallel to the laser propagation axis")
    return PolarizationBasis(eps1=nxl / norm, eps2=np.cross(n, nxl) / norm)


def _basis_arrays(dirs):
    nxl = np.cross(dirs, N_L)
    norm = np.linalg.norm(nxl, axis=-1)
    ok = norm >= 1e-12
    safe = np.where(ok, norm, 1.0)[:, None]
    e1 = np.where(ok[:, None], nxl / safe, 0.0)
    e2 = np.where(ok[:, None], np.cross(dirs, nxl) / safe, 0.0)
    return e1, e2, ok


def _one_minus_speed(k):
    # 1 - |beta| from 1 - beta^2 = 1/gamma^2, free of cancellation
    b = np.linalg.norm(k.beta, axis=-1)
    return 1.0 / (k.gamma**2 * (1.0 + b)), b


def kappa(chi, n, s: Scenario):
    """kappa = 1 - n . beta(chi), computed without cancellation near beta -> n."""
    k = kinematics(chi, s)
    omb, b = _one_minus_speed(k)
    n = np.asarray(n, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        bhat = np.where(b[..., None] > 0, k.beta / b[..., None], 0.0)
    d = n - bhat
    return omb + 0.5 * b * np.sum(d * d, axis=-1)


def w_vector(chi, n, s: Scenario):
    """w = n x [(n - beta) x beta_dot]."""
    k = kinematics(chi, s)
    n = np.asarray(n, dtype=float)
    n_b = np.broadcast_to(n, k.beta.shape)
    return np.cross(n_b, np.cross(n_b - k.beta, k.beta_dot))


def track_acceleration_components(chi, s: Scenario):
    """Acceleration components along eps1, eps2 evaluated at n = beta_hat(chi)."""
    k = kinematics(chi, s)
    beta, bd = k.beta, k.beta_dot
    bperp2 = beta[..., 0] ** 2 + beta[..., 1] ** 2
    b = np.linalg.norm(beta, axis=-1)
    if np.any(b == 0):
        raise DegenerateDirection("velocity vanishes; beta_hat undefined")
    bperp = np.sqrt(bperp2)
    b1 = (bd[..., 0] * beta[..., 1] - beta[..., 0] * bd[..., 1]) / bperp
    dbperp2_dt = 2 * (beta[..., 0] * bd[..., 0] + beta[..., 1] * bd[..., 1])
    b2 = (0.5 * beta[..., 2] * dbperp2_dt - bd[..., 2] * bperp2) / (b * bperp)
    return b1, b2


# ----------------------------------------------------------- tabulated orbit


@dataclass(frozen=True)
class _Table:
    data: np.ndarray  # (N_f + 1, 12)
    h_f: float
    n_levels: int
    base_stride: int


@lru_cache(maxsize=16)
def emission_table(s: Scenario) -> _Table:
    """Kinematics on the finest nested grid spanning the pulse support."""
    lo, hi = s.chi_support
    periods = (hi - lo) / s.pulse.wavelength
    n0 = max(2, math.ceil(s.quad.samples_per_period * periods))
    n0 += n0 % 2
    n_levels = 1 + max(0, math.ceil(math.log2(s.quad.max_per_period / s.quad.samples_per_period)))
    base_stride = 2 ** (n_levels - 1)
    n_f = n0 * base_stride
    chi = np.linspace(lo, hi, n_f + 1)
    k = kinematics(chi, s)
    omb, b = _one_minus_speed(k)
    with np.errstate(invalid="ignore", divide="ignore"):
        bhat = np.where(b[:, None] > 0, k.beta / b[:, None], 0.0)
    data = np.empty((n_f + 1, 12))
    data[:, 0:3] = k.beta
    data[:, 3:6] = bhat
    data[:, 6] = omb
    data[:, 7] = b
    data[:, 8:11] = k.beta_dot
    data[:, 11] = 1.0 + k.F
    return _Table(np.ascontiguousarray(data), (hi - lo) / n_f, n_levels, base_stride)


@njit(cache=True, inline="always")
def _kap(n0, n1, n2, row):
    d0 = n0 - row[3]
    d1 = n1 - row[4]
    d2 = n2 - row[5]
    return row[6] + 0.5 * row[7] * (d0 * d0 + d1 * d1 + d2 * d2)


@njit(cache=True)
def _sample(n0, n1, n2, e1, e2, basis, row, acc):
    kap = _kap(n0, n1, n2, row)
    bx, by, bz = row[0], row[1], row[2]
    ax, ay, az = row[8], row[9], row[10]
    # u = (n - beta) x beta_dot ; w = n x u
    mx, my, mz = n0 - bx, n1 - by, n2 - bz
    ux = my * az - mz * ay
    uy = mz * ax - mx * az
    uz = mx * ay - my * ax
    wx = n1 * uz - n2 * uy
    wy = n2 * ux - n0 * uz
    wz = n0 * uy - n1 * ux
    k2 = kap * kap
    weight = row[11] / (k2 * k2 * kap)
    weight3 = row[11] / (k2 * kap)
    omb2 = row[6] * row[6]
    nbd = n0 * ax + n1 * ay + n2 * az
    perp2 = ax * ax + ay * ay + az * az - nbd * nbd
    acc[0] += weight * (wx * wx + wy * wy + wz * wz)
    acc[3] += weight * omb2 * perp2
    acc[6] += weight3 * perp2
    if basis:
        w1 = wx * e1[0] + wy * e1[1] + wz * e1[2]
        w2 = wx * e2[0] + wy * e2[1] + wz * e2[2]
        a1 = ax * e1[0] + ay * e1[1] + az * e1[2]
        a2 = ax * e2[0] + ay * e2[1] + az * e2[2]
        acc[1] += weight * w1 * w1
        acc[2] += weight * w2 * w2
        acc[4] += weight * omb2 * a1 * a1
        acc[5] += weight * omb2 * a2 * a2
        acc[7] += weight3 * a1 * a1
        acc[8] += weight3 * a2 * a2
    return kap


@njit(cache=True, inline="always")
def _step_ratio(n0, n1, n2, ra, rb):
    d0 = rb[3] - ra[3]
    d1 = rb[4] - ra[4]
    d2 = rb[5] - ra[5]
    ka = _kap(n0, n1, n2, ra)
    kb = _kap(n0, n1, n2, rb)
    return math.sqrt((d0 * d0 + d1 * d1 + d2 * d2) / (2.0 * min(ka, kb)))


@njit(cache=True, inline="always")
def _rel_change(new, old):
    if new == old:
        return 0.0
    return abs(new - old) / abs(new)


@njit(cache=True)
def _integrate_one(n, e1, e2, basis, table, h_f, n_levels, base_stride, tol, qmax, track_approx, out):
    n0, n1, n2 = n[0], n[1], n[2]
    last = table.shape[0] - 1
    zero = np.zeros(_N_OUT)
    ends = np.zeros(_N_OUT)
    inner = np.zeros(_N_OUT)
    odd = np.zeros(_N_OUT)
    S = np.zeros(_N_OUT)
    S_prev = np.zeros(_N_OUT)

    _sample(n0, n1, n2, e1, e2, basis, table[0], ends)
    _sample(n0, n1, n2, e1, e2, basis, table[last], ends)

    stride = base_stride
    h = h_f * stride
    q = 0.0
    j = 1
    for i in range(stride, last, stride):
        if j % 2 == 1:
            _sample(n0, n1, n2, e1, e2, basis, table[i], odd)
        else:
            _sample(n0, n1, n2, e1, e2, basis, table[i], inner)
        j += 1
    for i in range(0, last, stride):
        r = _step_ratio(n0, n1, n2, table[i], table[i + stride])
        if r > q:
            q = r
    for c in range(_N_OUT):
        S_prev[c] = h / 3.0 * (ends[c] + 4.0 * odd[c] + 2.0 * inner[c])
        inner[c] += odd[c]
    points = last // stride + 1

    converged = False
    was_small = False
    for _level in range(1, n_levels):
        stride //= 2
        h *= 0.5
        mids = zero.copy()
        q = 0.0
        for i in range(stride, last, 2 * stride):
            _sample(n0, n1, n2, e1, e2, basis, table[i], mids)
            ra = _step_ratio(n0, n1, n2, table[i - stride], table[i])
            rb = _step_ratio(n0, n1, n2, table[i], table[i + stride])
            if ra > q:
                q = ra
            if rb > q:
                q = rb
        for c in range(_N_OUT):
            S[c] = h / 3.0 * (ends[c] + 4.0 * mids[c] + 2.0 * inner[c])
            inner[c] += mids[c]
        points = last // stride + 1
        change = _rel_change(S[0], S_prev[0])
        if track_approx:
            change = max(change, _rel_change(S[3], S_prev[3]))
        small = change <= tol
        for c in range(_N_OUT):
            S_prev[c] = S[c]
        # either two successive small changes or one far below tol, which
        # guards against accidental agreement before the asymptotic regime
        if (small and was_small or change <= 0.01 * tol) and q <= qmax:
            converged = True
            break
        was_small = small

    for c in range(_N_OUT):
        out[c] = S_prev[c]
    return points, converged


@njit(cache=True, parallel=True)
def _integrate_many(dirs, e1, e2, basis, table, h_f, n_levels, base_stride, tol, qmax, track_approx, values, points, converged):
    for m in prange(dirs.shape[0]):
        p, c = _integrate_one(
            dirs[m], e1[m], e2[m], basis[m], table, h_f, n_levels, base_stride, tol, qmax, track_approx, values[m]
        )
        points[m] = p
        converged[m] = c


def emission_batch(dirs, s: Scenario, track_approx: bool = True):
    """Integrate all nine channels for each row of ``dirs``.

    Returns ``(values, points, converged)`` where ``values[:, :6]`` follow
    :data:`CHANNELS` and ``values[:, 6:]`` hold the 1/kappa^3 variants of
    the approximate total, pol1 and pol2.  Polarized channels are NaN where
    the basis is degenerate.
    """
    dirs = np.ascontiguousarray(np.atleast_2d(dirs), dtype=float)
    tab = emission_table(s)
    e1, e2, ok = _basis_arrays(dirs)
    values = np.zeros((dirs.shape[0], _N_OUT))
    points = np.zeros(dirs.shape[0], dtype=np.int64)
    conv = np.zeros(dirs.shape[0], dtype=np.bool_)
    _integrate_many(
        dirs, np.ascontiguousarray(e1), np.ascontiguousarray(e2), ok, tab.data, tab.h_f, tab.n_levels,
        tab.base_stride, s.quad.tol, MAX_TRACK_STEP, track_approx, values, points, conv,
    )
    values *= E0_SQ / (4 * math.pi * C**2)
    values[np.ix_(~ok, [1, 2, 4, 5, 7, 8])] = np.nan
    return values, points, conv


def _result(row, points, conv, variant):
    def opt(x):
        return None if math.isnan(x) else float(x)

    a = row[6:9] if variant else row[3:6]
    return EmissionResult(
        total=float(row[0]),
        w1=opt(row[1]),
        w2=opt(row[2]),
        approx_total=float(a[0]),
        approx_w1=opt(a[1]),
        approx_w2=opt(a[2]),
        quad_points=int(points),
        converged=bool(conv),
    )


def dW_dOmega(n, s: Scenario) -> EmissionResult:
    """Exact dW/dOmega and its polarized parts in direction ``n`` (au)."""
    values, points, conv = emission_batch(np.asarray(n, float)[None, :], s, track_approx=False)
    return _result(values[0], points[0], conv[0], False)


def dW_approx(n, s: Scenario, variant: bool = False) -> EmissionResult:
    """High-energy approximation; ``variant`` swaps (1-beta)^2/kappa^5 for 1/kappa^3."""
    values, points, conv = emission_batch(np.asarray(n, float)[None, :], s, track_approx=True)
    return _result(values[0], points[0], conv[0], variant)


# ---------------------------------------------------------------- lab time


@lru_cache(maxsize=8)
def _lab_orbit(s: Scenario, steps_per_period: int):
    t = crossing_time_grid(s, steps_per_period)
    sol = ode_oracle(s, t, steps_per_period=steps_per_period)
    omb = 1.0 / (sol.gamma**2 * (1.0 + np.linalg.norm(sol.beta, axis=1)))
    return sol, omb


def _simpson_uniform(y, h):
    return h / 3.0 * (y[0] + y[-1] + 4.0 * y[1:-1:2].sum() + 2.0 * y[2:-1:2].sum())


def time_domain_dW(n, s: Scenario, steps_per_period: int = 4000) -> TimeDomainResult:
    """dW/dOmega from the lab-time integral along the RK4 orbit."""
    sol, omb = _lab_orbit(s, steps_per_period)
    n = np.asarray(n, dtype=float)
    b = np.linalg.norm(sol.beta, axis=1)
    bhat = sol.beta / b[:, None]
    d = n - bhat
    kap = omb + 0.5 * b * np.sum(d * d, axis=1)
    nb = np.broadcast_to(n, sol.beta.shape)
    w = np.cross(nb, np.cross(nb - sol.beta, sol.beta_dot))
    weight = 1.0 / kap**5
    h = sol.t[1] - sol.t[0]
    pref = E0_SQ / (4 * math.pi * C)
    total = pref * _simpson_uniform(weight * np.sum(w * w, axis=1), h)
    try:
        basis = polarization_basis(n)
    except DegenerateDirection:
        return TimeDomainResult(total, None, None, sol.t.size)
    w1 = pref * _simpson_uniform(weight * (w @ basis.eps1) ** 2, h)
    w2 = pref * _simpson_uniform(weight * (w @ basis.eps2) ** 2, h)
    return TimeDomainResult(total, w1, w2, sol.t.size)
