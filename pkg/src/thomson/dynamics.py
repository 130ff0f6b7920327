"""Electron motion in the plane-wave pulse as explicit functions of chi.

Everything here is a pure function of an immutable :class:`Scenario`.
Vectors are numpy arrays with the Cartesian component on the last axis.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from numba import njit

from .pulse import (
    GAUSS_CONST,
    PulseParams,
    envelope,
    vector_potential,
    vector_potential_derivative,
)
from .units import C, E_CHARGE, HBAR, M_E

MC = M_E * C

HEADON = (0.0, 0.0, -1.0)
DEG90 = (0.0, 1.0, 0.0)


class OracleError(RuntimeError):
    """The time-domain integration lost the plane-wave invariant."""


@dataclass(frozen=True)
class ElectronInit:
    gamma: float
    direction: tuple = HEADON

    def __post_init__(self):
        if not self.gamma > 1:
            raise ValueError(f"gamma must exceed 1, got {self.gamma}")
        d = np.asarray(self.direction, dtype=float)
        if d.shape != (3,) or abs(np.linalg.norm(d) - 1) > 1e-12:
            raise ValueError(f"direction must be a unit 3-vector, got {self.direction}")
        object.__setattr__(self, "direction", tuple(float(x) for x in d))

    @property
    def p0(self) -> np.ndarray:
        return MC * math.sqrt(self.gamma**2 - 1) * np.asarray(self.direction)

    @property
    def energy0(self) -> float:
        return self.gamma * M_E * C**2

    @property
    def beta0(self) -> np.ndarray:
        return math.sqrt(1 - 1 / self.gamma**2) * np.asarray(self.direction)

    @property
    def nl_dot_p0(self) -> float:
        """Light-front invariant E0/c - p0z."""
        return self.energy0 / C - self.p0[2]


def init_electron(gamma: float, direction=HEADON) -> ElectronInit:
    if isinstance(direction, str):
        direction = {"headon": HEADON, "deg90": DEG90}[direction]
    return ElectronInit(float(gamma), tuple(direction))


@dataclass(frozen=True)
class QuadSettings:
    samples_per_period: int = 32
    max_per_period: int = 4096
    tol: float = 1e-4

    def __post_init__(self):
        if not 0 < self.tol < 1:
            raise ValueError(f"quadrature tolerance must lie in (0, 1), got {self.tol}")
        if self.samples_per_period < 2 or self.max_per_period < self.samples_per_period:
            raise ValueError("need 2 <= samples_per_period <= max_per_period")


@dataclass(frozen=True)
class Scenario:
    pulse: PulseParams
    electron: ElectronInit
    quad: QuadSettings = field(default_factory=QuadSettings)

    @property
    def chi_support(self) -> tuple[float, float]:
        return self.pulse.support

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def with_pulse(self, **changes) -> "Scenario":
        return Scenario(self.pulse.with_(**changes), self.electron, self.quad)


@dataclass
class KinematicSample:
    chi: np.ndarray
    f: np.ndarray
    A: np.ndarray
    dA: np.ndarray
    calA2: np.ndarray
    F: np.ndarray
    dF: np.ndarray
    beta: np.ndarray
    beta_dot: np.ndarray
    chi_rate: np.ndarray
    gamma: np.ndarray


@dataclass(frozen=True)
class FlatCircle:
    r0: float
    z0: float
    theta0: float
    # arccos(Z0/R0) as printed; NaN when |Z0| > R0
    theta0_printed: float


def _perp_momentum(chi, s: Scenario):
    A = vector_potential(chi, s.pulse)
    return s.electron.p0[:2] - E_CHARGE * A, A


def kinematics(chi, s: Scenario) -> KinematicSample:
    """Evaluate every closed-form kinematic quantity at ``chi``."""
    chi = np.asarray(chi, dtype=float)
    lam = s.electron.nl_dot_p0
    p0 = s.electron.p0
    pperp, A = _perp_momentum(chi, s)
    dA = vector_potential_derivative(chi, s.pulse)
    calA2 = E_CHARGE**2 * np.sum(A * A, axis=-1) - 2 * E_CHARGE * (A @ p0[:2])
    F = calA2 / (2 * lam**2) + p0[2] / lam
    # d(e^2 calA^2)/dchi = 2 pperp . (-e dA)
    dF = np.sum(pperp * (-E_CHARGE * dA), axis=-1) / lam**2
    onepF = 1 + F

    beta = np.empty(chi.shape + (3,))
    beta[..., :2] = pperp / (lam * onepF)[..., None]
    beta[..., 2] = F / onepF

    bd = np.empty(chi.shape + (3,))
    bd[..., :2] = -(C / (onepF**2 * lam))[..., None] * (
        E_CHARGE * dA + (dF / onepF)[..., None] * pperp
    )
    bd[..., 2] = C * dF / onepF**3
    lo, hi = s.chi_support
    outside = (chi < lo) | (chi > hi)
    bd[outside] = 0.0

    return KinematicSample(
        chi=chi,
        f=envelope(chi, s.pulse),
        A=A,
        dA=dA,
        calA2=calA2,
        F=F,
        dF=dF,
        beta=beta,
        beta_dot=bd,
        chi_rate=C / onepF,
        gamma=lam * onepF / MC,
    )


def eff_A2(chi, s: Scenario):
    """e^2 calA^2 = e^2 A^2 - 2 e A . p0perp."""
    return kinematics(chi, s).calA2


def big_F(chi, s: Scenario):
    return kinematics(chi, s).F


def dF(chi, s: Scenario):
    return kinematics(chi, s).dF


def velocity(chi, s: Scenario):
    return kinematics(chi, s).beta


def acceleration(chi, s: Scenario):
    """d(beta)/dt in 1/time; zero outside the pulse support."""
    return kinematics(chi, s).beta_dot


def chi_rate(chi, s: Scenario):
    return kinematics(chi, s).chi_rate


# 8-point Gauss-Legendre nodes on [0, 1]
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1)
_GL_W = 0.5 * _GL_W


def trajectory(chi_grid, s: Scenario) -> np.ndarray:
    """Position r(chi), shape (N, 3), with r = 0 at ``chi_grid[0]``.

    Each grid interval is cut at the envelope junctions, split into pieces
    no longer than a 32nd of a wavelength and integrated with 8-point
    Gauss-Legendre.
    """
    chi_grid = np.asarray(chi_grid, dtype=float)
    if chi_grid.ndim != 1 or np.any(np.diff(chi_grid) <= 0):
        raise ValueError("chi_grid must be one-dimensional and strictly ascending")
    lam = s.electron.nl_dot_p0
    junctions = np.array([0.0, s.pulse.flat_length])
    inside = junctions[(junctions > chi_grid[0]) & (junctions < chi_grid[-1])]
    cuts = np.union1d(chi_grid, inside)
    parent = np.searchsorted(chi_grid, cuts[:-1], side="right") - 1
    widths = np.diff(cuts)
    pieces = np.maximum(1, np.ceil(widths / (s.pulse.wavelength / 32)).astype(int))
    owner = np.repeat(np.arange(widths.size), pieces)
    # start of each piece inside its interval
    first = np.repeat(np.cumsum(pieces) - pieces, pieces)
    k = np.arange(owner.size) - first
    h = widths[owner] / pieces[owner]
    a = cuts[owner] + k * h
    nodes = (a[:, None] + h[:, None] * _GL_X).ravel()
    wts = (h[:, None] * _GL_W).ravel()

    pperp, _ = _perp_momentum(nodes, s)
    F = kinematics(nodes, s).F
    integrand = np.column_stack([pperp / lam, F]) * wts[:, None]
    per_interval = np.zeros((chi_grid.size - 1, 3))
    np.add.at(per_interval, np.repeat(parent[owner], _GL_X.size), integrand)
    r = np.zeros((chi_grid.size, 3))
    r[1:] = np.cumsum(per_interval, axis=0)
    return r


def beta_hat_track(chi_grid, s: Scenario):
    """Polar angles (theta, phi) of the velocity direction; NaN where beta = 0."""
    beta = velocity(chi_grid, s)
    b = np.linalg.norm(beta, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        theta = np.arccos(np.clip(beta[..., 2] / b, -1, 1))
    phi = np.mod(np.arctan2(beta[..., 1], beta[..., 0]), 2 * math.pi)
    theta = np.where(b > 0, theta, np.nan)
    phi = np.where(b > 0, phi, np.nan)
    return theta, phi


def _flat_numerators(s: Scenario):
    lam = s.electron.nl_dot_p0
    p0z = s.electron.p0[2]
    a = E_CHARGE**2 * s.pulse.A0**2 / 4
    return lam, a + p0z * lam, lam**2 + a + p0z * lam


def flat_circle(s: Scenario) -> FlatCircle:
    """Radius, height and polar angle of the velocity circle on the flat top."""
    lam, num_z, den = _flat_numerators(s)
    r0 = abs(E_CHARGE) * s.pulse.A0 / math.sqrt(2) * lam / den
    z0 = num_z / den
    ratio = z0 / r0
    printed = math.acos(ratio) if abs(ratio) <= 1 else math.nan
    return FlatCircle(r0=r0, z0=z0, theta0=math.atan2(r0, z0), theta0_printed=printed)


def drift_cancel_gamma(eta: float) -> float:
    """Head-on Lorentz factor for which the flat-top longitudinal velocity vanishes.

    Bisection on e^2 A0^2 / 4 + p0z (n_L . p0) over gamma in (1, 1e6),
    run until the bracket can no longer shrink.
    """
    if not eta > 0:
        raise ValueError("eta must be positive")
    a = (eta * MC) ** 2 / 4

    def g(gamma):
        p = MC * math.sqrt(gamma * gamma - 1)
        return a - p * (gamma * MC + p)

    lo, hi = 1 + 1e-12, 1e6
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if g(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo if abs(g(lo)) <= abs(g(hi)) else hi


def deg90_threshold_gamma(eta: float) -> float:
    """Lorentz factor with p0y = |e| A0 / sqrt(2) for the 90-degree geometry."""
    return math.sqrt(1 + eta**2 / 2)


def dressed_momentum(s: Scenario) -> np.ndarray:
    """Four-vector q0 = p0 + e^2 A0^2 / (4 n_L . p0) n_L as (q^0, qx, qy, qz)."""
    lam = s.electron.nl_dot_p0
    shift = E_CHARGE**2 * s.pulse.A0**2 / (4 * lam)
    q = np.empty(4)
    q[0] = s.electron.energy0 / C + shift
    q[1:] = s.electron.p0
    q[3] += shift
    return q


def validity_params(s: Scenario) -> tuple[float, float]:
    """Classicality parameters (y_tilde, xi); both must be << 1."""
    eta, w = s.pulse.eta, s.pulse.omega_L
    y = 8 * eta * s.electron.gamma * HBAR * w / (M_E * C**2)
    pabs = float(np.linalg.norm(s.electron.p0))
    xi = eta * HBAR * w * (s.electron.energy0 + C * pabs) / (M_E**2 * C**4)
    return y, xi


# ---------------------------------------------------------------- ODE oracle


@dataclass
class OdeSolution:
    t: np.ndarray
    r: np.ndarray
    p: np.ndarray
    beta: np.ndarray
    beta_dot: np.ndarray

    @property
    def chi(self) -> np.ndarray:
        return C * self.t - self.r[:, 2]

    @property
    def gamma(self) -> np.ndarray:
        return np.sqrt(1 + np.sum(self.p**2, axis=1) / MC**2)


@njit(cache=True)
def _field_derivative(chi, amp, kL, g, flat, phi0):
    if chi < 0.0:
        d = chi
    elif chi > flat:
        d = chi - flat
    else:
        d = 0.0
    u = kL * d
    f = math.exp(-g * u * u)
    df = -2.0 * g * kL * kL * d * f
    ph = kL * chi - phi0
    s = math.sin(ph)
    c = math.cos(ph)
    return amp * (df * s + f * kL * c), amp * (df * c - f * kL * s)


@njit(cache=True)
def _lorentz(t, y, out, pars):
    # E = -dA/dt = -c A'(chi), B = curl A = (A'_y, -A'_x, 0); force e (E + v x B)
    amp, kL, g, flat, phi0, q, c, m = pars[0], pars[1], pars[2], pars[3], pars[4], pars[5], pars[6], pars[7]
    px, py, pz = y[3], y[4], y[5]
    en = math.sqrt(m * m * c * c + px * px + py * py + pz * pz)
    vx = px * c / en
    vy = py * c / en
    vz = pz * c / en
    chi = c * t - y[2]
    dax, day = _field_derivative(chi, amp, kL, g, flat, phi0)
    out[0] = vx
    out[1] = vy
    out[2] = vz
    out[3] = -q * dax * (c - vz)
    out[4] = -q * day * (c - vz)
    out[5] = -q * (vx * dax + vy * day)


@njit(cache=True)
def _rk4_run(t_out, y0, dt_max, pars, states, forces):
    n = t_out.size
    y = y0.copy()
    k1 = np.empty(6)
    k2 = np.empty(6)
    k3 = np.empty(6)
    k4 = np.empty(6)
    tmp = np.empty(6)
    states[0, :] = y
    _lorentz(t_out[0], y, k1, pars)
    forces[0, :] = k1[3:]
    for i in range(n - 1):
        span = t_out[i + 1] - t_out[i]
        nsub = int(math.ceil(span / dt_max))
        dt = span / nsub
        t = t_out[i]
        for _ in range(nsub):
            _lorentz(t, y, k1, pars)
            for j in range(6):
                tmp[j] = y[j] + 0.5 * dt * k1[j]
            _lorentz(t + 0.5 * dt, tmp, k2, pars)
            for j in range(6):
                tmp[j] = y[j] + 0.5 * dt * k2[j]
            _lorentz(t + 0.5 * dt, tmp, k3, pars)
            for j in range(6):
                tmp[j] = y[j] + dt * k3[j]
            _lorentz(t + dt, tmp, k4, pars)
            for j in range(6):
                y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j])
            t += dt
        states[i + 1, :] = y
        _lorentz(t_out[i + 1], y, k1, pars)
        forces[i + 1, :] = k1[3:]


def ode_oracle(s: Scenario, t_grid, steps_per_period: int = 2000) -> OdeSolution:
    """Integrate dp/dt = e (E + v x B) with fixed-step RK4 in lab time.

    The electron sits at the origin with momentum p0 at ``t_grid[0]``;
    output is sampled at ``t_grid``, with sub-steps no longer than
    ``period / steps_per_period``.
    """
    t_grid = np.ascontiguousarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be one-dimensional and strictly ascending")
    p = s.pulse
    pars = np.array([
        p.A0 / math.sqrt(2),
        p.k_L,
        GAUSS_CONST / (4 * math.pi**2 * p.tau**2),
        p.flat_length,
        p.phi0,
        E_CHARGE,
        C,
        M_E,
    ])
    y0 = np.zeros(6)
    y0[3:] = s.electron.p0
    states = np.empty((t_grid.size, 6))
    forces = np.empty((t_grid.size, 3))
    _rk4_run(t_grid, y0, p.period / steps_per_period, pars, states, forces)

    r, mom = states[:, :3], states[:, 3:]
    en_over_c = np.sqrt(MC**2 + np.sum(mom**2, axis=1))
    invariant = en_over_c - mom[:, 2]
    drift = np.max(np.abs(invariant / s.electron.nl_dot_p0 - 1))
    if not drift <= 1e-6:
        raise OracleError(f"light-front invariant drifted by {drift:.3e}; reduce the step")
    gamma = en_over_c / MC
    beta = mom / (gamma * MC)[:, None]
    bdotf = np.sum(beta * forces, axis=1)
    beta_dot = (forces - beta * bdotf[:, None]) / (gamma * MC)[:, None]
    return OdeSolution(t=t_grid, r=r, p=mom, beta=beta, beta_dot=beta_dot)


def crossing_time_grid(s: Scenario, samples_per_period: int = 2000) -> np.ndarray:
    """Uniform lab-time grid covering the full pulse crossing.

    Starts when the electron, at the origin, sees the leading edge of the
    support; ends one period after the trailing edge has passed.
    Uses the closed-form z(chi) only to size the interval.
    """
    lo, hi = s.chi_support
    z_end = trajectory(np.array([lo, hi]), s)[-1, 2]
    t0 = lo / C
    t1 = (hi + z_end) / C + s.pulse.period
    n = int(math.ceil((t1 - t0) / s.pulse.period * samples_per_period))
    n += n % 2  # even number of intervals for Simpson
    return np.linspace(t0, t1, n + 1)

