"""Cross-checks that back the ``oracle`` and ``scalecheck`` subcommands."""

from __future__ import annotations

import math

import numpy as np

from .dynamics import (
    Scenario,
    crossing_time_grid,
    flat_circle,
    init_electron,
    ode_oracle,
    trajectory,
    velocity,
)
from .pulse import PulseParams
from .radiation import emission_batch, time_domain_dW


def random_directions(count: int, seed: int = 0) -> np.ndarray:
    v = np.random.default_rng(seed).normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1)[:, None]


def oracle_report(s: Scenario, n_dirs: int = 20, seed: int = 0, steps_per_period: int = 4000) -> dict:
    """Chi-domain quadrature against the lab-time integral over the RK4 orbit."""
    dirs = random_directions(n_dirs, seed)
    values, _, conv = emission_batch(dirs, s, track_approx=False)
    lab = np.array([time_domain_dW(n, s, steps_per_period).total for n in dirs])
    rel = np.abs(lab / values[:, 0] - 1)
    return {
        "directions": dirs,
        "chi_domain": values[:, 0],
        "time_domain": lab,
        "rel_dev": rel,
        "max_rel_dev": float(rel.max()),
        "converged": bool(conv.all()),
    }


def kinematics_report(s: Scenario, steps_per_period: int = 2000) -> dict:
    """Closed-form velocity and position against the RK4 Lorentz-force orbit."""
    t = crossing_time_grid(s, steps_per_period)
    sol = ode_oracle(s, t, steps_per_period=steps_per_period)
    chi = sol.chi
    beta = velocity(chi, s)
    r = trajectory(chi, s)
    vel_err = np.linalg.norm(beta - sol.beta, axis=1) / np.linalg.norm(sol.beta, axis=1)
    pos_err = np.linalg.norm(r - sol.r, axis=1) / np.max(np.linalg.norm(sol.r, axis=1))
    return {
        "samples": t.size,
        "velocity_rel_err": float(vel_err.max()),
        "position_rel_err": float(pos_err.max()),
    }


def frequency_scaling(s: Scenario, n_dirs: int = 50, seed: int = 1, factor: float = 2.0) -> dict:
    """dW/dOmega at scaled laser frequency over dW/dOmega at the base frequency."""
    dirs = random_directions(n_dirs, seed)
    scaled = s.with_pulse(omega_L=factor * s.pulse.omega_L)
    base, _, c0 = emission_batch(dirs, s, track_approx=False)
    new, _, c1 = emission_batch(dirs, scaled, track_approx=False)
    ratio = new[:, 0] / base[:, 0]
    return {
        "ratio": ratio,
        "max_rel_dev": float(np.max(np.abs(ratio / factor - 1))),
        "converged": bool(c0.all() and c1.all()),
    }


def shape_scaling(eta_a=50.0, gamma_a=45.0, eta_b=25.0, gamma_b=22.5) -> dict:
    """Flat-top ridge angle for two head-on cases with the same eta/gamma."""
    ta = flat_circle(Scenario(PulseParams(eta=eta_a), init_electron(gamma_a))).theta0
    tb = flat_circle(Scenario(PulseParams(eta=eta_b), init_electron(gamma_b))).theta0
    return {"theta0_a": ta, "theta0_b": tb, "diff_over_pi": abs(ta - tb) / math.pi}


def track_directions(s: Scenario, count: int = 10) -> np.ndarray:
    """Velocity directions at ``count`` equally spaced interior points of the support."""
    lo, hi = s.chi_support
    chi = np.linspace(lo, hi, count + 2)[1:-1]
    b = velocity(chi, s)
    return b / np.linalg.norm(b, axis=1)[:, None]
