"""Circularly polarized plane-wave pulse with Gaussian wings and a flat top.

The pulse propagates along +z.  All lengths are in atomic units and the
light-front variable ``chi = c t - z`` is the only argument the fields
depend on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .units import C, E_CHARGE, M_E

# Literal constant of the envelope exponent; equals 2 ln 2 to four digits,
# which makes tau the FWHM of the intensity profile f**2.
GAUSS_CONST = 1.386

# Envelope values below this are treated as outside the pulse.
ENVELOPE_CUTOFF = 1e-8


@dataclass(frozen=True)
class PulseParams:
    eta: float = 50.0
    omega_L: float = 0.043
    tau: float = 1.0
    n_c: float = 0.0
    phi0: float = 0.0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if not self.omega_L > 0:
            raise ValueError(f"omega_L must be positive, got {self.omega_L}")
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.n_c >= 0:
            raise ValueError(f"n_c must be non-negative, got {self.n_c}")

    @property
    def A0(self) -> float:
        """Peak vector-potential amplitude, eta m c / |e|."""
        return self.eta * M_E * C / abs(E_CHARGE)

    @property
    def k_L(self) -> float:
        return self.omega_L / C

    @property
    def period(self) -> float:
        return 2 * math.pi / self.omega_L

    @property
    def wavelength(self) -> float:
        return C * self.period

    @property
    def flat_length(self) -> float:
        return self.n_c * self.wavelength

    @property
    def wing_periods(self) -> float:
        """Wing length, in periods, after which the envelope drops below the cutoff."""
        return self.tau * math.sqrt(math.log(1 / ENVELOPE_CUTOFF) / GAUSS_CONST)

    @property
    def support(self) -> tuple[float, float]:
        """Light-front interval outside which the envelope is below the cutoff."""
        w = self.wing_periods * self.wavelength
        return -w, self.flat_length + w

    def with_(self, **changes) -> "PulseParams":
        fields = dict(eta=self.eta, omega_L=self.omega_L, tau=self.tau, n_c=self.n_c, phi0=self.phi0)
        fields.update(changes)
        return PulseParams(**fields)


def _wing_offset(chi, p: PulseParams):
    chi = np.asarray(chi, dtype=float)
    # distance into the wing, zero on the flat top
    return np.where(chi < 0, chi, np.where(chi > p.flat_length, chi - p.flat_length, 0.0))


def envelope(chi, p: PulseParams):
    """Flat-top envelope with Gaussian wings, in (0, 1]."""
    u = p.k_L * _wing_offset(chi, p)
    return np.exp(-GAUSS_CONST * u**2 / (4 * math.pi**2 * p.tau**2))


def envelope_derivative(chi, p: PulseParams):
    """Analytic d(envelope)/d(chi); zero on the flat top."""
    d = _wing_offset(chi, p)
    return -2 * GAUSS_CONST * p.k_L**2 * d / (4 * math.pi**2 * p.tau**2) * envelope(chi, p)


def vector_potential(chi, p: PulseParams):
    """Transverse vector potential, shape ``chi.shape + (2,)``."""
    phase = p.k_L * np.asarray(chi, dtype=float) - p.phi0
    amp = p.A0 / math.sqrt(2) * envelope(chi, p)
    return np.stack([amp * np.sin(phase), amp * np.cos(phase)], axis=-1)


def vector_potential_derivative(chi, p: PulseParams):
    """Analytic dA/d(chi): envelope term plus carrier term."""
    chi = np.asarray(chi, dtype=float)
    phase = p.k_L * chi - p.phi0
    scale = p.A0 / math.sqrt(2)
    f = envelope(chi, p)
    df = envelope_derivative(chi, p)
    s, c = np.sin(phase), np.cos(phase)
    dx = scale * (df * s + f * p.k_L * c)
    dy = scale * (df * c - f * p.k_L * s)
    return np.stack([dx, dy], axis=-1)
