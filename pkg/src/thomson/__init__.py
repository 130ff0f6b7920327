"""Nonlinear Thomson scattering of a circularly polarized plane-wave pulse."""

from .dynamics import QuadSettings, Scenario, init_electron
from .pulse import PulseParams
from .scan import AngularGrid, compute_map

__all__ = ["AngularGrid", "PulseParams", "QuadSettings", "Scenario", "compute_map", "init_electron"]
