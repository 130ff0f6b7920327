"""Hartree atomic units: m = |e| = hbar = 1."""

C = 137.035999084
M_E = 1.0
HBAR = 1.0
# electron charge carries its sign
E_CHARGE = -1.0
# Gaussian-like convention for the radiation prefactor
E0_SQ = 1.0
