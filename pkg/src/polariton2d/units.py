"""Physical constants and unit helpers (ps / rad/ps / THz / kV/cm)."""

import math

from scipy import constants as _c

TWO_PI = 2.0 * math.pi

E_CHARGE = _c.e
HBAR = _c.hbar
M_E = _c.m_e


def thz_to_rad_ps(nu):
    """THz -> rad/ps."""
    return TWO_PI * nu


def rad_ps_to_thz(omega):
    return omega / TWO_PI


def cyclotron_rad_ps(b_field, m_eff):
    """Bare cyclotron angular frequency eB/m* in rad/ps."""
    return E_CHARGE * b_field / (m_eff * M_E) * 1e-12


def magnetic_length(b_field):
    """l0 = sqrt(hbar / eB) in metres."""
    return math.sqrt(HBAR / (E_CHARGE * b_field))


def landau_dos_cm2(b_field):
    """Density of states 2eB/hbar of one Landau cylinder, in cm^-2."""
    return 2.0 * E_CHARGE * b_field / HBAR * 1e-4


def mev_to_rad_ps(energy_mev):
    return energy_mev * 1e-3 * E_CHARGE / HBAR * 1e-12
