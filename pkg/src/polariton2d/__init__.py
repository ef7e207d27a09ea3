"""Subcycle nonlinear dynamics of ultrastrongly coupled cavity/Landau-electron systems.

Units used throughout: time in ps, angular frequency in rad/ps, frequency in THz,
electric field in kV/cm.
"""

from polariton2d.hopfield import HopfieldInput, PolaritonBranches, anticrossing_sweep, diagonalize
from polariton2d.pulses import PulsePair, Waveform, load_waveform, save_waveform, schedule, synth_single_cycle
from polariton2d.bosonic import BosonicParams, CavityMode, run_bosonic
from polariton2d.landau import LandauParams, run_landau

__version__ = "0.1.0"

__all__ = [
    "BosonicParams",
    "CavityMode",
    "HopfieldInput",
    "LandauParams",
    "PolaritonBranches",
    "PulsePair",
    "Waveform",
    "anticrossing_sweep",
    "diagonalize",
    "load_waveform",
    "run_bosonic",
    "run_landau",
    "save_waveform",
    "schedule",
    "synth_single_cycle",
]
