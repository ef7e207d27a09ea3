"""Two-pulse nonlinear spectroscopy: scans, 2D spectra, mixing-peak catalog."""

from polariton2d.spectroscopy.catalog import MixingPeak, catalog_to_csv, enumerate_mixing_peaks
from polariton2d.spectroscopy.experiment import emitted_response, run_2d_experiment
from polariton2d.spectroscopy.fourier import (
    Scan2D,
    Spectrum2D,
    classify_peaks,
    cut,
    ensemble_stats,
    find_local_maxima,
    spectrum_2d,
)
from polariton2d.spectroscopy.textio import read_matrix, write_matrix

__all__ = [
    "MixingPeak",
    "Scan2D",
    "Spectrum2D",
    "catalog_to_csv",
    "classify_peaks",
    "cut",
    "emitted_response",
    "ensemble_stats",
    "enumerate_mixing_peaks",
    "find_local_maxima",
    "read_matrix",
    "run_2d_experiment",
    "spectrum_2d",
    "write_matrix",
]
