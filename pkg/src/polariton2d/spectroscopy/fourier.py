"""2D Fourier analysis of nonlinear scans E_nl(t, tau).

Transform convention (t along columns, tau along rows):

    S(nu_t, nu_tau) = sum_t sum_tau E(t, tau) exp(-2 pi i nu_t t) exp(+2 pi i nu_tau tau)

evaluated for nu_t >= 0 only (E is real).  With pulse B delayed by tau, a
pump-probe term carrying B's phase shows up at (nu, nu) and the four-wave-mixing
term 2 k_A - k_B at (nu, -nu).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import ndimage
from scipy.interpolate import RegularGridInterpolator

from polariton2d.spectroscopy.textio import Axis, read_matrix, write_matrix

UNIFORM_RTOL = 1e-6


class SpectrumError(ValueError):
    pass


def _uniform_step(values, name):
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or len(values) < 2:
        raise SpectrumError(f"{name} grid needs at least 2 points")
    steps = np.diff(values)
    step = float(np.mean(steps))
    if step <= 0 or np.max(np.abs(steps - step)) > UNIFORM_RTOL * step:
        raise SpectrumError(f"{name} grid is not uniform")
    return step


@dataclass
class Scan2D:
    t: np.ndarray  # ps
    tau: np.ndarray  # ps
    values: np.ndarray  # (len(tau), len(t)), kV/cm
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.tau = np.asarray(self.tau, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.tau), len(self.t)):
            raise SpectrumError(f"values shape {self.values.shape} != (n_tau, n_t) = ({len(self.tau)}, {len(self.t)})")

    @property
    def dt(self) -> float:
        return _uniform_step(self.t, "t")

    @property
    def dtau(self) -> float:
        return _uniform_step(self.tau, "tau")

    def save(self, path) -> None:
        write_matrix(path, self.values, Axis.from_values("tau", "ps", self.tau),
                     Axis.from_values("t", "ps", self.t), self.meta)

    @classmethod
    def load(cls, path) -> "Scan2D":
        values, a1, a2, meta = read_matrix(path)
        return cls(a2.values, a1.values, values, meta)


@dataclass
class Spectrum2D:
    nu_t: np.ndarray  # THz, >= 0
    nu_tau: np.ndarray  # THz, signed, ascending
    amplitude: np.ndarray  # (len(nu_tau), len(nu_t)), normalized to its peak
    complex: np.ndarray | None = None  # unnormalized complex transform
    normalization: float = 1.0
    bin_t: float = 0.0  # resolution 1/(n dt) of the unpadded record, THz
    bin_tau: float = 0.0
    energy: float = 0.0  # full-plane spectral energy before normalization
    meta: dict = field(default_factory=dict)

    def save(self, path) -> None:
        meta = {"normalization": f"{self.normalization:.9g}", "bin_t": f"{self.bin_t:.9g}",
                "bin_tau": f"{self.bin_tau:.9g}", **self.meta}
        write_matrix(path, self.amplitude, Axis.from_values("nu_tau", "THz", self.nu_tau),
                     Axis.from_values("nu_t", "THz", self.nu_t), meta)

    @classmethod
    def load(cls, path) -> "Spectrum2D":
        values, a1, a2, meta = read_matrix(path)
        norm = float(meta.pop("normalization", 1.0))
        bt = float(meta.pop("bin_t", 0.0))
        btau = float(meta.pop("bin_tau", 0.0))
        return cls(a2.values, a1.values, values, None, norm, bt, btau, meta=meta)

    def value_at(self, nu_t, nu_tau) -> float:
        interp = RegularGridInterpolator((self.nu_tau, self.nu_t), self.amplitude, bounds_error=False, fill_value=0.0)
        return float(interp([[nu_tau, nu_t]])[0])


def tail_taper(n: int, fraction: float) -> np.ndarray:
    """Flat window with a raised-cosine roll-off over the last ``fraction`` of samples."""
    w = np.ones(n)
    m = int(round(fraction * n))
    if m >= 2:
        w[n - m:] = 0.5 * (1.0 + np.cos(np.pi * np.arange(1, m + 1) / m))
    return w


def windowed(scan: Scan2D, taper: float = 0.15) -> np.ndarray:
    return scan.values * tail_taper(len(scan.tau), taper)[:, None] * tail_taper(len(scan.t), taper)[None, :]


def spectrum_2d(scan: Scan2D, taper: float = 0.15, pad: int = 4, nu_t_max: float | None = None,
                keep_complex: bool = True) -> Spectrum2D:
    """Normalized 2D amplitude spectrum of a scan.

    ``taper`` is the tail fraction rolled off on both axes, ``pad`` the zero-padding
    factor.  ``nu_t_max`` crops the stored nu_t range; ``energy`` always refers to the
    full transform.
    """
    dt, dtau = scan.dt, scan.dtau
    if pad < 1:
        raise SpectrumError("pad must be >= 1")
    data = windowed(scan, taper)
    n_tau, n_t = data.shape
    nt_pad, ntau_pad = pad * n_t, pad * n_tau
    f_t = np.fft.rfft(data, n=nt_pad, axis=1)
    # full-plane energy: interior rfft bins stand for a conjugate pair
    weights = np.full(f_t.shape[1], 2.0)
    weights[0] = 1.0
    if nt_pad % 2 == 0:
        weights[-1] = 1.0
    nu_t = np.fft.rfftfreq(nt_pad, dt)
    if nu_t_max is not None:
        # tau-axis Parseval lets the full-plane energy come from the uncropped rows
        energy = float(np.sum(weights[None, :] * np.abs(f_t) ** 2)) / nt_pad
        keep = nu_t <= nu_t_max + 1e-12
        f_t, nu_t = f_t[:, keep], nu_t[keep]
    full = np.fft.ifft(f_t, n=ntau_pad, axis=0) * ntau_pad
    if nu_t_max is None:
        energy = float(np.sum(weights[None, :] * np.abs(full) ** 2)) / (nt_pad * ntau_pad)
    full = np.fft.fftshift(full, axes=0)
    nu_tau = np.fft.fftshift(np.fft.fftfreq(ntau_pad, dtau))
    amp = np.abs(full)
    peak = float(amp.max())
    norm = peak if peak > 0 else 1.0
    return Spectrum2D(
        nu_t=nu_t,
        nu_tau=nu_tau,
        amplitude=amp / norm,
        complex=full if keep_complex else None,
        normalization=norm,
        bin_t=1.0 / (n_t * dt),
        bin_tau=1.0 / (n_tau * dtau),
        energy=energy,
    )


def time_energy(scan: Scan2D, taper: float = 0.15) -> float:
    return float(np.sum(windowed(scan, taper) ** 2))


def find_local_maxima(spectrum: Spectrum2D, threshold: float, size: int = 3):
    """Local maxima of the normalized amplitude strictly above ``threshold``.

    Returns a list of ``(nu_t, nu_tau, amplitude)`` sorted by amplitude, largest first.
    """
    amp = spectrum.amplitude
    filt = ndimage.maximum_filter(amp, size=size, mode="constant", cval=-np.inf)
    mask = (amp == filt) & (amp > threshold)
    rows, cols = np.nonzero(mask)
    peaks = [(float(spectrum.nu_t[c]), float(spectrum.nu_tau[r]), float(amp[r, c])) for r, c in zip(rows, cols)]
    peaks.sort(key=lambda p: -p[2])
    return peaks


@dataclass
class PeakMatch:
    nu_t: float
    nu_tau: float
    amplitude: float
    peak: object  # MixingPeak
    distance: float  # in bins


def classify_peaks(spectrum: Spectrum2D, catalog, threshold: float = 0.1, tol_t: float | None = None,
                   tol_tau: float | None = None, size: int = 3):
    """Match above-threshold local maxima to the nearest catalog entry.

    Tolerances default to one unpadded FFT bin per axis.  Returns
    ``(matches, unmatched)`` where unmatched entries are ``(nu_t, nu_tau, amplitude)``.
    """
    catalog = list(catalog)
    if not catalog:
        raise SpectrumError("empty catalog")
    tol_t = spectrum.bin_t if tol_t is None else tol_t
    tol_tau = spectrum.bin_tau if tol_tau is None else tol_tau
    locs = np.array([p.location for p in catalog])
    matches, unmatched = [], []
    for nu_t, nu_tau, a in find_local_maxima(spectrum, threshold, size):
        dx = np.abs(locs[:, 0] - nu_t) / tol_t
        dy = np.abs(locs[:, 1] - nu_tau) / tol_tau
        ok = (dx <= 1.0) & (dy <= 1.0)
        if not np.any(ok):
            unmatched.append((nu_t, nu_tau, a))
            continue
        dist = np.hypot(dx, dy)
        dist[~ok] = np.inf
        k = int(np.argmin(dist))
        matches.append(PeakMatch(nu_t, nu_tau, a, catalog[k], float(dist[k])))
    return matches, unmatched


def nearest_local_maximum(spectrum: Spectrum2D, nu_t, nu_tau, threshold=0.0, size=3):
    """Closest local maximum to a target position, with its distance in bins."""
    best = None
    for pt, ptau, a in find_local_maxima(spectrum, threshold, size):
        d = math.hypot((pt - nu_t) / spectrum.bin_t, (ptau - nu_tau) / spectrum.bin_tau)
        if best is None or d < best[3]:
            best = (pt, ptau, a, d)
    return best


@dataclass
class EnsembleStats:
    mean: np.ndarray
    stderr: np.ndarray
    n: int

    @property
    def normalized_mean_stderr(self) -> float:
        """Frequency-averaged standard error over the peak of the mean."""
        peak = float(np.max(np.abs(self.mean)))
        return float(np.mean(self.stderr)) / peak if peak > 0 else 0.0


def _sample_array(sample):
    if isinstance(sample, Scan2D):
        return sample.values, (sample.t, sample.tau)
    if isinstance(sample, Spectrum2D):
        return sample.amplitude * sample.normalization, (sample.nu_t, sample.nu_tau)
    arr = np.asarray(sample, dtype=float)
    return arr, None


def ensemble_stats(samples) -> EnsembleStats:
    """Per-bin mean and standard error sigma / sqrt(n) (sample sigma, ddof = 1).

    Spectra enter with their normalization undone, so all samples share one scale.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise SpectrumError("need at least 2 samples")
    arrays, grids = zip(*(_sample_array(s) for s in samples))
    shape = arrays[0].shape
    for a, g in zip(arrays, grids):
        if a.shape != shape:
            raise SpectrumError("sample grids differ")
        if g is not None and grids[0] is not None:
            if any(len(x) != len(y) or not np.allclose(x, y) for x, y in zip(g, grids[0])):
                raise SpectrumError("sample grids differ")
    stack = np.stack(arrays)
    n = len(arrays)
    return EnsembleStats(stack.mean(axis=0), stack.std(axis=0, ddof=1) / math.sqrt(n), n)


def parse_axis_spec(spec: str):
    """``"nu_tau=0.5"``, ``"nu_t=1.3"`` or ``"diagonal"`` (nu_tau = nu_t)."""
    spec = spec.replace(" ", "")
    if spec in ("diagonal", "nu_tau=nu_t", "nu_t=nu_tau"):
        return ("diagonal", None)
    key, _, val = spec.partition("=")
    if key not in ("nu_tau", "nu_t") or not val:
        raise SpectrumError(f"bad cut spec {spec!r}")
    return (key, float(val))


def cut(spectrum: Spectrum2D, axis_spec):
    """Interpolated amplitude along a line.  Returns ``(coordinate, amplitude)``.

    The coordinate is nu_t for horizontal and diagonal cuts, nu_tau for nu_t = c.
    """
    kind, c = parse_axis_spec(axis_spec) if isinstance(axis_spec, str) else axis_spec
    interp = RegularGridInterpolator((spectrum.nu_tau, spectrum.nu_t), spectrum.amplitude)
    t_lo, t_hi = spectrum.nu_t[0], spectrum.nu_t[-1]
    tau_lo, tau_hi = spectrum.nu_tau[0], spectrum.nu_tau[-1]
    if kind == "nu_tau":
        if not tau_lo <= c <= tau_hi:
            raise SpectrumError(f"nu_tau = {c} lies outside the spectrum")
        x = spectrum.nu_t
        pts = np.column_stack([np.full_like(x, c), x])
    elif kind == "nu_t":
        if not t_lo <= c <= t_hi:
            raise SpectrumError(f"nu_t = {c} lies outside the spectrum")
        x = spectrum.nu_tau
        pts = np.column_stack([x, np.full_like(x, c)])
    else:
        x = spectrum.nu_t[(spectrum.nu_t >= max(t_lo, tau_lo)) & (spectrum.nu_t <= min(t_hi, tau_hi))]
        if len(x) == 0:
            raise SpectrumError("diagonal does not intersect the spectrum")
        pts = np.column_stack([x, x])
    return np.asarray(x, dtype=float), interp(pts)


def save_cut(path, x, y, x_name="nu_THz") -> None:
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([x_name, "amplitude"])
        for a, b in zip(x, y):
            w.writerow([f"{a:.9g}", f"{b:.9g}"])


def spectral_weight_fraction(spectrum: Spectrum2D, nu_split: float = 1.0) -> float:
    """Fraction of |A|^2 at nu_t > ``nu_split``."""
    power = (spectrum.amplitude * spectrum.normalization) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    return float(power[:, spectrum.nu_t > nu_split].sum() / total)


def noisy_ensemble(scan: Scan2D, sigma: float, n: int, rng, **spectrum_kw) -> list:
    """``n`` spectra of ``scan`` with independent white noise of std ``sigma`` added."""
    out = []
    for _ in range(n):
        noisy = Scan2D(scan.t, scan.tau, scan.values + rng.normal(0.0, sigma, scan.values.shape), scan.meta)
        out.append(spectrum_2d(noisy, keep_complex=False, **spectrum_kw))
    return out


def calibrate_noise(scan: Scan2D, target: float, n: int, rng, pilot: float | None = None, *,
                    rtol: float = 0.02, max_iter: int = 4, **spectrum_kw) -> float:
    """Noise std giving a normalized mean standard error of ``target``.

    The figure is close to linear in the noise amplitude, so each ensemble rescales
    the current guess by target / measured.  Near the signal peaks |S + N| is not
    linear in N, hence a few refinement rounds until within ``rtol``.
    """
    sigma = pilot if pilot is not None else 0.05 * float(np.max(np.abs(scan.values))) or 1.0
    for _ in range(max_iter):
        measured = ensemble_stats(noisy_ensemble(scan, sigma, n, rng, **spectrum_kw)).normalized_mean_stderr
        if measured <= 0:
            raise SpectrumError("noise ensemble produced no spread")
        sigma *= target / measured
        if abs(measured / target - 1.0) <= rtol:
            break
    return sigma
