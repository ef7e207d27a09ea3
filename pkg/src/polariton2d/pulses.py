"""Single-cycle THz waveforms and the two-pulse (A, B, tau) schedule."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
GRID_TOL = 1e-6  # fraction of dt tolerated when snapping delays and aligning grids


class WaveformError(ValueError):
    pass


@dataclass(frozen=True)
class Waveform:
    """Uniformly sampled real field: ``t0`` and ``dt`` in ps, ``samples`` in kV/cm."""

    t0: float
    dt: float
    samples: np.ndarray = field(repr=False)

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=float)
        if self.dt <= 0:
            raise WaveformError("dt must be > 0")
        if samples.ndim != 1 or len(samples) < 2:
            raise WaveformError("waveform needs at least 2 samples")
        if not np.all(np.isfinite(samples)):
            raise WaveformError("waveform contains non-finite samples")
        samples.flags.writeable = False
        object.__setattr__(self, "samples", samples)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + self.dt * (self.n - 1)

    def scaled(self, factor: float) -> "Waveform":
        return Waveform(self.t0, self.dt, self.samples * factor)

    def shifted(self, delay: float) -> "Waveform":
        """Same samples, time origin moved by ``delay``."""
        return Waveform(self.t0 + delay, self.dt, self.samples)


@dataclass(frozen=True)
class PulsePair:
    """Pulse A is the fixed reference; pulse B arrives ``tau`` ps later.

    With this convention the phase of A is independent of tau (pseudo-wave vector
    (nu, 0)) and B's phase fronts run along t - tau = const (pseudo-wave vector
    (nu, nu)).
    """

    pulse_a: Waveform
    pulse_b: Waveform
    tau: float = 0.0


def synth_single_cycle(center_freq=1.0, envelope_fwhm=1.0, peak_amplitude=1.0, grid=(-2.0, 0.001, 10001),
                       cep=0.0, t_center=0.0) -> Waveform:
    """Gaussian-enveloped cosine carrier with the DC component removed.

    ``grid`` is ``(t0, dt, n)``.  The DC correction subtracts a scaled copy of the
    envelope so the time integral vanishes; the result is then rescaled so the global
    extremum equals ``peak_amplitude``.
    """
    t0, dt, n = grid
    n = int(n)
    if center_freq <= 0 or envelope_fwhm <= 0 or peak_amplitude < 0:
        raise WaveformError("need center_freq > 0, envelope_fwhm > 0, peak_amplitude >= 0")
    if dt <= 0 or n < 2:
        raise WaveformError("grid needs dt > 0 and at least 2 samples")
    if (n - 1) * dt < 6.0 * envelope_fwhm:
        raise WaveformError("grid underruns pulse support")
    t = t0 + dt * np.arange(n) - t_center
    sigma = envelope_fwhm * FWHM_TO_SIGMA
    env = np.exp(-0.5 * (t / sigma) ** 2)
    carrier = env * np.cos(2.0 * math.pi * center_freq * t + cep)
    shape = carrier - env * (carrier.sum() / env.sum())
    peak = np.max(np.abs(shape))
    if peak == 0.0:
        raise WaveformError("degenerate pulse shape")
    return Waveform(t0, dt, shape * (peak_amplitude / peak))


def default_pair(peak_a=1.3, peak_b=2.5, tau=0.0, grid=(-2.0, 0.001, 10001), **synth_kw) -> PulsePair:
    return PulsePair(
        synth_single_cycle(peak_amplitude=peak_a, grid=grid, **synth_kw),
        synth_single_cycle(peak_amplitude=peak_b, grid=grid, **synth_kw),
        tau,
    )


def snap_to_grid(tau: float, dt: float) -> float:
    return round(tau / dt) * dt


def _shift_samples(samples: np.ndarray, steps: int) -> np.ndarray:
    out = np.zeros_like(samples)
    if steps >= 0:
        if steps < len(samples):
            out[steps:] = samples[: len(samples) - steps]
    elif -steps < len(samples):
        out[:steps] = samples[-steps:]
    return out


def schedule(pair: PulsePair, combination: str) -> Waveform:
    """Drive waveform for one chopper state: ``"A"``, ``"B"`` or ``"AB"``.

    Output lives on pulse A's grid; pulse B is delayed by ``tau`` with zero fill.
    """
    a, b = pair.pulse_a, pair.pulse_b
    if abs(a.dt - b.dt) > GRID_TOL * a.dt:
        raise WaveformError("pulses must share the sample spacing")
    offset = (b.t0 - a.t0) / a.dt
    if abs(offset - round(offset)) > GRID_TOL:
        raise WaveformError("pulse grids are not aligned")
    steps = pair.tau / a.dt
    if abs(steps - round(steps)) > GRID_TOL:
        raise WaveformError(f"tau = {pair.tau} ps is not an integer multiple of dt = {a.dt} ps")
    shift = int(round(steps)) + int(round(offset))

    b_samples = np.zeros(a.n)
    m = min(a.n, b.n)
    b_samples[:m] = b.samples[:m]
    b_samples = _shift_samples(b_samples, shift)

    combination = combination.upper()
    if combination == "A":
        return Waveform(a.t0, a.dt, a.samples.copy())
    if combination == "B":
        return Waveform(a.t0, a.dt, b_samples)
    if combination == "AB":
        return Waveform(a.t0, a.dt, a.samples + b_samples)
    raise WaveformError(f"unknown combination {combination!r}")


def save_waveform(wf: Waveform, path) -> None:
    lines = ["# time_ps field_kV_per_cm"]
    lines += [f"{t:.9g} {v:.9g}" for t, v in zip(wf.times, wf.samples)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_waveform(path) -> Waveform:
    """Read the two-column text format; non-uniform time columns are resampled
    linearly onto the median spacing."""
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise WaveformError(f"{path}:{lineno}: expected two columns")
        try:
            rows.append((float(parts[0]), float(parts[1])))
        except ValueError as exc:
            raise WaveformError(f"{path}:{lineno}: {exc}") from exc
    if len(rows) < 2:
        raise WaveformError(f"{path}: need at least 2 rows")
    data = np.array(rows)
    t, v = data[:, 0], data[:, 1]
    steps = np.diff(t)
    if np.any(steps <= 0):
        raise WaveformError(f"{path}: time column is not strictly increasing")
    dt = float(np.median(steps))
    if np.allclose(steps, dt, rtol=1e-6, atol=0.0):
        return Waveform(float(t[0]), dt, v)
    n = int(math.floor((t[-1] - t[0]) / dt + 1e-9)) + 1
    grid = t[0] + dt * np.arange(n)
    return Waveform(float(t[0]), dt, np.interp(grid, t, v))
