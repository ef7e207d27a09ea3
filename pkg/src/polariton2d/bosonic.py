"""Mean-field bosonic model: cavity modes coupled to one cyclotron (matter) mode.

Equations of motion, per cavity mode j with amplitude alpha_j and matter amplitude beta:

    d alpha_j/dt = -i w_j alpha_j - g_j alpha_j - i Om_j (beta + beta*)
                   - 2i D_j (alpha_j + alpha_j*) + kappa_j sqrt(g_j) s E(t)
    d beta/dt    = -i w_c beta - g_m beta - i sum_j Om_j (alpha_j + alpha_j*)

and the transmitted field E(t) - sum_j sqrt(g_rad,j) (alpha_j + alpha_j*) / s, where s
is the field-to-amplitude drive scale.  The model is strictly linear in E.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numba import njit

from polariton2d.pulses import Waveform
from polariton2d.units import TWO_PI

MAX_DT = 0.002  # ps


class DivergenceError(ArithmeticError):
    """Integration produced NaN/Inf; ``time`` is the last finite time stamp (ps)."""

    def __init__(self, time):
        super().__init__(f"integration diverged at t = {time:.6g} ps")
        self.time = time


@dataclass(frozen=True)
class CavityMode:
    """One resonator mode.  Rates and frequencies in rad/ps.

    ``gamma_rad`` is the radiative rate entering the reradiated field; it defaults to
    the total damping ``gamma``.
    """

    name: str
    omega: float
    gamma: float
    kappa: float
    omega_rabi: float
    gamma_rad: float | None = None

    def __post_init__(self):
        if self.gamma < 0:
            raise ValueError(f"mode {self.name}: gamma must be >= 0")
        if self.gamma_rad is None:
            object.__setattr__(self, "gamma_rad", self.gamma)


@dataclass(frozen=True)
class BosonicParams:
    modes: tuple[CavityMode, ...]
    omega_c: float
    gamma_matter: float
    drive_scale: float = 1.0
    # explicit diamagnetic shifts (rad/ps); None -> Om_j^2 / omega_c
    diamagnetic: tuple[float, ...] | None = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        if self.diamagnetic is None:
            if self.omega_c <= 0:
                d = tuple(0.0 for _ in self.modes)
            else:
                d = tuple(m.omega_rabi**2 / self.omega_c for m in self.modes)
            object.__setattr__(self, "diamagnetic", d)
        elif len(self.diamagnetic) != len(self.modes):
            raise ValueError("one diamagnetic shift per cavity mode")
        if self.gamma_matter < 0:
            raise ValueError("gamma_matter must be >= 0")

    def mode_arrays(self):
        f = np.array
        return (
            f([m.omega for m in self.modes], dtype=float),
            f([m.gamma for m in self.modes], dtype=float),
            f([m.kappa for m in self.modes], dtype=float),
            f([m.omega_rabi for m in self.modes], dtype=float),
            f(self.diamagnetic, dtype=float),
            f([m.gamma_rad for m in self.modes], dtype=float),
        )

    def with_nu_c(self, nu_c: float, reference_nu_c: float | None = None) -> "BosonicParams":
        """Retune the cyclotron frequency keeping D_j fixed (Om_j ~ sqrt(nu_c)).

        nu_c = 0 is replaced by 1e-3 THz; the matter mode then decouples while the
        diamagnetic terms remain.
        """
        from polariton2d.hopfield import ZERO_NU_C_PROXY

        ref = self.omega_c if reference_nu_c is None else TWO_PI * reference_nu_c
        wc = TWO_PI * max(nu_c, ZERO_NU_C_PROXY)
        scale = math.sqrt(wc / ref)
        modes = tuple(replace(m, omega_rabi=m.omega_rabi * scale) for m in self.modes)
        return replace(self, modes=modes, omega_c=wc, diamagnetic=self.diamagnetic)


def effective_two_mode(drive_scale=1.0, nu_c=0.868, **overrides) -> BosonicParams:
    """Two effective resonator modes (LC 0.86 THz, DP 1.5 THz) for the dynamics."""
    kw = dict(
        nu_lc=0.86, nu_dp=1.5, rabi_lc=0.42, rabi_dp=0.20,
        gamma_lc=0.05, gamma_dp=0.10, gamma_matter=0.025, kappa_lc=1.0, kappa_dp=1.5,
    )
    kw.update(overrides)
    modes = (
        CavityMode("LC", TWO_PI * kw["nu_lc"], TWO_PI * kw["gamma_lc"], kw["kappa_lc"], TWO_PI * kw["rabi_lc"]),
        CavityMode("DP", TWO_PI * kw["nu_dp"], TWO_PI * kw["gamma_dp"], kw["kappa_dp"], TWO_PI * kw["rabi_dp"]),
    )
    return BosonicParams(modes, TWO_PI * nu_c, TWO_PI * kw["gamma_matter"], drive_scale)


def bare_resonator_two_mode(drive_scale=1.0, nu_c=0.84, **overrides) -> BosonicParams:
    """Bare-resonator preset (LC 0.81 THz, DP 1.8 THz)."""
    overrides = {"nu_lc": 0.81, "nu_dp": 1.8, **overrides}
    return effective_two_mode(drive_scale, nu_c, **overrides)


@dataclass(frozen=True)
class BosonicTrajectory:
    times: np.ndarray
    alpha: np.ndarray  # (n_t, n_modes) complex
    beta: np.ndarray  # (n_t,) complex
    e_measured: np.ndarray
    mode_names: tuple[str, ...] = ()

    def to_csv(self, path) -> None:
        """Columns t_ps, re/im of each alpha, re/im beta, e_measured."""
        names = [n.lower() for n in self.mode_names] or [str(k) for k in range(self.alpha.shape[1])]
        header = ["t_ps"]
        for n in names:
            header += [f"re_alpha_{n}", f"im_alpha_{n}"]
        header += ["re_beta", "im_beta", "e_measured"]
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for k, t in enumerate(self.times):
                row = [t]
                for j in range(self.alpha.shape[1]):
                    row += [self.alpha[k, j].real, self.alpha[k, j].imag]
                row += [self.beta[k].real, self.beta[k].imag, self.e_measured[k]]
                w.writerow([f"{v:.9g}" for v in row])


@njit(cache=True)
def _rhs(y, e, w, g, kap, om, dia, wc, gm, s):
    nm = len(w)
    out = np.empty_like(y)
    beta = y[nm]
    xb = 2.0 * beta.real
    xa = 0.0
    for j in range(nm):
        a = y[j]
        xj = 2.0 * a.real
        xa += om[j] * xj
        out[j] = (-1j * w[j] - g[j]) * a - 1j * om[j] * xb - 2j * dia[j] * xj + kap[j] * math.sqrt(g[j]) * s * e
    out[nm] = (-1j * wc - gm) * beta - 1j * xa
    return out


@njit(cache=True)
def _integrate(y0, drive, dt, t0, w, g, kap, om, dia, wc, gm, s, record):
    n = len(drive)
    traj = np.empty((n, len(y0)), dtype=np.complex128)
    y = y0.copy()
    traj[0] = y
    for k in range(n - 1):
        e0 = drive[k]
        e2 = drive[k + 1]
        e1 = 0.5 * (e0 + e2)
        k1 = _rhs(y, e0, w, g, kap, om, dia, wc, gm, s)
        k2 = _rhs(y + 0.5 * dt * k1, e1, w, g, kap, om, dia, wc, gm, s)
        k3 = _rhs(y + 0.5 * dt * k2, e1, w, g, kap, om, dia, wc, gm, s)
        k4 = _rhs(y + dt * k3, e2, w, g, kap, om, dia, wc, gm, s)
        y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        for i in range(len(y)):
            if not (math.isfinite(y[i].real) and math.isfinite(y[i].imag)):
                return traj, k
        traj[k + 1] = y
    return traj, -1


def _check_dt(dt):
    if dt > MAX_DT:
        raise ValueError(f"dt = {dt} ps exceeds the {MAX_DT} ps stability margin")


def step_bosonic(state, drive, params: BosonicParams, dt, t=0.0):
    """Advance ``state = (alpha_1..alpha_M, beta)`` by one RK4 step.

    ``drive`` is ``(E(t), E(t + dt))`` in kV/cm; the midpoint is linearly interpolated.
    """
    _check_dt(dt)
    w, g, kap, om, dia, _ = params.mode_arrays()
    y0 = np.asarray(state, dtype=np.complex128)
    traj, bad = _integrate(y0, np.asarray(drive, dtype=float), dt, t, w, g, kap, om, dia,
                           params.omega_c, params.gamma_matter, params.drive_scale, False)
    if bad >= 0:
        raise DivergenceError(t)
    return traj[-1]


def emitted_field(drive: np.ndarray, alpha: np.ndarray, params: BosonicParams) -> np.ndarray:
    *_, g_rad = params.mode_arrays()
    if params.drive_scale == 0:
        return np.array(drive, dtype=float)
    rerad = (2.0 * alpha.real) @ np.sqrt(g_rad)
    return drive - rerad / params.drive_scale


def run_bosonic(params: BosonicParams, drive: Waveform, initial=None) -> BosonicTrajectory:
    """Integrate from the zero state (or ``initial``) over the drive's grid."""
    _check_dt(drive.dt)
    w, g, kap, om, dia, _ = params.mode_arrays()
    nm = len(w)
    y0 = np.zeros(nm + 1, dtype=np.complex128) if initial is None else np.asarray(initial, dtype=np.complex128)
    samples = np.asarray(drive.samples, dtype=float)
    traj, bad = _integrate(y0, samples, drive.dt, drive.t0, w, g, kap, om, dia,
                           params.omega_c, params.gamma_matter, params.drive_scale, True)
    if bad >= 0:
        raise DivergenceError(drive.t0 + bad * drive.dt)
    alpha = traj[:, :nm]
    return BosonicTrajectory(
        times=drive.times,
        alpha=alpha,
        beta=traj[:, nm],
        e_measured=emitted_field(samples, alpha, params),
        mode_names=tuple(m.name for m in params.modes),
    )


def normal_mode_frequencies(params: BosonicParams) -> np.ndarray:
    """Undamped polariton frequencies (THz, ascending) of the coupled linear system.

    Eigenvalues of the equations of motion for (alpha, beta, alpha*, beta*); for one
    cavity mode this reproduces the Hopfield diagonalization.
    """
    w, _, _, om, dia, _ = params.mode_arrays()
    nm = len(w)
    n = nm + 1
    h = np.zeros((n, n))
    h[:nm, :nm] = np.diag(w + 2.0 * dia)
    h[nm, nm] = params.omega_c
    h[:nm, nm] = h[nm, :nm] = om
    a = np.zeros((n, n))
    a[:nm, :nm] = np.diag(2.0 * dia)
    a[:nm, nm] = a[nm, :nm] = om
    m = np.block([[h, a], [-a, -h]])
    ev = np.linalg.eigvals(m)
    pos = np.sort(ev.real[ev.real > 0])
    return pos[-n:] / TWO_PI
