"""Multi-level Landau fan density matrix coupled to the cavity modes.

The electronic state is the single-particle density matrix rho over N Landau levels
(level index l = 0..N-1).  In units of hbar = 1 and with angular frequencies in rad/ps:

    d rho/dt = -i [h, rho] - G o (rho - rho_0)
    h_ll     = w_l / (1 + U_e rho_exc)
    h_l,l+1  = (d_l / d_ref) / (1 + U_d rho_exc) * sum_j Om_j (alpha_j + alpha_j*)

with d_l = sqrt(l + 1) (in units of e l0) for the l -> l+1 transition and
d_ref = sqrt(filling) by default, the collective dipole of the filled fan.  With
that normalization the polarization

    P_L = sum_l (d_l / d_ref) / (1 + U_d rho_exc) * 2 Re rho_l,l+1

replaces (beta + beta*) of the bosonic model and coincides with it exactly for
equidistant levels without renormalization.  G holds 1/T2 off the diagonal (T2
shortened to ``t2_phonon`` for coherences touching a level outside the LO-phonon
window) and 1/T1 on the diagonal.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numba import njit

from polariton2d.bosonic import MAX_DT, BosonicParams, DivergenceError, effective_two_mode
from polariton2d.pulses import Waveform
from polariton2d.units import TWO_PI, cyclotron_rad_ps, landau_dos_cm2, magnetic_length, mev_to_rad_ps

HERMITICITY_LIMIT = 1e-9
WINDOW_TOL = 1e-14  # edge deviation from rho_0 that triggers window growth
WINDOW_MARGIN = 2
INITIAL_HALF_WIDTH = 2
TRUNCATION_LIMIT = 1e-6


class TruncationWarning(RuntimeWarning):
    pass


class HermiticityError(RuntimeError):
    pass


@dataclass(frozen=True)
class LandauParams:
    cavity: BosonicParams = field(default_factory=effective_two_mode)
    n_levels: int = 100
    b_field: float = 2.3  # T
    m_eff: float = 0.066  # m*/m_e
    omega_np: float = TWO_PI * 237.0  # rad/ps
    filling: float = 15.73
    u_e: float = 0.016
    u_d: float = 0.064
    nonparabolic: bool = True
    t2_base: float = 2.0  # ps
    t2_phonon: float = 0.1  # ps
    t1: float = 10.0  # ps; 0 or inf disables population relaxation
    e_lo: float = 36.1  # meV
    phonon_window: bool = True
    dipole_reference: str = "collective"  # or "fermi": d_ref = d_{jf, jf+1}
    rho_exc_mode: str = "signed"  # or "abs"

    def __post_init__(self):
        if self.n_levels < 2:
            raise ValueError("n_levels must be >= 2")
        if self.b_field <= 0:
            raise ValueError("b_field must be > 0")
        if not 0 <= self.filling <= self.n_levels:
            raise ValueError("filling must lie in [0, n_levels]")
        if self.u_e < 0 or self.u_d < 0:
            raise ValueError("u_e and u_d must be >= 0")
        if self.dipole_reference not in ("collective", "fermi"):
            raise ValueError("dipole_reference must be 'collective' or 'fermi'")
        if self.rho_exc_mode not in ("signed", "abs"):
            raise ValueError("rho_exc_mode must be 'signed' or 'abs'")

    @property
    def fermi_index(self) -> int:
        return int(math.floor(self.filling))

    def with_cavity(self, **changes) -> "LandauParams":
        return replace(self, cavity=replace(self.cavity, **changes))


@dataclass
class LandauState:
    rho: np.ndarray
    alpha: np.ndarray
    time: float = 0.0

    def hermiticity_drift(self) -> float:
        return float(np.max(np.abs(self.rho - self.rho.conj().T)))


@dataclass
class ExcitationTrace:
    times: np.ndarray
    rho_exc: np.ndarray
    populations: np.ndarray  # (n_records, N)
    population_times: np.ndarray
    cavity_populations: np.ndarray  # (n_t, n_modes) = |alpha_j|^2
    polarization: np.ndarray  # P_L(t)
    trace_drift: float = 0.0
    hermiticity_drift: float = 0.0
    top_population: float = 0.0

    def max_trace_drift_per_ps(self) -> float:
        span = self.times[-1] - self.times[0]
        return self.trace_drift / span if span > 0 else self.trace_drift


@dataclass
class LandauRun:
    final: LandauState
    trace: ExcitationTrace
    emitted: Waveform
    snapshots: dict = field(default_factory=dict)

    def to_csv(self, path, mode_names=("lc", "dp")) -> None:
        """Observable dump: t_ps, rho_exc, pop_<mode>..., e_measured."""
        pops = self.trace.cavity_populations
        names = list(mode_names)[: pops.shape[1]]
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t_ps", "rho_exc", *[f"pop_{n}" for n in names], "e_measured"])
            for k, t in enumerate(self.trace.times):
                row = [t, self.trace.rho_exc[k], *pops[k], self.emitted.samples[k]]
                w.writerow([f"{v:.9g}" for v in row])


# ---------------------------------------------------------------- level structure

def landau_frequencies(params: LandauParams) -> np.ndarray:
    """Angular frequencies w_l (rad/ps) for l = 0..N-1."""
    wc0 = cyclotron_rad_ps(params.b_field, params.m_eff)
    level = np.arange(params.n_levels) + 0.5
    if not params.nonparabolic:
        return wc0 * level
    wnp = params.omega_np
    return np.sqrt(wnp**2 / 4.0 + wnp * wc0 * level)


def transition_frequencies_thz(params: LandauParams) -> np.ndarray:
    """Adjacent-level transition frequencies nu_{l -> l+1} in THz."""
    return np.diff(landau_frequencies(params)) / TWO_PI


def dipole_moments(params: LandauParams) -> np.ndarray:
    """d_{l,l+1} = e l0 sqrt(l+1) in C*m, l = 0..N-2.  All other d_mn vanish."""
    l0 = magnetic_length(params.b_field)
    from polariton2d.units import E_CHARGE

    return E_CHARGE * l0 * np.sqrt(np.arange(1, params.n_levels))


def dipole_matrix(params: LandauParams) -> np.ndarray:
    d = dipole_moments(params)
    return np.diag(d, 1) + np.diag(d, -1)


def dipole_reference(params: LandauParams) -> float:
    """Reference dipole in units of e*l0."""
    if params.dipole_reference == "fermi":
        return math.sqrt(params.fermi_index + 1)
    return math.sqrt(params.filling) if params.filling > 0 else 1.0


def equilibrium_rho(params: LandauParams) -> np.ndarray:
    n = params.n_levels
    jf = params.fermi_index
    diag = np.zeros(n)
    diag[:jf] = 1.0
    if jf < n:
        diag[jf] = params.filling - jf
    return np.diag(diag).astype(np.complex128)


def level_exc_weights(n_levels: int, fermi_index: int) -> np.ndarray:
    m = np.arange(n_levels)
    w = np.where(m < fermi_index, m - fermi_index, m - fermi_index + 1).astype(float)
    w[m == fermi_index] = 0.0
    return w


def rho_exc(rho, rho0, fermi_index: int, mode: str = "signed") -> float:
    """Excitation measure 1/2 sum_m dn_m l_m, clamped at 0 from below.

    ``mode="abs"`` uses 1/2 sum_m |dn_m| |l_m| instead.
    """
    rho = np.asarray(rho)
    rho0 = np.asarray(rho0)
    if rho.shape != rho0.shape:
        raise ValueError(f"dimension mismatch: {rho.shape} vs {rho0.shape}")
    dn = np.real(np.diagonal(rho)) - np.real(np.diagonal(rho0))
    lm = level_exc_weights(len(dn), fermi_index)
    if mode == "abs":
        return 0.5 * float(np.sum(np.abs(dn) * np.abs(lm)))
    return max(0.0, 0.5 * float(np.sum(dn * lm)))


def excitation_density_cm2(rho_exc_value: float, b_field: float) -> float:
    """rho_exc * 2eB/hbar in cm^-2."""
    return rho_exc_value * landau_dos_cm2(b_field)


def phonon_outside_mask(params: LandauParams) -> np.ndarray:
    """True for levels whose equilibrium energy lies outside E_F +- hbar w_LO / 2."""
    w = landau_frequencies(params)
    jf = min(params.fermi_index, params.n_levels - 1)
    half = 0.5 * mev_to_rad_ps(params.e_lo)
    return np.abs(w - w[jf]) > half


def damping_matrix(params: LandauParams) -> np.ndarray:
    n = params.n_levels
    gam = np.full((n, n), 1.0 / params.t2_base if params.t2_base > 0 else 0.0)
    if params.phonon_window:
        out = phonon_outside_mask(params)
        touched = out[:, None] | out[None, :]
        gam[touched] = 1.0 / params.t2_phonon
    t1 = params.t1
    np.fill_diagonal(gam, 1.0 / t1 if (t1 and math.isfinite(t1)) else 0.0)
    return gam


def build_hamiltonian(alpha, params: LandauParams, rho_exc_value: float = 0.0) -> np.ndarray:
    """h = H / hbar (rad/ps) for given cavity amplitudes and excitation level."""
    w = landau_frequencies(params)
    w = w - w[min(params.fermi_index, params.n_levels - 1)]
    escale = 1.0 / (1.0 + params.u_e * rho_exc_value)
    dscale = 1.0 / (1.0 + params.u_d * rho_exc_value)
    om = np.array([m.omega_rabi for m in params.cavity.modes])
    x = float(np.sum(om * 2.0 * np.real(np.asarray(alpha))))
    dip = np.sqrt(np.arange(1, params.n_levels)) / dipole_reference(params)
    off = dscale * dip * x
    return np.diag(escale * w).astype(np.complex128) + np.diag(off, 1) + np.diag(off, -1)


# ---------------------------------------------------------------- kernels

@njit(cache=True)
def _rho_exc(rho, rho0d, lm, absmode):
    s = 0.0
    for m in range(rho.shape[0]):
        dn = rho[m, m].real - rho0d[m]
        if absmode:
            s += abs(dn) * abs(lm[m])
        else:
            s += dn * lm[m]
    s *= 0.5
    return s if s > 0.0 else 0.0


@njit(cache=True)
def _deriv(rho, alpha, e, drho, dalpha, hw, dip, gam, rho0d, lo, hi,
           w, g, kap, om, dia, s, escale, dscale, u):
    """Time derivative restricted to the active window [lo, hi].

    Outside the window rho equals rho_0 and carries no coherence, so neighbours
    beyond the window edges contribute nothing to the commutator.
    """
    nm = len(w)
    x = 0.0
    for j in range(nm):
        x += om[j] * 2.0 * alpha[j].real
    for l in range(lo, hi):
        u[l] = dscale * dip[l] * x
    u[hi] = 0.0
    for m in range(lo, hi + 1):
        hm = escale * hw[m]
        um = u[m]
        um1 = u[m - 1] if m > lo else 0.0
        for k in range(m, hi + 1):
            c = (hm - escale * hw[k]) * rho[m, k]
            if m < hi:
                c += um * rho[m + 1, k]
            if m > lo:
                c += um1 * rho[m - 1, k]
            if k < hi:
                c -= rho[m, k + 1] * u[k]
            if k > lo:
                c -= rho[m, k - 1] * u[k - 1]
            if m == k:
                drho[m, m] = (-1j * c).real - gam[m, m] * (rho[m, m].real - rho0d[m])
            else:
                val = -1j * c - gam[m, k] * rho[m, k]
                drho[m, k] = val
                drho[k, m] = val.conjugate()
    p = 0.0
    for l in range(lo, hi):
        p += dscale * dip[l] * 2.0 * rho[l, l + 1].real
    for j in range(nm):
        a = alpha[j]
        dalpha[j] = ((-1j * w[j] - g[j]) * a - 1j * om[j] * p - 2j * dia[j] * 2.0 * a.real
                     + kap[j] * math.sqrt(g[j]) * s * e)
    return p


@njit(cache=True)
def _combine(out, base, k, h, lo, hi):
    for i in range(lo, hi + 1):
        for j in range(lo, hi + 1):
            out[i, j] = base[i, j] + h * k[i, j]


@njit(cache=True)
def _edge_deviation(rho, rho0d, row, lo, hi):
    dev = 0.0
    for k in range(lo, hi + 1):
        v = rho[row, k]
        if k == row:
            v = v - rho0d[row]
        a = abs(v)
        if a > dev:
            dev = a
    return dev


@njit(cache=True)
def _integrate(rho, alpha, drive, dt, hw, dip, gam, rho0d, lm, absmode, u_e, u_d,
               w, g, kap, om, dia, s, pop_stride, start_step, n_steps, window, tol):
    """RK4 over drive samples [start_step, start_step + n_steps).

    ``window`` (2-int array) holds the active level range and is updated in place;
    it grows by ``WINDOW_MARGIN`` levels whenever an edge row deviates from rho_0 by
    more than ``tol``.  Returns (rho_exc, alpha_hist, p_hist, pops, bad_step,
    top_pop); histories have n_steps + 1 entries, the first being the initial state.
    """
    n = rho.shape[0]
    nm = len(alpha)
    lo = window[0]
    hi = window[1]
    n_pop = n_steps // pop_stride + 1
    rexc = np.empty(n_steps + 1)
    ahist = np.empty((n_steps + 1, nm), dtype=np.complex128)
    phist = np.empty(n_steps + 1)
    pops = np.empty((n_pop, n))
    k1 = np.zeros_like(rho)
    k2 = np.zeros_like(rho)
    k3 = np.zeros_like(rho)
    k4 = np.zeros_like(rho)
    tmp = rho.copy()
    u = np.zeros(n)
    a1 = np.empty(nm, dtype=np.complex128)
    a2 = np.empty(nm, dtype=np.complex128)
    a3 = np.empty(nm, dtype=np.complex128)
    a4 = np.empty(nm, dtype=np.complex128)
    atmp = np.empty(nm, dtype=np.complex128)
    r = _rho_exc(rho, rho0d, lm, absmode)
    rexc[0] = r
    ahist[0] = alpha
    for l in range(n):
        pops[0, l] = rho[l, l].real
    top = rho[n - 1, n - 1].real
    p = 0.0
    for l in range(lo, hi):
        p += dip[l] * 2.0 * rho[l, l + 1].real / (1.0 + u_d * r)
    phist[0] = p
    bad = -1
    for step in range(n_steps):
        idx = start_step + step
        e0 = drive[idx]
        e2 = drive[idx + 1]
        e1 = 0.5 * (e0 + e2)
        escale = 1.0 / (1.0 + u_e * r)
        dscale = 1.0 / (1.0 + u_d * r)
        _deriv(rho, alpha, e0, k1, a1, hw, dip, gam, rho0d, lo, hi, w, g, kap, om, dia, s, escale, dscale, u)
        _combine(tmp, rho, k1, 0.5 * dt, lo, hi)
        for j in range(nm):
            atmp[j] = alpha[j] + 0.5 * dt * a1[j]
        _deriv(tmp, atmp, e1, k2, a2, hw, dip, gam, rho0d, lo, hi, w, g, kap, om, dia, s, escale, dscale, u)
        _combine(tmp, rho, k2, 0.5 * dt, lo, hi)
        for j in range(nm):
            atmp[j] = alpha[j] + 0.5 * dt * a2[j]
        _deriv(tmp, atmp, e1, k3, a3, hw, dip, gam, rho0d, lo, hi, w, g, kap, om, dia, s, escale, dscale, u)
        _combine(tmp, rho, k3, dt, lo, hi)
        for j in range(nm):
            atmp[j] = alpha[j] + dt * a3[j]
        _deriv(tmp, atmp, e2, k4, a4, hw, dip, gam, rho0d, lo, hi, w, g, kap, om, dia, s, escale, dscale, u)
        h6 = dt / 6.0
        finite = True
        for i in range(lo, hi + 1):
            for j in range(lo, hi + 1):
                rho[i, j] = rho[i, j] + h6 * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
            rho[i, i] = rho[i, i].real
            if not math.isfinite(rho[i, i].real):
                finite = False
        for j in range(nm):
            alpha[j] = alpha[j] + h6 * (a1[j] + 2.0 * a2[j] + 2.0 * a3[j] + a4[j])
            if not (math.isfinite(alpha[j].real) and math.isfinite(alpha[j].imag)):
                finite = False
        if not finite:
            bad = step
            break
        # grow the active window where the edge rows have left equilibrium
        if lo > 0 and _edge_deviation(rho, rho0d, lo, lo, hi) > tol:
            new_lo = max(0, lo - WINDOW_MARGIN)
            for i in range(new_lo, lo):
                tmp[i, i] = rho[i, i]
            lo = new_lo
        if hi < n - 1 and _edge_deviation(rho, rho0d, hi, lo, hi) > tol:
            new_hi = min(n - 1, hi + WINDOW_MARGIN)
            for i in range(hi + 1, new_hi + 1):
                tmp[i, i] = rho[i, i]
            hi = new_hi
        r = _rho_exc(rho, rho0d, lm, absmode)
        rexc[step + 1] = r
        ahist[step + 1] = alpha
        pp = 0.0
        dsc = 1.0 / (1.0 + u_d * r)
        for l in range(lo, hi):
            pp += dsc * dip[l] * 2.0 * rho[l, l + 1].real
        phist[step + 1] = pp
        tp = rho[n - 1, n - 1].real
        if tp > top:
            top = tp
        if (step + 1) % pop_stride == 0:
            row = (step + 1) // pop_stride
            for l in range(n):
                pops[row, l] = rho[l, l].real
    window[0] = lo
    window[1] = hi
    return rexc, ahist, phist, pops, bad, top


class _Prepared:
    """Numeric arrays derived from LandauParams, built once per run."""

    def __init__(self, params: LandauParams):
        self.params = params
        w = landau_frequencies(params)
        jf = min(params.fermi_index, params.n_levels - 1)
        self.hw = w - w[jf]
        self.dip = np.sqrt(np.arange(1, params.n_levels)) / dipole_reference(params)
        self.gam = damping_matrix(params)
        self.rho0 = equilibrium_rho(params)
        self.rho0d = np.real(np.diagonal(self.rho0)).copy()
        self.lm = level_exc_weights(params.n_levels, params.fermi_index)
        self.absmode = params.rho_exc_mode == "abs"
        cav = params.cavity
        self.w, self.g, self.kap, self.om, self.dia, self.g_rad = cav.mode_arrays()

    def initial_window(self):
        n = self.params.n_levels
        jf = min(self.params.fermi_index, n - 1)
        return np.array([max(0, jf - INITIAL_HALF_WIDTH), min(n - 1, jf + INITIAL_HALF_WIDTH)], dtype=np.int64)

    def integrate(self, rho, alpha, samples, dt, pop_stride, start, n_steps, window=None, tol=WINDOW_TOL):
        p = self.params
        if window is None:
            window = self.initial_window()
        return _integrate(rho, alpha, samples, dt, self.hw, self.dip, self.gam, self.rho0d, self.lm,
                          self.absmode, p.u_e, p.u_d, self.w, self.g, self.kap, self.om, self.dia,
                          p.cavity.drive_scale, pop_stride, start, n_steps, window, tol)


def initial_state(params: LandauParams, t0: float = 0.0) -> LandauState:
    return LandauState(equilibrium_rho(params), np.zeros(len(params.cavity.modes), dtype=np.complex128), t0)


def step_landau(state: LandauState, drive, params: LandauParams, dt: float) -> LandauState:
    """One RK4 step; ``drive = (E(t), E(t + dt))`` in kV/cm."""
    if dt > MAX_DT:
        raise ValueError(f"dt = {dt} ps exceeds the {MAX_DT} ps stability margin")
    prep = _Prepared(params)
    rho = np.array(state.rho, dtype=np.complex128)
    alpha = np.array(state.alpha, dtype=np.complex128)
    full = np.array([0, params.n_levels - 1], dtype=np.int64)
    *_, bad, _ = prep.integrate(rho, alpha, np.asarray(drive, dtype=float), dt, 1, 0, 1, window=full)
    if bad >= 0:
        raise DivergenceError(state.time)
    new = LandauState(rho, alpha, state.time + dt)
    drift = new.hermiticity_drift()
    if drift > HERMITICITY_LIMIT:
        raise HermiticityError(f"Hermiticity drift {drift:.3g} at t = {new.time:.6g} ps")
    return new


def run_landau(params: LandauParams, drive: Waveform, *, pop_stride: int = 10,
               snapshot_times=(), warn_truncation: bool = True) -> LandauRun:
    """Integrate from equilibrium over the drive grid.

    ``pop_stride`` sets how often level populations are stored; ``snapshot_times``
    requests full density matrices (nearest grid step at or after each time).
    """
    dt = drive.dt
    if dt > MAX_DT:
        raise ValueError(f"dt = {dt} ps exceeds the {MAX_DT} ps stability margin")
    prep = _Prepared(params)
    state = initial_state(params, drive.t0)
    rho, alpha = state.rho, state.alpha
    trace0 = float(np.real(np.trace(rho)))
    samples = np.asarray(drive.samples, dtype=float)
    total = drive.n - 1

    # segment boundaries sit on multiples of pop_stride so population records stay aligned
    stops = set()
    for t in snapshot_times:
        k = int(math.ceil((t - drive.t0) / dt - 1e-9))
        k = int(math.ceil(max(k, 1) / pop_stride)) * pop_stride
        stops.add(min(total, k))
    want = set(stops)
    stops = sorted(stops | {total})
    parts = []
    snapshots = {}
    window = prep.initial_window()
    done = 0
    for stop in stops:
        if stop <= done:
            continue
        res = prep.integrate(rho, alpha, samples, dt, pop_stride, done, stop - done, window=window)
        if res[4] >= 0:
            raise DivergenceError(drive.t0 + (done + res[4]) * dt)
        parts.append(res)
        done = stop
        if stop in want:
            snapshots[round(drive.t0 + stop * dt, 9)] = rho.copy()

    def joined(i):
        return np.concatenate([parts[0][i][:1]] + [p[i][1:] for p in parts])

    rexc, ahist, phist, pops = joined(0), joined(1), joined(2), joined(3)
    top = max(p[5] for p in parts)
    pop_times = drive.t0 + dt * pop_stride * np.arange(len(pops))

    final = LandauState(rho, alpha, drive.t_end)
    herm = final.hermiticity_drift()
    if herm > HERMITICITY_LIMIT:
        raise HermiticityError(f"Hermiticity drift {herm:.3g} at t = {final.time:.6g} ps")
    if warn_truncation and top > TRUNCATION_LIMIT:
        warnings.warn(f"top-level population {top:.3g} exceeds {TRUNCATION_LIMIT}: increase n_levels",
                      TruncationWarning, stacklevel=2)
    trace = ExcitationTrace(
        times=drive.times,
        rho_exc=rexc,
        populations=pops,
        population_times=pop_times,
        cavity_populations=np.abs(ahist) ** 2,
        polarization=phist,
        trace_drift=abs(float(np.real(np.trace(rho))) - trace0),
        hermiticity_drift=herm,
        top_population=top,
    )
    cav = params.cavity
    if cav.drive_scale != 0:
        emitted = samples - (2.0 * ahist.real) @ np.sqrt(prep.g_rad) / cav.drive_scale
    else:
        emitted = samples.copy()
    return LandauRun(final, trace, Waveform(drive.t0, dt, emitted), snapshots)


def excitation_scale_cm2(params: LandauParams) -> float:
    return landau_dos_cm2(params.b_field)
