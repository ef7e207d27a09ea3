"""Scenario execution: builds parameter objects from a config, runs the requested
tasks and writes a deterministic result bundle with a digest manifest."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from polariton2d import __version__
from polariton2d.bosonic import BosonicParams, DivergenceError, effective_two_mode, normal_mode_frequencies, run_bosonic
from polariton2d.config import ConfigError, ScenarioConfig
from polariton2d.hopfield import HopfieldInput, anticrossing_sweep, diagonalize, sweep_to_csv
from polariton2d.landau import LandauParams, run_landau
from polariton2d.pulses import PulsePair, Waveform, WaveformError, load_waveform, schedule, synth_single_cycle
from polariton2d.spectroscopy.catalog import catalog_to_csv, enumerate_mixing_peaks
from polariton2d.spectroscopy.experiment import ExperimentError, run_2d_experiment
from polariton2d.spectroscopy.fourier import (
    calibrate_noise,
    classify_peaks,
    cut,
    ensemble_stats,
    noisy_ensemble,
    save_cut,
    spectral_weight_fraction,
    spectrum_2d,
)
from polariton2d.spectroscopy.textio import Axis, write_matrix
from polariton2d.units import TWO_PI, landau_dos_cm2

SWITCH_OFF_CASES = (
    ("full", {}),
    ("no_coulomb", {"u_e": 0.0, "u_d": 0.0}),
    ("no_dipole_renorm", {"u_d": 0.0}),
    ("no_energy_renorm", {"u_e": 0.0}),
    ("equidistant", {"nonparabolic": False}),
)
MANIFEST = "manifest.json"
NOISE_TARGET = 0.012


class ScenarioError(RuntimeError):
    """A task failed; ``manifest`` describes the partial bundle."""

    def __init__(self, message, manifest=None, cause=None):
        super().__init__(message)
        self.manifest = manifest
        self.cause = cause


class CalibrationError(RuntimeError):
    pass


# ------------------------------------------------------------------ parameter builders

def build_cavity(cfg: ScenarioConfig) -> BosonicParams:
    c = dict(cfg.sections.get("cavity", {}))
    nu_c = c.pop("nu_c", 0.868)
    scale = c.pop("drive_scale", 1.0)
    if nu_c > 0:
        return effective_two_mode(drive_scale=scale, nu_c=nu_c, **c)
    # magnetic field off: keep the diamagnetic shifts of the reference field
    return effective_two_mode(drive_scale=scale, **c).with_nu_c(0.0)


def build_landau(cfg: ScenarioConfig, **overrides) -> LandauParams:
    lp = dict(cfg.sections.get("landau", {}))
    lp.update(overrides)
    nu_np = lp.pop("nu_np", 237.0)
    return LandauParams(cavity=build_cavity(cfg), omega_np=TWO_PI * nu_np, **lp)


def build_system(cfg: ScenarioConfig):
    return build_landau(cfg) if cfg.system == "landau" else build_cavity(cfg)


def build_pair(cfg: ScenarioConfig, tau: float = 0.0) -> PulsePair:
    p = cfg.sections.get("pulses", {})
    grid = (p.get("t_start", -2.0), p.get("dt", 0.001), p.get("n_samples", 10001))
    synth = dict(center_freq=p.get("center_freq", 1.0), envelope_fwhm=p.get("envelope_fwhm", 1.0),
                 cep=p.get("cep", 0.0), grid=grid)
    nf = p.get("near_field_factor", 1.0)

    def make(key):
        if p.get(f"file_{key}"):
            return load_waveform(p[f"file_{key}"])
        try:
            return synth_single_cycle(peak_amplitude=p.get(f"peak_{key}"), **synth)
        except WaveformError as exc:
            raise ConfigError(f"pulses: {exc}") from None

    a, b = make("a"), make("b")
    return PulsePair(a.scaled(nf), b.scaled(nf), tau)


def tau_values(cfg: ScenarioConfig, dt: float) -> np.ndarray:
    s = cfg.sections.get("scan", {})
    start, stop, step = s.get("tau_start", -1.0), s.get("tau_stop", 5.0), s.get("tau_step", 0.05)
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    taus = start + step * np.arange(n)
    return np.round(np.round(taus / dt) * dt, 12)


def polariton_frequencies(cfg: ScenarioConfig):
    """(names, THz) used to place catalog peaks."""
    if cfg.system == "bosonic" and "anticrossing" in cfg.tasks:
        h = cfg.sections["hopfield"]
        nu_c = h["nu_c_ref"]
        inp = HopfieldInput.from_thz(h["nu_lc"], nu_c, h["rabi_ratio"], h["relative_to"])
        br = diagonalize(inp)
        return ["LP", "UP"], [float(br.lower), float(br.upper)]
    freqs = normal_mode_frequencies(build_cavity(cfg))
    names = ["LP1", "UP2", "UP1"] if len(freqs) == 3 else [f"P{k}" for k in range(len(freqs))]
    return names, [float(f) for f in freqs]


# ------------------------------------------------------------------ bundle writing

@dataclass
class Bundle:
    root: Path

    def __post_init__(self):
        self.root = Path(self.root)
        self.files: list[str] = []
        self.summary: dict = {}

    def path(self, name: str) -> Path:
        p = self.root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        if name not in self.files:
            self.files.append(name)
        return p

    def write_text(self, name: str, text: str) -> None:
        self.path(name).write_text(text, encoding="utf-8")


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def write_manifest(bundle: Bundle, cfg: ScenarioConfig, status="ok", error=None) -> dict:
    files = []
    for name in sorted(set(bundle.files)):
        p = bundle.root / name
        if p.exists():
            files.append({"path": name, "sha256": _digest(p), "bytes": p.stat().st_size})
    manifest = {
        "scenario": cfg.scenario_id,
        "status": status,
        "version": __version__,
        "seed": cfg.seed,
        "config": _jsonable(cfg.sections),
        "files": files,
        "summary": _jsonable(bundle.summary),
    }
    if error is not None:
        manifest["error"] = error
    bundle.root.mkdir(parents=True, exist_ok=True)
    (bundle.root / MANIFEST).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return manifest


# ------------------------------------------------------------------ tasks

def _spectrum_kw(cfg):
    a = cfg.sections.get("analysis", {})
    return dict(taper=a.get("taper", 0.15), pad=a.get("pad", 4), nu_t_max=a.get("nu_t_max"))


def _task_anticrossing(cfg, bundle, ctx):
    h = cfg.sections["hopfield"]
    inp = HopfieldInput.from_thz(h["nu_lc"], h["nu_c_ref"], h["rabi_ratio"], h["relative_to"])
    n = int(math.floor((h["nu_c_stop"] - h["nu_c_start"]) / h["nu_c_step"] + 1e-9)) + 1
    grid = np.round(h["nu_c_start"] + h["nu_c_step"] * np.arange(n), 12)
    rows = anticrossing_sweep(inp, grid)
    buf = io.StringIO()
    sweep_to_csv(rows, buf)
    bundle.write_text("anticrossing.csv", buf.getvalue())
    br = diagonalize(inp)
    bundle.summary["anticrossing"] = {"nu_c_ref": h["nu_c_ref"], "lower": float(br.lower), "upper": float(br.upper)}


def _task_linear(cfg, bundle, ctx):
    cav = build_cavity(cfg)
    pair = build_pair(cfg)
    for combo in ("A", "B"):
        drive = schedule(pair, combo)
        traj = run_bosonic(cav, drive)
        traj.to_csv(bundle.path(f"linear_{combo}.csv"))
    drive = schedule(pair, "A")
    out = run_bosonic(cav, drive).e_measured
    n = 4 * drive.n
    f = np.fft.rfftfreq(n, drive.dt)
    d_in = np.abs(np.fft.rfft(drive.samples, n))
    d_out = np.abs(np.fft.rfft(out, n))
    keep = (f > 0) & (f <= 3.0) & (d_in > 1e-6 * d_in.max())
    with open(bundle.path("transmission.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["nu_THz", "transmission"])
        for x, y in zip(f[keep], d_out[keep] / d_in[keep]):
            w.writerow([f"{x:.9g}", f"{y:.9g}"])
    bundle.summary["normal_modes_THz"] = [float(v) for v in normal_mode_frequencies(cav)]


def _task_dynamics(cfg, bundle, ctx):
    params = ctx["system"]
    if not isinstance(params, LandauParams):
        raise ConfigError("scenario.tasks: 'dynamics' needs the landau system")
    a = cfg.sections.get("analysis", {})
    pair = build_pair(cfg)
    tau = a.get("snapshot_tau", 0.0)
    drive = schedule(replace(pair, tau=round(tau / pair.pulse_a.dt) * pair.pulse_a.dt), "AB")
    stride = a.get("pop_stride", 10)
    run = run_landau(params, drive, pop_stride=stride)
    run.to_csv(bundle.path("dynamics.csv"))
    times = run.trace.population_times
    write_matrix(bundle.path("populations.txt"), run.trace.populations,
                 Axis.from_values("t", "ps", times),
                 Axis("level", "index", 0.0, 1.0, params.n_levels),
                 {"tau": f"{tau:.9g}"})
    tr = run.trace
    bundle.summary["dynamics"] = {
        "peak_rho_exc": float(tr.rho_exc.max()),
        "peak_density_cm2": float(tr.rho_exc.max() * landau_dos_cm2(params.b_field)),
        "hermiticity_drift": float(tr.hermiticity_drift),
        "trace_drift_per_ps": float(tr.max_trace_drift_per_ps()),
        "top_population": float(tr.top_population),
    }
    ctx["dynamics"] = run


def _task_scan(cfg, bundle, ctx):
    pair = build_pair(cfg)
    taus = tau_values(cfg, pair.pulse_a.dt)
    stride = cfg.get("scan", "t_stride", 1)
    scan = run_2d_experiment(ctx["system"], pair, taus, workers=ctx["workers"], t_stride=stride)
    scan.save(bundle.path("scan.txt"))
    bundle.summary["scan"] = {"max_abs_e_nl": float(np.max(np.abs(scan.values))),
                              "linear_peak": float(scan.meta["linear_peak"])}
    ctx["scan"] = scan


def _need_scan(cfg, ctx, bundle):
    if "scan" not in ctx:
        _task_scan(cfg, bundle, ctx)
    return ctx["scan"]


def _task_spectrum(cfg, bundle, ctx):
    scan = _need_scan(cfg, ctx, bundle)
    spec = spectrum_2d(scan, **_spectrum_kw(cfg))
    spec.save(bundle.path("spectrum.txt"))
    ctx["spectrum"] = spec
    a = cfg.sections.get("analysis", {})
    nu_split = a.get("nu_split", 1.0)
    bundle.summary["spectrum"] = {
        "peak_amplitude": float(spec.normalization),
        "weight_above_split": spectral_weight_fraction(spec, nu_split),
        "nu_split": nu_split,
    }
    names, freqs = polariton_frequencies(cfg)
    catalog = enumerate_mixing_peaks(freqs, order=3, names=names)
    matches, unmatched = classify_peaks(spec, catalog, threshold=a.get("threshold", 0.05))
    with open(bundle.path("peaks.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["nu_t", "nu_tau", "amplitude", "type", "catalog_nu_t", "catalog_nu_tau", "distance_bins"])
        for m in matches:
            w.writerow([f"{m.nu_t:.9g}", f"{m.nu_tau:.9g}", f"{m.amplitude:.9g}", m.peak.label,
                        f"{m.peak.location[0]:.9g}", f"{m.peak.location[1]:.9g}", f"{m.distance:.6g}"])
        for nu_t, nu_tau, amp in unmatched:
            w.writerow([f"{nu_t:.9g}", f"{nu_tau:.9g}", f"{amp:.9g}", "unmatched", "", "", ""])


def _task_catalog(cfg, bundle, ctx):
    names, freqs = polariton_frequencies(cfg)
    order = cfg.get("analysis", "catalog_order", 3)
    rows = []
    for k in range(3, order + 1, 2):
        rows.extend(enumerate_mixing_peaks(freqs, order=k, names=names))
    buf = io.StringIO()
    catalog_to_csv(rows, buf)
    bundle.write_text("catalog.csv", buf.getvalue())
    bundle.summary["polaritons_THz"] = dict(zip(names, freqs))


def _task_cuts(cfg, bundle, ctx):
    if "spectrum" not in ctx:
        ctx["spectrum"] = spectrum_2d(_need_scan(cfg, ctx, bundle), **_spectrum_kw(cfg))
    spec = ctx["spectrum"]
    for spec_text in cfg.get("analysis", "cuts", ()):
        x, y = cut(spec, spec_text)
        name = spec_text.replace(" ", "").replace("=", "_")
        x_name = "nu_tau_THz" if spec_text.replace(" ", "").startswith("nu_t=") else "nu_t_THz"
        save_cut(bundle.path(f"cut_{name}.csv"), x, y, x_name)


def _task_stats(cfg, bundle, ctx):
    scan = _need_scan(cfg, ctx, bundle)
    a = cfg.sections.get("analysis", {})
    n = a.get("stats_samples", 20)
    rng = np.random.default_rng(cfg.seed)
    kw = _spectrum_kw(cfg)
    sigma = a.get("noise_level", 0.0)
    if sigma <= 0:
        sigma = calibrate_noise(scan, NOISE_TARGET, n, rng, **kw)
    samples = noisy_ensemble(scan, sigma, n, rng, **kw)
    stats = ensemble_stats(samples)
    s0 = samples[0]
    ax_tau = Axis.from_values("nu_tau", "THz", s0.nu_tau)
    ax_t = Axis.from_values("nu_t", "THz", s0.nu_t)
    write_matrix(bundle.path("stats_mean.txt"), stats.mean, ax_tau, ax_t, {"n": str(n)})
    write_matrix(bundle.path("stats_stderr.txt"), stats.stderr, ax_tau, ax_t, {"n": str(n)})
    bundle.summary["stats"] = {"n": n, "noise_sigma": float(sigma), "seed": cfg.seed,
                               "normalized_mean_stderr": stats.normalized_mean_stderr}


def _task_switchoff(cfg, bundle, ctx):
    ledger = switch_off_cases(cfg, bundle, ctx["workers"])
    bundle.summary["switchoff"] = ledger


TASK_FUNCS = {
    "anticrossing": _task_anticrossing,
    "linear": _task_linear,
    "dynamics": _task_dynamics,
    "scan": _task_scan,
    "spectrum": _task_spectrum,
    "catalog": _task_catalog,
    "cuts": _task_cuts,
    "stats": _task_stats,
    "switchoff": _task_switchoff,
}


def run_scenario(cfg: ScenarioConfig, out=None, workers: int = 1) -> dict:
    """Run every task of ``cfg`` and write the bundle to ``out`` (or ``scenario.output``).

    On failure the files written so far are kept, the manifest records the error and
    :class:`ScenarioError` is raised with the manifest attached.
    """
    out = out or cfg.get("scenario", "output") or f"out/{cfg.scenario_id}"
    bundle = Bundle(Path(out))
    bundle.root.mkdir(parents=True, exist_ok=True)
    bundle.write_text("config.ini", cfg.to_ini())
    ctx = {"workers": max(1, int(workers))}
    try:
        ctx["system"] = build_system(cfg)
        for task in cfg.tasks:
            TASK_FUNCS[task](cfg, bundle, ctx)
    except (ConfigError, DivergenceError, ExperimentError, ValueError, ArithmeticError, OSError) as exc:
        manifest = write_manifest(bundle, cfg, status="error", error=f"{type(exc).__name__}: {exc}")
        raise ScenarioError(str(exc), manifest, exc) from exc
    return write_manifest(bundle, cfg)


# ------------------------------------------------------------------ switch-off analysis

def switch_off_cases(cfg: ScenarioConfig, bundle: Bundle, workers: int = 1) -> list[dict]:
    """Full model plus the four reduced models, identical pulses and grids."""
    if cfg.system != "landau":
        raise ConfigError("scenario.system: switch-off analysis needs the landau system")
    pair = build_pair(cfg)
    taus = tau_values(cfg, pair.pulse_a.dt)
    stride = cfg.get("scan", "t_stride", 1)
    nu_split = cfg.get("analysis", "nu_split", 1.0)
    kw = _spectrum_kw(cfg)
    rows = []
    for name, changes in SWITCH_OFF_CASES:
        params = build_landau(cfg, **changes)
        scan = run_2d_experiment(params, pair, taus, workers=workers, t_stride=stride)
        spec = spectrum_2d(scan, **kw)
        scan.save(bundle.path(f"{name}/scan.txt"))
        spec.save(bundle.path(f"{name}/spectrum.txt"))
        above = spectral_weight_fraction(spec, nu_split)
        rows.append({"case": name, "peak_amplitude": float(spec.normalization),
                     "weight_below": 1.0 - above, "weight_above": above})
    full = rows[0]["peak_amplitude"]
    for r in rows:
        r["ratio_to_full"] = r["peak_amplitude"] / full if full > 0 else 0.0
    with open(bundle.path("switchoff.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case", "peak_amplitude", "ratio_to_full", "weight_below", "weight_above"])
        for r in rows:
            w.writerow([r["case"], f"{r['peak_amplitude']:.9g}", f"{r['ratio_to_full']:.9g}",
                        f"{r['weight_below']:.9g}", f"{r['weight_above']:.9g}"])
    return rows


def switch_off_analysis(cfg: ScenarioConfig, out=None, workers: int = 1) -> dict:
    return run_scenario(cfg.merged({"scenario": {"tasks": ("switchoff",)}}), out, workers)


# ------------------------------------------------------------------ calibration

def peak_density(params: LandauParams, probe: Waveform) -> float:
    run = run_landau(params, probe, pop_stride=max(1, probe.n - 1), warn_truncation=False)
    return float(run.trace.rho_exc.max() * landau_dos_cm2(params.b_field))


def calibrate_drive(params: LandauParams, target_density: float, probe: Waveform, *, rtol: float = 0.01,
                    start: float = 1.0, max_scale: float = 1e3, max_iter: int = 60):
    """Bisect the cavity drive scale until the peak excitation density hits the target.

    Returns ``(scale, achieved_density_cm2)``.
    """
    if target_density < 0:
        raise CalibrationError("target density must be >= 0")
    if target_density == 0:
        return 0.0, 0.0

    def density(s):
        return peak_density(params.with_cavity(drive_scale=s), probe)

    lo, hi = 0.0, start
    scanned = []
    while True:
        try:
            d = density(hi)
        except (DivergenceError, ArithmeticError):
            raise CalibrationError(f"target {target_density:.4g} cm^-2 not bracketed: diverged at scale {hi:.4g} "
                                   f"(scanned {scanned[0] if scanned else hi:.4g}..{hi:.4g})") from None
        scanned.append(hi)
        if abs(d - target_density) <= rtol * target_density:
            return hi, d
        if d > target_density:
            break
        lo = hi
        hi *= 2.0
        if hi > max_scale:
            raise CalibrationError(f"target {target_density:.4g} cm^-2 not bracketed in scale range "
                                   f"[{scanned[0]:.4g}, {scanned[-1]:.4g}] (reached {d:.4g} cm^-2)")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        d = density(mid)
        if abs(d - target_density) <= rtol * target_density:
            return mid, d
        if d > target_density:
            hi = mid
        else:
            lo = mid
    raise CalibrationError(f"bisection did not converge in [{lo:.6g}, {hi:.6g}]")

