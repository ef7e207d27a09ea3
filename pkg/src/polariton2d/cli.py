"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 numerical divergence, 4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from polariton2d.bosonic import DivergenceError
from polariton2d.config import ConfigError, load_config
from polariton2d.pulses import WaveformError, schedule
from polariton2d.spectroscopy.catalog import catalog_to_csv, enumerate_mixing_peaks
from polariton2d.spectroscopy.experiment import ExperimentError
from polariton2d.spectroscopy.fourier import Scan2D, SpectrumError, ensemble_stats, find_local_maxima, spectrum_2d
from polariton2d.spectroscopy.textio import Axis, MatrixFormatError, write_matrix

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("polariton2d")


def _load(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.merged({"scenario": {"seed": args.seed}})
    return cfg


def cmd_run(args) -> int:
    from polariton2d.runner import run_scenario

    cfg = _load(args)
    manifest = run_scenario(cfg, args.out, workers=args.workers)
    print(f"{manifest['scenario']}: {len(manifest['files'])} files written")
    return EXIT_OK


def cmd_switchoff(args) -> int:
    from polariton2d.runner import switch_off_analysis

    cfg = _load(args)
    manifest = switch_off_analysis(cfg, args.out, workers=args.workers)
    for row in manifest["summary"]["switchoff"]:
        print(f"{row['case']:>18s}  peak {row['peak_amplitude']:.4g}  ratio {row['ratio_to_full']:.3f}  "
              f"weight>split {row['weight_above']:.3f}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    from polariton2d.runner import build_landau, build_pair, calibrate_drive

    cfg = _load(args)
    if cfg.system != "landau":
        raise ConfigError("scenario.system: calibration needs the landau system")
    probe = schedule(build_pair(cfg), "B")
    scale, density = calibrate_drive(build_landau(cfg), args.target_density, probe)
    print(f"drive_scale = {scale:.6g}")
    print(f"peak density = {density:.6g} cm^-2")
    return EXIT_OK


def cmd_catalog(args) -> int:
    try:
        freqs = [float(x) for x in args.freqs.split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"--freqs: cannot parse {args.freqs!r}") from None
    if args.order < 3 or args.order % 2 == 0:
        raise ConfigError("--order: must be odd and >= 3")
    rows = enumerate_mixing_peaks(freqs, order=args.order)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            catalog_to_csv(rows, fh)
    else:
        catalog_to_csv(rows, sys.stdout)
    return EXIT_OK


def cmd_spectrum(args) -> int:
    scan = Scan2D.load(args.scan)
    spec = spectrum_2d(scan, taper=args.taper, pad=args.pad, nu_t_max=args.nu_t_max)
    out = Path(args.out) if args.out else Path(args.scan).with_name(Path(args.scan).stem + "_spectrum.txt")
    spec.save(out)
    print(f"spectrum written to {out}")
    for nu_t, nu_tau, amp in find_local_maxima(spec, args.threshold)[:20]:
        print(f"  ({nu_t:7.3f}, {nu_tau:7.3f})  {amp:.3f}")
    return EXIT_OK


def cmd_stats(args) -> int:
    if len(args.scans) < 2:
        raise ConfigError("stats: need at least 2 scan files")
    spectra = [spectrum_2d(Scan2D.load(p), taper=args.taper, pad=args.pad, nu_t_max=args.nu_t_max,
                           keep_complex=False) for p in args.scans]
    stats = ensemble_stats(spectra)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        ax_tau = Axis.from_values("nu_tau", "THz", spectra[0].nu_tau)
        ax_t = Axis.from_values("nu_t", "THz", spectra[0].nu_t)
        write_matrix(out / "stats_mean.txt", stats.mean, ax_tau, ax_t, {"n": str(stats.n)})
        write_matrix(out / "stats_stderr.txt", stats.stderr, ax_tau, ax_t, {"n": str(stats.n)})
    print(f"n = {stats.n}")
    print(f"normalized mean standard error = {100 * stats.normalized_mean_stderr:.3f} %")
    print(f"max mean amplitude = {np.max(stats.mean):.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polariton2d", description="Two-dimensional THz spectroscopy of Landau polaritons.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("config", help="scenario config (INI)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--workers", type=int, default=1, help="parallel tau rows")
        sp.add_argument("--seed", type=int, default=None, help="override scenario.seed")

    sp = sub.add_parser("run", help="run a scenario")
    common(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("switchoff", help="switch-off analysis of the nonlinearity sources")
    common(sp)
    sp.set_defaults(func=cmd_switchoff)

    sp = sub.add_parser("calibrate", help="drive scale for a target peak excitation density")
    common(sp)
    sp.add_argument("--target-density", type=float, required=True, help="cm^-2")
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("catalog", help="combinatorial wave-mixing catalog")
    sp.add_argument("--freqs", required=True, help="polariton frequencies, THz, comma separated")
    sp.add_argument("--order", type=int, default=3)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_catalog)

    def spectral(sp):
        sp.add_argument("--taper", type=float, default=0.15)
        sp.add_argument("--pad", type=int, default=4)
        sp.add_argument("--nu-t-max", type=float, default=None)
        sp.add_argument("--out")

    sp = sub.add_parser("spectrum", help="2D spectrum of a scan file")
    sp.add_argument("scan")
    sp.add_argument("--threshold", type=float, default=0.1)
    spectral(sp)
    sp.set_defaults(func=cmd_spectrum)

    sp = sub.add_parser("stats", help="ensemble statistics of repeated scans")
    sp.add_argument("scans", nargs="+")
    spectral(sp)
    sp.set_defaults(func=cmd_stats)
    return p


def _exit_code(exc) -> int:
    from polariton2d.runner import CalibrationError, ScenarioError

    if isinstance(exc, ScenarioError) and exc.cause is not None:
        return _exit_code(exc.cause)
    if isinstance(exc, ExperimentError):
        return _exit_code(exc.cause)
    if isinstance(exc, (DivergenceError, ArithmeticError, CalibrationError)):
        return EXIT_DIVERGED
    if isinstance(exc, (OSError, MatrixFormatError, WaveformError)):
        return EXIT_IO
    if isinstance(exc, (ConfigError, SpectrumError, ValueError)):
        return EXIT_CONFIG
    raise exc


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except Exception as exc:  # mapped to exit codes; unknown errors re-raise
        code = _exit_code(exc)
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
