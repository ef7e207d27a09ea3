import itertools
import math
from collections import defaultdict

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polariton2d.bosonic import effective_two_mode
from polariton2d.pulses import default_pair
from polariton2d.spectroscopy.catalog import catalog_to_csv, enumerate_mixing_peaks, find_peak
from polariton2d.spectroscopy.experiment import ExperimentError, run_2d_experiment, tau_grid
from polariton2d.spectroscopy.fourier import (
    Scan2D,
    Spectrum2D,
    SpectrumError,
    calibrate_noise,
    classify_peaks,
    cut,
    ensemble_stats,
    find_local_maxima,
    nearest_local_maximum,
    noisy_ensemble,
    parse_axis_spec,
    spectral_weight_fraction,
    spectrum_2d,
    tail_taper,
    time_energy,
)
from polariton2d.spectroscopy.textio import Axis, MatrixFormatError, read_matrix, write_matrix

T = np.arange(0, 10.0, 0.01)
TAU = np.arange(-1.0, 5.0 + 1e-9, 0.05)


def plane_waves(components, decay=3.0):
    """sum_k a_k exp(-(t + tau')/decay) cos(2 pi (nu_t t - nu_tau tau)), tau' = tau - tau_min."""
    tt, ta = np.meshgrid(T, TAU)
    env = np.exp(-(tt + (ta - TAU[0])) / decay)
    out = np.zeros_like(tt)
    for a, nu_t, nu_tau in components:
        out += a * env * np.cos(2 * np.pi * (nu_t * tt - nu_tau * ta))
    return Scan2D(T, TAU, out)


# ---------------------------------------------------------------- transform

def test_plane_wave_lands_at_its_pseudo_wave_vector():
    spec = spectrum_2d(plane_waves([(1.0, 0.8, -0.8)]), nu_t_max=3.0)
    nu_t, nu_tau, amp = find_local_maxima(spec, 0.5)[0]
    assert amp == 1.0
    assert abs(nu_t - 0.8) <= spec.bin_t and abs(nu_tau + 0.8) <= spec.bin_tau


def test_toy_third_order_response_peaks():
    """Toy three-oscillator response: PP at (nu, 0) and (nu, nu), 4WM at (nu, -nu), cross peak."""
    freqs = [0.48, 1.35, 1.63]
    comps = []
    for f in freqs:
        comps += [(1.0, f, 0.0), (0.8, f, f), (0.6, f, -f)]
    comps.append((0.5, freqs[0], -freqs[1]))
    spec = spectrum_2d(plane_waves(comps), nu_t_max=3.0)
    catalog = enumerate_mixing_peaks(freqs)
    for _, nu_t, nu_tau in comps:
        assert find_peak(catalog, nu_t, nu_tau) is not None
        best = nearest_local_maximum(spec, nu_t, nu_tau, threshold=0.05)
        assert best is not None and best[3] <= math.sqrt(2)
        assert abs(best[0] - nu_t) <= spec.bin_t and abs(best[1] - nu_tau) <= spec.bin_tau


def test_cos_cos_product_splits_symmetrically():
    tt, ta = np.meshgrid(T, TAU)
    scan = Scan2D(T, TAU, np.cos(2 * np.pi * 1.0 * tt) * np.cos(2 * np.pi * 0.6 * ta))
    spec = spectrum_2d(scan, taper=0.0, pad=1)
    peaks = find_local_maxima(spec, 0.5)
    assert len(peaks) == 2
    locs = sorted((round(p[0], 6), round(p[1], 6)) for p in peaks)
    assert locs[0][0] == pytest.approx(1.0, abs=spec.bin_t) and locs[1][0] == pytest.approx(1.0, abs=spec.bin_t)
    assert locs[0][1] == pytest.approx(-0.6, abs=spec.bin_tau)
    assert locs[1][1] == pytest.approx(0.6, abs=spec.bin_tau)
    assert peaks[0][2] == pytest.approx(peaks[1][2], rel=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 4]), st.floats(0.0, 0.3), st.booleans())
def test_parseval(seed, pad, taper, crop):
    rng = np.random.default_rng(seed)
    scan = Scan2D(np.arange(40) * 0.1, np.arange(24) * 0.2, rng.normal(size=(24, 40)))
    spec = spectrum_2d(scan, taper=taper, pad=pad, nu_t_max=1.5 if crop else None)
    assert spec.energy == pytest.approx(time_energy(scan, taper), rel=1e-10)


def test_spectrum_metadata_and_errors():
    scan = plane_waves([(1.0, 0.8, 0.0)])
    spec = spectrum_2d(scan, pad=4)
    assert spec.bin_t == pytest.approx(1 / (len(T) * 0.01))
    assert spec.bin_tau == pytest.approx(1 / (len(TAU) * 0.05))
    assert spec.amplitude.max() == 1.0
    assert np.all(np.diff(spec.nu_tau) > 0)
    with pytest.raises(SpectrumError):
        spectrum_2d(scan, pad=0)
    with pytest.raises(SpectrumError):
        Scan2D([0, 1, 3], [0, 1], np.zeros((2, 3))).dt
    with pytest.raises(SpectrumError):
        Scan2D([0, 1], [0, 1], np.zeros((3, 2)))
    zero = spectrum_2d(Scan2D(T, TAU, np.zeros((len(TAU), len(T)))))
    assert zero.normalization == 1.0 and zero.amplitude.max() == 0.0
    assert spectral_weight_fraction(zero) == 0.0


def test_tail_taper():
    w = tail_taper(100, 0.1)
    assert np.all(w[:90] == 1.0)
    assert w[-1] == pytest.approx(0.0, abs=1e-15)
    assert np.all(np.diff(w[89:]) <= 0)
    assert np.all(tail_taper(10, 0.0) == 1.0)


def test_spectral_weight_fraction():
    spec = spectrum_2d(plane_waves([(1.0, 0.5, 0.0), (1.0, 1.5, 0.0)]), taper=0.0, pad=1)
    frac = spectral_weight_fraction(spec, 1.0)
    assert 0.4 < frac < 0.6
    hi = spectrum_2d(plane_waves([(1.0, 1.5, 0.0)]))
    assert spectral_weight_fraction(hi, 1.0) > 0.99


# ---------------------------------------------------------------- catalog

def brute_force_catalog(freqs, order):
    """Ordered interaction sequences grouped by location: (nu_t, nu_tau) -> number of sequences."""
    letters = [(s, f, nu) for f in "AB" for nu in freqs for s in (1, -1)]
    out = defaultdict(int)
    for seq in itertools.product(letters, repeat=order):
        if {f for _, f, _ in seq} != {"A", "B"}:
            continue
        nu_t = sum(s * nu for s, _, nu in seq)
        nu_tau = sum(s * nu for s, f, nu in seq if f == "B")
        if nu_t > 1e-12:
            out[(round(nu_t, 9), round(nu_tau, 9))] += 1
    return dict(out)


@pytest.mark.parametrize("freqs", [[0.477, 1.351, 1.633], [0.5, 1.0], [0.693, 0.935]])
def test_catalog_matches_brute_force(freqs):
    ours = {(round(p.location[0], 9), round(p.location[1], 9)): p.degeneracy for p in enumerate_mixing_peaks(freqs)}
    assert ours == brute_force_catalog(freqs, 3)


def test_catalog_order_five_matches_brute_force():
    freqs = [0.6, 1.1]
    ours = {(round(p.location[0], 9), round(p.location[1], 9)): p.degeneracy
            for p in enumerate_mixing_peaks(freqs, order=5)}
    assert ours == brute_force_catalog(freqs, 5)


def test_catalog_labels():
    freqs = [0.477, 1.351, 1.633]
    cat = enumerate_mixing_peaks(freqs, names=["LP1", "UP2", "UP1"])
    for f in freqs:
        assert "PP" in find_peak(cat, f, 0.0).label
        assert "PP" in find_peak(cat, f, f).label
        assert find_peak(cat, f, -f).label == "4WM"
        assert find_peak(cat, f, 2 * f).label == "4WM"
        assert find_peak(cat, f, 0.0).resonant
    cross = find_peak(cat, 0.477, -1.351)
    assert cross.label == "4WM" and cross.resonant
    assert any("UP2" in c for c in cross.composition)
    assert not find_peak(cat, 0.477 + 1.351 - 1.633, -1.633).resonant
    assert find_peak(cat, 0.477 + 1.351 - 1.633, 0.0) is None  # single-field process
    six = enumerate_mixing_peaks([0.5], order=5)
    assert find_peak(six, 0.5, -2 * 0.5).label == "6WM"


def test_catalog_rejects_bad_input():
    for kw in ({"order": 2}, {"order": 9}):
        with pytest.raises(ValueError):
            enumerate_mixing_peaks([0.5], **kw)
    with pytest.raises(ValueError):
        enumerate_mixing_peaks([0.5, 0.5])
    with pytest.raises(ValueError):
        enumerate_mixing_peaks([0.0])


def test_catalog_csv():
    text = catalog_to_csv(enumerate_mixing_peaks([0.5]))
    lines = text.strip().splitlines()
    assert lines[0] == "nu_t,nu_tau,order,type,degeneracy,resonant,composition"
    assert len(lines) == 1 + len(enumerate_mixing_peaks([0.5]))


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.1, 3.0), min_size=1, max_size=3, unique=True))
def test_catalog_invariants(freqs):
    freqs = sorted(round(f, 3) for f in freqs)
    if len(set(freqs)) != len(freqs):
        return
    cat = enumerate_mixing_peaks(freqs)
    assert all(p.location[0] > 0 for p in cat)
    assert sum(p.degeneracy for p in cat) == sum(brute_force_catalog(freqs, 3).values())
    for f in freqs:
        for loc in ((f, 0.0), (f, f), (f, -f), (f, 2 * f)):
            assert find_peak(cat, *loc) is not None


# ---------------------------------------------------------------- classification, cuts

def test_classify_matches_and_rejects():
    freqs = [0.48, 1.35]
    spec = spectrum_2d(plane_waves([(1.0, 0.48, 0.0), (0.7, 1.35, -1.35), (0.6, 2.4, 0.7)]), nu_t_max=3.0)
    cat = enumerate_mixing_peaks(freqs)
    matches, unmatched = classify_peaks(spec, cat, threshold=0.3)
    assert {(round(m.peak.location[0], 2), round(m.peak.location[1], 2)) for m in matches} >= {(0.48, 0.0), (1.35, -1.35)}
    assert all(m.distance <= math.sqrt(2) for m in matches)
    assert any(abs(u[0] - 2.4) < 0.15 for u in unmatched)
    with pytest.raises(SpectrumError):
        classify_peaks(spec, [])


def test_cuts():
    spec = spectrum_2d(plane_waves([(1.0, 0.8, 0.8)]), nu_t_max=3.0)
    x, y = cut(spec, "nu_tau=0")
    row = np.argmin(np.abs(spec.nu_tau))
    if spec.nu_tau[row] == 0.0:
        np.testing.assert_allclose(y, spec.amplitude[row])
    xd, yd = cut(spec, "diagonal")
    assert xd[np.argmax(yd)] == pytest.approx(0.8, abs=spec.bin_t)
    xv, yv = cut(spec, "nu_t=0.8")
    assert xv[np.argmax(yv)] == pytest.approx(0.8, abs=spec.bin_tau)
    assert parse_axis_spec("nu_tau = nu_t") == ("diagonal", None)
    for bad in ("nu_x=1", "nu_t=", "nu_t=9", "nu_tau=99"):
        with pytest.raises((SpectrumError, ValueError)):
            cut(spec, bad)


# ---------------------------------------------------------------- statistics

def test_ensemble_stats_matches_numpy():
    rng = np.random.default_rng(1)
    data = rng.normal(size=(7, 5, 4))
    stats = ensemble_stats(list(data))
    np.testing.assert_allclose(stats.mean, data.mean(axis=0))
    np.testing.assert_allclose(stats.stderr, data.std(axis=0, ddof=1) / math.sqrt(7))
    assert stats.n == 7
    with pytest.raises(SpectrumError):
        ensemble_stats([data[0]])
    with pytest.raises(SpectrumError):
        ensemble_stats([data[0], data[0][:2]])


def test_stderr_of_white_noise_is_sigma_over_sqrt_n():
    rng = np.random.default_rng(2)
    sigma, n = 0.3, 20
    stats = ensemble_stats(list(rng.normal(0.0, sigma, size=(n, 200, 200))))
    # E[s] = c4(n) sigma for the ddof=1 sample deviation
    c4 = math.sqrt(2 / (n - 1)) * math.exp(math.lgamma(n / 2) - math.lgamma((n - 1) / 2))
    assert np.mean(stats.stderr) == pytest.approx(c4 * sigma / math.sqrt(n), rel=0.005)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 10), st.floats(-5, 5))
def test_identical_samples_have_zero_stderr(n, value):
    stats = ensemble_stats([np.full((3, 3), value)] * n)
    assert np.all(stats.stderr <= 1e-12 * abs(value))
    np.testing.assert_allclose(stats.mean, value)


def test_noise_calibration_hits_target():
    scan = plane_waves([(1.0, 0.8, 0.0), (0.5, 1.3, -1.3)])
    rng = np.random.default_rng(3)
    sigma = calibrate_noise(scan, 0.012, 20, rng, nu_t_max=3.0)
    stats = ensemble_stats(noisy_ensemble(scan, sigma, 20, np.random.default_rng(4), nu_t_max=3.0))
    assert stats.normalized_mean_stderr == pytest.approx(0.012, abs=0.002)



def test_noise_calibration_refines_a_poor_pilot():
    scan = plane_waves([(1.0, 0.8, 0.0), (0.5, 1.3, -1.3)])
    sigma = calibrate_noise(scan, 0.012, 20, np.random.default_rng(5), pilot=1e-4, nu_t_max=3.0)
    stats = ensemble_stats(noisy_ensemble(scan, sigma, 20, np.random.default_rng(6), nu_t_max=3.0))
    assert stats.normalized_mean_stderr == pytest.approx(0.012, rel=0.05)

# ---------------------------------------------------------------- text format

def test_matrix_roundtrip(tmp_path):
    values = np.arange(6.0).reshape(2, 3) / 7
    path = tmp_path / "m.txt"
    write_matrix(path, values, Axis("tau", "ps", -1.0, 0.05, 2), Axis("t", "ps", 0.0, 0.01, 3), {"note": "x"})
    back, a1, a2, meta = read_matrix(path)
    np.testing.assert_allclose(back, values, rtol=1e-8)
    assert (a1.name, a1.count, a2.unit) == ("tau", 2, "ps")
    assert meta == {"note": "x"}
    scan = Scan2D(T[:5], TAU[:3], np.ones((3, 5)), {"k": "v"})
    scan.save(tmp_path / "s.txt")
    s2 = Scan2D.load(tmp_path / "s.txt")
    np.testing.assert_allclose(s2.t, scan.t)
    spec = spectrum_2d(plane_waves([(1.0, 0.8, 0.0)]), nu_t_max=2.0)
    spec.save(tmp_path / "sp.txt")
    sp2 = Spectrum2D.load(tmp_path / "sp.txt")
    assert sp2.bin_t == pytest.approx(spec.bin_t)
    np.testing.assert_allclose(sp2.amplitude, spec.amplitude, atol=1e-9)


def test_matrix_format_errors(tmp_path):
    with pytest.raises(MatrixFormatError):
        write_matrix(tmp_path / "x", np.zeros((2, 2)), Axis("a", "u", 0, 1, 3), Axis("b", "u", 0, 1, 2))
    bad = tmp_path / "bad.txt"
    bad.write_text("# axis1: a u 0 1 2\n1 2\n")
    with pytest.raises(MatrixFormatError):
        read_matrix(bad)
    bad.write_text("# axis1: a u 0 1 2\n# axis2: b u 0 1 2\n1 2\n")
    with pytest.raises(MatrixFormatError):
        read_matrix(bad)
    with pytest.raises(MatrixFormatError):
        Axis.from_values("a", "u", [0, 1, 3])


# ---------------------------------------------------------------- chopper harness

PAIR = default_pair(grid=(-2.0, 0.001, 7001))


def test_linear_system_has_no_nonlinear_signal():
    params = effective_two_mode(drive_scale=3.4)
    scan = run_2d_experiment(params, PAIR, [0.0, 0.5, 1.0], t_stride=10)
    assert scan.values.shape == (3, 701)
    assert np.max(np.abs(scan.values)) < 1e-12 * float(scan.meta["linear_peak"])


def test_parallel_rows_equal_serial_rows():
    from polariton2d.landau import LandauParams

    params = LandauParams(cavity=effective_two_mode(drive_scale=2.3))
    taus = [0.0, 0.25]
    a = run_2d_experiment(params, PAIR, taus, t_stride=7)
    b = run_2d_experiment(params, PAIR, taus, t_stride=7, workers=2)
    np.testing.assert_array_equal(a.values, b.values)
    assert np.max(np.abs(a.values)) > 0


def test_harness_errors():
    with pytest.raises(ValueError):
        run_2d_experiment(effective_two_mode(), PAIR, [0.0005])
    with pytest.raises(TypeError):
        run_2d_experiment(object(), PAIR, [0.0])
    err = ExperimentError(0.25, ValueError("boom"))
    assert err.tau == 0.25 and "tau = 0.25 ps: boom" in str(err)


def test_tau_grid():
    g = tau_grid()
    assert len(g) == 121 and g[0] == -1.0 and g[-1] == 5.0
