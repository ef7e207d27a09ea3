import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polariton2d.pulses import (
    PulsePair,
    Waveform,
    WaveformError,
    default_pair,
    load_waveform,
    save_waveform,
    schedule,
    snap_to_grid,
    synth_single_cycle,
)


def test_single_cycle_has_no_dc_and_requested_peak():
    wf = synth_single_cycle(peak_amplitude=2.5)
    assert np.max(np.abs(wf.samples)) == pytest.approx(2.5, rel=1e-12)
    assert abs(wf.samples.sum() * wf.dt) < 1e-12
    assert wf.n == 10001 and wf.t0 == -2.0 and wf.dt == 0.001


def test_single_cycle_spectrum_centred_near_carrier():
    wf = synth_single_cycle(center_freq=1.0, envelope_fwhm=1.0)
    n = 8 * wf.n
    f = np.fft.rfftfreq(n, wf.dt)
    spec = np.abs(np.fft.rfft(wf.samples, n))
    assert 0.8 < f[np.argmax(spec)] < 1.1
    assert spec[0] < 1e-9 * spec.max()


def test_envelope_width_and_dc_correction_form():
    # shape / gaussian(fwhm) must be an affine function of the carrier: k (cos - c)
    wf = synth_single_cycle(center_freq=1.0, envelope_fwhm=1.0, cep=0.4)
    t = wf.times
    sigma = 1.0 / (2 * np.sqrt(2 * np.log(2)))
    env = np.exp(-0.5 * (t / sigma) ** 2)
    keep = env > 1e-3
    carrier = np.cos(2 * np.pi * t[keep] + 0.4)
    design = np.column_stack([carrier, np.ones(keep.sum())])
    ratio = wf.samples[keep] / env[keep]
    coef, *_ = np.linalg.lstsq(design, ratio, rcond=None)
    assert np.max(np.abs(design @ coef - ratio)) < 1e-9 * np.max(np.abs(ratio))


def test_degenerate_and_short_grids_raise():
    with pytest.raises(WaveformError):
        synth_single_cycle(grid=(-2.0, 0.001, 3001))
    with pytest.raises(WaveformError):
        synth_single_cycle(center_freq=0.0)
    with pytest.raises(WaveformError):
        synth_single_cycle(peak_amplitude=-1.0)


def test_waveform_validation():
    with pytest.raises(WaveformError):
        Waveform(0.0, 0.0, np.zeros(4))
    with pytest.raises(WaveformError):
        Waveform(0.0, 0.1, np.zeros(1))
    with pytest.raises(WaveformError):
        Waveform(0.0, 0.1, np.array([0.0, np.nan]))
    wf = Waveform(0.0, 0.1, np.arange(3.0))
    with pytest.raises(ValueError):
        wf.samples[0] = 1.0


def test_schedule_delays_pulse_b_with_zero_fill():
    a = Waveform(0.0, 0.5, np.array([1.0, 0.0, 0.0, 0.0, 0.0]))
    b = Waveform(0.0, 0.5, np.array([2.0, 3.0, 0.0, 0.0, 0.0]))
    pair = PulsePair(a, b, tau=1.0)
    np.testing.assert_array_equal(schedule(pair, "A").samples, [1, 0, 0, 0, 0])
    np.testing.assert_array_equal(schedule(pair, "B").samples, [0, 0, 2, 3, 0])
    np.testing.assert_array_equal(schedule(pair, "ab").samples, [1, 0, 2, 3, 0])
    neg = schedule(PulsePair(a, b, tau=-0.5), "B").samples
    np.testing.assert_array_equal(neg, [3, 0, 0, 0, 0])
    far = schedule(PulsePair(a, b, tau=10.0), "B").samples
    np.testing.assert_array_equal(far, np.zeros(5))


def test_schedule_errors():
    a = Waveform(0.0, 0.5, np.zeros(4))
    with pytest.raises(WaveformError):
        schedule(PulsePair(a, a, tau=0.3), "AB")
    with pytest.raises(WaveformError):
        schedule(PulsePair(a, Waveform(0.0, 0.25, np.zeros(4))), "AB")
    with pytest.raises(WaveformError):
        schedule(PulsePair(a, Waveform(0.1, 0.5, np.zeros(4))), "AB")
    with pytest.raises(WaveformError):
        schedule(PulsePair(a, a), "C")


def test_schedule_accounts_for_grid_offset():
    a = Waveform(0.0, 1.0, np.zeros(6))
    b = Waveform(2.0, 1.0, np.array([1.0, 0, 0, 0, 0, 0]))
    np.testing.assert_array_equal(schedule(PulsePair(a, b, 1.0), "B").samples, [0, 0, 0, 1, 0, 0])


def test_save_load_roundtrip(tmp_path):
    wf = default_pair().pulse_b
    path = tmp_path / "b.txt"
    save_waveform(wf, path)
    back = load_waveform(path)
    assert back.n == wf.n
    assert back.dt == pytest.approx(wf.dt, rel=1e-9)
    np.testing.assert_allclose(back.samples, wf.samples, rtol=1e-8, atol=1e-12)


def test_load_resamples_non_uniform(tmp_path):
    path = tmp_path / "w.txt"
    path.write_text("# t E\n0 0\n0.1 1\n0.2 2\n0.35 3.5\n0.4 4\n")
    wf = load_waveform(path)
    assert wf.dt == pytest.approx(0.1)
    np.testing.assert_allclose(wf.samples, [0, 1, 2, 3, 4])


@pytest.mark.parametrize("text", ["0 1 2\n1 2 3\n", "0 1\n", "0 a\n1 2\n", "0 1\n0 2\n"])
def test_load_rejects_malformed(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(WaveformError):
        load_waveform(path)


@settings(max_examples=50, deadline=None)
@given(st.integers(-3000, 8000))
def test_schedule_is_a_pure_shift(steps):
    pair = default_pair()
    tau = snap_to_grid(steps * 0.001, 0.001)
    b = schedule(PulsePair(pair.pulse_a, pair.pulse_b, tau), "B").samples
    ref = np.zeros(pair.pulse_b.n)
    if steps >= 0:
        ref[steps:] = pair.pulse_b.samples[: pair.pulse_b.n - steps]
    else:
        ref[:steps] = pair.pulse_b.samples[-steps:]
    np.testing.assert_array_equal(b, ref)
    ab = schedule(PulsePair(pair.pulse_a, pair.pulse_b, tau), "AB").samples
    np.testing.assert_allclose(ab, pair.pulse_a.samples + b)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.3, 3.0), st.floats(0.3, 1.5), st.floats(0.0, 10.0), st.floats(-3.1, 3.1))
def test_synth_invariants(f0, fwhm, peak, cep):
    wf = synth_single_cycle(center_freq=f0, envelope_fwhm=fwhm, peak_amplitude=peak, cep=cep,
                            grid=(-5.0, 0.001, 10001))
    assert np.max(np.abs(wf.samples)) == pytest.approx(peak, rel=1e-9, abs=1e-12)
    assert abs(wf.samples.sum()) <= 1e-9 * max(peak, 1.0) * wf.n
