"""Waveform measurement tests: windowing, frequency, spectrum, THD, phase."""

import math

import numpy as np
import pytest

from conftest import EXACT_F0, R2, make_sine_wave
from dvccosc import (DvccParams, MeasurementError, SatModel, SimConfig,
                     Waveform, canonical_quadrature_netlist,
                     derive_state_space, design_equal_amplitude,
                     estimate_frequency, phase_and_ratio, quadrature_report,
                     simulate, spectrum, steady_state_window, thd,
                     write_spectrum_csv)
from dvccosc.waveform import wrap_phase_deg


def pure_sine(f=1000.0, fs=1e6, n=100_000):
    t = np.arange(n) / fs
    return Waveform(0.0, 1.0 / fs, (("v", np.sin(2 * np.pi * f * t)),))


class TestSteadyStateWindow:
    def test_pure_sine_accepted(self):
        w = pure_sine()  # 100 cycles at 1 kHz over 100 ms
        start, stop = steady_state_window(w, "v")
        # Window must span the last 20 cycles: 20 ms of 100 ms.
        assert stop - start == pytest.approx(20_000, abs=3)
        assert start >= w.n_samples - 21_000

    def test_growing_signal_rejected(self):
        fs, f = 1e6, 1000.0
        t = np.arange(100_000) / fs
        growing = np.exp(np.log(1.10) * f * t) * np.sin(2 * np.pi * f * t)
        w = Waveform(0.0, 1.0 / fs, (("v", growing),))
        with pytest.raises(MeasurementError, match="not settled"):
            steady_state_window(w, "v")

    def test_short_record_rejected(self):
        w = pure_sine(n=10_000)  # 10 cycles only
        with pytest.raises(MeasurementError, match="too short"):
            steady_state_window(w, "v")


class TestEstimateFrequency:
    def test_kilohertz_sine(self):
        w = pure_sine()
        window = steady_state_window(w, "v")
        assert estimate_frequency(w, "v", window) == pytest.approx(1000.0, rel=1e-4)

    def test_megahertz_sine_at_thousand_samples_per_period(self):
        f = EXACT_F0
        fs = 1000.0 * f
        n = 60_000
        t = np.arange(n) / fs
        w = Waveform(0.0, 1.0 / fs, (("v", np.sin(2 * np.pi * f * t)),))
        window = steady_state_window(w, "v")
        assert estimate_frequency(w, "v", window) == pytest.approx(f, rel=5e-4)

    def test_too_few_crossings_in_window(self):
        w = pure_sine()
        with pytest.raises(MeasurementError, match="crossings"):
            estimate_frequency(w, "v", (0, 100))

    def test_simulated_startup_frequency(self):
        # Ideal-gain startup run lands within 1% of the linear prediction
        # for the perturbed component values.
        d = design_equal_amplitude(EXACT_F0, R2, 0.02)
        p = d.params
        n = canonical_quadrature_netlist(p.r1, p.r2, p.c1, p.c2, DvccParams())
        ss = derive_state_space(n)
        cfg = SimConfig(t_end=200 / d.f0_exact, dt=1 / (1000 * d.f0_exact),
                        initial_state=(0.0, 1e-3))
        w = simulate(ss, cfg)
        window = steady_state_window(w, "V02")
        f = estimate_frequency(w, "V02", window)
        assert f == pytest.approx(d.f0_exact, rel=1e-2)


class TestSpectrum:
    def test_exact_bin_rect_peak(self):
        fs, n = 1024.0, 1024
        f = 32.0  # lands exactly on bin 32
        t = np.arange(n) / fs
        w = Waveform(0.0, 1 / fs, (("v", np.sin(2 * np.pi * f * t)),))
        spec = spectrum(w, "v", (0, n), n_fft=n, window_fn="rect")
        mags = np.abs(spec.bins)
        assert mags[32] == pytest.approx(1.0, abs=1e-9)
        others = np.delete(mags, 32)
        assert np.max(others) < 1e-9
        assert spec.peak_frequency() == pytest.approx(32.0, rel=1e-12)

    def test_parseval_rect(self):
        rng = np.random.default_rng(8)
        n = 4096
        x = rng.standard_normal(n)
        w = Waveform(0.0, 1e-3, (("v", x),))
        spec = spectrum(w, "v", (0, n), n_fft=n, window_fn="rect")
        mags = np.abs(spec.bins)
        # With the amplitude scaling (2/N inner bins, 1/N edges), Parseval
        # reads sum(x^2) = N*(|b0|^2 + |bN/2|^2) + N/2 * sum(|bk|^2).
        recon = n * (mags[0] ** 2 + mags[-1] ** 2) + n / 2 * np.sum(mags[1:-1] ** 2)
        assert recon == pytest.approx(float(np.sum(x * x)), rel=1e-9)

    def test_hann_default_and_padding(self):
        w = pure_sine(n=100_000)
        spec = spectrum(w, "v", (0, 3000))
        assert spec.window == "hann"
        assert spec.n_fft == 4096
        assert len(spec.bins) == 4096 // 2 + 1
        assert spec.peak_frequency() == pytest.approx(1000.0, abs=2 * spec.df)

    def test_nfft_validation(self):
        w = pure_sine(n=1000)
        with pytest.raises(MeasurementError, match="power of two"):
            spectrum(w, "v", (0, 1000), n_fft=1000)
        with pytest.raises(MeasurementError, match="power of two"):
            spectrum(w, "v", (0, 1000), n_fft=512)  # smaller than window
        with pytest.raises(MeasurementError, match="too short"):
            spectrum(w, "v", (0, 32))

    def test_csv_export(self, tmp_path):
        w = pure_sine(n=2048)
        spec = spectrum(w, "v", (0, 2048), n_fft=2048, window_fn="rect")
        path = tmp_path / "spec.csv"
        write_spectrum_csv(spec, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "f_hz,magnitude,phase_deg"
        assert len(lines) == 1 + len(spec.bins)
        f, mag, ph = (float(tok) for tok in lines[1].split(","))
        assert f == 0.0


class TestThd:
    def test_pure_sine(self):
        w = pure_sine()
        window = steady_state_window(w, "v")
        assert thd(w, "v", window) < 1e-6

    def test_truncated_square_wave(self):
        # Odd harmonics 1/k up to the 9th: THD over harmonics 2..9 is
        # sqrt(1/9 + 1/25 + 1/49 + 1/81) = 0.42879...
        fs, f, n = 1e6, 1000.0, 100_000
        t = np.arange(n) / fs
        x = sum(np.sin(2 * np.pi * k * f * t) / k for k in (1, 3, 5, 7, 9))
        w = Waveform(0.0, 1 / fs, (("v", x),))
        window = steady_state_window(w, "v")
        want = math.sqrt(1 / 9 + 1 / 25 + 1 / 49 + 1 / 81)
        assert thd(w, "v", window, max_harmonic=9) == pytest.approx(want, abs=1e-3)

    def test_scale_invariance(self):
        fs, f, n = 1e6, 1000.0, 100_000
        t = np.arange(n) / fs
        x = np.sin(2 * np.pi * f * t) + 0.05 * np.sin(2 * np.pi * 3 * f * t)
        w1 = Waveform(0.0, 1 / fs, (("v", x),))
        w2 = Waveform(0.0, 1 / fs, (("v", 731.5 * x),))
        win = steady_state_window(w1, "v")
        assert thd(w2, "v", win) == pytest.approx(thd(w1, "v", win), rel=1e-9)

    def test_harmonics_clipped_at_nyquist(self):
        # Fundamental at 40% of Nyquist: only the 2nd harmonic is measurable.
        fs, f, n = 10_000.0, 2000.0, 50_000
        t = np.arange(n) / fs
        x = np.sin(2 * np.pi * f * t) + 0.1 * np.sin(2 * np.pi * 2 * f * t)
        w = Waveform(0.0, 1 / fs, (("v", x),))
        win = steady_state_window(w, "v")
        assert thd(w, "v", win, max_harmonic=9) == pytest.approx(0.1, rel=1e-2)


class TestPhaseAndRatio:
    def test_cos_leads_sin_by_quarter_turn(self):
        w = make_sine_wave([("a", 1000.0, 0.0), ("b", 1000.0, -90.0)],
                           fs=1e6, n=100_000)
        window = steady_state_window(w, "b")
        phase, ratio = phase_and_ratio(w, "a", "b", window)
        assert phase == pytest.approx(90.0, abs=1e-3)
        assert ratio == pytest.approx(1.0, rel=1e-6)

    def test_identical_channels(self):
        w = make_sine_wave([("a", 1000.0, 0.0), ("b", 1000.0, 0.0)],
                           fs=1e6, n=100_000)
        window = steady_state_window(w, "b")
        phase, ratio = phase_and_ratio(w, "a", "b", window)
        assert phase == pytest.approx(0.0, abs=1e-9)
        assert ratio == pytest.approx(1.0, rel=1e-12)

    def test_antisymmetry_and_reciprocity(self):
        # fs/f is a multiple of 4 so the 90-degree shift is a whole number
        # of samples and both channels see identical crossing geometry.
        w = make_sine_wave([("a", 1000.0, 0.0), ("b", 1000.0, -90.0)],
                           fs=1e6, n=100_000, amplitude=0.7)
        window = steady_state_window(w, "b")
        p_ab, r_ab = phase_and_ratio(w, "a", "b", window)
        p_ba, r_ba = phase_and_ratio(w, "b", "a", window)
        assert p_ab == pytest.approx(-p_ba, rel=1e-9)
        assert r_ab * r_ba == pytest.approx(1.0, rel=1e-9)

    def test_window_shift_by_whole_periods(self):
        w = make_sine_wave([("a", 1000.0, 30.0), ("b", 1000.0, -45.0)],
                           fs=1e6, n=100_000)
        window = steady_state_window(w, "b")
        shifted = (window[0] - 5000, window[1] - 5000)  # five periods
        p0, _ = phase_and_ratio(w, "a", "b", window)
        p1, _ = phase_and_ratio(w, "a", "b", shifted)
        assert abs(p0 - p1) < 0.1

    def test_degenerate_channel_rejected(self):
        n = 100_000
        t = np.arange(n) / 1e6
        w = Waveform(0.0, 1e-6, (("a", np.zeros(n)),
                                 ("b", np.sin(2 * np.pi * 1000 * t))))
        window = steady_state_window(w, "b")
        with pytest.raises(MeasurementError, match="degenerate"):
            phase_and_ratio(w, "a", "b", window)


class TestWrapPhase:
    @pytest.mark.parametrize("deg,want", [
        (0.0, 0.0), (180.0, 180.0), (-180.0, 180.0), (181.0, -179.0),
        (-181.0, 179.0), (540.0, 180.0), (-540.0, 180.0), (725.0, 5.0),
    ])
    def test_wrap(self, deg, want):
        assert wrap_phase_deg(deg) == pytest.approx(want, abs=1e-12)

    def test_range(self):
        for deg in np.linspace(-1000, 1000, 777):
            out = wrap_phase_deg(float(deg))
            assert -180.0 < out <= 180.0


class TestQuadratureReport:
    def test_synthetic_pair_echoes_truth(self):
        w = make_sine_wave([("V01", 1000.0, 0.0), ("V02", 1000.0, -90.0)],
                           fs=1e6, n=100_000, amplitude=2.0)
        rep = quadrature_report(w)
        assert rep.f_measured == pytest.approx(1000.0, rel=1e-4)
        assert rep.phase_diff_deg == pytest.approx(90.0, abs=0.01)
        assert rep.amp_ratio == pytest.approx(1.0, rel=1e-6)
        assert rep.thd_a < 1e-6 and rep.thd_b < 1e-6
        assert rep.channel_a == "V01" and rep.channel_b == "V02"

    def test_channel_count_enforced(self):
        w = pure_sine()
        with pytest.raises(MeasurementError, match="two probe channels"):
            quadrature_report(w)

    def test_nonideal_marginal_run_shows_frequency_drop(self):
        # Gain product beta2*alpha1 = (7.86/7.96)^2 drags the frequency to
        # 7.86 MHz; beta1*alpha2 trims the damping back to marginal so a
        # linear (saturation-free) run holds constant amplitude.
        drop = (7.86 / 7.96) ** 2
        trim = (1.0 + drop) / 2.0
        params = DvccParams(beta1=1.0, beta2=drop, alpha1=1.0, alpha2=trim,
                            sat_model=SatModel.NONE)
        n = canonical_quadrature_netlist(2e3, 1e3, 10e-12, 20e-12, params)
        ss = derive_state_space(n)
        f_pred = EXACT_F0 * math.sqrt(drop)
        cfg = SimConfig(t_end=120 / f_pred, dt=1 / (1000 * f_pred),
                        initial_state=(0.0, 1e-3))
        rep = quadrature_report(simulate(ss, cfg))
        assert rep.f_measured == pytest.approx(7.86e6, rel=1e-2)
        assert rep.phase_diff_deg == pytest.approx(90.0, abs=1.0)

    def test_simulated_spectrum_peak_matches_crossing_estimate(self):
        d = design_equal_amplitude(EXACT_F0, R2, 0.02)
        p = d.params
        n = canonical_quadrature_netlist(p.r1, p.r2, p.c1, p.c2, DvccParams())
        ss = derive_state_space(n)
        w = simulate(ss, SimConfig(t_end=200 / d.f0_exact,
                                   dt=1 / (1000 * d.f0_exact),
                                   initial_state=(0.0, 1e-3)))
        window = steady_state_window(w, "V02")
        f = estimate_frequency(w, "V02", window)
        spec = spectrum(w, "V02", window)
        assert abs(spec.peak_frequency() - f) <= spec.df
