"""
Tests for field modulation, demodulation and slope calibration.
"""
import numpy as np
import pytest

from apps.lockin_dsp.domain import ModulationParams, TimeSeries
from apps.lockin_dsp.services import (
    calibrate_slope,
    decimation_factor,
    demodulate,
    demodulated_sweep,
    demodulator_response,
    filter_response,
    first_harmonic,
    lorentzian_dip,
    lowpass,
    mains_tones,
    modulate_and_sample,
    period_average,
)
from core.exceptions import ValidationError

CENTER = 0.1024
FWHM = 0.84e-3
CONTRAST = 0.15


def _sinusoid(mod, amplitude, duration_s, phase=0.0):
    t = np.arange(int(round(duration_s * mod.sample_rate_Hz))) / mod.sample_rate_Hz
    return TimeSeries(mod.sample_rate_Hz, amplitude * np.sin(2 * np.pi * mod.frequency_Hz * t + phase))


class TestModulationParams:
    """Lock-in settings."""

    def test_defaults(self):
        """0.01 mT at 15 kHz, 3 ms, sampled at 20 x the frequency."""
        mod = ModulationParams()
        assert mod.amplitude_T == 1e-5
        assert mod.sample_rate_Hz == pytest.approx(300000.0)
        assert mod.filter_order == 1

    def test_aliasing_rejected(self):
        """Modulation at or above Nyquist is rejected."""
        with pytest.raises(ValidationError):
            ModulationParams(frequency_Hz=15000.0, sample_rate_Hz=20000.0)

    def test_short_time_constant_rejected(self):
        """The time constant must exceed one period."""
        with pytest.raises(ValidationError):
            ModulationParams(time_constant_s=1e-5)

    def test_decimation_keeps_samples_per_time_constant(self):
        """Output rate gives at least 4 samples per time constant."""
        mod = ModulationParams()
        assert mod.sample_rate_Hz / decimation_factor(mod) * mod.time_constant_s >= 4


class TestModulateAndSample:
    """Field modulation and sampling."""

    def setup_method(self):
        self.mod = ModulationParams()

    def test_constant_signal(self):
        """A field-independent signal stays constant."""
        ts = modulate_and_sample(lambda B: 0.7, CENTER, self.mod, 0.04)
        assert np.all(ts.values == 0.7)

    def test_linear_signal_fft_amplitude(self):
        """Linear response: FFT line at f with amplitude slope * amplitude_T."""
        slope = 3.0
        ts = modulate_and_sample(lambda B: slope * B, CENTER, self.mod, 0.04)
        n = len(ts)
        spectrum = np.abs(np.fft.rfft(ts.values)) * 2 / n
        k = int(round(self.mod.frequency_Hz * n / self.mod.sample_rate_Hz))
        assert spectrum[k] == pytest.approx(slope * self.mod.amplitude_T, rel=1e-3)

    def test_same_seed_identical(self):
        """Noise draws are fixed by the seed."""
        a = modulate_and_sample(lambda B: B, CENTER, self.mod, 0.04, noise_asd_T=1e-9, seed=5)
        b = modulate_and_sample(lambda B: B, CENTER, self.mod, 0.04, noise_asd_T=1e-9, seed=5)
        c = modulate_and_sample(lambda B: B, CENTER, self.mod, 0.04, noise_asd_T=1e-9, seed=6)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_short_duration_rejected(self):
        """Records shorter than 10 time constants are rejected."""
        with pytest.raises(ValidationError):
            modulate_and_sample(lambda B: B, CENTER, self.mod, 0.01)

    def test_mains_tones(self):
        """Harmonic k of the mains tone carries amplitude / k."""
        assert mains_tones(50.0, 6e-9, 3) == ((50.0, 6e-9), (100.0, 3e-9), (150.0, 2e-9))
        assert mains_tones(50.0, 0.0, 3) == ()


class TestDemodulate:
    """Synchronous detection."""

    def setup_method(self):
        self.mod = ModulationParams()

    def test_in_phase_sinusoid(self):
        """Sinusoid of amplitude a in phase: X = a/2, Y = 0 after 10 time constants."""
        demod = demodulate(_sinusoid(self.mod, 0.2, 0.06), self.mod)
        X, Y = demod.settled()
        assert X == pytest.approx(0.1, rel=1e-3)
        assert Y == pytest.approx(0.0, abs=1e-4)

    def test_quadrature_sinusoid(self):
        """A cosine lands in Y."""
        demod = demodulate(_sinusoid(self.mod, 0.2, 0.06, phase=np.pi / 2), self.mod)
        X, Y = demod.settled()
        assert X == pytest.approx(0.0, abs=1e-4)
        assert Y == pytest.approx(0.1, rel=1e-3)

    def test_linearity(self):
        """demod(a s1 + b s2) = a demod(s1) + b demod(s2)."""
        rng = np.random.default_rng(2)
        n = int(0.04 * self.mod.sample_rate_Hz)
        s1 = TimeSeries(self.mod.sample_rate_Hz, rng.normal(size=n))
        s2 = TimeSeries(self.mod.sample_rate_Hz, rng.normal(size=n))
        combined = TimeSeries(self.mod.sample_rate_Hz, 2.5 * s1.values - 0.7 * s2.values)
        d1, d2, d = demodulate(s1, self.mod), demodulate(s2, self.mod), demodulate(combined, self.mod)
        np.testing.assert_allclose(d.X, 2.5 * d1.X - 0.7 * d2.X, atol=1e-10)
        np.testing.assert_allclose(d.Y, 2.5 * d1.Y - 0.7 * d2.Y, atol=1e-10)

    def test_phase_rotation(self):
        """Rotating the reference by 90 degrees maps X onto Y."""
        rng = np.random.default_rng(3)
        ts = TimeSeries(self.mod.sample_rate_Hz, rng.normal(size=int(0.04 * self.mod.sample_rate_Hz)))
        np.testing.assert_allclose(demodulate(ts, self.mod, phase_deg=90.0).X, demodulate(ts, self.mod).Y, atol=1e-10)

    def test_sample_rate_mismatch(self):
        """A series at another rate is rejected."""
        ts = TimeSeries(100000.0, np.zeros(10000))
        with pytest.raises(ValidationError):
            demodulate(ts, self.mod)

    def test_decimated_rate(self):
        """Output rate is the input rate over the decimation factor."""
        demod = demodulate(_sinusoid(self.mod, 1.0, 0.04), self.mod)
        assert demod.sample_rate_Hz == pytest.approx(self.mod.sample_rate_Hz / decimation_factor(self.mod))

    def test_constant_input_has_no_decimated_ripple(self):
        """A constant signal gives a flat X once decimated: no folded carrier."""
        ts = TimeSeries(self.mod.sample_rate_Hz, np.full(int(0.06 * self.mod.sample_rate_Hz), 0.85))
        settled = demodulate(ts, self.mod).trimmed(10)
        assert np.ptp(settled.X) < 1e-6
        assert np.ptp(settled.Y) < 1e-6
        assert np.max(np.abs(settled.X)) < 1e-6

    def test_decimated_matches_full_rate_mean(self):
        """Decimated X averages to the full-rate X for an in-phase sinusoid."""
        ts = _sinusoid(self.mod, 0.2, 0.06)
        decimated = demodulate(ts, self.mod).settled()[0]
        full = demodulate(ts, self.mod, decimate=False).settled()[0]
        assert decimated == pytest.approx(full, rel=1e-3)


class TestLowpass:
    """Exponential low-pass sections."""

    def test_step_response(self):
        """First order: 1 - 1/e of the step at t = time constant."""
        fs, tau = 300000.0, 3e-3
        response = lowpass(np.ones(int(5 * tau * fs)), fs, tau)
        assert response[int(round(tau * fs))] == pytest.approx(1 - np.exp(-1), rel=1e-2)

    def test_unity_dc_gain(self):
        """The filter passes DC unchanged."""
        mod = ModulationParams(filter_order=3)
        assert abs(filter_response(mod, [0.0])[0]) == pytest.approx(1.0, abs=1e-12)

    def test_corner_frequency(self):
        """|H| = 1/sqrt(2) at f = 1 / (2 pi tau)."""
        mod = ModulationParams()
        corner = 1.0 / (2 * np.pi * mod.time_constant_s)
        assert abs(filter_response(mod, [corner])[0]) == pytest.approx(1 / np.sqrt(2), rel=1e-2)

    def test_order_cascades(self):
        """Order n response is the first-order response to the power n."""
        first, third = ModulationParams(), ModulationParams(filter_order=3)
        f = [10.0, 100.0]
        np.testing.assert_allclose(filter_response(third, f), filter_response(first, f) ** 3, rtol=1e-12)

    def test_period_average_nulls_harmonics(self):
        """The one-period mean removes the modulation frequency and its harmonics."""
        mod = ModulationParams()
        t = np.arange(6000) / mod.sample_rate_Hz
        carrier = np.sin(2 * np.pi * mod.frequency_Hz * t) + 0.3 * np.cos(4 * np.pi * mod.frequency_Hz * t)
        assert np.max(np.abs(period_average(carrier, mod)[100:])) < 1e-12
        assert np.abs(demodulator_response(mod, [mod.frequency_Hz])[0]) < 1e-12

    def test_demodulator_response_in_band(self):
        """Below 100 Hz the period mean leaves the low-pass response nearly unchanged."""
        mod = ModulationParams()
        f = [1.0, 10.0, 100.0]
        np.testing.assert_allclose(np.abs(demodulator_response(mod, f)), np.abs(filter_response(mod, f)), rtol=1e-3)


class TestDemodulatedSweep:
    """Lock-in X versus bias across a Lorentzian dip."""

    def setup_method(self):
        self.mod = ModulationParams()
        self.signal_fn = lorentzian_dip(CENTER, FWHM, CONTRAST)

    def test_odd_symmetry_at_center(self):
        """X vanishes at the feature center."""
        offsets = np.array([-1e-4, 0.0, 1e-4])
        _, X = demodulated_sweep(self.signal_fn, CENTER + offsets, self.mod)
        assert abs(X[1]) < 1e-3 * abs(X[2])
        assert X[0] == pytest.approx(-X[2], rel=1e-3)

    def test_derivative_law(self):
        """X follows (a/2) dS/dB within 2 % for small modulation."""
        B = CENTER + np.array([-3e-4, -2e-4, -1e-4, 1e-4, 2e-4, 3e-4])
        _, X = demodulated_sweep(self.signal_fn, B, self.mod)
        h = 1e-7
        derivative = (self.signal_fn(B + h) - self.signal_fn(B - h)) / (2 * h)
        np.testing.assert_allclose(X, self.mod.amplitude_T / 2 * derivative, rtol=0.02)

    def test_matches_first_harmonic(self):
        """Steady-state X equals the first-harmonic integral."""
        B = CENTER + np.linspace(-2e-4, 2e-4, 5)
        _, X = demodulated_sweep(self.signal_fn, B, self.mod)
        np.testing.assert_allclose(X, first_harmonic(self.signal_fn, B, self.mod.amplitude_T), rtol=1e-3, atol=1e-7)

    def test_workers_match_serial(self):
        """Thread-pool sweep keeps input order."""
        B = CENTER + np.linspace(-2e-4, 2e-4, 6)
        _, serial = demodulated_sweep(self.signal_fn, B, self.mod)
        _, parallel = demodulated_sweep(self.signal_fn, B, self.mod, workers=3)
        np.testing.assert_array_equal(serial, parallel)


class TestCalibrateSlope:
    """Straight-line calibration."""

    def test_exact_line(self):
        """Synthetic linear X gives its slope and root exactly."""
        B = np.linspace(0.1, 0.104, 41)
        calibration = calibrate_slope(B, 5.0 * (B - 0.1023), window_T=1e-3)
        assert calibration.slope == pytest.approx(5.0, rel=1e-9)
        assert calibration.center_T == pytest.approx(0.1023, abs=1e-12)
        assert calibration.linear

    def test_demodulated_gslac_center(self):
        """Noise-free demodulated GSLAC crosses zero at the center within 1 uT."""
        signal_fn = lorentzian_dip(CENTER, FWHM, CONTRAST)
        B, X = demodulated_sweep(signal_fn, CENTER + np.linspace(-2e-4, 2e-4, 41), ModulationParams())
        calibration = calibrate_slope(B, X, window_T=FWHM / 20, linearity_window_T=FWHM / 4)
        assert calibration.center_T == pytest.approx(CENTER, abs=1e-6)
        assert calibration.n_points >= 5
        assert calibration.linear

    def test_too_few_points(self):
        """Fewer than 5 points in the window are rejected."""
        B = np.linspace(0.1, 0.104, 5)
        with pytest.raises(ValidationError):
            calibrate_slope(B, B - 0.102, window_T=1e-3)

    def test_no_crossing(self):
        """X of one sign has no zero crossing."""
        B = np.linspace(0.1, 0.104, 11)
        with pytest.raises(ValidationError):
            calibrate_slope(B, B + 1.0, window_T=1e-3)

    def test_nonlinear_flagged(self):
        """A cubic over the wide window fails the linearity check."""
        B = np.linspace(-1.0, 1.0, 41)
        calibration = calibrate_slope(B, B ** 3, window_T=0.2, linearity_window_T=1.0)
        assert not calibration.linear
