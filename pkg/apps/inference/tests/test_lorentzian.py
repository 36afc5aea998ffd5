"""
Tests for the Lorentzian fit and the least-squares engine.
"""
import numpy as np
import pytest

from apps.inference.domain import LorentzianParams
from apps.inference.optimizer import levenberg_marquardt
from apps.inference.services import (
    contrast_from_fit,
    fit_lorentzian,
    fit_report_lines,
    fit_summary_row,
    initial_lorentzian_guess,
    lorentzian_model,
)
from apps.scan_engine.domain import ScanConfig, ScanTrace
from apps.scan_engine.services import load_preset, synthesize_scan
from core.exceptions import NoFeatureError, ValidationError

CENTER = 0.1024
FWHM = 0.46e-3
AMPLITUDE = -0.03


def _trace(noise=0.0, seed=0, amplitude=AMPLITUDE, n=401):
    B = np.linspace(CENTER - 3e-3, CENTER + 3e-3, n)
    signal = lorentzian_model(B, (CENTER, FWHM, amplitude, 1.0))
    if noise:
        signal = signal * (1.0 + noise * np.random.default_rng(seed).standard_normal(n))
    return ScanTrace(B, signal)


class TestLevenbergMarquardt:
    """Generic damped least squares."""

    def test_exponential_decay(self):
        """Numerical-Jacobian fit of an exponential recovers its parameters."""
        x = np.linspace(0.0, 5.0, 50)

        def model(xs, p):
            return p[0] * np.exp(-xs / p[1])

        y = model(x, [2.0, 1.3])
        solution = levenberg_marquardt(model, x, y, [1.0, 0.5])
        assert solution.converged
        assert solution.stop_reason in ('step', 'sse-floor')
        assert solution.params == pytest.approx([2.0, 1.3], rel=1e-6)
        assert solution.sse <= solution.initial_sse

    def test_iteration_cap(self):
        """A one-iteration budget is reported as not converged."""
        x = np.linspace(0.0, 5.0, 50)

        def model(xs, p):
            return p[0] * np.exp(-xs / p[1])

        solution = levenberg_marquardt(model, x, model(x, [2.0, 1.3]), [1.0, 0.5], max_iterations=1)
        assert not solution.converged
        assert solution.n_iterations == 1
        assert solution.stop_reason == 'max-iterations'

    def test_exact_start_stops_at_floor(self):
        """Starting on the exact parameters stops at once with the SSE-floor reason."""
        x = np.linspace(0.0, 5.0, 50)

        def model(xs, p):
            return p[0] * np.exp(-xs / p[1])

        solution = levenberg_marquardt(model, x, model(x, [2.0, 1.3]), [2.0, 1.3])
        assert solution.converged
        assert solution.stop_reason == 'sse-floor'
        assert solution.n_iterations == 0
        assert solution.sse == solution.initial_sse == 0.0


class TestFitLorentzian:
    """Single-feature lineshape fit."""

    def test_noise_free_round_trip(self):
        """Noise-free data: parameters recovered within 1e-6."""
        result = fit_lorentzian(_trace())
        p = result.params
        assert p.center == pytest.approx(CENTER, rel=1e-6)
        assert p.fwhm == pytest.approx(FWHM, rel=1e-6)
        assert p.amplitude == pytest.approx(AMPLITUDE, rel=1e-6)
        assert p.baseline == pytest.approx(1.0, rel=1e-6)
        assert result.converged
        assert result.residual_rms < 1e-8
        assert result.residual_rms <= result.initial_rms

    def test_synthesized_gslac_round_trip(self):
        """Fit of a synthesized isolated GSLAC returns the injected feature."""
        preset = load_preset('W4').isolated()
        config = ScanConfig(B_start=0.0994, B_stop=0.1054, n_points=601)
        result = fit_lorentzian(synthesize_scan(preset, config))
        assert result.params.center == pytest.approx(0.1024, rel=1e-6)
        assert result.params.fwhm == pytest.approx(0.46e-3, rel=1e-6)
        assert contrast_from_fit(result) == pytest.approx(0.015 * 0.65, rel=1e-6)

    def test_exact_guess_converges(self):
        """Fitting from the exact parameters reports convergence and its reason."""
        exact = LorentzianParams(center=CENTER, fwhm=FWHM, amplitude=AMPLITUDE, baseline=1.0)
        result = fit_lorentzian(_trace(), guess=exact)
        assert result.converged
        assert result.stop_reason == 'sse-floor'
        assert 'not-converged' not in result.flags
        assert result.residual_rms <= result.initial_rms
        assert result.params.center == CENTER
        assert 'stop_reason = sse-floor' in fit_report_lines(result)

    def test_peak_polarity(self):
        """Positive amplitude features are fitted too."""
        result = fit_lorentzian(_trace(amplitude=0.05))
        assert result.params.amplitude == pytest.approx(0.05, rel=1e-6)

    def test_explicit_guess(self):
        """A supplied guess replaces auto-initialization."""
        guess = LorentzianParams(center=CENTER + 1e-4, fwhm=0.6e-3, amplitude=-0.02, baseline=0.99)
        result = fit_lorentzian(_trace(), guess=guess)
        assert result.params.fwhm == pytest.approx(FWHM, rel=1e-6)

    def test_shot_noise_monte_carlo(self):
        """Relative noise 1e-4: center within 1 uT and fwhm within 2 % in 95 % of seeds."""
        passes = 0
        for seed in range(100):
            p = fit_lorentzian(_trace(noise=1e-4, seed=seed)).params
            if abs(p.center - CENTER) < 1e-6 and abs(p.fwhm - FWHM) < 0.02 * FWHM:
                passes += 1
        assert passes >= 95

    def test_error_decreases_with_noise(self):
        """Ten times less noise gives smaller center errors."""
        def mean_error(noise):
            return np.mean([
                abs(fit_lorentzian(_trace(noise=noise, seed=s)).params.center - CENTER)
                for s in range(20)
            ])
        assert mean_error(1e-4) < mean_error(1e-3)

    def test_flat_trace(self):
        """Constant signal raises NoFeatureError."""
        B = np.linspace(0.1, 0.105, 100)
        with pytest.raises(NoFeatureError):
            fit_lorentzian(ScanTrace(B, np.ones(100)))

    def test_too_few_points(self):
        """Fewer than 8 points is rejected."""
        B = np.linspace(0.1, 0.105, 5)
        with pytest.raises(ValidationError):
            fit_lorentzian(ScanTrace(B, lorentzian_model(B, (0.1025, 1e-3, -0.1, 1.0))))


class TestInitialGuess:
    """Auto-initialization."""

    def test_half_max_width(self):
        """Interpolated half-extremum crossings give the width within a grid step."""
        trace = _trace(n=2001)
        guess = initial_lorentzian_guess(trace.B_values, trace.signal)
        assert guess.center == pytest.approx(CENTER, abs=3e-6)
        assert guess.fwhm == pytest.approx(FWHM, rel=0.05)
        assert guess.amplitude < 0


class TestReports:
    """key = value and CSV export."""

    def test_report_lines(self):
        """Report lists parameters, errors, contrast and convergence."""
        lines = fit_report_lines(fit_lorentzian(_trace()))
        keys = [line.split(' = ')[0] for line in lines]
        assert keys[0] == 'model'
        for key in ('center', 'stderr_center', 'fwhm', 'contrast', 'residual_rms', 'converged'):
            assert key in keys
        assert 'converged = true' in lines

    def test_summary_row(self):
        """Summary row pairs every column with a value."""
        columns, row = fit_summary_row(fit_lorentzian(_trace()))
        assert len(columns) == len(row)
        assert columns[:2] == ['center', 'stderr_center']
