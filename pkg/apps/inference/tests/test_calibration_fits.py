"""
Tests for the straight-line, saturation and misalignment fits.
"""
import numpy as np
import pytest

from apps.inference.domain import FitResult, LorentzianParams
from apps.inference.services import (
    extract_angle_dependence,
    fit_line,
    fit_lorentzian,
    fit_saturation,
)
from apps.photophysics.services import contrast_saturation
from apps.scan_engine.domain import AngleModelParams, ScanConfig
from apps.scan_engine.services import angle_response, load_preset, synthesize_scan
from core.exceptions import NonIdentifiableError, ValidationError

POWERS = np.array([50.0, 100.0, 200.0, 400.0, 800.0])


def _angle_fits(beta, contrast_noise=0.0, seed=0):
    params = AngleModelParams()
    response = angle_response(beta, params)
    contrast = response['contrast']
    if contrast_noise:
        contrast = contrast * (1.0 + contrast_noise * np.random.default_rng(seed).standard_normal(len(beta)))
    fits = []
    for b, fwhm, c in zip(beta, response['fwhm'], contrast):
        params_b = LorentzianParams(center=0.1024, fwhm=float(fwhm), amplitude=-float(c), baseline=1.0)
        fits.append((float(b), FitResult(params=params_b, stderr={}, residual_rms=0.0, n_iterations=1, converged=True)))
    return fits


class TestFitLine:
    """Ordinary least squares."""

    def test_exact_line(self):
        """y = 2x + 1 on ten points."""
        x = np.arange(10.0)
        line = fit_line(x, 2 * x + 1)
        assert line.slope == pytest.approx(2.0, abs=1e-12)
        assert line.intercept == pytest.approx(1.0, abs=1e-12)
        assert line.stderr_slope == pytest.approx(0.0, abs=1e-12)

    def test_permutation_invariance(self):
        """Point order does not matter."""
        rng = np.random.default_rng(4)
        x, y = rng.normal(size=30), rng.normal(size=30)
        order = rng.permutation(30)
        a, b = fit_line(x, y), fit_line(x[order], y[order])
        assert a.slope == pytest.approx(b.slope, rel=1e-12)
        assert a.intercept == pytest.approx(b.intercept, rel=1e-12, abs=1e-15)

    def test_matches_closed_form(self):
        """Random data agrees with the normal-equation solution."""
        rng = np.random.default_rng(9)
        for _ in range(20):
            x, y = rng.normal(size=25), rng.normal(size=25)
            slope, intercept = np.linalg.lstsq(np.column_stack([x, np.ones_like(x)]), y, rcond=None)[0]
            line = fit_line(x, y)
            assert line.slope == pytest.approx(slope, rel=1e-10, abs=1e-14)
            assert line.intercept == pytest.approx(intercept, rel=1e-10, abs=1e-14)

    def test_zero_crossing(self):
        """Root of the fitted line."""
        assert fit_line([0.1, 0.2, 0.3], [-1.0, 0.0, 1.0]).zero_crossing == pytest.approx(0.2)

    def test_single_x_rejected(self):
        """One distinct x value cannot define a line."""
        with pytest.raises(ValidationError):
            fit_line([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])


class TestFitSaturation:
    """C_max P / (P + P_sat)."""

    def test_noise_free_recovery(self):
        """C_max = 0.15, P_sat = 150 mW recovered within 1e-8."""
        result = fit_saturation(POWERS, contrast_saturation(POWERS, 0.15, 150.0))
        assert result.params.C_max == pytest.approx(0.15, rel=1e-8)
        assert result.params.P_sat == pytest.approx(150.0, rel=1e-8)
        assert result.flags == ()

    def test_amplitude_scaling(self):
        """Doubling contrasts doubles C_max and keeps P_sat."""
        result = fit_saturation(POWERS, 2 * contrast_saturation(POWERS, 0.15, 150.0))
        assert result.params.C_max == pytest.approx(0.30, rel=1e-8)
        assert result.params.P_sat == pytest.approx(150.0, rel=1e-8)

    def test_monte_carlo(self):
        """1 % multiplicative noise: C_max within 5 % in 95 of 100 seeds."""
        clean = contrast_saturation(POWERS, 0.15, 150.0)
        passes = 0
        for seed in range(100):
            noisy = clean * (1.0 + 0.01 * np.random.default_rng(seed).standard_normal(len(POWERS)))
            if abs(fit_saturation(POWERS, noisy).params.C_max - 0.15) < 0.05 * 0.15:
                passes += 1
        assert passes >= 95

    def test_low_powers_flagged(self):
        """All powers far below P_sat: flagged non-identifiable."""
        powers = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
        result = fit_saturation(powers, contrast_saturation(powers, 0.15, 150.0))
        assert 'non-identifiable' in result.flags

    def test_too_few_powers(self):
        """Two distinct powers are not enough."""
        with pytest.raises(NonIdentifiableError):
            fit_saturation([100.0, 100.0, 200.0], [0.05, 0.05, 0.08])


class TestExtractAngleDependence:
    """Summary of the misalignment study."""

    def setup_method(self):
        self.beta = np.linspace(-0.2, 0.2, 81)

    def test_noise_free_round_trip(self):
        """Model-generated widths and contrasts give back the defaults."""
        summary = extract_angle_dependence(_angle_fits(self.beta))
        assert summary.fwhm_min == pytest.approx(0.46e-3, rel=1e-6)
        assert summary.contrast_dip_fwhm == pytest.approx(0.054, rel=1e-6)
        assert summary.dip_depth == pytest.approx(0.35, rel=1e-6)
        assert summary.linewidth_slope == pytest.approx(6e-3, rel=1e-6)
        assert summary.C_far == pytest.approx(0.015, rel=1e-6)
        assert summary.beta_elbow == pytest.approx(0.01, rel=1e-4)

    def test_mirrored_angles(self):
        """beta -> -beta leaves the summary unchanged."""
        a = extract_angle_dependence(_angle_fits(self.beta))
        b = extract_angle_dependence(_angle_fits(-self.beta))
        assert b.fwhm_min == pytest.approx(a.fwhm_min, rel=1e-9)
        assert b.contrast_dip_fwhm == pytest.approx(a.contrast_dip_fwhm, rel=1e-9)
        assert b.linewidth_slope == pytest.approx(a.linewidth_slope, rel=1e-9)

    def test_contrast_noise_monte_carlo(self):
        """2 % contrast noise: dip width within 15 % in 95 of 100 seeds."""
        passes = 0
        for seed in range(100):
            summary = extract_angle_dependence(_angle_fits(self.beta, contrast_noise=0.02, seed=seed))
            if abs(summary.contrast_dip_fwhm - 0.054) < 0.15 * 0.054:
                passes += 1
        assert passes >= 95

    def test_requires_seven_angles(self):
        """Too few angles are not identifiable."""
        with pytest.raises(NonIdentifiableError):
            extract_angle_dependence(_angle_fits(np.linspace(-0.2, 0.2, 5)))

    def test_requires_span(self):
        """Angles confined to |beta| < 0.1 deg are not identifiable."""
        with pytest.raises(NonIdentifiableError):
            extract_angle_dependence(_angle_fits(np.linspace(-0.05, 0.05, 11)))

    def test_synthetic_study(self):
        """Scan per angle, Lorentzian fit, summary: defaults within 2 %."""
        preset = load_preset('W4').isolated()
        fits = []
        for beta in np.linspace(-0.2, 0.2, 33):
            config = ScanConfig(B_start=0.095, B_stop=0.110, n_points=1501, beta=float(beta))
            fits.append((float(beta), fit_lorentzian(synthesize_scan(preset, config))))
        summary = extract_angle_dependence(fits)
        assert summary.fwhm_min == pytest.approx(0.46e-3, rel=0.02)
        assert summary.contrast_dip_fwhm == pytest.approx(0.054, rel=0.02)
