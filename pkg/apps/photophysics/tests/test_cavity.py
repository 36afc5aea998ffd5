"""
Tests for cavity transmission, contrast saturation and thermal shift.
"""
import numpy as np
import pytest

from apps.photophysics.domain import CavitySpec, RateModel
from apps.photophysics.services import (
    cavity_transmission,
    contrast_saturation,
    observable_from_mixing,
    thermal_center_shift,
)
from core.exceptions import ValidationError


class TestCavityTransmission:
    """Two-mirror on-resonance transmission."""

    def test_lossless_symmetric_cavity_transmits_fully(self):
        """Impedance-matched and lossless: T = 1."""
        cavity = CavitySpec(R_back=0.98, R_front=0.98, passive_loss=0.0)
        assert cavity_transmission(cavity, 0.0) == pytest.approx(1.0)

    def test_matches_closed_form(self):
        """Default cavity at zero absorbance."""
        a = 0.995
        expected = 0.015 ** 2 * a / (1 - 0.985 * a) ** 2
        assert cavity_transmission(CavitySpec(), 0.0) == pytest.approx(expected, rel=1e-12)
        assert expected == pytest.approx(0.5639, abs=1e-4)

    def test_transmission_falls_with_absorbance(self):
        """Absorption in the diamond lowers the transmitted power."""
        values = cavity_transmission(CavitySpec(), np.linspace(0.0, 0.05, 6))
        assert np.all(np.diff(values) < 0)
        assert np.all((values >= 0) & (values <= 1))

    def test_negative_absorbance_rejected(self):
        """Absorbance must be non-negative."""
        with pytest.raises(ValidationError):
            cavity_transmission(CavitySpec(), -0.1)

    def test_invalid_mirror(self):
        """Reflectivity must lie strictly inside (0, 1)."""
        with pytest.raises(ValidationError):
            CavitySpec(R_back=1.0)

    def test_absorption_observable_dips_with_mixing(self):
        """Mixing raises singlet absorption, so transmission drops."""
        model, cavity = RateModel(), CavitySpec()
        unmixed = observable_from_mixing(model, 10.0, 0.0, 'absorption', cavity)
        mixed = observable_from_mixing(model, 10.0, 0.3, 'absorption', cavity)
        assert mixed < unmixed

    def test_absorption_needs_cavity(self):
        """Absorption readout without a cavity is a validation error."""
        with pytest.raises(ValidationError):
            observable_from_mixing(RateModel(), 10.0, 0.1, 'absorption')


class TestContrastSaturation:
    """C(P) = C_max P / (P + P_sat)."""

    def test_half_saturation(self):
        """C(P_sat) = C_max / 2."""
        assert contrast_saturation(0.6, 0.15, 0.6) == pytest.approx(0.075)

    def test_limits_and_monotonicity(self):
        """C(0) = 0, increasing, bounded by C_max."""
        powers = np.linspace(0.0, 100.0, 51)
        values = contrast_saturation(powers, 0.15, 0.6)
        assert values[0] == 0.0
        assert np.all(np.diff(values) > 0)
        assert np.all(values < 0.15)

    def test_invalid_arguments(self):
        """Negative power or non-positive P_sat are rejected."""
        with pytest.raises(ValidationError):
            contrast_saturation(-1.0, 0.15, 0.6)
        with pytest.raises(ValidationError):
            contrast_saturation(1.0, 0.15, 0.0)


class TestThermalShift:
    """Linear pump heating of the feature center."""

    def test_linear_shift(self):
        """Center moves by coefficient times pump."""
        assert thermal_center_shift(100.0, 1e-6, 0.1024) == pytest.approx(0.1025)
        assert thermal_center_shift(0.0, 1e-6, 0.1024) == 0.1024


class TestCavityLimits:
    """Opaque and impedance-matched limits."""

    def test_opaque_medium(self):
        """Absorbance of 20 blocks the cavity."""
        assert cavity_transmission(CavitySpec(), 20.0) < 1e-6

    def test_coated_face_matched_cavity(self):
        """98.5 % mirrors, no loss, no absorption: T = 1."""
        cavity = CavitySpec(R_back=0.985, R_front=0.985, passive_loss=0.0)
        assert cavity_transmission(cavity, 0.0) == pytest.approx(1.0, abs=1e-9)
