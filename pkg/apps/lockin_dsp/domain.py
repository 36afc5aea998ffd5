"""
Value types for field modulation, demodulation, spectra and sensitivity.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from core.exceptions import ValidationError


@dataclass(frozen=True)
class ModulationParams:
    """Field modulation and lock-in settings; sample_rate_Hz defaults to 20 x frequency."""

    amplitude_T: float = 1e-5
    frequency_Hz: float = 15000.0
    time_constant_s: float = 3e-3
    sample_rate_Hz: float = None
    filter_order: int = 1

    def __post_init__(self):
        if self.sample_rate_Hz is None:
            object.__setattr__(self, 'sample_rate_Hz', 20.0 * self.frequency_Hz)
        if not self.amplitude_T > 0:
            raise ValidationError('Modulation amplitude must be positive')
        if not self.frequency_Hz > 0:
            raise ValidationError('Modulation frequency must be positive')
        if not self.frequency_Hz < self.sample_rate_Hz / 2:
            raise ValidationError(
                f'Modulation at {self.frequency_Hz} Hz aliases at sample rate {self.sample_rate_Hz} Hz'
            )
        if not self.time_constant_s > 1.0 / self.frequency_Hz:
            raise ValidationError('Time constant must exceed one modulation period')
        if int(self.filter_order) != self.filter_order or self.filter_order < 1:
            raise ValidationError('filter_order must be a positive integer')


@dataclass(eq=False)
class TimeSeries:
    sample_rate_Hz: float
    values: np.ndarray
    t0: float = 0.0
    units: str = 'fraction'
    calibration_slope: float = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not self.sample_rate_Hz > 0:
            raise ValidationError('sample_rate_Hz must be positive')
        if not np.all(np.isfinite(self.values)):
            raise ValidationError('Time series contains non-finite values')

    def __len__(self):
        return len(self.values)

    @property
    def duration(self):
        return len(self.values) / self.sample_rate_Hz

    def times(self):
        return self.t0 + np.arange(len(self.values)) / self.sample_rate_Hz


@dataclass(eq=False)
class DemodOutput:
    """In-phase (X) and quadrature (Y) outputs at the decimated rate."""

    X: np.ndarray
    Y: np.ndarray
    sample_rate_Hz: float
    time_constant_s: float
    t0: float = 0.0

    def times(self):
        return self.t0 + np.arange(len(self.X)) / self.sample_rate_Hz

    @property
    def R(self):
        return np.hypot(self.X, self.Y)

    def settled(self, n_time_constants=10):
        """Mean (X, Y) after n time constants."""
        mask = self.times() - self.t0 >= n_time_constants * self.time_constant_s
        if not np.any(mask):
            raise ValidationError(f'Record shorter than {n_time_constants} time constants')
        return float(np.mean(self.X[mask])), float(np.mean(self.Y[mask]))

    def trimmed(self, n_time_constants=10):
        """Copy without the initial filter transient."""
        start = int(math.ceil(n_time_constants * self.time_constant_s * self.sample_rate_Hz))
        return DemodOutput(
            X=self.X[start:], Y=self.Y[start:], sample_rate_Hz=self.sample_rate_Hz,
            time_constant_s=self.time_constant_s, t0=self.t0 + start / self.sample_rate_Hz,
        )


@dataclass(frozen=True)
class CalibrationResult:
    slope: float
    center_T: float
    residual_fraction: float
    linear: bool
    n_points: int


@dataclass(eq=False)
class NoiseSpectrum:
    frequencies_Hz: np.ndarray
    asd: np.ndarray
    window: str = 'hann'
    n_averages: int = 1
    segment_length: int = 0
    units: str = 'T/sqrt(Hz)'

    def __post_init__(self):
        self.frequencies_Hz = np.asarray(self.frequencies_Hz, dtype=float)
        self.asd = np.asarray(self.asd, dtype=float)
        if self.frequencies_Hz.shape != self.asd.shape:
            raise ValidationError('frequencies and asd must have equal length')
        if np.any(np.diff(self.frequencies_Hz) <= 0):
            raise ValidationError('Frequencies must be ascending')
        if np.any(self.asd < 0):
            raise ValidationError('ASD must be >= 0')


@dataclass(frozen=True)
class SensitivityReport:
    """
    Photon-shot-noise-limited sensitivity.

    delta_B = prefactor * fwhm_T / (contrast * sqrt(photon_rate)), T/sqrt(Hz).
    """

    delta_B: float
    fwhm_T: float
    contrast: float
    photon_rate: float
    prefactor: float = 1.0
    notes: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.delta_B > 0:
            raise ValidationError('delta_B must be positive')
        expected = self.prefactor * self.fwhm_T / (self.contrast * math.sqrt(self.photon_rate))
        if abs(expected - self.delta_B) > 1e-12 * expected:
            raise ValidationError('delta_B is inconsistent with the report inputs')

    def implied_prefactor(self, delta_B):
        """Prefactor that would turn these inputs into delta_B."""
        return delta_B * self.prefactor / self.delta_B


@dataclass(frozen=True)
class MagnetometerScenario:
    """End-to-end lock-in magnetometer run around one Lorentzian feature."""

    center_T: float = 0.1024
    fwhm_T: float = 0.84e-3
    contrast: float = 0.15
    modulation: ModulationParams = field(default_factory=ModulationParams)
    sweep_half_width_T: float = 0.2e-3
    sweep_points: int = 41
    acquisition_s: float = 1.0
    field_noise_asd_T: float = 0.45e-9
    noise_bandwidth_Hz: float = 2000.0
    electronic_floor_T: float = 70e-12
    line_frequency_Hz: float = 50.0
    line_amplitude_T: float = 0.0
    line_harmonics: int = 3
    insensitive_bias_T: float = 0.08
    band_Hz: tuple = (1.0, 100.0)
    collected_power_W: float = 4.2e-3
    wavelength_m: float = 1042e-9
    reference_delta_B: float = 12.2e-12
    seed: int = 0

    def __post_init__(self):
        if not self.fwhm_T > 0 or not 0.0 < self.contrast <= 1.0:
            raise ValidationError('Feature needs fwhm_T > 0 and contrast in (0, 1]')
        if self.sweep_points < 5:
            raise ValidationError('sweep_points must be >= 5')
        if not self.acquisition_s > 0:
            raise ValidationError('acquisition_s must be positive')
        if self.field_noise_asd_T < 0 or self.electronic_floor_T < 0:
            raise ValidationError('Noise levels must be >= 0')
        if self.noise_bandwidth_Hz is not None and not 0 < self.noise_bandwidth_Hz < self.modulation.frequency_Hz:
            raise ValidationError('noise_bandwidth_Hz must lie below the modulation frequency')


@dataclass(eq=False)
class MagnetometerResult:
    sweep_B: np.ndarray
    sweep_X: np.ndarray
    calibration: CalibrationResult
    oracle_slope: float
    series: TimeSeries
    spectrum: NoiseSpectrum
    insensitive_spectrum: NoiseSpectrum
    band_average: float
    insensitive_band_average: float
    report: SensitivityReport
