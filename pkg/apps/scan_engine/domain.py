"""
Value types for sample presets, scan configuration and synthesized traces.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from core.exceptions import ValidationError

FEATURE_LABELS = ('GSLAC', 'P1-cross-relaxation', 'off-axis-NV', 'ESLAC-candidate')
POLARITIES = ('dip', 'peak')
GROWTH_TYPES = ('CVD', 'HPHT')
DETECTION_MODES = ('PL', 'absorption')

NORMALIZATION_FIELD_T = 0.08


@dataclass(frozen=True)
class Feature:
    """
    Lorentzian field-dependent feature.

    polarity is the physical sense of the change: 'dip' in PL or 'peak'
    (increase) in absorption.
    """

    center: float
    fwhm: float
    contrast: float
    polarity: str = 'dip'
    label: str = 'GSLAC'

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValidationError(f'Feature fwhm must be positive, got {self.fwhm}')
        if not 0.0 < self.contrast < 1.0:
            raise ValidationError(f'Feature contrast must lie in (0, 1), got {self.contrast}')
        if self.polarity not in POLARITIES:
            raise ValidationError(f'Unknown polarity {self.polarity!r}')
        if self.label not in FEATURE_LABELS:
            raise ValidationError(f'Unknown feature label {self.label!r}')


@dataclass(frozen=True)
class AngleModelParams:
    """
    Misalignment dependence of the GSLAC lineshape.

    Widths are in T, angles in degrees.
    """

    fwhm_min: float = 0.46e-3
    linewidth_slope: float = 6.0e-3
    C_far: float = 0.015
    dip_depth: float = 0.35
    beta_width: float = 0.054
    beta_elbow: float = 0.01

    def __post_init__(self):
        for name in ('fwhm_min', 'linewidth_slope', 'C_far', 'beta_width'):
            if not getattr(self, name) > 0:
                raise ValidationError(f'{name} must be positive')
        if not 0.0 < self.dip_depth < 1.0:
            raise ValidationError('dip_depth must lie in (0, 1)')
        if self.beta_elbow < 0:
            raise ValidationError('beta_elbow must be >= 0')
        if not self.C_far < 1.0:
            raise ValidationError('C_far must be below 1')


@dataclass(frozen=True)
class SaturationModel:
    """Pump-power dependence of the GSLAC contrast and center."""

    C_max: float = 0.15
    P_sat_mW: float = 250.0
    shift_coeff_T_per_mW: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.C_max < 1.0:
            raise ValidationError('C_max must lie in (0, 1)')
        if not self.P_sat_mW > 0:
            raise ValidationError('P_sat_mW must be positive')


@dataclass(frozen=True)
class SamplePreset:
    name: str
    growth_type: str
    surface_cut: str
    nitrogen_ppm: float
    irradiation_dose_cm2: float
    irradiation_energy_MeV: float
    annealing_note: str
    detection_mode: str
    features: tuple = ()
    background_k: float = 0.0
    background_B: float = 0.02
    angle_model: AngleModelParams = None
    saturation: SaturationModel = None

    def __post_init__(self):
        if not self.nitrogen_ppm > 0:
            raise ValidationError('nitrogen_ppm must be positive')
        if self.growth_type not in GROWTH_TYPES:
            raise ValidationError(f'Unknown growth type {self.growth_type!r}')
        if self.detection_mode not in DETECTION_MODES:
            raise ValidationError(f'Unknown detection mode {self.detection_mode!r}')
        if not 0.0 <= self.background_k < 1.0:
            raise ValidationError('background_k must lie in [0, 1)')
        if not self.background_B > 0:
            raise ValidationError('background_B must be positive')
        object.__setattr__(self, 'features', tuple(self.features))
        centers = [f.center for f in self.features]
        if len(set(centers)) != len(centers):
            raise ValidationError(f'Preset {self.name} has duplicate feature centers')

    def feature(self, label):
        for candidate in self.features:
            if candidate.label == label:
                return candidate
        return None

    @property
    def gslac(self):
        return self.feature('GSLAC')

    def isolated(self, label='GSLAC'):
        """Copy with only the labelled feature and a flat background."""
        selected = self.feature(label)
        if selected is None:
            raise ValidationError(f'Preset {self.name} has no {label} feature')
        return replace(self, features=(selected,), background_k=0.0)

    def with_detection(self, detection_mode):
        return replace(self, detection_mode=detection_mode)


@dataclass(frozen=True)
class ScanConfig:
    """Field sweep, averaging and orientation. Angles in degrees."""

    B_start: float = 0.0
    B_stop: float = 0.11
    n_points: int = 2201
    scan_duration_s: float = 10.0
    n_averages: int = 64
    alpha: float = 0.0
    beta: float = 0.0
    pump_mW: float = None
    photon_rate: float = None
    seed: int = 0

    def __post_init__(self):
        if not self.B_stop > self.B_start:
            raise ValidationError('B_stop must exceed B_start')
        if self.B_start < 0:
            raise ValidationError('B_start must be >= 0')
        if self.n_points < 2:
            raise ValidationError('n_points must be >= 2')
        if not self.scan_duration_s > 0:
            raise ValidationError('scan_duration_s must be positive')
        if self.n_averages < 1:
            raise ValidationError('n_averages must be >= 1')
        if self.pump_mW is not None and self.pump_mW < 0:
            raise ValidationError('pump_mW must be >= 0')
        if self.photon_rate is not None and not self.photon_rate > 0:
            raise ValidationError('photon_rate must be positive')

    @property
    def dwell_time(self):
        """Time per point in a single sweep, s."""
        return self.scan_duration_s / self.n_points

    def B_values(self):
        return np.linspace(self.B_start, self.B_stop, self.n_points)


@dataclass(eq=False)
class ScanTrace:
    B_values: np.ndarray
    signal: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.B_values = np.asarray(self.B_values, dtype=float)
        self.signal = np.asarray(self.signal, dtype=float)
        if self.B_values.shape != self.signal.shape or self.B_values.ndim != 1:
            raise ValidationError('B_values and signal must be 1-d arrays of equal length')
        if len(self.B_values) > 1 and not np.all(np.diff(self.B_values) > 0):
            raise ValidationError('B_values must be strictly increasing')

    def __len__(self):
        return len(self.B_values)

    def window(self, low, high):
        """Sub-trace with low <= B <= high."""
        mask = (self.B_values >= low) & (self.B_values <= high)
        return ScanTrace(self.B_values[mask], self.signal[mask], dict(self.metadata))
