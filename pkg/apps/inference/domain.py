"""
Parameter sets and results of the model fits.
"""
from dataclasses import asdict, dataclass, field

import numpy as np

from core.exceptions import ValidationError


@dataclass(frozen=True)
class LorentzianParams:
    """baseline + amplitude / (1 + (2 (B - center) / fwhm)^2); amplitude < 0 is a dip."""

    center: float
    fwhm: float
    amplitude: float
    baseline: float

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValidationError(f'fwhm must be positive, got {self.fwhm}')

    @classmethod
    def from_array(cls, values):
        return cls(*(float(v) for v in values))

    def as_array(self):
        return np.array([self.center, self.fwhm, self.amplitude, self.baseline])

    @property
    def contrast(self):
        """Fractional depth relative to the baseline, positive for dips."""
        return -self.amplitude / self.baseline


@dataclass(frozen=True)
class SaturationParams:
    C_max: float
    P_sat: float


@dataclass(frozen=True)
class FitResult:
    params: object
    stderr: dict
    residual_rms: float
    n_iterations: int
    converged: bool
    initial_rms: float = None
    model: str = 'lorentzian'
    flags: tuple = ()
    stop_reason: str = ''

    def __post_init__(self):
        if any(value < 0 for value in self.stderr.values()):
            raise ValidationError('Standard errors must be >= 0')

    def values(self):
        return asdict(self.params)


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    stderr_slope: float
    stderr_intercept: float
    residual_rms: float
    n_points: int

    @property
    def zero_crossing(self):
        """x where the line crosses zero."""
        if self.slope == 0:
            raise ValidationError('Flat line has no zero crossing')
        return -self.intercept / self.slope


@dataclass(frozen=True)
class AngleSummary:
    """Misalignment dependence of the GSLAC width (T) and contrast; angles in degrees."""

    fwhm_min: float
    contrast_dip_fwhm: float
    dip_depth: float
    linewidth_slope: float
    C_far: float
    beta_elbow: float
    stderr: dict = field(default_factory=dict)
    converged: bool = True
