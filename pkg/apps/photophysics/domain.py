"""
Value types for the optical-pumping rate model and the readout cavity.

Default rates are order-of-magnitude placeholders, not a physical
calibration; tests rely on ratios and monotonicity only.
"""
from dataclasses import dataclass

import numpy as np

from core.exceptions import ValidationError

POPULATION_FIELDS = ('ground_ms0', 'ground_ms1', 'excited_ms0', 'excited_ms1', 'singlet')


@dataclass(frozen=True)
class RateModel:
    """Five-level NV rate model (two ground, two excited, one singlet), s^-1."""

    pump_rate_per_mW: float = 2.0e4
    radiative_rate: float = 6.5e7
    isc_rate_ms0: float = 1.1e7
    isc_rate_ms1: float = 8.0e7
    singlet_decay_rate: float = 3.3e6
    spin_relaxation_rate: float = 200.0
    absorption_scale: float = 0.02

    def __post_init__(self):
        for name in (
            'pump_rate_per_mW', 'radiative_rate', 'isc_rate_ms0', 'isc_rate_ms1',
            'singlet_decay_rate', 'spin_relaxation_rate', 'absorption_scale',
        ):
            if getattr(self, name) < 0:
                raise ValidationError(f'{name} must be >= 0')
        if self.isc_rate_ms1 < self.isc_rate_ms0:
            raise ValidationError('isc_rate_ms1 must not be below isc_rate_ms0')


@dataclass(frozen=True)
class Populations:
    ground_ms0: float
    ground_ms1: float
    excited_ms0: float
    excited_ms1: float
    singlet: float

    def __post_init__(self):
        values = self.as_array()
        if np.any(values < 0) or np.any(values > 1):
            raise ValidationError(f'Populations must lie in [0, 1]: {values}')
        if abs(values.sum() - 1.0) > 1e-9:
            raise ValidationError(f'Populations must sum to 1, got {values.sum()}')

    @classmethod
    def from_array(cls, values):
        return cls(*(float(v) for v in values))

    def as_array(self):
        return np.array([getattr(self, name) for name in POPULATION_FIELDS])

    @property
    def excited(self):
        return self.excited_ms0 + self.excited_ms1


@dataclass(frozen=True)
class CavitySpec:
    """Two-mirror cavity: coated diamond face and spherical mirror."""

    R_back: float = 0.985
    R_front: float = 0.985
    passive_loss: float = 0.005

    def __post_init__(self):
        for name in ('R_back', 'R_front'):
            value = getattr(self, name)
            if not 0.0 < value < 1.0:
                raise ValidationError(f'{name} must lie in (0, 1), got {value}')
        if not 0.0 <= self.passive_loss < 1.0:
            raise ValidationError(f'passive_loss must lie in [0, 1), got {self.passive_loss}')
