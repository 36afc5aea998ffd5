"""
Value types for the NV ground-state spin model.

Angles are degrees at every interface; conversion to radians happens inside
the accessors.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from core.exceptions import ValidationError

DEFAULT_ZERO_FIELD_SPLITTING_HZ = 2.87e9
DEFAULT_GYROMAGNETIC_RATIO_HZ_PER_T = 28.024e9


@dataclass(frozen=True)
class HyperfineParams:
    """14N hyperfine and quadrupole constants, Hz. No defaults on purpose."""

    A_parallel: float
    A_perpendicular: float
    quadrupole_P: float


@dataclass(frozen=True)
class SpinSystemParams:
    """
    NV ground-state Hamiltonian parameters.

    H/h = D*Sz^2 + (gamma/2pi)*B.S  [+ hyperfine/quadrupole when enabled]
    """

    D: float = DEFAULT_ZERO_FIELD_SPLITTING_HZ
    gamma_over_2pi: float = DEFAULT_GYROMAGNETIC_RATIO_HZ_PER_T
    hyperfine: Optional[HyperfineParams] = None

    def __post_init__(self):
        if not self.D > 0:
            raise ValidationError(f'Zero-field splitting must be positive, got {self.D}')
        if not self.gamma_over_2pi > 0:
            raise ValidationError(f'Gyromagnetic ratio must be positive, got {self.gamma_over_2pi}')

    @property
    def dimension(self):
        return 3 if self.hyperfine is None else 9

    @property
    def crossing_field(self):
        """Field magnitude where D = gamma*B for an aligned field, T."""
        return self.D / self.gamma_over_2pi

    @classmethod
    def from_settings(cls, hyperfine=None):
        """Defaults taken from Django settings (environment overridable)."""
        from django.conf import settings

        return cls(
            D=settings.GSLAC_ZERO_FIELD_SPLITTING_HZ,
            gamma_over_2pi=settings.GSLAC_GYROMAGNETIC_RATIO_HZ_PER_T,
            hyperfine=hyperfine,
        )


@dataclass(frozen=True)
class FieldVector:
    """Applied magnetic field in the NV frame (z along the NV axis)."""

    magnitude: float
    theta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if not self.magnitude >= 0:
            raise ValidationError(f'Field magnitude must be >= 0, got {self.magnitude}')
        if not 0.0 <= self.theta < 180.0:
            raise ValidationError(f'theta must lie in [0, 180) degrees, got {self.theta}')
        if not 0.0 <= self.phi < 360.0:
            raise ValidationError(f'phi must lie in [0, 360) degrees, got {self.phi}')

    @classmethod
    def aligned(cls, magnitude):
        return cls(magnitude=magnitude)

    @classmethod
    def from_components(cls, parallel, transverse, phi=0.0):
        """Build from parallel/transverse components (transverse >= 0)."""
        if transverse < 0:
            raise ValidationError(f'Transverse component must be >= 0, got {transverse}')
        magnitude = math.hypot(parallel, transverse)
        theta = math.degrees(math.atan2(transverse, parallel)) if magnitude > 0 else 0.0
        return cls(magnitude=magnitude, theta=theta, phi=phi % 360.0)

    @classmethod
    def from_experiment_angles(cls, magnitude, alpha=0.0, beta=0.0):
        """
        Field direction after a y-axis tilt beta followed by a z-axis rotation
        alpha of the magnet relative to the NV axis.

        A negative tilt is the same polar angle on the opposite azimuth.
        """
        theta = abs(beta)
        phi = alpha + (180.0 if beta < 0 else 0.0)
        return cls(magnitude=magnitude, theta=theta, phi=phi % 360.0)

    @property
    def parallel(self):
        return self.magnitude * math.cos(math.radians(self.theta))

    @property
    def transverse(self):
        return self.magnitude * math.sin(math.radians(self.theta))

    def cartesian(self):
        """(Bx, By, Bz) in tesla."""
        theta = math.radians(self.theta)
        phi = math.radians(self.phi)
        return (
            self.magnitude * math.sin(theta) * math.cos(phi),
            self.magnitude * math.sin(theta) * math.sin(phi),
            self.magnitude * math.cos(theta),
        )


@dataclass(frozen=True, eq=False)
class LevelSet:
    """Sorted eigenlevels (Hz) and eigenvectors (columns) of one Hamiltonian."""

    energies: np.ndarray
    states: np.ndarray
    field: Optional[FieldVector] = None
    spin_z: Optional[np.ndarray] = None

    @property
    def dimension(self):
        return len(self.energies)

    def gram_residual(self):
        gram = self.states.conj().T @ self.states
        return float(np.max(np.abs(gram - np.eye(self.dimension))))


@dataclass(frozen=True)
class GslacLocation:
    B_center: float
    min_gap: float
