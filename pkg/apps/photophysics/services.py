"""
Steady-state optical pumping, PL, singlet absorption and cavity transmission.
"""
import logging

import numpy as np

from apps.photophysics.domain import Populations
from core.exceptions import SingularRateModelError, ValidationError

logger = logging.getLogger(__name__)

# Population vector ordering
G0, G1, E0, E1, S = range(5)

MAX_CONDITION = 1e14


def rate_matrix(model, pump_mW, mixing):
    """
    Generator M of dp/dt = M p for the five-level model.

    Mixing routes a fraction of each pumping branch into the other spin
    manifold's excited state.
    """
    k = model.pump_rate_per_mW * pump_mW
    w = model.spin_relaxation_rate / 3.0
    transitions = [
        (G0, E0, k * (1.0 - mixing)),
        (G0, E1, k * mixing),
        (G1, E1, k * (1.0 - mixing)),
        (G1, E0, k * mixing),
        (E0, G0, model.radiative_rate),
        (E1, G1, model.radiative_rate),
        (E0, S, model.isc_rate_ms0),
        (E1, S, model.isc_rate_ms1),
        (S, G0, model.singlet_decay_rate),
        # thermal equilibrium m_s=0 : m_s=+-1 = 1 : 2
        (G0, G1, 2.0 * w),
        (G1, G0, w),
    ]
    M = np.zeros((5, 5))
    for source, target, rate in transitions:
        M[target, source] += rate
        M[source, source] -= rate
    return M


def steady_state(model, pump_mW, mixing):
    """
    Solve the steady-state balance equations.

    Args:
        model: RateModel
        pump_mW: Green pump power, mW (>= 0)
        mixing: Spin-mixing fraction in [0, 1]

    Returns:
        Populations: normalized, non-negative

    Raises:
        SingularRateModelError: If the steady state is not unique
    """
    if pump_mW < 0:
        raise ValidationError('Pump power must be >= 0')
    if not 0.0 <= mixing <= 1.0:
        raise ValidationError(f'Mixing must lie in [0, 1], got {mixing}')
    decay = (
        model.radiative_rate, model.isc_rate_ms0, model.isc_rate_ms1,
        model.singlet_decay_rate, model.spin_relaxation_rate,
    )
    if not any(decay):
        raise SingularRateModelError('All decay rates are zero')

    A = rate_matrix(model, pump_mW, mixing)
    A[G0, :] = 1.0
    b = np.zeros(5)
    b[G0] = 1.0

    if not np.linalg.cond(A) < MAX_CONDITION:
        raise SingularRateModelError('Rate equations have no unique steady state')
    try:
        p = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularRateModelError(str(exc)) from exc

    p = np.clip(p, 0.0, None)
    return Populations.from_array(p / p.sum())


def pl_rate(pop, model):
    """Photon emission rate radiative_rate * excited population (unnormalized)."""
    return model.radiative_rate * (pop.excited_ms0 + pop.excited_ms1)


def relative_pl(model, pump_mW, mixing):
    """PL at the given mixing normalized to the unmixed PL at the same pump."""
    reference = pl_rate(steady_state(model, pump_mW, 0.0), model)
    if reference == 0:
        return 1.0
    return pl_rate(steady_state(model, pump_mW, mixing), model) / reference


def singlet_absorbance(pop, model):
    """Single-pass 1042 nm absorbance from the singlet population."""
    return model.absorption_scale * pop.singlet


def cavity_transmission(cavity, absorbance):
    """
    On-resonance two-mirror transmission with an intracavity absorber.

    T = T1*T2*a / (1 - r1*r2*a)^2 with r = sqrt(R), T = 1 - R and
    a = (1 - passive_loss) * exp(-absorbance). Accepts scalars or arrays.
    """
    absorbance = np.asarray(absorbance, dtype=float)
    if np.any(absorbance < 0):
        raise ValidationError('Absorbance must be >= 0')
    r1 = np.sqrt(cavity.R_back)
    r2 = np.sqrt(cavity.R_front)
    a = (1.0 - cavity.passive_loss) * np.exp(-absorbance)
    transmission = (1.0 - cavity.R_back) * (1.0 - cavity.R_front) * a / (1.0 - r1 * r2 * a) ** 2
    transmission = np.clip(transmission, 0.0, 1.0)
    return float(transmission) if transmission.ndim == 0 else transmission


def observable_from_mixing(model, pump_mW, mixing, detection='PL', cavity=None):
    """
    Detected signal for one spin-mixing value.

    Returns PL (relative to the unmixed value) for detection 'PL', otherwise
    the on-resonance cavity transmission.
    """
    if detection == 'PL':
        return relative_pl(model, pump_mW, mixing)
    if cavity is None:
        raise ValidationError('Absorption detection needs a CavitySpec')
    pop = steady_state(model, pump_mW, mixing)
    return cavity_transmission(cavity, singlet_absorbance(pop, model))


def contrast_saturation(pump_mW, C_max, P_sat):
    """Saturating contrast C_max * P / (P + P_sat)."""
    pump_mW = np.asarray(pump_mW, dtype=float)
    if np.any(pump_mW < 0):
        raise ValidationError('Pump power must be >= 0')
    if not P_sat > 0:
        raise ValidationError('P_sat must be positive')
    contrast = C_max * pump_mW / (pump_mW + P_sat)
    return float(contrast) if contrast.ndim == 0 else contrast


def thermal_center_shift(pump_mW, shift_coeff, B0):
    """Linear pump-heating shift of a feature center, T."""
    return B0 + shift_coeff * pump_mW
