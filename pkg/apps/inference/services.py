"""
Lorentzian, linear, saturation and misalignment fits.
"""
import logging

import numpy as np
from scipy import optimize

from apps.inference.domain import (
    AngleSummary,
    FitResult,
    LineFit,
    LorentzianParams,
    SaturationParams,
)
from apps.inference.optimizer import levenberg_marquardt
from core.exceptions import NoFeatureError, NonIdentifiableError, ValidationError

logger = logging.getLogger(__name__)

MIN_TRACE_POINTS = 8
MIN_SATURATION_POWERS = 3
MIN_ANGLES = 7
MIN_ANGLE_SPAN_DEG = 0.1
FLAT_RTOL = 1e-12

LORENTZIAN_FIELDS = ('center', 'fwhm', 'amplitude', 'baseline')


# Lorentzian
# -----------------------------------------------------------------------------

def lorentzian_model(x, p):
    center, fwhm, amplitude, baseline = p
    return baseline + amplitude / (1.0 + (2.0 * (x - center) / fwhm) ** 2)


def lorentzian_jacobian(x, p):
    center, fwhm, amplitude, _ = p
    u = 2.0 * (x - center) / fwhm
    shape = 1.0 / (1.0 + u * u)
    dshape_du = -2.0 * u * shape * shape
    return np.column_stack([
        amplitude * dshape_du * (-2.0 / fwhm),
        amplitude * dshape_du * (-u / fwhm),
        shape,
        np.ones_like(x),
    ])


def _half_crossing(B, signal, start, level, direction):
    """Interpolated position where signal crosses level walking from start."""
    deviation_sign = np.sign(signal[start] - level)
    i = start
    while 0 <= i + direction < len(B):
        j = i + direction
        if np.sign(signal[j] - level) != deviation_sign:
            fraction = (level - signal[i]) / (signal[j] - signal[i])
            return B[i] + fraction * (B[j] - B[i])
        i = j
    return None


def initial_lorentzian_guess(B, signal):
    """
    Extremum center, extremum - median amplitude, median baseline and width
    from the interpolated half-extremum crossings.

    Raises:
        NoFeatureError: The trace is flat
    """
    B = np.asarray(B, dtype=float)
    signal = np.asarray(signal, dtype=float)
    baseline = float(np.median(signal))
    idx = int(np.argmax(np.abs(signal - baseline)))
    amplitude = float(signal[idx] - baseline)
    if abs(amplitude) <= FLAT_RTOL * max(1.0, abs(baseline)):
        raise NoFeatureError('Trace is flat, no feature to fit')

    half = baseline + amplitude / 2.0
    left = _half_crossing(B, signal, idx, half, -1)
    right = _half_crossing(B, signal, idx, half, +1)
    if left is not None and right is not None:
        fwhm = right - left
    elif left is not None:
        fwhm = 2.0 * (B[idx] - left)
    elif right is not None:
        fwhm = 2.0 * (right - B[idx])
    else:
        fwhm = (B[-1] - B[0]) / 4.0
    if not fwhm > 0:
        fwhm = 2.0 * float(np.min(np.diff(B)))
    return LorentzianParams(center=float(B[idx]), fwhm=float(fwhm), amplitude=amplitude, baseline=baseline)


def fit_lorentzian(trace, guess=None):
    """
    Fit a single Lorentzian with baseline to a trace.

    Args:
        trace: ScanTrace (or any object with B_values and signal)
        guess: Optional LorentzianParams; auto-initialized when absent

    Returns:
        FitResult: LorentzianParams, per-parameter stderr, convergence info

    Raises:
        NoFeatureError: Flat trace
    """
    B = np.asarray(trace.B_values, dtype=float)
    signal = np.asarray(trace.signal, dtype=float)
    if len(B) < MIN_TRACE_POINTS:
        raise ValidationError(f'Need at least {MIN_TRACE_POINTS} points, got {len(B)}')
    if guess is None:
        guess = initial_lorentzian_guess(B, signal)

    solution = levenberg_marquardt(lorentzian_model, B, signal, guess.as_array(), jacobian=lorentzian_jacobian)
    values = solution.params.copy()
    values[1] = abs(values[1])
    params = LorentzianParams.from_array(values)

    if B[-1] - B[0] < 3.0 * params.fwhm:
        logger.warning("Trace spans less than 3 FWHM of the fitted feature")
    return _result(solution, params, LORENTZIAN_FIELDS, 'lorentzian')


def _result(solution, params, names, model, flags=()):
    n = solution.n_points
    return FitResult(
        params=params,
        stderr=dict(zip(names, (float(s) for s in solution.stderr()))),
        residual_rms=float(np.sqrt(solution.sse / n)),
        n_iterations=solution.n_iterations,
        converged=solution.converged,
        initial_rms=float(np.sqrt(solution.initial_sse / n)),
        model=model,
        flags=tuple(flags) + (() if solution.converged else ('not-converged',)),
        stop_reason=solution.stop_reason,
    )


def contrast_from_fit(result):
    return result.params.contrast


# Straight line
# -----------------------------------------------------------------------------

def fit_line(x, y):
    """
    Ordinary least squares y = slope * x + intercept.

    Raises:
        ValidationError: Fewer than two distinct x values
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValidationError('x and y must have equal length')
    if len(np.unique(x)) < 2:
        raise ValidationError('Need at least two distinct x values')

    n = len(x)
    x_mean = x.mean()
    y_mean = y.mean()
    dx = x - x_mean
    sxx = float(dx @ dx)
    slope = float(dx @ (y - y_mean)) / sxx
    intercept = float(y_mean - slope * x_mean)

    residuals = y - (slope * x + intercept)
    sse = float(residuals @ residuals)
    variance = sse / (n - 2) if n > 2 else 0.0
    return LineFit(
        slope=slope,
        intercept=intercept,
        stderr_slope=float(np.sqrt(variance / sxx)),
        stderr_intercept=float(np.sqrt(variance * (1.0 / n + x_mean ** 2 / sxx))),
        residual_rms=float(np.sqrt(sse / n)),
        n_points=n,
    )


# Saturation
# -----------------------------------------------------------------------------

def saturation_model(P, p):
    C_max, P_sat = p
    return C_max * P / (P + P_sat)


def saturation_jacobian(P, p):
    C_max, P_sat = p
    denominator = P + P_sat
    return np.column_stack([P / denominator, -C_max * P / denominator ** 2])


def fit_saturation(powers, contrasts):
    """
    Fit C_max * P / (P + P_sat) to contrast-versus-pump data (mW).

    Initialized from the linearization 1/C = 1/C_max + (P_sat/C_max)(1/P).
    The result is flagged 'non-identifiable' when no power exceeds the
    fitted P_sat.

    Raises:
        NonIdentifiableError: Fewer than three distinct powers
    """
    P = np.asarray(powers, dtype=float)
    C = np.asarray(contrasts, dtype=float)
    if P.shape != C.shape:
        raise ValidationError('powers and contrasts must have equal length')
    if len(np.unique(P)) < MIN_SATURATION_POWERS:
        raise NonIdentifiableError(f'Need at least {MIN_SATURATION_POWERS} distinct powers')

    usable = (P > 0) & (C > 0)
    C_max0, P_sat0 = 2.0 * float(np.max(C)), float(np.median(P))
    if np.count_nonzero(usable) >= 2 and len(np.unique(P[usable])) >= 2:
        line = fit_line(1.0 / P[usable], 1.0 / C[usable])
        if line.intercept > 0 and line.slope > 0:
            C_max0 = 1.0 / line.intercept
            P_sat0 = line.slope * C_max0

    solution = levenberg_marquardt(saturation_model, P, C, [C_max0, P_sat0], jacobian=saturation_jacobian)
    params = SaturationParams(C_max=float(solution.params[0]), P_sat=float(solution.params[1]))

    flags = ()
    if not np.max(P) > params.P_sat:
        flags = ('non-identifiable',)
        logger.warning(
            "Saturation fit not identifiable: max power %.3g mW below P_sat %.3g mW",
            np.max(P), params.P_sat,
        )
    return _result(solution, params, ('C_max', 'P_sat'), 'saturation', flags)


# Misalignment dependence
# -----------------------------------------------------------------------------

def _hinge_fit(abs_beta, fwhm, elbow):
    """OLS of fwhm = m + s * max(0, |beta| - elbow); returns (m, s, sse)."""
    x = np.maximum(0.0, abs_beta - elbow)
    if np.ptp(x) == 0:
        m = float(np.mean(fwhm))
        residual = fwhm - m
        return m, 0.0, float(residual @ residual)
    line = fit_line(x, fwhm)
    return line.intercept, line.slope, line.residual_rms ** 2 * len(x)


def _fit_linewidth(abs_beta, fwhm):
    """Profile least squares over the elbow position."""
    upper = 0.9 * float(np.max(abs_beta))
    grid = np.linspace(0.0, upper, 181)
    sse = [_hinge_fit(abs_beta, fwhm, e)[2] for e in grid]
    k = int(np.argmin(sse))
    low, high = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    result = optimize.minimize_scalar(
        lambda e: _hinge_fit(abs_beta, fwhm, e)[2],
        bounds=(low, high), method='bounded', options={'xatol': 1e-12},
    )
    elbow = float(result.x) if result.fun <= sse[k] else float(grid[k])
    m, s, _ = _hinge_fit(abs_beta, fwhm, elbow)
    return m, s, elbow


def contrast_dip_model(beta, p):
    C_far, depth, width = p
    return C_far * (1.0 - depth / (1.0 + (2.0 * beta / width) ** 2))


def contrast_dip_jacobian(beta, p):
    C_far, depth, width = p
    u = 2.0 * beta / width
    shape = 1.0 / (1.0 + u * u)
    return np.column_stack([
        1.0 - depth * shape,
        -C_far * shape,
        -C_far * depth * 2.0 * u * u * shape * shape / width,
    ])


def _contrast_guess(abs_beta, contrast):
    far = abs_beta >= 0.5 * np.max(abs_beta)
    C_far = float(np.mean(contrast[far]))
    depth = float(np.clip(1.0 - np.min(contrast) / C_far, 1e-3, 0.999))
    half = C_far * (1.0 - depth / 2.0)
    order = np.argsort(abs_beta)
    b, c = abs_beta[order], contrast[order]
    width = 0.1 * float(np.max(abs_beta))
    above = np.nonzero(c >= half)[0]
    if len(above) and above[0] > 0:
        j = above[0]
        fraction = (half - c[j - 1]) / (c[j] - c[j - 1])
        width = 2.0 * float(b[j - 1] + fraction * (b[j] - b[j - 1]))
    return [C_far, depth, max(width, 1e-6)]


def extract_angle_dependence(fits):
    """
    Summarize per-angle Lorentzian fits with the misalignment model.

    The width is fitted with the flat-core hinge by profile least squares
    over the elbow; the contrast with C_far (1 - depth * L(beta; width)).

    Args:
        fits: Iterable of (beta_deg, FitResult)

    Returns:
        AngleSummary

    Raises:
        NonIdentifiableError: Fewer than seven angles or |beta| below 0.1 deg
    """
    fits = list(fits)
    beta = np.array([float(b) for b, _ in fits])
    if len(np.unique(beta)) < MIN_ANGLES:
        raise NonIdentifiableError(f'Need at least {MIN_ANGLES} distinct angles')
    abs_beta = np.abs(beta)
    if np.max(abs_beta) < MIN_ANGLE_SPAN_DEG:
        raise NonIdentifiableError(f'Angles must reach |beta| >= {MIN_ANGLE_SPAN_DEG} deg')

    fwhm = np.array([result.params.fwhm for _, result in fits])
    contrast = np.array([contrast_from_fit(result) for _, result in fits])

    fwhm_min, slope, elbow = _fit_linewidth(abs_beta, fwhm)
    solution = levenberg_marquardt(
        contrast_dip_model, abs_beta, contrast, _contrast_guess(abs_beta, contrast),
        jacobian=contrast_dip_jacobian,
    )
    C_far, depth, width = solution.params
    errors = solution.stderr()

    logger.debug(
        "Angle summary: fwhm_min %.4g T, slope %.4g T/deg, elbow %.4g deg, dip width %.4g deg",
        fwhm_min, slope, elbow, abs(width),
    )
    return AngleSummary(
        fwhm_min=float(fwhm_min),
        contrast_dip_fwhm=float(abs(width)),
        dip_depth=float(depth),
        linewidth_slope=float(slope),
        C_far=float(C_far),
        beta_elbow=float(elbow),
        stderr={'C_far': float(errors[0]), 'dip_depth': float(errors[1]), 'contrast_dip_fwhm': float(errors[2])},
        converged=solution.converged,
    )


# Reports
# -----------------------------------------------------------------------------

def fit_report_lines(result):
    """key = value lines for a FitResult."""
    lines = [f'model = {result.model}']
    for name, value in result.values().items():
        lines.append(f'{name} = {value!r}')
        lines.append(f'stderr_{name} = {result.stderr.get(name, 0.0)!r}')
    if result.model == 'lorentzian':
        lines.append(f'contrast = {contrast_from_fit(result)!r}')
    lines.append(f'residual_rms = {result.residual_rms!r}')
    lines.append(f'n_iterations = {result.n_iterations}')
    lines.append(f'converged = {str(result.converged).lower()}')
    lines.append(f'stop_reason = {result.stop_reason}')
    lines.append(f'flags = {",".join(result.flags)}')
    return lines


def fit_summary_row(result):
    """(columns, row) for a CSV summary of one fit."""
    columns, row = [], []
    for name, value in result.values().items():
        columns += [name, f'stderr_{name}']
        row += [value, result.stderr.get(name, 0.0)]
    columns += ['residual_rms', 'n_iterations', 'converged']
    row += [result.residual_rms, result.n_iterations, result.converged]
    return columns, row
