"""
Lock-in magnetometry chain: modulation, demodulation, calibration, spectra, sensitivity.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import constants, signal

from apps.inference.services import fit_line
from apps.lockin_dsp.domain import (
    CalibrationResult,
    DemodOutput,
    MagnetometerResult,
    NoiseSpectrum,
    SensitivityReport,
    TimeSeries,
)
from apps.scan_engine.services import lorentzian
from core.csvio import read_csv, write_csv
from core.exceptions import DataFileError, ValidationError

logger = logging.getLogger(__name__)

SETTLE_TIME_CONSTANTS = 10
OUTPUT_SAMPLES_PER_TIME_CONSTANT = 8
MIN_DEFAULT_AVERAGES = 8
MIN_CALIBRATION_POINTS = 5
LINEARITY_TOLERANCE = 0.05
TIME_SERIES_COLUMNS = ('t_s', 'value')
SPECTRUM_COLUMNS = ('f_Hz', 'asd_T_per_sqrtHz')


# Modulation
# -----------------------------------------------------------------------------

def white_noise(rng, asd, sample_rate_Hz, n, bandwidth_Hz=None):
    """
    Gaussian noise with one-sided amplitude spectral density `asd`.

    With bandwidth_Hz the spectrum is cut to zero above that frequency.
    """
    noise = rng.standard_normal(n) * asd * math.sqrt(sample_rate_Hz / 2.0)
    if bandwidth_Hz is not None:
        spectrum = np.fft.rfft(noise)
        spectrum[np.fft.rfftfreq(n, 1.0 / sample_rate_Hz) > bandwidth_Hz] = 0.0
        noise = np.fft.irfft(spectrum, n)
    return noise


def modulate_and_sample(signal_fn, B_bias, mod, duration_s, noise_asd_T=None, seed=0,
                        noise_bandwidth_Hz=None, line_tones=(), electronic_asd=None):
    """
    Sample signal_fn(B_bias + amplitude sin(2 pi f t) + noise(t)).

    Args:
        signal_fn: Vectorized callable from field (T) to signal
        noise_asd_T: White field noise, T/sqrt(Hz)
        noise_bandwidth_Hz: Optional brick-wall limit of the field noise
        line_tones: (frequency_Hz, amplitude_T) pairs added to the field
        electronic_asd: White detector noise added to the signal, units/sqrt(Hz)

    Returns:
        TimeSeries: Samples at mod.sample_rate_Hz
    """
    if duration_s < SETTLE_TIME_CONSTANTS * mod.time_constant_s:
        raise ValidationError(
            f'duration {duration_s} s is shorter than {SETTLE_TIME_CONSTANTS} time constants'
        )
    fs = mod.sample_rate_Hz
    n = int(round(duration_s * fs))
    t = np.arange(n) / fs
    rng = np.random.default_rng(seed)

    field = B_bias + mod.amplitude_T * np.sin(2 * np.pi * mod.frequency_Hz * t)
    if noise_asd_T:
        field = field + white_noise(rng, noise_asd_T, fs, n, noise_bandwidth_Hz)
    for frequency, amplitude in line_tones:
        field = field + amplitude * np.sin(2 * np.pi * frequency * t)

    values = np.asarray(signal_fn(field), dtype=float)
    if values.shape != field.shape:
        values = np.broadcast_to(values, field.shape).copy()
    if electronic_asd:
        values = values + white_noise(rng, electronic_asd, fs, n)
    return TimeSeries(sample_rate_Hz=fs, values=values)


def mains_tones(frequency_Hz, amplitude_T, harmonics):
    """Mains interference: harmonic k carries amplitude_T / k."""
    if not amplitude_T:
        return ()
    return tuple((k * frequency_Hz, amplitude_T / k) for k in range(1, harmonics + 1))


# Demodulation
# -----------------------------------------------------------------------------

def _filter_coefficients(sample_rate_Hz, time_constant_s):
    alpha = 1.0 - math.exp(-1.0 / (sample_rate_Hz * time_constant_s))
    return np.array([alpha]), np.array([1.0, alpha - 1.0])


def lowpass(values, sample_rate_Hz, time_constant_s, order=1):
    """Cascade of `order` first-order exponential sections."""
    b, a = _filter_coefficients(sample_rate_Hz, time_constant_s)
    out = np.asarray(values, dtype=float)
    for _ in range(order):
        out = signal.lfilter(b, a, out)
    return out


def filter_response(mod, frequencies):
    """Complex response of the lock-in low-pass at the given baseband frequencies."""
    b, a = _filter_coefficients(mod.sample_rate_Hz, mod.time_constant_s)
    _, h = signal.freqz(b, a, worN=np.asarray(frequencies, dtype=float), fs=mod.sample_rate_Hz)
    return h ** mod.filter_order


def decimation_factor(mod):
    return max(1, int(mod.sample_rate_Hz * mod.time_constant_s / OUTPUT_SAMPLES_PER_TIME_CONSTANT))


def period_samples(mod):
    """Samples in one modulation period, rounded."""
    return max(1, int(round(mod.sample_rate_Hz / mod.frequency_Hz)))


def period_average(values, mod):
    """
    Running mean over one modulation period.

    Zeros the response at the modulation frequency and its harmonics, which
    the exponential sections only attenuate and decimation would fold into
    the baseband.
    """
    n = period_samples(mod)
    return signal.lfilter(np.ones(n) / n, [1.0], np.asarray(values, dtype=float))


def demodulator_response(mod, frequencies):
    """Low-pass response times the period average: the decimated output path."""
    n = period_samples(mod)
    _, h = signal.freqz(np.ones(n) / n, [1.0], worN=np.asarray(frequencies, dtype=float), fs=mod.sample_rate_Hz)
    return filter_response(mod, frequencies) * h


def demodulate(ts, mod, phase_deg=0.0, decimate=True):
    """
    Multiply by sin/cos references at the modulation frequency and low-pass.

    X uses sin(2 pi f t + phase), so a unit sinusoid in phase gives X = 1/2.
    Decimated output is averaged over one modulation period before the
    stride.
    """
    if not math.isclose(ts.sample_rate_Hz, mod.sample_rate_Hz, rel_tol=1e-12):
        raise ValidationError(
            f'Series sampled at {ts.sample_rate_Hz} Hz, modulation expects {mod.sample_rate_Hz} Hz'
        )
    phase = 2 * np.pi * mod.frequency_Hz * ts.times() + math.radians(phase_deg)
    X = lowpass(ts.values * np.sin(phase), mod.sample_rate_Hz, mod.time_constant_s, mod.filter_order)
    Y = lowpass(ts.values * np.cos(phase), mod.sample_rate_Hz, mod.time_constant_s, mod.filter_order)

    step = decimation_factor(mod) if decimate else 1
    if step > 1:
        X, Y = period_average(X, mod), period_average(Y, mod)
    return DemodOutput(
        X=X[::step], Y=Y[::step], sample_rate_Hz=mod.sample_rate_Hz / step,
        time_constant_s=mod.time_constant_s, t0=ts.t0,
    )


def _steady_x(signal_fn, B_bias, mod, phase_deg):
    # Average over whole modulation periods after the transient.
    fs = mod.sample_rate_Hz
    settle = int(math.ceil(SETTLE_TIME_CONSTANTS * mod.time_constant_s * fs))
    period = fs / mod.frequency_Hz
    n_periods = int(math.ceil(mod.time_constant_s * mod.frequency_Hz * SETTLE_TIME_CONSTANTS / 2))
    n_average = int(round(n_periods * period))
    ts = modulate_and_sample(signal_fn, B_bias, mod, (settle + n_average) / fs)
    demod = demodulate(ts, mod, phase_deg, decimate=False)
    return float(np.mean(demod.X[-n_average:]))


def demodulated_sweep(signal_fn, B_values, mod, phase_deg=0.0, workers=1):
    """Steady-state X at each bias field, noise-free."""
    B_values = np.asarray(B_values, dtype=float)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            X = list(pool.map(lambda B: _steady_x(signal_fn, B, mod, phase_deg), B_values))
    else:
        X = [_steady_x(signal_fn, B, mod, phase_deg) for B in B_values]
    return B_values, np.array(X)


def first_harmonic(signal_fn, B_values, amplitude_T, n_phase=256):
    """
    In-phase first-harmonic amplitude of signal_fn(B + a sin(theta)), halved.

    Equals the steady-state lock-in X for an ideal low-pass.
    """
    theta = 2 * np.pi * np.arange(n_phase) / n_phase
    sin_theta = np.sin(theta)
    B_values = np.atleast_1d(np.asarray(B_values, dtype=float))
    fields = B_values[:, None] + amplitude_T * sin_theta[None, :]
    return np.mean(np.asarray(signal_fn(fields)) * sin_theta[None, :], axis=1)


# Calibration
# -----------------------------------------------------------------------------

def _zero_crossing(B, X, center_guess):
    crossings = np.nonzero(np.signbit(X[:-1]) != np.signbit(X[1:]))[0]
    if not len(crossings):
        raise ValidationError('Demodulated output has no zero crossing')
    if center_guess is None:
        center_guess = B[np.argmin(np.abs(X))]
    i = crossings[np.argmin(np.abs(B[crossings] - center_guess))]
    if X[i + 1] == X[i]:
        return float(B[i])
    return float(B[i] - X[i] * (B[i + 1] - B[i]) / (X[i + 1] - X[i]))


def calibrate_slope(B_values, X_values, window_T, center_guess=None, linearity_window_T=None):
    """
    Straight-line calibration of X against field around its zero crossing.

    Args:
        window_T: Half-width of the fit window around the crossing
        linearity_window_T: Half-width of the linearity check; defaults to window_T

    Returns:
        CalibrationResult: slope (signal/T), center_T and the linearity check on the
        wider window (rms residual over X range, below 5 %)
    """
    B = np.asarray(B_values, dtype=float)
    X = np.asarray(X_values, dtype=float)
    if B.shape != X.shape:
        raise ValidationError('B and X must have equal length')
    order = np.argsort(B)
    B, X = B[order], X[order]

    crossing = _zero_crossing(B, X, center_guess)
    mask = np.abs(B - crossing) <= window_T * (1 + 1e-9)
    if mask.sum() < MIN_CALIBRATION_POINTS:
        raise ValidationError(
            f'Calibration window holds {mask.sum()} points, need {MIN_CALIBRATION_POINTS}'
        )
    line = fit_line(B[mask], X[mask])

    wide = np.abs(B - crossing) <= (linearity_window_T or window_T) * (1 + 1e-9)
    wide_line = fit_line(B[wide], X[wide]) if wide.sum() >= 2 else line
    spread = float(np.ptp(X[wide]))
    residual_fraction = wide_line.residual_rms / spread if spread > 0 else 0.0
    linear = residual_fraction < LINEARITY_TOLERANCE
    if not linear:
        logger.warning("Demodulated output is not linear: rms residual %.3g of range", residual_fraction)

    return CalibrationResult(
        slope=line.slope,
        center_T=line.zero_crossing,
        residual_fraction=residual_fraction,
        linear=linear,
        n_points=int(mask.sum()),
    )


# Spectra
# -----------------------------------------------------------------------------

def _averages(n, segment_length, overlap):
    return 1 + (n - segment_length) // (segment_length - overlap)


def default_segment_length(n, overlap_fraction=0.5):
    """Largest power of two that still gives 8 averages."""
    length = 2 ** int(math.floor(math.log2(max(n, 1))))
    while length >= 16:
        if _averages(n, length, int(length * overlap_fraction)) >= MIN_DEFAULT_AVERAGES:
            return length
        length //= 2
    raise ValidationError(f'Record of {n} samples is too short for {MIN_DEFAULT_AVERAGES} averages')


def noise_spectrum(ts, segment_length=None, overlap_fraction=0.5, window='hann', compensate=None):
    """
    Welch amplitude spectral density, one-sided, units of ts per sqrt(Hz).

    Args:
        compensate: ModulationParams whose decimated demodulator response
            is divided out
    """
    n = len(ts)
    if not 0.0 <= overlap_fraction < 1.0:
        raise ValidationError('overlap_fraction must lie in [0, 1)')
    if segment_length is None:
        segment_length = default_segment_length(n, overlap_fraction)
    overlap = int(segment_length * overlap_fraction)
    if segment_length < 2 or n < 2 * segment_length - overlap:
        raise ValidationError(f'Record of {n} samples holds fewer than 2 segments of {segment_length}')

    frequencies, psd = signal.welch(
        ts.values, fs=ts.sample_rate_Hz, window=window, nperseg=segment_length,
        noverlap=overlap, scaling='density', return_onesided=True,
    )
    asd = np.sqrt(psd)
    if compensate is not None:
        asd = asd / np.abs(demodulator_response(compensate, frequencies))

    averages = _averages(n, segment_length, overlap)
    logger.debug("Spectrum: %d-sample segments, %d averages", segment_length, averages)
    return NoiseSpectrum(
        frequencies_Hz=frequencies, asd=asd, window=window, n_averages=averages,
        segment_length=segment_length, units=f'{ts.units}/sqrt(Hz)',
    )


def band_average(spectrum, f_lo_Hz, f_hi_Hz):
    """Mean ASD over the bins in [f_lo, f_hi]."""
    f = spectrum.frequencies_Hz
    if f_lo_Hz > f_hi_Hz or f_lo_Hz < f[0] or f_hi_Hz > f[-1]:
        raise ValidationError(f'Band [{f_lo_Hz}, {f_hi_Hz}] Hz lies outside the spectrum')
    mask = (f >= f_lo_Hz) & (f <= f_hi_Hz)
    if not np.any(mask):
        raise ValidationError(f'No spectral bin inside [{f_lo_Hz}, {f_hi_Hz}] Hz')
    return float(np.mean(spectrum.asd[mask]))


# Sensitivity
# -----------------------------------------------------------------------------

def photon_rate(power_W, wavelength_m):
    """Photons per second, P lambda / (h c)."""
    if power_W < 0 or not wavelength_m > 0:
        raise ValidationError('power_W must be >= 0 and wavelength_m positive')
    return power_W * wavelength_m / (constants.h * constants.c)


def shot_noise_limit(fwhm_T, contrast, photon_rate, prefactor=1.0, notes=None):
    """prefactor * fwhm / (contrast sqrt(R)) in T/sqrt(Hz)."""
    if not fwhm_T > 0 or not photon_rate > 0 or not prefactor > 0:
        raise ValidationError('fwhm_T, photon_rate and prefactor must be positive')
    if not 0.0 < contrast <= 1.0:
        raise ValidationError(f'contrast must lie in (0, 1], got {contrast}')
    return SensitivityReport(
        delta_B=prefactor * fwhm_T / (contrast * math.sqrt(photon_rate)),
        fwhm_T=fwhm_T,
        contrast=contrast,
        photon_rate=photon_rate,
        prefactor=prefactor,
        notes=dict(notes or {}),
    )


def electronic_noise_asd(floor_T, calibration_slope):
    """
    Detector noise ASD (signal units) that reads as floor_T after demodulation.

    Demodulation halves the noise power that lands in X, hence sqrt(2).
    """
    return floor_T * math.sqrt(2.0) * abs(calibration_slope)


# Scenario
# -----------------------------------------------------------------------------

def lorentzian_dip(center_T, fwhm_T, contrast):
    def signal_fn(B):
        return 1.0 - contrast * lorentzian(B, center_T, fwhm_T)
    return signal_fn


def _record(signal_fn, bias, scenario, calibration, electronic, seed):
    mod = scenario.modulation
    settle = SETTLE_TIME_CONSTANTS * mod.time_constant_s
    ts = modulate_and_sample(
        signal_fn, bias, mod, scenario.acquisition_s + settle,
        noise_asd_T=scenario.field_noise_asd_T, seed=seed,
        noise_bandwidth_Hz=scenario.noise_bandwidth_Hz,
        line_tones=mains_tones(scenario.line_frequency_Hz, scenario.line_amplitude_T, scenario.line_harmonics),
        electronic_asd=electronic,
    )
    demod = demodulate(ts, mod).trimmed(SETTLE_TIME_CONSTANTS)
    return TimeSeries(
        sample_rate_Hz=demod.sample_rate_Hz,
        values=demod.X / calibration.slope,
        t0=demod.t0,
        units='T',
        calibration_slope=calibration.slope,
    )


def run_magnetometer(scenario, workers=1):
    """
    Calibrate on a noise-free bias sweep, then record at the feature center and at
    the insensitive bias with injected field and detector noise.
    """
    mod = scenario.modulation
    signal_fn = lorentzian_dip(scenario.center_T, scenario.fwhm_T, scenario.contrast)

    B_sweep = scenario.center_T + np.linspace(
        -scenario.sweep_half_width_T, scenario.sweep_half_width_T, scenario.sweep_points
    )
    B_sweep, X_sweep = demodulated_sweep(signal_fn, B_sweep, mod, workers=workers)
    window = scenario.fwhm_T / 20
    calibration = calibrate_slope(
        B_sweep, X_sweep, window, center_guess=scenario.center_T,
        linearity_window_T=scenario.fwhm_T / 4,
    )
    oracle = first_harmonic(signal_fn, B_sweep, mod.amplitude_T)
    in_window = np.abs(B_sweep - calibration.center_T) <= window * (1 + 1e-9)
    oracle_slope = fit_line(B_sweep[in_window], oracle[in_window]).slope
    logger.info(
        "Calibration slope %.6g /T at %.6g T (oracle %.6g /T)",
        calibration.slope, calibration.center_T, oracle_slope,
    )

    electronic = electronic_noise_asd(scenario.electronic_floor_T, calibration.slope)
    series = _record(signal_fn, calibration.center_T, scenario, calibration, electronic, scenario.seed)
    insensitive = _record(
        signal_fn, scenario.insensitive_bias_T, scenario, calibration, electronic, scenario.seed + 1
    )
    spectrum = noise_spectrum(series, compensate=mod)
    insensitive_spectrum = noise_spectrum(insensitive, compensate=mod)
    f_lo, f_hi = scenario.band_Hz

    rate = photon_rate(scenario.collected_power_W, scenario.wavelength_m)
    report = shot_noise_limit(
        scenario.fwhm_T, scenario.contrast, rate,
        notes={
            'fwhm_T': 'scenario feature width',
            'contrast': 'scenario feature contrast',
            'photon_rate': f'{scenario.collected_power_W} W at {scenario.wavelength_m} m',
        },
    )
    return MagnetometerResult(
        sweep_B=B_sweep,
        sweep_X=X_sweep,
        calibration=calibration,
        oracle_slope=oracle_slope,
        series=series,
        spectrum=spectrum,
        insensitive_spectrum=insensitive_spectrum,
        band_average=band_average(spectrum, f_lo, f_hi),
        insensitive_band_average=band_average(insensitive_spectrum, f_lo, f_hi),
        report=report,
    )


def sensitivity_report_lines(report, reference_delta_B=None):
    """key = value lines; a reference value is shown with its implied prefactor."""
    lines = [
        f'delta_B_T_per_sqrtHz = {report.delta_B!r}',
        f'fwhm_T = {report.fwhm_T!r}',
        f'contrast = {report.contrast!r}',
        f'photon_rate_per_s = {report.photon_rate!r}',
        f'prefactor = {report.prefactor!r}',
    ]
    if reference_delta_B is not None:
        lines.append(f'reference_delta_B_T_per_sqrtHz = {reference_delta_B!r}')
        lines.append(f'implied_prefactor = {report.implied_prefactor(reference_delta_B)!r}')
    for key, note in report.notes.items():
        lines.append(f'note_{key} = {note}')
    return lines


# Files
# -----------------------------------------------------------------------------

def write_time_series(ts, path):
    metadata = {'sample_rate_Hz': ts.sample_rate_Hz, 'units': ts.units}
    if ts.calibration_slope is not None:
        metadata['calibration_slope'] = ts.calibration_slope
    return write_csv(path, TIME_SERIES_COLUMNS, zip(ts.times(), ts.values), metadata=metadata)


def read_time_series(path):
    metadata, columns, data = read_csv(path)
    if tuple(columns) != TIME_SERIES_COLUMNS:
        raise DataFileError(f'{path}: expected columns {",".join(TIME_SERIES_COLUMNS)}')
    try:
        slope = metadata.get('calibration_slope')
        return TimeSeries(
            sample_rate_Hz=float(metadata['sample_rate_Hz']),
            values=data[:, 1],
            t0=float(data[0, 0]) if len(data) else 0.0,
            units=metadata.get('units', 'fraction'),
            calibration_slope=float(slope) if slope is not None else None,
        )
    except (KeyError, ValueError, ValidationError) as exc:
        raise DataFileError(f'{path}: {exc}') from exc


def write_spectrum(spectrum, path):
    metadata = {
        'window': spectrum.window,
        'n_averages': spectrum.n_averages,
        'segment_length': spectrum.segment_length,
        'units': spectrum.units,
    }
    return write_csv(path, SPECTRUM_COLUMNS, zip(spectrum.frequencies_Hz, spectrum.asd), metadata=metadata)
