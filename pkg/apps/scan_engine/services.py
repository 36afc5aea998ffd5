"""
Field-scan synthesis, GSLAC misalignment model, electromagnet arithmetic
and preset/trace file handling.
"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.conf import settings

from apps.photophysics.domain import CavitySpec, RateModel
from apps.photophysics.services import (
    contrast_saturation,
    observable_from_mixing,
    thermal_center_shift,
)
from apps.scan_engine.domain import NORMALIZATION_FIELD_T, ScanConfig, ScanTrace
from apps.scan_engine.serializers import SamplePresetSerializer
from apps.spin_model.domain import FieldVector, SpinSystemParams
from apps.spin_model.services import spin_mixing
from core.csvio import read_csv, write_csv
from core.exceptions import ConfigurationError, DataFileError, ValidationError

logger = logging.getLogger(__name__)

# Electromagnet: 200 turns, 5 cm bore
FIELD_PER_AMPERE_T = 2.9e-3
COIL_RESISTANCE_OHM = 1.05

TRACE_COLUMNS = ('B_T', 'signal')

DEFAULT_LEVEL_SCAN_PUMP_MW = 100.0

SCAN_PROTOCOLS = {
    'C7': {'B_stop': 0.12, 'n_points': 2401, 'scan_duration_s': 100.0, 'n_averages': 35},
}


def lorentzian(x, center, fwhm):
    """Unit-height Lorentzian."""
    return 1.0 / (1.0 + (2.0 * (np.asarray(x, dtype=float) - center) / fwhm) ** 2)


def angle_response(beta, params):
    """
    GSLAC width and contrast at misalignment beta (degrees).

    The width is flat at fwhm_min inside |beta| <= beta_elbow and grows
    linearly outside; the contrast carries a Lorentzian dip at beta = 0.

    Returns:
        dict: {'fwhm': T, 'contrast': fraction}, floats for scalar beta
    """
    beta = np.abs(np.asarray(beta, dtype=float))
    fwhm = params.fwhm_min + params.linewidth_slope * np.maximum(0.0, beta - params.beta_elbow)
    contrast = params.C_far * (1.0 - params.dip_depth * lorentzian(beta, 0.0, params.beta_width))
    if fwhm.ndim == 0:
        return {'fwhm': float(fwhm), 'contrast': float(contrast)}
    return {'fwhm': fwhm, 'contrast': contrast}


def figure_of_merit(beta, params):
    """Contrast over linewidth, 1/T."""
    response = angle_response(beta, params)
    return response['contrast'] / response['fwhm']


def field_from_current(current_A):
    return FIELD_PER_AMPERE_T * current_A


def current_for_field(B):
    return B / FIELD_PER_AMPERE_T


def coil_power(current_A, R_coil=COIL_RESISTANCE_OHM):
    """Ohmic dissipation I^2 R, W."""
    if not R_coil > 0:
        raise ValidationError('Coil resistance must be positive')
    return current_A ** 2 * R_coil


def background(B, k, B_bg):
    """Gradual low-field decrease 1 - k (1 - exp(-B / B_bg))."""
    return 1.0 - k * (1.0 - np.exp(-np.asarray(B, dtype=float) / B_bg))


def feature_sign(feature, detection_mode):
    """-1 where the detected signal drops on the feature, +1 where it rises."""
    drops = (detection_mode == 'PL') == (feature.polarity == 'dip')
    return -1.0 if drops else 1.0


def effective_features(preset, config):
    """
    Catalog with the GSLAC adjusted for misalignment and pump power.

    With an angle model the GSLAC takes its width and contrast from
    angle_response(beta). With a saturation model and a pump power the
    contrast follows the saturation curve (scaling the angle contrast when
    both apply) and the center follows the thermal shift.
    """
    features = []
    for feature in preset.features:
        if feature.label == 'GSLAC':
            feature = _adjust_gslac(preset, feature, config)
            if feature is None:
                continue
        features.append(feature)
    return features


def _adjust_gslac(preset, feature, config):
    fwhm, contrast, center = feature.fwhm, feature.contrast, feature.center
    if preset.angle_model is not None:
        response = angle_response(config.beta, preset.angle_model)
        fwhm, contrast = response['fwhm'], response['contrast']

    saturation = preset.saturation
    if saturation is not None and config.pump_mW is not None:
        saturated = contrast_saturation(config.pump_mW, saturation.C_max, saturation.P_sat_mW)
        if preset.angle_model is not None:
            contrast *= saturated / saturation.C_max
        else:
            contrast = saturated
        center = thermal_center_shift(config.pump_mW, saturation.shift_coeff_T_per_mW, center)

    if contrast <= 0:
        return None
    return replace(feature, center=center, fwhm=fwhm, contrast=contrast)


def noise_free_signal(preset, features, B_values):
    """Background times the product of signed Lorentzian features."""
    signal = background(B_values, preset.background_k, preset.background_B)
    for feature in features:
        sign = feature_sign(feature, preset.detection_mode)
        signal = signal * (1.0 + sign * feature.contrast * lorentzian(B_values, feature.center, feature.fwhm))
    return signal


def _scan_metadata(preset, config, source):
    return {
        'sample': preset.name,
        'detection_mode': preset.detection_mode,
        'source': source,
        'normalization_point_T': NORMALIZATION_FIELD_T,
        'alpha_deg': config.alpha,
        'beta_deg': config.beta,
        'pump_mW': config.pump_mW,
        'n_averages': config.n_averages,
        'seed': config.seed,
    }


def _normalize_and_finish(B, raw, preset, config, source):
    # last element of raw is the 80 mT reference
    trace = ScanTrace(B, raw[:-1] / raw[-1], _scan_metadata(preset, config, source))
    if config.photon_rate is not None:
        trace = add_shot_noise(
            trace, config.photon_rate, config.dwell_time * config.n_averages, config.seed
        )
    return trace


def synthesize_scan(preset, config):
    """
    Synthesize a normalized field scan from the preset's feature catalog.

    Args:
        preset: SamplePreset
        config: ScanConfig; photon_rate None gives a noise-free trace

    Returns:
        ScanTrace: signal normalized to its value at 80 mT
    """
    B = config.B_values()
    features = effective_features(preset, config)
    raw = noise_free_signal(preset, features, np.append(B, NORMALIZATION_FIELD_T))
    logger.debug(
        "Synthesized %s scan: %d points, %d features, beta=%.4f deg",
        preset.name, len(B), len(features), config.beta,
    )
    return _normalize_and_finish(B, raw, preset, config, 'catalog')


def synthesize_level_scan(preset, config, spin_params=None, rate_model=None, cavity=None, workers=1):
    """
    Physics-derived scan: spin mixing -> steady state -> PL or transmission.

    The feature catalog is ignored; every feature comes from the spin
    Hamiltonian at the configured orientation.
    """
    spin_params = spin_params or SpinSystemParams.from_settings()
    rate_model = rate_model or RateModel()
    cavity = cavity or CavitySpec()
    pump = config.pump_mW if config.pump_mW is not None else DEFAULT_LEVEL_SCAN_PUMP_MW

    B = config.B_values()

    def observe(magnitude):
        field = FieldVector.from_experiment_angles(float(magnitude), config.alpha, config.beta)
        mixing = spin_mixing(spin_params, field)
        return observable_from_mixing(rate_model, pump, mixing, preset.detection_mode, cavity)

    points = np.append(B, NORMALIZATION_FIELD_T)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            raw = np.array(list(pool.map(observe, points)))
    else:
        raw = np.array([observe(b) for b in points])
    return _normalize_and_finish(B, raw, preset, replace(config, pump_mW=pump), 'rate-model')


def add_shot_noise(trace, photon_rate, dwell_time, seed):
    """
    Multiplicative Gaussian noise of relative std 1/sqrt(photon_rate * dwell_time).
    """
    if not photon_rate > 0 or not dwell_time > 0:
        raise ValidationError('photon_rate and dwell_time must be positive')
    sigma = 1.0 / np.sqrt(photon_rate * dwell_time)
    rng = np.random.default_rng(seed)
    noisy = trace.signal * (1.0 + sigma * rng.standard_normal(len(trace)))
    metadata = dict(trace.metadata, relative_noise_std=float(sigma))
    return ScanTrace(trace.B_values.copy(), noisy, metadata)


def default_scan_config(preset, **overrides):
    """Scan protocol used for the sample, with overrides applied."""
    protocol = dict(SCAN_PROTOCOLS.get(preset.name, {}))
    protocol.update(overrides)
    return ScanConfig(**protocol)


# Presets
# -----------------------------------------------------------------------------

def builtin_preset_names():
    return sorted(path.stem for path in Path(settings.GSLAC_PRESET_DIR).glob('*.json'))


def preset_from_data(data):
    """Validate a preset document and build the SamplePreset."""
    serializer = SamplePresetSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigurationError(f'Invalid preset: {serializer.errors}')
    return serializer.save()


def preset_to_data(preset):
    return json.loads(json.dumps(SamplePresetSerializer(preset).data))


def load_preset(name_or_path):
    """
    Load a built-in preset by name or a preset document by path.

    Raises:
        ConfigurationError: Unknown name or invalid document
        DataFileError: Preset file cannot be read
    """
    name_or_path = str(name_or_path)
    if name_or_path.endswith('.json') or '/' in name_or_path:
        path = Path(name_or_path)
    else:
        path = Path(settings.GSLAC_PRESET_DIR) / f'{name_or_path}.json'
        if not path.exists():
            raise ConfigurationError(
                f'Unknown preset {name_or_path!r}; built-in presets: {", ".join(builtin_preset_names())}'
            )
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except OSError as exc:
        raise DataFileError(f'Cannot read preset {path}: {exc}') from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f'Preset {path} is not valid JSON: {exc}') from exc
    return preset_from_data(data)


def dump_preset(preset, path):
    path = Path(path)
    try:
        path.write_text(json.dumps(preset_to_data(preset), indent=2) + '\n', encoding='utf-8')
    except OSError as exc:
        raise DataFileError(f'Cannot write preset {path}: {exc}') from exc
    return path


# Trace files
# -----------------------------------------------------------------------------

def write_trace(trace, path):
    return write_csv(path, TRACE_COLUMNS, zip(trace.B_values, trace.signal), metadata=trace.metadata)


def read_trace(path):
    metadata, columns, data = read_csv(path)
    if tuple(columns) != TRACE_COLUMNS:
        raise DataFileError(f'{path}: expected columns {",".join(TRACE_COLUMNS)}, got {",".join(columns)}')
    try:
        return ScanTrace(data[:, 0], data[:, 1], metadata)
    except ValidationError as exc:
        raise DataFileError(f'{path}: {exc}') from exc
