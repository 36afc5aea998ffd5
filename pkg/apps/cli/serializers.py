"""
Run configurations of the management commands.

Every physical quantity is SI with a unit-suffixed key; pump powers are mW
because the rate model and the saturation law take mW.
"""
from django.conf import settings
from rest_framework import serializers

from apps.lockin_dsp.domain import MagnetometerScenario, ModulationParams
from apps.scan_engine.domain import DETECTION_MODES, FEATURE_LABELS
from apps.spin_model.domain import HyperfineParams, SpinSystemParams
from core.serializers import StrictSerializer, build_domain

SCAN_SOURCES = ('catalog', 'rate-model')
FIT_MODELS = ('lorentzian',)


class RunConfigSerializer(StrictSerializer):
    """Fields shared by every command."""

    seed = serializers.IntegerField(default=lambda: settings.GSLAC_DEFAULT_SEED)
    workers = serializers.IntegerField(min_value=1, default=lambda: settings.GSLAC_WORKERS)


class HyperfineSerializer(StrictSerializer):
    A_parallel_Hz = serializers.FloatField()
    A_perpendicular_Hz = serializers.FloatField()
    quadrupole_P_Hz = serializers.FloatField()


class PhysicsSerializer(StrictSerializer):
    D_Hz = serializers.FloatField(default=lambda: settings.GSLAC_ZERO_FIELD_SPLITTING_HZ)
    gamma_over_2pi_Hz_per_T = serializers.FloatField(
        default=lambda: settings.GSLAC_GYROMAGNETIC_RATIO_HZ_PER_T
    )
    hyperfine = HyperfineSerializer(required=False, allow_null=True, default=None)

    def validate(self, attrs):
        build_domain(spin_params, attrs)
        return attrs


def spin_params(D_Hz, gamma_over_2pi_Hz_per_T, hyperfine=None):
    block = None
    if hyperfine:
        block = HyperfineParams(
            A_parallel=hyperfine['A_parallel_Hz'],
            A_perpendicular=hyperfine['A_perpendicular_Hz'],
            quadrupole_P=hyperfine['quadrupole_P_Hz'],
        )
    return SpinSystemParams(D=D_Hz, gamma_over_2pi=gamma_over_2pi_Hz_per_T, hyperfine=block)


class LevelsConfigSerializer(RunConfigSerializer):
    physics = PhysicsSerializer()
    B_start_T = serializers.FloatField(default=0.0, min_value=0.0)
    B_stop_T = serializers.FloatField(default=0.12)
    n_points = serializers.IntegerField(default=1201, min_value=2)
    theta_deg = serializers.FloatField(default=0.0)
    phi_deg = serializers.FloatField(default=0.0)
    transverse_T = serializers.FloatField(required=False, allow_null=True, default=None, min_value=0.0)
    search_low_T = serializers.FloatField(required=False, allow_null=True, default=None)
    search_high_T = serializers.FloatField(required=False, allow_null=True, default=None)

    def validate(self, attrs):
        if not attrs['B_stop_T'] > attrs['B_start_T']:
            raise serializers.ValidationError('B_stop_T must exceed B_start_T')
        return attrs


class ScanConfigSerializer(RunConfigSerializer):
    """Unset scan fields fall back to the preset's scan protocol."""

    preset = serializers.CharField(default='W4')
    mode = serializers.ChoiceField(choices=DETECTION_MODES, required=False, allow_null=True, default=None)
    isolate = serializers.ChoiceField(choices=FEATURE_LABELS, required=False, allow_null=True, default=None)
    source = serializers.ChoiceField(choices=SCAN_SOURCES, default='catalog')
    B_start_T = serializers.FloatField(required=False, allow_null=True, default=None)
    B_stop_T = serializers.FloatField(required=False, allow_null=True, default=None)
    n_points = serializers.IntegerField(required=False, allow_null=True, default=None)
    scan_duration_s = serializers.FloatField(required=False, allow_null=True, default=None)
    n_averages = serializers.IntegerField(required=False, allow_null=True, default=None)
    alpha_deg = serializers.FloatField(default=0.0)
    beta_deg = serializers.FloatField(default=0.0)
    pump_mW = serializers.FloatField(required=False, allow_null=True, default=None)
    photon_rate_per_s = serializers.FloatField(required=False, allow_null=True, default=None)
    physics = PhysicsSerializer()


class FitConfigSerializer(RunConfigSerializer):
    trace = serializers.CharField()
    model = serializers.ChoiceField(choices=FIT_MODELS, default='lorentzian')
    B_min_T = serializers.FloatField(required=False, allow_null=True, default=None)
    B_max_T = serializers.FloatField(required=False, allow_null=True, default=None)


class AngleStudyConfigSerializer(RunConfigSerializer):
    preset = serializers.CharField(default='W4')
    beta_min_deg = serializers.FloatField(default=-0.2)
    beta_max_deg = serializers.FloatField(default=0.2)
    n_angles = serializers.IntegerField(default=33, min_value=2)
    B_start_T = serializers.FloatField(default=0.095)
    B_stop_T = serializers.FloatField(default=0.110)
    n_points = serializers.IntegerField(default=1501, min_value=8)
    photon_rate_per_s = serializers.FloatField(required=False, allow_null=True, default=None)

    def validate(self, attrs):
        if not attrs['beta_max_deg'] > attrs['beta_min_deg']:
            raise serializers.ValidationError('beta_max_deg must exceed beta_min_deg')
        return attrs


class PowerStudyConfigSerializer(RunConfigSerializer):
    preset = serializers.CharField(default='B3A')
    pump_mW = serializers.ListField(
        child=serializers.FloatField(min_value=0.0),
        default=lambda: [25.0, 50.0, 100.0, 200.0, 400.0, 800.0],
        min_length=1,
    )
    B_start_T = serializers.FloatField(default=0.0974)
    B_stop_T = serializers.FloatField(default=0.1074)
    n_points = serializers.IntegerField(default=1001, min_value=8)
    photon_rate_per_s = serializers.FloatField(required=False, allow_null=True, default=None)

    def validate_pump_mW(self, value):
        # Without pump light the GSLAC has no contrast to fit.
        if any(power <= 0 for power in value):
            raise serializers.ValidationError('Pump powers must be positive')
        return value


class ModulationSerializer(StrictSerializer):
    amplitude_T = serializers.FloatField(default=1e-5)
    frequency_Hz = serializers.FloatField(default=15000.0)
    time_constant_s = serializers.FloatField(default=3e-3)
    sample_rate_Hz = serializers.FloatField(required=False, allow_null=True, default=None)
    filter_order = serializers.IntegerField(default=1)

    def validate(self, attrs):
        modulation = build_domain(ModulationParams, attrs)
        return dict(attrs, sample_rate_Hz=modulation.sample_rate_Hz)


class NoiseSerializer(StrictSerializer):
    field_noise_asd_T = serializers.FloatField(default=0.45e-9, min_value=0.0)
    noise_bandwidth_Hz = serializers.FloatField(required=False, allow_null=True, default=2000.0)
    electronic_floor_T = serializers.FloatField(default=70e-12, min_value=0.0)
    line_frequency_Hz = serializers.FloatField(default=50.0)
    line_amplitude_T = serializers.FloatField(default=0.0, min_value=0.0)
    line_harmonics = serializers.IntegerField(default=3, min_value=1)


class MagnetometerConfigSerializer(RunConfigSerializer):
    center_T = serializers.FloatField(default=0.1024)
    fwhm_T = serializers.FloatField(default=0.84e-3)
    contrast = serializers.FloatField(default=0.15)
    modulation = ModulationSerializer()
    noise = NoiseSerializer()
    sweep_half_width_T = serializers.FloatField(default=0.2e-3)
    sweep_points = serializers.IntegerField(default=41)
    acquisition_s = serializers.FloatField(default=1.0)
    insensitive_bias_T = serializers.FloatField(default=0.08)
    band_low_Hz = serializers.FloatField(default=1.0)
    band_high_Hz = serializers.FloatField(default=100.0)
    collected_power_W = serializers.FloatField(default=4.2e-3)
    wavelength_m = serializers.FloatField(default=1042e-9)
    reference_delta_B_T = serializers.FloatField(default=12.2e-12)

    def validate(self, attrs):
        build_domain(magnetometer_scenario, attrs)
        return attrs


def magnetometer_scenario(**config):
    return MagnetometerScenario(
        center_T=config['center_T'],
        fwhm_T=config['fwhm_T'],
        contrast=config['contrast'],
        modulation=ModulationParams(**config['modulation']),
        sweep_half_width_T=config['sweep_half_width_T'],
        sweep_points=config['sweep_points'],
        acquisition_s=config['acquisition_s'],
        insensitive_bias_T=config['insensitive_bias_T'],
        band_Hz=(config['band_low_Hz'], config['band_high_Hz']),
        collected_power_W=config['collected_power_W'],
        wavelength_m=config['wavelength_m'],
        reference_delta_B=config['reference_delta_B_T'],
        seed=config['seed'],
        **config['noise'],
    )


class SenseConfigSerializer(RunConfigSerializer):
    fwhm_T = serializers.FloatField(default=0.84e-3)
    contrast = serializers.FloatField(default=0.15)
    photon_rate_per_s = serializers.FloatField(required=False, allow_null=True, default=None)
    collected_power_W = serializers.FloatField(default=4.2e-3)
    wavelength_m = serializers.FloatField(default=1042e-9)
    prefactor = serializers.FloatField(default=1.0)
    reference_delta_B_T = serializers.FloatField(required=False, allow_null=True, default=12.2e-12)
