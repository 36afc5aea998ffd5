"""
Serializers for sample preset documents.
"""
from rest_framework import serializers

from apps.scan_engine.domain import (
    DETECTION_MODES,
    FEATURE_LABELS,
    GROWTH_TYPES,
    POLARITIES,
    AngleModelParams,
    Feature,
    SamplePreset,
    SaturationModel,
)
from core.serializers import StrictSerializer, build_domain


class FeatureSerializer(StrictSerializer):
    """One Lorentzian feature of the catalog."""
    center_T = serializers.FloatField(source='center', min_value=0.0)
    fwhm_T = serializers.FloatField(source='fwhm')
    contrast = serializers.FloatField()
    polarity = serializers.ChoiceField(choices=POLARITIES, default='dip')
    label = serializers.ChoiceField(choices=FEATURE_LABELS)

    def validate(self, attrs):
        build_domain(Feature, attrs)
        return attrs


class AngleModelSerializer(StrictSerializer):
    fwhm_min_T = serializers.FloatField(source='fwhm_min')
    linewidth_slope_T_per_deg = serializers.FloatField(source='linewidth_slope')
    C_far = serializers.FloatField()
    dip_depth = serializers.FloatField()
    beta_width_deg = serializers.FloatField(source='beta_width')
    beta_elbow_deg = serializers.FloatField(source='beta_elbow', required=False)

    def validate(self, attrs):
        build_domain(AngleModelParams, attrs)
        return attrs


class SaturationSerializer(StrictSerializer):
    C_max = serializers.FloatField()
    P_sat_mW = serializers.FloatField()
    shift_coeff_T_per_mW = serializers.FloatField(required=False)

    def validate(self, attrs):
        build_domain(SaturationModel, attrs)
        return attrs


class SamplePresetSerializer(StrictSerializer):
    """Table-1 sample description plus its feature catalog."""
    name = serializers.CharField(max_length=32)
    growth_type = serializers.ChoiceField(choices=GROWTH_TYPES)
    surface_cut = serializers.CharField(max_length=16)
    nitrogen_ppm = serializers.FloatField()
    irradiation_dose_cm2 = serializers.FloatField()
    irradiation_energy_MeV = serializers.FloatField()
    annealing_note = serializers.CharField(allow_blank=True)
    detection_mode = serializers.ChoiceField(choices=DETECTION_MODES)
    features = FeatureSerializer(many=True)
    background_k = serializers.FloatField(required=False)
    background_B_T = serializers.FloatField(source='background_B', required=False)
    angle_model = AngleModelSerializer(required=False, allow_null=True)
    saturation = SaturationSerializer(required=False, allow_null=True)

    def validate(self, attrs):
        build_domain(self._to_preset, attrs)
        return attrs

    @staticmethod
    def _to_preset(**attrs):
        attrs = dict(attrs)
        attrs['features'] = tuple(Feature(**item) for item in attrs.get('features', ()))
        if attrs.get('angle_model') is not None:
            attrs['angle_model'] = AngleModelParams(**attrs['angle_model'])
        if attrs.get('saturation') is not None:
            attrs['saturation'] = SaturationModel(**attrs['saturation'])
        return SamplePreset(**attrs)

    def create(self, validated_data):
        return self._to_preset(**validated_data)
