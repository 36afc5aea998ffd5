"""
Serializer base classes shared by preset documents and run configurations.
"""
from collections.abc import Mapping

from rest_framework import serializers

from core.exceptions import ValidationError as DomainValidationError


class StrictSerializer(serializers.Serializer):
    """
    Serializer that rejects keys it does not declare.

    A missing nested block that is not nullable validates as `{}`, so the
    defaults of its fields end up in validated_data.
    """

    def to_internal_value(self, data):
        if isinstance(data, Mapping):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ['Unknown field.'] for key in unknown})
            missing = [
                name for name, field in self.fields.items()
                if isinstance(field, serializers.Serializer) and not field.allow_null and name not in data
            ]
            if missing:
                data = dict(data, **{name: {} for name in missing})
        return super().to_internal_value(data)


def build_domain(factory, attrs):
    """Construct a domain value, reporting invariant failures as serializer errors."""
    try:
        return factory(**attrs)
    except DomainValidationError as exc:
        raise serializers.ValidationError(str(exc)) from exc
