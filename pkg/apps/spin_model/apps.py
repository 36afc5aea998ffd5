"""
NV Spin Model app configuration.
"""
from django.apps import AppConfig


class SpinModelConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.spin_model'
    verbose_name = 'NV Spin Model'
