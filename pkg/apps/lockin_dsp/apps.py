"""
Lock-in DSP app configuration.
"""
from django.apps import AppConfig


class LockinDspConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.lockin_dsp'
    verbose_name = 'Lock-in DSP'
