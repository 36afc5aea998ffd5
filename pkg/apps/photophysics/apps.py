"""
Photophysics app configuration.
"""
from django.apps import AppConfig


class PhotophysicsConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.photophysics'
    verbose_name = 'Photophysics'
