"""
Scan Engine app configuration.
"""
from django.apps import AppConfig


class ScanEngineConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.scan_engine'
    verbose_name = 'Scan Engine'
