"""
Base Django settings for the gslacsim project.
"""

import os
from pathlib import Path

import environ

# Build paths inside the project
BASE_DIR = Path(__file__).resolve().parent.parent.parent

# Initialize environment variables
env = environ.Env(
    DEBUG=(bool, False),
)

# Read .env file if it exists
env_file = os.path.join(BASE_DIR, '.env')
if os.path.exists(env_file):
    environ.Env.read_env(env_file)

SECRET_KEY = env('SECRET_KEY', default='django-insecure-gslacsim-local-only')

# Application definition
INSTALLED_APPS = [
    # Django
    'django.contrib.contenttypes',
    'django.contrib.auth',

    # Third-party apps
    'rest_framework',

    # Local apps
    'apps.spin_model',
    'apps.photophysics',
    'apps.scan_engine',
    'apps.inference',
    'apps.lockin_dsp',
    'apps.cli',
]

# Nothing is persisted; the database only satisfies Django's system checks.
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.path.join(BASE_DIR, 'db.sqlite3'),
    }
}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True

# Django REST Framework (serializers only, no views)
REST_FRAMEWORK = {
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [],
    'UNAUTHENTICATED_USER': None,
}

# NV ground-state physics
# -----------------------------------------------------------------------------
GSLAC_ZERO_FIELD_SPLITTING_HZ = env.float('GSLAC_ZERO_FIELD_SPLITTING_HZ', default=2.87e9)
GSLAC_GYROMAGNETIC_RATIO_HZ_PER_T = env.float('GSLAC_GYROMAGNETIC_RATIO_HZ_PER_T', default=28.024e9)

# Runs
# -----------------------------------------------------------------------------
GSLAC_DEFAULT_SEED = env.int('GSLAC_DEFAULT_SEED', default=0)
GSLAC_OUTPUT_DIR = env('GSLAC_OUTPUT_DIR', default='out')
GSLAC_WORKERS = env.int('GSLAC_WORKERS', default=1)
GSLAC_PRESET_DIR = env('GSLAC_PRESET_DIR', default=os.path.join(BASE_DIR, 'apps', 'scan_engine', 'presets'))

# Logging
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
        'simple': {
            'format': '{levelname} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': env('DJANGO_LOG_LEVEL', default='WARNING'),
            'propagate': False,
        },
        'apps': {
            'handlers': ['console'],
            'level': env('GSLAC_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
        'core': {
            'handlers': ['console'],
            'level': env('GSLAC_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
    },
}

GSLAC_LOG_FILE = env('GSLAC_LOG_FILE', default=None)
if GSLAC_LOG_FILE:
    LOGGING['handlers']['file'] = {
        'class': 'logging.FileHandler',
        'filename': GSLAC_LOG_FILE,
        'formatter': 'verbose',
    }
    for name in ('apps', 'core'):
        LOGGING['loggers'][name]['handlers'].append('file')

# Sentry Error Tracking (Optional)
# -----------------------------------------------------------------------------
SENTRY_DSN = env('SENTRY_DSN', default=None)

if SENTRY_DSN:
    try:
        import sentry_sdk
        from sentry_sdk.integrations.django import DjangoIntegration

        sentry_sdk.init(
            dsn=SENTRY_DSN,
            integrations=[DjangoIntegration()],
            environment=env('SENTRY_ENVIRONMENT', default='production'),
            traces_sample_rate=env.float('SENTRY_TRACES_SAMPLE_RATE', default=0.0),
            send_default_pii=False,
        )
    except ImportError:
        # Sentry SDK not installed - skip initialization
        pass
