"""
Development settings for the gslacsim project.
"""

from .base import *

DEBUG = env.bool('DEBUG', default=True)

# Numerical detail from the services while developing
LOGGING['loggers']['apps']['level'] = env('GSLAC_LOG_LEVEL', default='DEBUG')
