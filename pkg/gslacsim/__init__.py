"""
GSLAC magnetometer digital twin (Django project).
"""

__version__ = '1.0.0'
