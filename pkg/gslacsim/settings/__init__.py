# Import development settings by default
from .dev import *
