"""Photophysics app."""
