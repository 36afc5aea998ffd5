"""Scan Engine app."""
