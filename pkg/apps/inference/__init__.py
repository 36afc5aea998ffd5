"""Inference app."""
