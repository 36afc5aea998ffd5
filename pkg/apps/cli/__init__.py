"""Command Line app."""
