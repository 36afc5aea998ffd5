"""NV Spin Model app."""
