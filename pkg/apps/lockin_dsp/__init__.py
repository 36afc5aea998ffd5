"""Lock-in DSP app."""
