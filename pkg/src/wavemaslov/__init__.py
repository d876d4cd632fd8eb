"""Travelling-wave stability: Evans function and Maslov index for reaction-diffusion pulses."""
