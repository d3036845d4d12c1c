"""Pixel-integral computational imaging for ISAC scenes.

Simulates multipath channel observations of a pixelized 2D region of
interest, reconstructs per-pixel scattering coefficients with GAMP under
a truncated Bernoulli-Gaussian prior, and evaluates the pixel-division
phase-error integrals that motivate the integral propagation model.
"""

__version__ = "0.1.0"
