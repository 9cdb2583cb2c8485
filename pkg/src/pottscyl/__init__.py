"""Geometrical four-point functions of the critical Q-state Potts model on a
cylinder: exact transfer matrices, arbitrary-precision spectra and conformal
amplitudes, with closed-form benchmarks at Q = 0, 2, 4."""

__version__ = "0.1.0"
