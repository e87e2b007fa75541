"""Subwavelength Helmholtz resonators in a half space.

Capacity of the coupling aperture, quasi-static resonances of finite
resonator arrays, perturbed half-space Green functions, and
time-reversal imaging with broadband sub-wavelength signals.
"""

__version__ = "0.1.0"
