"""Numerical laboratory for unstable eigenvalues of the Rayleigh equation.

The pipeline mirrors the constructive route to linear shear-flow
instability: neutral Sturm-Liouville modes, a rank-one projected equation
solved directly and by Neumann series, the principal-value limit of the
spectral coefficient, a certified root of the reduced dispersion function,
and the rescaled inner/outer gluing that approximates the thin vortex
sheet at desk scale.
"""

__version__ = "0.1.0"
