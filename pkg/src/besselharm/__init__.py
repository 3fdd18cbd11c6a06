"""besselharm: product harmonic analysis toolkit on the weighted half-line.

Kernels, semigroups, square/area/maximal functions, Riesz transforms, and
atoms for the measure x^(2*lambda) dx on (0, inf) and its product, plus a
verification harness that runs the equivalence theorems as desk-scale
numerical experiments.
"""

from .geometry import BesselParam, DyadicConfig, Interval, RadialGrid, make_log_grid

__all__ = ["BesselParam", "DyadicConfig", "Interval", "RadialGrid", "make_log_grid"]
__version__ = "0.1.0"
