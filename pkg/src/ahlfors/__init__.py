"""Extremal-derivative polynomial quantities on interval and arc systems.

The package computes the Chebyshev-type quantity

    A_n(z0; E) = sup{ |P'(z0)| : deg P <= n, ||P||_E <= 1, P(z0) = 0 }

by a brute-force semi-infinite LP oracle, together with the potential-theory
machinery (comb maps, Green/Martin functions, harmonic measures, Abelian
differentials, Abel-Jacobi type inversion, reproducing kernels) that predicts
its large-n asymptotics, so the two can be compared.
"""

__version__ = "0.1.0"

from .geometry import (
    ArcSystem,
    BandSystem,
    GapPoint,
    MoebiusMap,
    halfplane_maps,
    moebius_reduce,
    validate_system,
)

__all__ = [
    "__version__",
    "ArcSystem",
    "BandSystem",
    "GapPoint",
    "MoebiusMap",
    "halfplane_maps",
    "moebius_reduce",
    "validate_system",
]
