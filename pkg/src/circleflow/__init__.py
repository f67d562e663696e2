"""Laguerre-type polynomials on the unit circle, the free unitary Poisson law
and the finite free convolution flow that connects them."""
from .polycore import (
    EmpiricalAngles,
    RootCountError,
    UnitPoly,
    apply_D,
    empirical_moments,
    ffm_conv,
    laguerre,
    poly_from_angles,
    psi_empirical,
    roots_on_circle,
    trig_eval,
    trig_laguerre,
    wrap_angle,
)
from .series_engine import SeriesError, TruncSeries, compose, conv_moments, invert, pde_residual
from .unitary_poisson import (
    QuadratureError,
    atom_weight,
    cdf,
    circular_law,
    density,
    moment,
    moment_table,
    quantile,
    sample,
)
from .zetasolver import ZetaError, r_func, x_t, zeta

__version__ = "0.1.0"

__all__ = [
    "EmpiricalAngles",
    "QuadratureError",
    "RootCountError",
    "SeriesError",
    "TruncSeries",
    "UnitPoly",
    "ZetaError",
    "apply_D",
    "atom_weight",
    "cdf",
    "circular_law",
    "compose",
    "conv_moments",
    "density",
    "empirical_moments",
    "ffm_conv",
    "invert",
    "laguerre",
    "moment",
    "moment_table",
    "pde_residual",
    "poly_from_angles",
    "psi_empirical",
    "quantile",
    "roots_on_circle",
    "r_func",
    "sample",
    "trig_eval",
    "trig_laguerre",
    "wrap_angle",
    "x_t",
    "zeta",
]
