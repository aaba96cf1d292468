"""gjmslab: a numerical laboratory for the fractional conformal operators on
hyperbolic space -- their Gamma-ratio spectral symbols, the radial
spherical-transform calculus, conformal bubble asymptotics, and
Poincare-Sobolev quotient minimization."""

from .bubbles import BubbleParams, bubble, cutoff, crit_mass, derivative_bound_check, \
    energy_asymptotics_experiment, fractional_energy, hyperbolic_l2_mass, radial_fourier
from .errors import (
    BudgetExceeded,
    DegenerateData,
    DomainError,
    GjmsLabError,
    NonConvergence,
    ParameterError,
    ParameterPole,
    PoleError,
    SupportError,
    TailError,
    UnsupportedOrder,
    ZeroTrial,
)
from .geometry import conformal_factor, conformal_lift, distance, mobius
from .grids import GridKind, RadialFunction, RadialGrid, Space, SpectralProfile
from .multipliers import b_constant, gap_constant, integer_multiplier, multiplier, \
    spectral_bottom, verify_decomposition
from .params import MultiplierKind, Params
from .quotients import BubbleFamily, QuotientReport, SplineFamily, bubble_quotient, \
    gap_scan, minimize_quotient, multibump_blowdown, sharp_constant_estimate, \
    sobolev_quotient
from .special import SpecialConfig, abs_gamma_sq, bessel_j, hyp2f1, legendre_p, log_gamma
from .spherical import decay_rate_fit, inverse_spherical_transform, plancherel_density, \
    quadratic_form, regularized_kernel, spherical_function, spherical_transform

__version__ = "0.1.0"
