"""Numerical laboratory for volume growth, Busemann functions and boundary measures on surfaces."""

from .errors import (
    BudgetExceeded,
    ConjugatePointError,
    DegenerateInputError,
    DomainError,
    HorizonError,
    HorolabError,
    MetricInvalidError,
    NumericFailure,
    PairingError,
)
from .fuchsian import Isometry, SurfaceGroup, build_genus2_group, enumerate_orbit, count_series, reduce_to_domain
from .metric import HyperbolicMetric, PerturbedMetric, conformal_factor, curvature_at, hyperbolic_distance
from .series import GrowthSeries

__version__ = "0.1.0"
