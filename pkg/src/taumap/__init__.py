"""Exact Taylor coefficients of the dispersionless Toda free energy and the
exterior conformal maps they encode."""

from .exactring import FormalSeries, MomentVector, T0Monomial, TMonomial
from .taucoeffs import n_coeff, tau_series

__all__ = ["FormalSeries", "MomentVector", "T0Monomial", "TMonomial", "n_coeff", "tau_series"]
__version__ = "0.1.0"
