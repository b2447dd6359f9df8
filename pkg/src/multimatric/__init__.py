"""Multimatricvariate distributions: densities, samplers, Jacobians and ML fitting."""

from .densities import (
    FAMILY_NAMES,
    logpdf,
    logpdf_elliptical,
    logpdf_gen_wishart,
    logpdf_inverted,
    logpdf_marginal,
    logpdf_trimatric,
    logpdf_wishart_companion,
    matrix_names,
)
from .errors import DomainError, NearSingularError, ShapeError
from .kernels import KernelSpec, log_h, make_kernel, parse_kernel
from .rng import RngStream
from .samplers import sample_family, sample_spherical
from .shapes import ExtendedShape, ScaleSet

__version__ = "0.1.0"
