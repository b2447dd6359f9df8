"""Log-space special functions: multivariate gamma, Stiefel and sphere volumes."""

import math

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

LN_PI = math.log(math.pi)
LN_2 = math.log(2.0)


def ln_mv_gamma(m, a):
    """Log of the real multivariate gamma function Gamma_m(a).

    ``ln Gamma_m(a) = m(m-1)/4 ln(pi) + sum_{i=1..m} ln Gamma(a - (i-1)/2)``,
    defined for ``a > (m-1)/2``.
    """
    m = int(m)
    if m < 1:
        raise DomainError(f"dimension m must be >= 1, got {m}")
    a = float(a)
    if not a > 0.5 * (m - 1):
        raise DomainError(f"ln_mv_gamma needs a > (m-1)/2 = {0.5 * (m - 1)}, got a={a}")
    shifts = a - 0.5 * np.arange(m)
    return 0.25 * m * (m - 1) * LN_PI + float(np.sum(gammaln(shifts)))


def ln_stiefel_volume(n, m):
    """Log volume of the Stiefel manifold of n x m orthonormal frames.

    Equals ``m ln 2 + (nm/2) ln pi - ln Gamma_m(n/2)``.
    """
    n, m = int(n), int(m)
    if m < 1 or n < m:
        raise DomainError(f"Stiefel manifold needs n >= m >= 1, got n={n}, m={m}")
    return m * LN_2 + 0.5 * n * m * LN_PI - ln_mv_gamma(m, 0.5 * n)


def ln_sphere_area(d):
    """Log surface area of the unit sphere in R^d (d may be any positive real)."""
    d = float(d)
    if not d > 0:
        raise DomainError(f"sphere dimension must be positive, got {d}")
    return LN_2 + 0.5 * d * LN_PI - float(gammaln(0.5 * d))
