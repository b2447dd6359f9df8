"""Elliptical kernels h(u) with their radial normalising constants.

A kernel is bound to a total dimension ``D``: the normalised kernel satisfies
``int_{R^D} h(|x|^2) dx = 1``.  ``D`` may be a non-integer when the kernel
serves a density with real shape parameters.

Supported families::

    gaussian                 h(u) ∝ exp(-u/2)
    pearson7(nu)             h(u) ∝ (1 + u/nu)^(-(D+nu)/2)
    kotz(T, r, s)            h(u) ∝ u^(T-1) exp(-r u^s)
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator
from scipy.special import gammaln

from .errors import DomainError, ShapeError
from .special import ln_sphere_area

FAMILIES = ("gaussian", "pearson7", "kotz")

_PARAM_NAMES = {
    "gaussian": (),
    "pearson7": ("nu",),
    "kotz": ("T", "r", "s"),
}

KOTZ_TABLE_KNOTS = 2048


@dataclass(frozen=True)
class KernelSpec:
    family: str
    params: dict = field(hash=False)
    dim: float
    ln_norm: float

    def rebind(self, dim):
        """Same kernel family and parameters, normalised over ``dim`` dimensions."""
        return make_kernel(self.family, self.params, dim)

    @property
    def name(self):
        if not self.params:
            return self.family
        body = ",".join(f"{key}={value:g}" for key, value in self.params.items())
        return f"{self.family}:{body}"


def _kotz_scaled_integral(T, s, D):
    # int_0^inf x^(D+2T-3) exp(-x^(2s)) dx, by Gauss-Kronrod on x = t/(1-t)
    p = D + 2.0 * T - 3.0

    def integrand(t):
        if t <= 0.0 or t >= 1.0:
            return 0.0
        x = t / (1.0 - t)
        return math.exp(p * math.log(x) - x ** (2.0 * s)) / (1.0 - t) ** 2

    value, _ = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-10, epsrel=1e-12, limit=400)
    return value


def _check_params(family, params, D):
    if family not in _PARAM_NAMES:
        raise DomainError(f"unknown kernel family {family!r}; expected one of {FAMILIES}")
    expected = _PARAM_NAMES[family]
    missing = [key for key in expected if key not in params]
    extra = [key for key in params if key not in expected]
    if missing or extra:
        raise DomainError(
            f"kernel {family} takes parameters {expected}; missing {missing}, unexpected {extra}"
        )
    if not D > 0:
        raise DomainError(f"kernel dimension must be positive, got {D}")
    if family == "pearson7" and not params["nu"] > 0:
        raise DomainError(f"pearson7 needs nu > 0, got {params['nu']}")
    if family == "kotz":
        T, r, s = params["T"], params["r"], params["s"]
        if not (r > 0 and s > 0):
            raise DomainError(f"kotz needs r > 0 and s > 0, got r={r}, s={s}")
        if not T > 1.0 - D / 2.0:
            raise DomainError(
                f"kotz radial integral diverges: need T > 1 - D/2 = {1.0 - D / 2.0}, got T={T}"
            )


def make_kernel(family, params=None, dim=1):
    """Build a normalised kernel over ``dim`` total dimensions."""
    params = {key: float(value) for key, value in (params or {}).items()}
    D = float(dim)
    _check_params(family, params, D)
    if family == "gaussian":
        ln_norm = -0.5 * D * math.log(2.0 * math.pi)
    elif family == "pearson7":
        nu = params["nu"]
        ln_norm = (
            float(gammaln(0.5 * (D + nu))) - 0.5 * D * math.log(math.pi * nu) - float(gammaln(0.5 * nu))
        )
    else:
        T, r, s = params["T"], params["r"], params["s"]
        # rho = r^(-1/(2s)) x pulls the scale out of the quadrature
        ln_scale = -(D + 2.0 * T - 2.0) / (2.0 * s) * math.log(r)
        radial = _kotz_scaled_integral(T, s, D)
        ln_norm = -(ln_sphere_area(D) + ln_scale + math.log(radial))
    return KernelSpec(family, params, D, ln_norm)


def parse_kernel(text, dim=1):
    """Parse ``gaussian``, ``pearson7:nu=5`` or ``kotz:T=2,r=0.5,s=1``."""
    family, _, body = text.strip().partition(":")
    params = {}
    if body:
        for item in body.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise DomainError(f"malformed kernel parameter {item!r} in {text!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise DomainError(f"kernel parameter {key.strip()} is not a number: {value!r}") from None
    return make_kernel(family.strip(), params, dim)


def log_h_raw(spec, u):
    u = np.asarray(u, dtype=float)
    if spec.family == "gaussian":
        return -0.5 * u
    if spec.family == "pearson7":
        nu = spec.params["nu"]
        return -0.5 * (spec.dim + nu) * np.log1p(u / nu)
    T, r, s = spec.params["T"], spec.params["r"], spec.params["s"]
    with np.errstate(divide="ignore"):
        out = (T - 1.0) * np.log(u) - r * u**s
    if T == 1.0:
        out = np.where(u == 0.0, 0.0, out)
    return out


def log_h(spec, u):
    """Log of the normalised kernel at ``u >= 0``."""
    u_arr = np.asarray(u, dtype=float)
    if np.any(u_arr < 0):
        raise DomainError("kernel argument must be nonnegative")
    out = spec.ln_norm + log_h_raw(spec, u_arr)
    return float(out) if np.ndim(out) == 0 else out


def check_dim(spec, dim, what="density"):
    if abs(spec.dim - float(dim)) > 1e-9 * max(1.0, float(dim)):
        raise ShapeError(f"kernel is normalised over D={spec.dim:g} but the {what} needs D={float(dim):g}")


@lru_cache(maxsize=64)
def _kotz_inverse_cdf(T, s, D):
    """Tabulated inverse CDF of the scaled Kotz radius x (rho = r^(-1/(2s)) x)."""
    p = D + 2.0 * T - 3.0

    def log_g(x):
        return p * np.log(x) - x ** (2.0 * s)

    # push the upper knot out until the density is e^-60 below its mode
    x_mode = (max(p, 0.0) / (2.0 * s)) ** (1.0 / (2.0 * s))
    peak = log_g(max(x_mode, 1e-300)) if p > 0 else log_g(1e-8)
    x_hi = max(2.0 * x_mode, 1.0)
    while log_g(x_hi) > peak - 60.0:
        x_hi *= 1.5
    knots = x_hi * np.linspace(0.0, 1.0, KOTZ_TABLE_KNOTS) ** 2

    def g(x):
        return math.exp(p * math.log(x) - x ** (2.0 * s)) if x > 0 else 0.0

    pieces = np.array(
        [integrate.quad(g, lo, hi, epsabs=0.0, epsrel=1e-11)[0] for lo, hi in zip(knots[:-1], knots[1:])]
    )
    cdf = np.concatenate([[0.0], np.cumsum(pieces)])
    cdf /= cdf[-1]
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return PchipInterpolator(cdf[keep], knots[keep])


def kotz_radius_quantile(spec, q):
    """Radius quantile from the tabulated Kotz radial CDF."""
    T, r, s = spec.params["T"], spec.params["r"], spec.params["s"]
    inverse = _kotz_inverse_cdf(T, s, spec.dim)
    return r ** (-1.0 / (2.0 * s)) * inverse(np.asarray(q, dtype=float))


def sample_radius(spec, rng, size=None):
    """Draw radii with density proportional to rho^(D-1) h(rho^2).

    ``rng`` is a ``numpy.random.Generator``.
    """
    D = spec.dim
    if spec.family == "gaussian":
        return np.sqrt(rng.chisquare(D, size=size))
    if spec.family == "pearson7":
        nu = spec.params["nu"]
        mix = rng.gamma(0.5 * nu, 2.0 / nu, size=size)
        return np.sqrt(rng.chisquare(D, size=size) / mix)
    return kotz_radius_quantile(spec, rng.random(size=size))
