"""Dimension and shape-parameter records shared by densities and samplers."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, ShapeError
from .linalg import check_symmetric, spd_eigh


@dataclass(frozen=True)
class ExtendedShape:
    """Dimension ``m`` plus shape parameters ``a0`` and ``a = (a_1..a_k)``.

    For half-integer shapes ``a_i = n_i / 2`` the degrees of freedom are kept in
    ``integer_view = (n_0, .., n_k)``; constructive sampling needs them.
    """

    m: int
    a0: float
    a: tuple = ()
    integer_view: tuple = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "a", tuple(float(x) for x in np.atleast_1d(self.a)) if np.size(self.a) else ())
        if self.m < 1:
            raise DomainError(f"m must be >= 1, got {self.m}")
        bound = 0.5 * (self.m - 1)
        for value in self.all_a:
            if not value > bound:
                raise DomainError(f"shape parameters must exceed (m-1)/2 = {bound}, got {value}")
        if self.integer_view is None:
            doubled = [2.0 * v for v in self.all_a]
            if all(abs(d - round(d)) < 1e-12 for d in doubled):
                object.__setattr__(self, "integer_view", tuple(int(round(d)) for d in doubled))
        else:
            view = tuple(int(n) for n in self.integer_view)
            if len(view) != len(self.all_a) or any(
                abs(n - 2.0 * v) > 1e-12 for n, v in zip(view, self.all_a)
            ):
                raise ShapeError(f"integer_view {view} does not match shape parameters {self.all_a}")
            object.__setattr__(self, "integer_view", view)

    @classmethod
    def from_dof(cls, m, dof):
        """Shape from degrees of freedom ``(n_0, n_1, .., n_k)``."""
        dof = [int(n) for n in dof]
        if not dof:
            raise ShapeError("need at least n_0")
        return cls(m, 0.5 * dof[0], tuple(0.5 * n for n in dof[1:]), integer_view=tuple(dof))

    @property
    def k(self):
        return len(self.a)

    @property
    def all_a(self):
        return (self.a0,) + self.a

    @property
    def a_star(self):
        return self.a0 + sum(self.a)

    @property
    def total_dim(self):
        """Total element count n* m the kernel normalises over."""
        return 2.0 * self.m * self.a_star

    def require_integer(self, min_rows=True):
        if self.integer_view is None:
            raise DomainError("constructive sampling needs integer degrees of freedom")
        if min_rows and any(n < self.m for n in self.integer_view):
            raise DomainError(f"constructive sampling needs every n_i >= m = {self.m}, got {self.integer_view}")
        return self.integer_view


@dataclass(frozen=True)
class ScaleSet:
    """Per-matrix m x m SPD scale matrices Sigma_i."""

    sigma: tuple

    def __post_init__(self):
        mats = []
        for S in self.sigma:
            S = check_symmetric(S, "scale matrix")
            spd_eigh(S, "scale matrix")
            mats.append(S)
        object.__setattr__(self, "sigma", tuple(mats))

    @classmethod
    def identity(cls, m, count):
        return cls(tuple(np.eye(m) for _ in range(count)))
