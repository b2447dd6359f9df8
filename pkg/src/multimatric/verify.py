"""Checks that make the density, Jacobian and sampler claims falsifiable.

Each check returns a :class:`CheckReport`.  Named checks with fixed shapes and
seeds live in :data:`CHECKS`; ``run_checks`` drives them for the CLI.
"""

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import integrate, stats

from .densities import FAMILY_NAMES, KERNEL_FAMILIES, _COMPANION, default_split, logpdf, logpdf_marginal
from .errors import DomainError, ShapeError
from .kernels import make_kernel, parse_kernel
from .linalg import gram, logdet, symmetrize
from .rng import RngStream
from .samplers import sample_family
from .shapes import ExtendedShape
from .transforms import (
    beta1_to_beta2,
    beta2_to_beta1,
    combination_logdet,
    combination_matrix,
    invert_spd,
    r_to_t,
    t_to_r,
)


@dataclass
class CheckReport:
    name: str
    statistic: float
    target: float
    tolerance: float
    passed: bool
    detail: str = ""

    def to_dict(self):
        return asdict(self)


def _report(name, statistic, target, tolerance, detail=""):
    ok = bool(np.isfinite(statistic) and abs(statistic - target) <= tolerance)
    return CheckReport(name, float(statistic), float(target), float(tolerance), ok, detail)


# ----------------------------------------------------------------------------
# scalar coordinate layouts at m = 1

_SYMBOL_KIND = {"T": "real", "F": "pos", "R": "ball", "U": "unit"}


def scalar_layout(name, shape, split=None):
    """(kind, rows) per matrix of an m=1 draw; kinds are pos, unit, real, ball."""
    if shape.m != 1:
        raise ShapeError("scalar layouts exist only for m=1")
    dof = [2.0 * v for v in shape.all_a]
    if name in ("gen-wishart", "gw-inv-wishart", "beta2-inv"):
        count = len(shape.all_a) if name != "beta2-inv" else shape.k
        return [("pos", 1)] * count
    if name in _COMPANION:
        fam = _COMPANION[name]
        kind = {"T": "real", "beta2": "pos", "pearson2": "ball", "beta1": "unit"}[fam]
        comps = [(kind, int(round(n)) if kind in ("real", "ball") else 1) for n in dof[1:]]
        return [("pos", 1)] + comps if name.startswith("wishart-") else comps
    if name == "tri-wtp2":
        return [("pos", 1), ("real", int(round(dof[1]))), ("ball", int(round(dof[2])))]
    if name == "tri-wb2b1":
        return [("pos", 1), ("pos", 1), ("unit", 1)]
    raise ShapeError(f"unknown family {name!r}")


def _kinds(layout):
    return [kind for kind, rows in layout for _ in range(rows)]


def _unflatten(x, layout):
    mats, pos = [], 0
    for _, rows in layout:
        mats.append(np.asarray(x[pos:pos + rows], dtype=float).reshape(rows, 1))
        pos += rows
    return mats


def _to_unit(x, kind):
    if kind == "pos":
        return x / (1.0 + x)
    if kind == "real":
        return 0.5 + np.arctan(x) / math.pi
    if kind == "ball":
        return 0.5 * (x + 1.0)
    return x


def _from_unit(y, kind):
    """Coordinate x(y) and |dx/dy| for y in (0, 1)."""
    if kind == "pos":
        return y / (1.0 - y), 1.0 / (1.0 - y) ** 2
    if kind == "real":
        x = math.tan(math.pi * (y - 0.5))
        return x, math.pi * (1.0 + x * x)
    if kind == "ball":
        return 2.0 * y - 1.0, 2.0
    return y, 1.0


def _unit_density(name, shape, kernel, split, layout):
    kinds = _kinds(layout)

    def density(*ys):
        xs, jac = [], 1.0
        for y, kind in zip(ys, kinds):
            if y <= 0.0 or y >= 1.0:
                return 0.0
            x, d = _from_unit(y, kind)
            xs.append(x)
            jac *= d
        lp = logpdf(name, _unflatten(xs, layout), shape, kernel, split)
        return math.exp(lp) * jac if lp > -math.inf else 0.0

    return density


def _box_integral(func, boxes, epsabs, epsrel=1e-5):
    # nquad treats its first argument as innermost; integrate the first
    # coordinate outermost so anchor spikes near the boundary are resolved
    reverse = lambda *ys: func(*ys[::-1])
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        value, _ = integrate.nquad(reverse, boxes[::-1], opts={"epsabs": epsabs, "epsrel": epsrel, "limit": 200})
    return value


def _gauss_box_integral(func, boxes, nodes=10):
    t, w = np.polynomial.legendre.leggauss(nodes)
    grids = [(0.5 * (hi - lo) * t + 0.5 * (hi + lo), 0.5 * (hi - lo) * w) for lo, hi in boxes]
    total = 0.0
    for idx in np.ndindex(*(nodes,) * len(boxes)):
        point = [grids[d][0][i] for d, i in enumerate(idx)]
        weight = np.prod([grids[d][1][i] for d, i in enumerate(idx)])
        total += weight * func(*point)
    return total


# ----------------------------------------------------------------------------
# normalisation


def check_normalization(name, shape, kernel=None, method="quadrature", split=None, n_draws=20000, seed=0):
    """Total mass of a family's density.

    ``quadrature`` needs m=1 and at most two scalar coordinates; the mass must
    be 1 within 1e-3.  ``importance`` draws from the gaussian-kernel sampler
    and averages target/proposal weights; the mean must be 1 within three
    Monte Carlo standard errors.
    """
    label = f"normalization:{name}:{method}"
    if kernel is not None and kernel.dim != shape.total_dim:
        kernel = kernel.rebind(shape.total_dim)
    if name in KERNEL_FAMILIES and kernel is None:
        kernel = make_kernel("gaussian", dim=shape.total_dim)
    if method == "quadrature":
        try:
            layout = scalar_layout(name, shape, split)
        except ShapeError as exc:
            return CheckReport(label, math.nan, 1.0, 1e-3, False, str(exc))
        d = len(_kinds(layout))
        if d > 2:
            return CheckReport(label, math.nan, 1.0, 1e-3, False, f"{d} coordinates; quadrature handles at most 2")
        density = _unit_density(name, shape, kernel, split, layout)
        try:
            mass = _box_integral(density, [(0.0, 1.0)] * d, epsabs=1e-6)
        except integrate.IntegrationWarning as exc:
            return CheckReport(label, math.nan, 1.0, 1e-3, False, f"quadrature failed: {exc}")
        return _report(label, mass, 1.0, 1e-3, f"{d}-D Gauss-Kronrod over (0,1)^{d}")
    if method == "importance":
        gauss = make_kernel("gaussian", dim=shape.total_dim)
        draws = sample_family(name, shape, gauss, n_draws, RngStream(seed), split=split)
        logw = np.empty(n_draws)
        for i in range(n_draws):
            mats = [D[i] for D in draws]
            target = logpdf(name, mats, shape, kernel, split)
            proposal = logpdf(name, mats, shape, gauss, split) if name in KERNEL_FAMILIES else target
            logw[i] = target - proposal
        w = np.exp(logw)
        mean = float(np.mean(w))
        se = float(np.std(w, ddof=1) / math.sqrt(n_draws))
        return _report(label, mean, 1.0, 3.0 * se, f"{n_draws} importance draws, se={se:.3g}")
    raise ValueError(f"unknown method {method!r}")


# ----------------------------------------------------------------------------
# Jacobians


def _random_spd(rng, m, low=0.2, high=3.0):
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    return symmetrize((Q * rng.uniform(low, high, m)) @ Q.T)


def _triu_map(func, m):
    iu = np.triu_indices(m)

    def to_mat(v):
        S = np.zeros((m, m))
        S[iu] = v
        return S + np.triu(S, 1).T

    def mapped(v):
        return func(to_mat(v))[iu]

    def from_mat(S):
        return np.asarray(S)[iu]

    return mapped, from_mat


def _fd_logdet(func, x0, eps):
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    J = np.empty((func(x0).size, n))
    for j in range(n):
        step = np.zeros(n)
        step[j] = eps
        J[:, j] = (func(x0 + step) - func(x0 - step)) / (2.0 * eps)
    return np.linalg.slogdet(J)[1]


def _jacobian_trial(name, n, m, rng):
    """Return (map on flat coordinates, point, claimed log-Jacobian) or None to resample."""
    if name == "t_to_r":
        T = rng.standard_normal((n, m))
        return (lambda v: t_to_r(v.reshape(n, m))[0].ravel()), T.ravel(), t_to_r(T)[1]
    if name == "r_to_t":
        # central differences lose accuracy as I - R'R degenerates
        R = rng.standard_normal((n, m)) * rng.uniform(0.1, 0.9) / math.sqrt(n * m)
        if np.linalg.norm(R, 2) >= 0.9:
            return None
        claimed = r_to_t(R)[1]
        return (lambda v: r_to_t(v.reshape(n, m))[0].ravel()), R.ravel(), claimed
    if name == "invert_spd":
        # log_jac is ln|dV/dW|: the inversion map differentiated at W
        W, claimed = invert_spd(_random_spd(rng, m))
        mapped, flat = _triu_map(lambda S: np.linalg.inv(S), m)
        return mapped, flat(W), claimed
    if name == "beta1_to_beta2":
        U = _random_spd(rng, m, 0.05, 0.95)
        _, claimed = beta1_to_beta2(U, return_log_jac=True)
        mapped, flat = _triu_map(lambda S: beta1_to_beta2(S), m)
        return mapped, flat(U), claimed
    if name == "beta2_to_beta1":
        F = _random_spd(rng, m)
        _, claimed = beta2_to_beta1(F, return_log_jac=True)
        mapped, flat = _triu_map(lambda S: beta2_to_beta1(S), m)
        return mapped, flat(F), claimed
    raise ValueError(f"unknown transform {name!r}")


TRANSFORMS = ("t_to_r", "r_to_t", "invert_spd", "beta1_to_beta2", "beta2_to_beta1")


def check_jacobian_fd(name, n, m, trials=100, eps=1e-6, seed=0, tol=1e-5):
    """Largest relative gap between exp(log_jac) and a central-difference determinant.

    Symmetric-matrix maps (``n`` ignored) are differentiated over their
    upper-triangle coordinates.
    """
    rng = np.random.default_rng(seed)
    worst, resampled, done = 0.0, 0, 0
    while done < trials:
        trial = _jacobian_trial(name, n, m, rng)
        if trial is None:
            resampled += 1
            continue
        func, x0, claimed = trial
        try:
            fd = _fd_logdet(func, x0, eps)
        except DomainError:
            resampled += 1
            continue
        worst = max(worst, abs(math.expm1(fd - float(claimed))))
        done += 1
    return _report(
        f"jacobian:{name}:n={n},m={m}", worst, 0.0, tol, f"{trials} trials, eps={eps:g}, {resampled} resampled"
    )


# ----------------------------------------------------------------------------
# identities and pushforwards


def random_unit_interval_spd(rng, m, low=0.02, high=0.98):
    """Random U with U and I - U both positive definite."""
    return _random_spd(rng, m, low, high)


def check_bimatrix_identity(trials=1000, m=3, seed=0, tol=1e-10):
    """Combination determinant for k=2 against ln|I - U1 U2|."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    eye = np.eye(m)
    for _ in range(trials):
        U1 = random_unit_interval_spd(rng, m)
        U2 = random_unit_interval_spd(rng, m)
        sign_c, ld_c = np.linalg.slogdet(combination_matrix([U1, U2]))
        sign_t, ld_t = np.linalg.slogdet(eye - U1 @ U2)
        if sign_c <= 0 or sign_t <= 0:
            return _report(f"bimatrix:m={m}", math.inf, 0.0, tol, "nonpositive determinant")
        sym = combination_logdet([U1, U2])
        worst = max(worst, abs(ld_c - ld_t), abs(sym - ld_t))
    return _report(f"bimatrix:m={m}", worst, 0.0, tol, f"{trials} random pairs")


PUSHFORWARDS = {("t", "pearson2"), ("beta2", "beta1")}


def check_pushforward(src, dst, trials=500, shape=None, seed=0, tol=1e-10):
    """Max gap between the destination log-density and the transported source.

    ``t -> pearson2``: f_R(R) = f_T(r_to_t(R)) + sum of r_to_t log-Jacobians.
    ``beta2 -> beta1``: f_U(U) = f_F(F(U)) + sum of ln|dF/dU|.
    """
    if (src, dst) not in PUSHFORWARDS:
        raise ValueError(f"no registered pushforward {src} -> {dst}")
    rng = np.random.default_rng(seed)
    if shape is None:
        shape = ExtendedShape.from_dof(2, (3, 2, 4)) if src == "t" else ExtendedShape(2, 2.5, (1.5, 2.25))
    m = shape.m
    worst = 0.0
    for _ in range(trials):
        if src == "t":
            Rs = [t_to_r(rng.standard_normal((int(round(2 * ai)), m)) * rng.uniform(0.2, 2.0))[0] for ai in shape.a]
            pairs = [r_to_t(R) for R in Rs]
            lhs = logpdf_marginal("pearson2", Rs, shape)
            rhs = logpdf_marginal("T", [T for T, _ in pairs], shape) + sum(lj for _, lj in pairs)
        else:
            Us = [random_unit_interval_spd(rng, m) for _ in shape.a]
            pairs = [beta1_to_beta2(U, return_log_jac=True) for U in Us]
            lhs = logpdf_marginal("beta1", Us, shape)
            rhs = logpdf_marginal("beta2", [F for F, _ in pairs], shape) + sum(lj for _, lj in pairs)
        worst = max(worst, abs(lhs - rhs))
    return _report(f"pushforward:{src}->{dst}", worst, 0.0, tol, f"{trials} random points, m={m}, k={shape.k}")


# ----------------------------------------------------------------------------
# samplers against densities


def _reduce_to_first(name, shape):
    """Marginal families with k > 1 are checked through their first companion."""
    if name in ("t", "beta2", "pearson2", "beta1") and shape.k > 1:
        return ExtendedShape(shape.m, shape.a0, shape.a[:1])
    return shape


def check_sampler_density(name, shape, kernel=None, n_draws=100_000, seed=0, bins=None, split=None, p_min=0.01):
    """Chi-square goodness of fit of binned m=1 draws against the density.

    Draws are mapped coordinatewise into (0,1)^d (d <= 3) and binned on an
    equal-width grid; expected cell masses come from adaptive quadrature
    (d <= 2) or tensor Gauss-Legendre (d = 3).  Passes when p > ``p_min``.
    """
    label = f"sampler:{name}"
    kernel = kernel or make_kernel("gaussian", dim=shape.total_dim)
    if kernel.dim != shape.total_dim:
        kernel = kernel.rebind(shape.total_dim)
    draws = sample_family(name, shape, kernel, n_draws, RngStream(seed), split=split)
    eval_shape = _reduce_to_first(name, shape)
    if eval_shape is not shape:
        draws = draws[:1]
    layout = scalar_layout(name, eval_shape, split)
    kinds = _kinds(layout)
    d = len(kinds)
    if d > 3:
        return CheckReport(label, math.nan, p_min, 0.0, False, f"{d} coordinates; at most 3 supported")
    x = np.concatenate([D.reshape(n_draws, -1) for D in draws], axis=1)
    y = np.column_stack([_to_unit(x[:, j], kind) for j, kind in enumerate(kinds)])
    bins = bins or {1: 40, 2: 8, 3: 4}[d]
    edges = np.linspace(0.0, 1.0, bins + 1)
    observed, _ = np.histogramdd(y, bins=[edges] * d)
    eval_kernel = kernel.rebind(eval_shape.total_dim) if name in KERNEL_FAMILIES else None
    density = _unit_density(name, eval_shape, eval_kernel, split, layout)
    expected = np.empty(observed.shape)
    for cell in np.ndindex(*observed.shape):
        boxes = [(edges[i], edges[i + 1]) for i in cell]
        if d <= 2:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                expected[cell] = integrate.nquad(density, boxes, opts={"epsabs": 1e-8, "epsrel": 1e-4, "limit": 100})[0]
        else:
            expected[cell] = _gauss_box_integral(density, boxes)
    obs, exp = _merge_small(observed.ravel(), expected.ravel() / expected.sum() * n_draws)
    _, p = stats.chisquare(obs, exp)
    return CheckReport(label, float(p), p_min, 0.0, bool(p > p_min), f"{len(obs)} cells after merging, {n_draws} draws")


def _merge_small(observed, expected, min_expected=5.0):
    obs, exp = [], []
    acc_o = acc_e = 0.0
    for o, e in zip(observed, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            obs.append(acc_o)
            exp.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and exp:
        obs[-1] += acc_o
        exp[-1] += acc_e
    obs, exp = np.array(obs), np.array(exp)
    return obs, exp * obs.sum() / exp.sum()


def check_kernel_invariance(shape=None, n_draws=100_000, seed=0, p_min=0.01):
    """Two-sample KS on tr F_1 between gaussian- and pearson7(nu=5)-kernel beta II draws."""
    shape = shape or ExtendedShape.from_dof(2, (4, 3, 3))
    dim = shape.total_dim
    a = sample_family("beta2", shape, make_kernel("gaussian", dim=dim), n_draws, RngStream(seed))[0]
    b = sample_family("beta2", shape, make_kernel("pearson7", {"nu": 5}, dim), n_draws, RngStream(seed + 1))[0]
    p = stats.ks_2samp(np.trace(a, axis1=1, axis2=2), np.trace(b, axis1=1, axis2=2)).pvalue
    return CheckReport("invariance:beta2:gaussian-vs-pearson7", float(p), p_min, 0.0, bool(p > p_min),
                       f"{n_draws} draws per kernel, m={shape.m}, k={shape.k}")


def check_wishart_mean(m=2, n0=5, n_draws=100_000, seed=0):
    """Sample mean of V0 under the gaussian kernel against n0 I, in standard errors."""
    shape = ExtendedShape.from_dof(m, (n0,))
    V = sample_family("gen-wishart", shape, make_kernel("gaussian", dim=n0 * m), n_draws, RngStream(seed))[0]
    mean = V.mean(axis=0)
    se = V.std(axis=0, ddof=1) / math.sqrt(n_draws)
    z = float(np.max(np.abs(mean - n0 * np.eye(m)) / se))
    return _report(f"wishart-mean:m={m},n0={n0}", z, 0.0, 3.0, "max |mean - n0 I| in standard errors")


# ----------------------------------------------------------------------------
# registry


def _dof(m, *n):
    return ExtendedShape.from_dof(m, n)


def _gauss(shape):
    return make_kernel("gaussian", dim=shape.total_dim)


def _kern(text, shape):
    return parse_kernel(text, shape.total_dim)


_NORMALIZATION_CASES = {
    "gen-wishart": [(_dof(1, 1, 2), "gaussian", "quadrature"), (_dof(2, 3, 4), "kotz:T=2,r=0.5,s=1", "importance")],
    "wishart-t": [(_dof(1, 1, 1), "gaussian", "quadrature")],
    "t": [(_dof(1, 1, 1), None, "quadrature"), (_dof(1, 2, 1, 1), None, "quadrature")],
    "wishart-beta2": [(_dof(1, 1, 1), "pearson7:nu=5", "quadrature")],
    "beta2": [(ExtendedShape(1, 1.0, (1.0,)), None, "quadrature"), (ExtendedShape(1, 1.0, (1.0, 1.5)), None, "quadrature")],
    "wishart-pearson2": [(_dof(1, 2, 1), "kotz:T=2,r=0.5,s=1", "quadrature")],
    "pearson2": [(_dof(1, 1, 1), None, "quadrature"), (_dof(1, 2, 1, 1), None, "quadrature")],
    "wishart-beta1": [(_dof(1, 2, 2), "gaussian", "quadrature")],
    "beta1": [(ExtendedShape(1, 1.0, (1.0,)), None, "quadrature"), (ExtendedShape(1, 2.5, (1.0, 2.0)), None, "quadrature")],
    "tri-wtp2": [(_dof(1, 3, 1, 1), "kotz:T=2,r=0.5,s=1", "importance")],
    "tri-wb2b1": [(_dof(1, 3, 2, 2), "kotz:T=2,r=0.5,s=1", "importance")],
    "gw-inv-wishart": [(_dof(1, 3, 4), "gaussian", "quadrature")],
    "beta2-inv": [(ExtendedShape(1, 1.0, (1.0, 1.5)), None, "quadrature")],
}

_SAMPLER_CASES = {
    "gen-wishart": [(_dof(1, 3), "gaussian")],
    "wishart-t": [(_dof(1, 2, 1), "gaussian")],
    "t": [(_dof(1, 1, 1), "gaussian")],
    "wishart-beta2": [(_dof(1, 2, 2), "pearson7:nu=5")],
    "beta2": [(_dof(1, 4, 3), "gaussian"), (_dof(1, 4, 3, 2), "pearson7:nu=5")],
    "wishart-pearson2": [(_dof(1, 3, 1), "gaussian")],
    "pearson2": [(_dof(1, 3, 1), "gaussian")],
    "wishart-beta1": [(_dof(1, 2, 2), "gaussian")],
    "beta1": [(_dof(1, 2, 2), "gaussian")],
    "tri-wtp2": [(_dof(1, 3, 1, 1), "gaussian")],
    "tri-wb2b1": [(_dof(1, 3, 2, 2), "gaussian")],
    "gw-inv-wishart": [(_dof(1, 3, 4), "gaussian")],
    "beta2-inv": [(_dof(1, 4, 3, 3), "gaussian")],
}


def _build_registry():
    checks = {}
    for name, cases in _NORMALIZATION_CASES.items():
        for i, (shape, ktext, method) in enumerate(cases):
            kernel = _kern(ktext, shape) if ktext else None
            checks[f"normalization:{name}:{i}"] = (
                lambda name=name, shape=shape, kernel=kernel, method=method:
                check_normalization(name, shape, kernel, method)
            )
    seed = 0
    for name, cases in _SAMPLER_CASES.items():
        for i, (shape, ktext) in enumerate(cases):
            kernel = _kern(ktext, shape)
            # every registered case gets its own fixed stream
            seed += 1
            checks[f"sampler:{name}:{i}"] = (
                lambda name=name, shape=shape, kernel=kernel, seed=seed: check_sampler_density(name, shape, kernel, seed=seed)
            )
    for tname in TRANSFORMS:
        sizes = [(1, 1), (2, 1), (2, 2), (3, 2)] if tname in ("t_to_r", "r_to_t") else [(1, 1), (2, 2), (3, 3)]
        for n, m in sizes:
            checks[f"jacobian:{tname}:{n}x{m}"] = lambda tname=tname, n=n, m=m: check_jacobian_fd(tname, n, m)
    checks["bimatrix"] = check_bimatrix_identity
    checks["pushforward:t->pearson2"] = lambda: check_pushforward("t", "pearson2")
    checks["pushforward:beta2->beta1"] = lambda: check_pushforward("beta2", "beta1")
    checks["invariance"] = check_kernel_invariance
    checks["wishart-mean"] = check_wishart_mean
    return checks


CHECKS = _build_registry()


def registry_gaps():
    """Families lacking a normalization or sampler-density check."""
    gaps = []
    for name in FAMILY_NAMES:
        if name not in _NORMALIZATION_CASES:
            gaps.append(f"{name}: no normalization check")
        if name not in _SAMPLER_CASES:
            gaps.append(f"{name}: no sampler-density check")
    return gaps


assert not registry_gaps(), registry_gaps()


def run_checks(names):
    """Run named checks, yielding reports in order."""
    for name in names:
        if name not in CHECKS:
            raise KeyError(name)
        yield CHECKS[name]()
