"""Log-densities of the multimatricvariate families.

All densities are evaluated in log space with respect to Lebesgue measure on
the free coordinates (all entries of rectangular blocks, upper triangles of
symmetric matrices).  Kernel-dependent densities take a kernel normalised
over the total dimension ``2 m a*`` of the underlying spherical matrix, so
every density integrates to one.

Points outside an open domain (a non-SPD matrix, a block outside the unit
ball) evaluate to ``-inf``; wrong shapes raise ``ShapeError``.
"""

import math
from functools import wraps

import numpy as np

from .errors import DomainError, ShapeError
from .kernels import check_dim, log_h
from .linalg import check_symmetric, gram, inv_spd, logdet, sym_sqrt, symmetrize
from .shapes import ExtendedShape, ScaleSet
from .special import LN_PI, ln_mv_gamma
from .transforms import combination_logdet

#: Families exposed to the command line, with the matrices each draw holds.
FAMILY_NAMES = (
    "gen-wishart",
    "wishart-t",
    "t",
    "wishart-beta2",
    "beta2",
    "wishart-pearson2",
    "pearson2",
    "wishart-beta1",
    "beta1",
    "tri-wtp2",
    "tri-wb2b1",
    "gw-inv-wishart",
    "beta2-inv",
)

_COMPANION = {
    "wishart-t": "T",
    "t": "T",
    "wishart-beta2": "beta2",
    "beta2": "beta2",
    "wishart-pearson2": "pearson2",
    "pearson2": "pearson2",
    "wishart-beta1": "beta1",
    "beta1": "beta1",
}

_ANCHOR_SYMBOL = {"T": "V0", "beta2": "V0", "pearson2": "W0", "beta1": "W0"}
_COMPANION_SYMBOL = {"T": "T", "beta2": "F", "pearson2": "R", "beta1": "U"}

KERNEL_FAMILIES = frozenset(
    ["gen-wishart", "wishart-t", "wishart-beta2", "wishart-pearson2", "wishart-beta1",
     "tri-wtp2", "tri-wb2b1", "gw-inv-wishart"]
)


def _domain_to_neg_inf(func):
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except DomainError:
            return -math.inf

    return wrapper


def _half(m):
    return 0.5 * (m + 1)


def _spd(S, m, name):
    S = check_symmetric(S, name)
    if S.shape != (m, m):
        raise ShapeError(f"{name} must be {m}x{m}, got {S.shape}")
    return S


def _blocks_for(comp, shape, name):
    """Validate rectangular companions against a_i = rows/2."""
    if len(comp) != shape.k:
        raise ShapeError(f"expected {shape.k} companion blocks, got {len(comp)}")
    out = []
    for i, (X, ai) in enumerate(zip(comp, shape.a), start=1):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != shape.m:
            raise ShapeError(f"{name}{i} must be n_i x {shape.m}, got shape {X.shape}")
        if abs(X.shape[0] - 2.0 * ai) > 1e-12:
            raise ShapeError(f"{name}{i} has {X.shape[0]} rows but a_{i}={ai} implies {2.0 * ai}")
        out.append(X)
    return out


def _spds_for(comp, shape, name):
    if len(comp) != shape.k:
        raise ShapeError(f"expected {shape.k} companion matrices, got {len(comp)}")
    return [_spd(S, shape.m, f"{name}{i}") for i, S in enumerate(comp, start=1)]


def _kernel_for(kernel, shape, what):
    if kernel is None:
        raise ShapeError(f"{what} needs a kernel")
    check_dim(kernel, shape.total_dim, what)
    return kernel


def _pearson_sum(Bs, m):
    """I + sum (I - B_i)^(-1) B_i for B_i = R_i'R_i or U_i."""
    eye = np.eye(m)
    total = eye.copy()
    for B in Bs:
        total += symmetrize(inv_spd(eye - B) @ B)
    return total


# ----------------------------------------------------------------------------
# elliptical and generalised Wishart


@_domain_to_neg_inf
def logpdf_elliptical(Z, mu, Sigma, Theta, kernel):
    """Matrix elliptical log-density of an N x m matrix Z.

    ``-(m/2) ln|Sigma| - (N/2) ln|Theta| + ln h(tr Sigma^-1 (Z-mu) Theta^-1 (Z-mu)')``
    """
    Z = np.asarray(Z, dtype=float)
    mu = np.broadcast_to(np.asarray(mu, dtype=float), Z.shape)
    if Z.ndim != 2:
        raise ShapeError(f"Z must be N x m, got shape {Z.shape}")
    N, m = Z.shape
    Sigma = _spd(Sigma, N, "Sigma")
    Theta = _spd(Theta, m, "Theta")
    check_dim(kernel, N * m, "elliptical density")
    D = Z - mu
    u = float(np.trace(inv_spd(Sigma) @ D @ inv_spd(Theta) @ D.T))
    return -0.5 * m * logdet(Sigma) - 0.5 * N * logdet(Theta) + log_h(kernel, max(u, 0.0))


@_domain_to_neg_inf
def logpdf_gen_wishart(V, shape, kernel, scales=None):
    """Joint log-density of V_0..V_k, one matrix per entry of ``shape.all_a``."""
    m = shape.m
    all_a = shape.all_a
    if len(V) != len(all_a):
        raise ShapeError(f"expected {len(all_a)} matrices for shape {all_a}, got {len(V)}")
    V = [_spd(S, m, f"V{i}") for i, S in enumerate(V)]
    kernel = _kernel_for(kernel, shape, "generalised Wishart density")
    sig = scales.sigma if scales is not None else None
    if sig is not None and len(sig) != len(V):
        raise ShapeError(f"expected {len(V)} scale matrices, got {len(sig)}")
    total = m * shape.a_star * LN_PI
    trace = 0.0
    for i, (Vi, ai) in enumerate(zip(V, all_a)):
        total += (ai - _half(m)) * logdet(Vi) - ln_mv_gamma(m, ai)
        if sig is None:
            trace += np.trace(Vi)
        else:
            total -= ai * logdet(sig[i])
            trace += np.trace(inv_spd(sig[i]) @ Vi)
    return total + log_h(kernel, trace)


# ----------------------------------------------------------------------------
# Wishart-companion joints and their kernel-free marginals


def _marginal_const(family, shape):
    m = shape.m
    if family in ("T", "pearson2"):
        # blocks were not Gram-reduced: pi^(m (a* - a0)) stays in the denominator
        return ln_mv_gamma(m, shape.a_star) - ln_mv_gamma(m, shape.a0) - m * (shape.a_star - shape.a0) * LN_PI
    return ln_mv_gamma(m, shape.a_star) - sum(ln_mv_gamma(m, ai) for ai in shape.all_a)


@_domain_to_neg_inf
def logpdf_wishart_companion(family, anchor, comp, shape, kernel):
    """Joint log-density of an anchor Gram matrix and its k companions.

    ``family`` selects the companion kind: ``T`` (blocks T_i), ``beta2``
    (F_i), ``pearson2`` (blocks R_i) or ``beta1`` (U_i).
    """
    family = _COMPANION.get(family, family)
    m = shape.m
    A = _spd(anchor, m, "anchor")
    kernel = _kernel_for(kernel, shape, f"Wishart-{family} density")
    eye = np.eye(m)
    total = (shape.a_star - _half(m)) * logdet(A)
    if family == "T":
        Ts = _blocks_for(comp, shape, "T")
        M = eye + sum(gram(T) for T in Ts)
        total += m * shape.a0 * LN_PI - ln_mv_gamma(m, shape.a0)
    elif family == "beta2":
        Fs = _spds_for(comp, shape, "F")
        M = eye + sum(Fs)
        total += m * shape.a_star * LN_PI - sum(ln_mv_gamma(m, ai) for ai in shape.all_a)
        total += sum((ai - _half(m)) * logdet(F) for F, ai in zip(Fs, shape.a))
    elif family == "pearson2":
        Rs = _blocks_for(comp, shape, "R")
        Bs = [gram(R) for R in Rs]
        M = _pearson_sum(Bs, m)
        total += m * shape.a0 * LN_PI - ln_mv_gamma(m, shape.a0)
        total -= sum((ai + _half(m)) * logdet(eye - B) for B, ai in zip(Bs, shape.a))
    elif family == "beta1":
        Us = _spds_for(comp, shape, "U")
        for U in Us:
            logdet(U)
        M = _pearson_sum(Us, m)
        total += m * shape.a_star * LN_PI - sum(ln_mv_gamma(m, ai) for ai in shape.all_a)
        total += sum(
            (ai - _half(m)) * logdet(U) - (ai + _half(m)) * logdet(eye - U) for U, ai in zip(Us, shape.a)
        )
    else:
        raise ShapeError(f"unknown companion family {family!r}")
    u = float(np.trace(A @ M))
    return total + log_h(kernel, u)


@_domain_to_neg_inf
def logpdf_marginal(family, comp, shape):
    """Kernel-free joint log-density of the k companions alone."""
    family = _COMPANION.get(family, family)
    m = shape.m
    eye = np.eye(m)
    a_star = shape.a_star
    total = _marginal_const(family, shape)
    if family == "T":
        Ts = _blocks_for(comp, shape, "T")
        return total - a_star * logdet(eye + sum(gram(T) for T in Ts))
    if family == "beta2":
        Fs = _spds_for(comp, shape, "F")
        total += sum((ai - _half(m)) * logdet(F) for F, ai in zip(Fs, shape.a))
        return total - a_star * logdet(eye + sum(Fs))
    if family == "pearson2":
        Bs = [gram(R) for R in _blocks_for(comp, shape, "R")]
        total -= a_star * combination_logdet(Bs)
        return total + sum((a_star - ai - _half(m)) * logdet(eye - B) for B, ai in zip(Bs, shape.a))
    if family == "beta1":
        Us = _spds_for(comp, shape, "U")
        total -= a_star * combination_logdet(Us)
        return total + sum(
            (ai - _half(m)) * logdet(U) + (a_star - ai - _half(m)) * logdet(eye - U)
            for U, ai in zip(Us, shape.a)
        )
    raise ShapeError(f"unknown companion family {family!r}")


# ----------------------------------------------------------------------------
# trimatric and inverted families


@_domain_to_neg_inf
def logpdf_trimatric(form, W, c1, c2, shape, kernel):
    """Trimatric joint log-density.

    ``WTP2``: (W, T, R) with T an n1 x m block and R an n2 x m block.
    ``WB2B1``: (W, F, U) with F = T'T and U = R'R.
    """
    form = form.upper().replace("TRI-", "")
    if shape.k != 2:
        raise ShapeError(f"trimatric densities need k=2, got k={shape.k}")
    m = shape.m
    a0, a1, a2 = shape.all_a
    W = _spd(W, m, "W")
    kernel = _kernel_for(kernel, shape, "trimatric density")
    eye = np.eye(m)
    if form == "WTP2":
        T, R = _blocks_for([c1, c2], shape, "block")
        F, U = gram(T), gram(R)
        total = m * a0 * LN_PI - ln_mv_gamma(m, a0)
    elif form == "WB2B1":
        F, U = _spds_for([c1, c2], shape, "matrix")
        total = m * shape.a_star * LN_PI - ln_mv_gamma(m, a0) - ln_mv_gamma(m, a1) - ln_mv_gamma(m, a2)
        total += (a1 - _half(m)) * logdet(F) + (a2 - _half(m)) * logdet(U)
    else:
        raise ShapeError(f"unknown trimatric form {form!r}; expected WTP2 or WB2B1")
    C = eye - U
    total += (shape.a_star - _half(m)) * logdet(W) + (a0 + a1 - _half(m)) * logdet(C)
    root = sym_sqrt(W)
    u = float(np.trace(W) + np.trace(C @ root @ F @ root))
    return total + log_h(kernel, u)


@_domain_to_neg_inf
def logpdf_inverted(kind, head, tail, shape, scales=None, kernel=None):
    """Joint log-density after inverting the trailing matrices.

    ``gw_inv_wishart``: generalised Wishart V's in ``head`` and inverted
    W_j = V_j^-1 in ``tail``; one matrix per entry of ``shape.all_a``.
    ``beta2_inv``: beta type II F's in ``head`` and E_j = F_j^-1 in ``tail``;
    one matrix per entry of ``shape.a``.
    """
    kind = kind.replace("-", "_")
    m = shape.m
    head, tail = list(head), list(tail)
    if kind == "gw_inv_wishart":
        all_a = shape.all_a
        if len(head) + len(tail) != len(all_a):
            raise ShapeError(f"expected {len(all_a)} matrices, got {len(head) + len(tail)}")
        kernel = _kernel_for(kernel, shape, "inverted Wishart density")
        mats = [_spd(S, m, f"V{i}") for i, S in enumerate(head)]
        mats += [_spd(S, m, f"W{i}") for i, S in enumerate(tail, start=len(head))]
        sig = scales.sigma if scales is not None else (None,) * len(mats)
        total = m * shape.a_star * LN_PI
        trace = 0.0
        for i, (S, ai) in enumerate(zip(mats, all_a)):
            inverted = i >= len(head)
            total += (-(ai + _half(m)) if inverted else (ai - _half(m))) * logdet(S) - ln_mv_gamma(m, ai)
            X = inv_spd(S) if inverted else S
            if sig[i] is None:
                trace += np.trace(X)
            else:
                total -= ai * logdet(sig[i])
                trace += np.trace(inv_spd(sig[i]) @ X)
        return total + log_h(kernel, trace)
    if kind == "beta2_inv":
        if len(head) + len(tail) != shape.k:
            raise ShapeError(f"expected {shape.k} matrices, got {len(head) + len(tail)}")
        mats = [_spd(S, m, f"F{i}") for i, S in enumerate(head, start=1)]
        mats += [_spd(S, m, f"E{i}") for i, S in enumerate(tail, start=len(head) + 1)]
        total = _marginal_const("beta2", shape)
        M = np.eye(m)
        for i, (S, ai) in enumerate(zip(mats, shape.a)):
            if i < len(head):
                total += (ai - _half(m)) * logdet(S)
                M = M + S
            else:
                total -= (ai + _half(m)) * logdet(S)
                M = M + inv_spd(S)
        return total - shape.a_star * logdet(M)
    raise ShapeError(f"unknown inverted kind {kind!r}; expected gw_inv_wishart or beta2_inv")


# ----------------------------------------------------------------------------
# name-based dispatch


def default_split(name, shape):
    """Number of non-inverted matrices for the inverted families."""
    count = len(shape.all_a) if name == "gw-inv-wishart" else shape.k
    return count - 1


def matrix_names(name, shape, split=None):
    """Symbols of the matrices one draw of ``name`` holds, in order."""
    k = shape.k
    if name == "gen-wishart":
        return [f"V{i}" for i in range(k + 1)]
    if name in _COMPANION:
        fam = _COMPANION[name]
        comps = [f"{_COMPANION_SYMBOL[fam]}{i}" for i in range(1, k + 1)]
        return [_ANCHOR_SYMBOL[fam]] + comps if name.startswith("wishart-") else comps
    if name == "tri-wtp2":
        return ["W", "T", "R"]
    if name == "tri-wb2b1":
        return ["W", "F", "U"]
    split = default_split(name, shape) if split is None else split
    if name == "gw-inv-wishart":
        return [("V" if i < split else "W") + str(i) for i in range(k + 1)]
    if name == "beta2-inv":
        return [("F" if i <= split else "E") + str(i) for i in range(1, k + 1)]
    raise ShapeError(f"unknown family {name!r}; expected one of {FAMILY_NAMES}")


def logpdf(name, mats, shape, kernel=None, split=None):
    """Evaluate the family called ``name`` at the matrix tuple ``mats``.

    ``mats`` follows the order of :func:`matrix_names`.
    """
    mats = list(mats)
    if name == "gen-wishart":
        return logpdf_gen_wishart(mats, shape, kernel)
    if name in _COMPANION:
        fam = _COMPANION[name]
        if name.startswith("wishart-"):
            return logpdf_wishart_companion(fam, mats[0], mats[1:], shape, kernel)
        return logpdf_marginal(fam, mats, shape)
    if name in ("tri-wtp2", "tri-wb2b1"):
        if len(mats) != 3:
            raise ShapeError(f"{name} needs three matrices, got {len(mats)}")
        return logpdf_trimatric(name[4:], mats[0], mats[1], mats[2], shape, kernel)
    if name in ("gw-inv-wishart", "beta2-inv"):
        split = default_split(name, shape) if split is None else int(split)
        kind = "gw_inv_wishart" if name == "gw-inv-wishart" else "beta2_inv"
        return logpdf_inverted(kind, mats[:split], mats[split:], shape, kernel=kernel)
    raise ShapeError(f"unknown family {name!r}; expected one of {FAMILY_NAMES}")


__all__ = [
    "ExtendedShape",
    "ScaleSet",
    "FAMILY_NAMES",
    "KERNEL_FAMILIES",
    "logpdf",
    "logpdf_elliptical",
    "logpdf_gen_wishart",
    "logpdf_wishart_companion",
    "logpdf_marginal",
    "logpdf_trimatric",
    "logpdf_inverted",
    "matrix_names",
]
