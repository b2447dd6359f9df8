"""Changes of variables with exact log-Jacobians.

Rectangular maps (``t_to_r``, ``r_to_t``) report ``ln|d out / d in|`` over the
n*m free entries. Symmetric-matrix maps use the m(m+1)/2 upper-triangle
coordinates.  All functions broadcast over leading stack axes.
"""

import numpy as np

from .errors import DomainError, NearSingularError, ShapeError
from .linalg import gram, inv_spd, inv_sqrt, logdet, spd_eigh, sym_sqrt, symmetrize

COMPANION_FAMILIES = ("T", "beta2", "pearson2", "beta1")


def _block(X, name="block"):
    X = np.asarray(X, dtype=float)
    if X.ndim < 2:
        raise ShapeError(f"{name} must be at least two-dimensional, got shape {X.shape}")
    n, m = X.shape[-2:]
    if n < m:
        raise ShapeError(f"{name} needs rows >= cols, got {n}x{m}")
    return X


def _eye_like(S):
    return np.broadcast_to(np.eye(S.shape[-1]), S.shape)


def t_to_r(T):
    """R = T (I + T'T)^(-1/2); log_jac = -((n+m+1)/2) ln|I + T'T|."""
    T = _block(T, "T")
    n, m = T.shape[-2:]
    A = _eye_like(T[..., :m, :]) + gram(T)
    R = T @ inv_sqrt(A)
    return R, -0.5 * (n + m + 1) * logdet(A)


def r_to_t(R):
    """T = R (I - R'R)^(-1/2); log_jac = -((n+m+1)/2) ln|I - R'R|.

    Raises DomainError when I - R'R is not positive definite.
    """
    R = _block(R, "R")
    n, m = R.shape[-2:]
    A = _eye_like(R[..., :m, :]) - gram(R)
    try:
        Q = inv_sqrt(A)
    except NearSingularError as exc:
        raise DomainError("block outside unit ball: I - R'R is not positive definite") from exc
    return R @ Q, -0.5 * (n + m + 1) * logdet(A)


def beta1_to_beta2(U, return_log_jac=False):
    """F = (I - U)^(-1) - I.

    With ``return_log_jac`` also returns ``ln|dF/dU| = -(m+1) ln|I - U|``.
    """
    U = np.asarray(U, dtype=float)
    spd_eigh(U, "U")
    C = _eye_like(U) - symmetrize(U)
    try:
        Cinv = inv_spd(C)
    except NearSingularError as exc:
        raise DomainError("I - U is not positive definite") from exc
    F = symmetrize(Cinv - _eye_like(U))
    if return_log_jac:
        return F, -(U.shape[-1] + 1) * logdet(C)
    return F


def beta2_to_beta1(F, return_log_jac=False):
    """U = I - (I + F)^(-1).

    With ``return_log_jac`` also returns ``ln|dU/dF| = -(m+1) ln|I + F|``.
    """
    F = np.asarray(F, dtype=float)
    spd_eigh(F, "F")
    C = _eye_like(F) + symmetrize(F)
    U = symmetrize(_eye_like(F) - inv_spd(C))
    if return_log_jac:
        return U, -(F.shape[-1] + 1) * logdet(C)
    return U


def invert_spd(V):
    """W = V^(-1) with log_jac = -(m+1) ln|W|.

    ``log_jac`` is ``ln|dV/dW|``, the factor that turns a density in V into a
    density in W.
    """
    V = np.asarray(V, dtype=float)
    W = inv_spd(V)
    return W, -(V.shape[-1] + 1) * logdet(W)


def decompose_blocks(blocks, family):
    """Split blocks X_0..X_k into the anchor X_0'X_0 and per-family companions.

    ``T``        T_i = X_i V0^(-1/2)
    ``beta2``    F_i = T_i'T_i
    ``pearson2`` R_i = T_i (I + T_i'T_i)^(-1/2)
    ``beta1``    U_i = R_i'R_i

    ``blocks`` is a sequence of arrays sharing the column count; each block may
    carry leading stack axes. Returns ``(anchor, companions)``.
    """
    if family not in COMPANION_FAMILIES:
        raise ShapeError(f"unknown companion family {family!r}; expected one of {COMPANION_FAMILIES}")
    blocks = [np.asarray(X, dtype=float) for X in blocks]
    if len(blocks) < 2:
        raise ShapeError("need an anchor block and at least one companion block")
    m = blocks[0].shape[-1]
    if any(X.shape[-1] != m for X in blocks):
        raise ShapeError("all blocks must share the same column count")
    X0 = _block(blocks[0], "anchor block")
    anchor = gram(X0)
    scale = inv_sqrt(anchor)
    Ts = [X @ scale for X in blocks[1:]]
    if family == "T":
        return anchor, Ts
    if family == "beta2":
        return anchor, [gram(T) for T in Ts]
    Rs = [t_to_r(T)[0] for T in Ts]
    if family == "pearson2":
        return anchor, Rs
    return anchor, [gram(R) for R in Rs]


def trimatric_decompose(X0, X1, X2):
    """W = W0 + X2'X2, T = X1 W0^(-1/2), R = X2 W^(-1/2) with W0 = X0'X0."""
    X0 = _block(X0, "X0")
    X1 = np.asarray(X1, dtype=float)
    X2 = np.asarray(X2, dtype=float)
    m = X0.shape[-1]
    if X1.shape[-1] != m or X2.shape[-1] != m:
        raise ShapeError("all blocks must share the same column count")
    W0 = gram(X0)
    W = W0 + gram(X2)
    T = X1 @ inv_sqrt(W0)
    R = X2 @ inv_sqrt(W)
    return W, T, R


def combination_matrix(Us):
    """prod_i (I - U_i) + sum_i prod_{j != i} (I - U_j) U_i, products in index order."""
    Us = [np.asarray(U, dtype=float) for U in Us]
    eye = _eye_like(Us[0])
    total = eye.copy()
    for U in Us:
        total = total @ (eye - U)
    for i, Ui in enumerate(Us):
        prod = eye.copy()
        for j, Uj in enumerate(Us):
            if j != i:
                prod = prod @ (eye - Uj)
        total = total + prod @ Ui
    return total


def combination_logdet(Us):
    """ln|I + sum_i (I - U_i)^(-1) U_i| + sum_i ln|I - U_i|.

    This is the log-determinant of the combination matrix in its symmetric
    form; the two agree whenever the U_i commute and always for k <= 2.
    """
    Us = [symmetrize(U) for U in Us]
    eye = _eye_like(Us[0])
    total = eye.copy()
    ldc = 0.0
    for U in Us:
        C = eye - U
        try:
            ldc = ldc + logdet(C)
            total = total + symmetrize(inv_spd(C) @ U)
        except NearSingularError as exc:
            raise DomainError("I - U is not positive definite") from exc
    return logdet(total) + ldc
