"""Dense symmetric and rectangular matrix helpers.

Every function accepts a single matrix or a stack of matrices with the
matrix in the trailing two axes.
"""

import numpy as np

from .errors import NearSingularError, ShapeError

#: Relative positive-definiteness floor: eigenvalues must exceed
#: ``SPD_FLOOR * largest eigenvalue``.
SPD_FLOOR = 1e-12

SYM_RTOL = 1e-12


def symmetrize(S):
    S = np.asarray(S, dtype=float)
    return 0.5 * (S + np.swapaxes(S, -1, -2))


def _check_square(S, name="matrix"):
    S = np.asarray(S, dtype=float)
    if S.ndim < 2 or S.shape[-1] != S.shape[-2]:
        raise ShapeError(f"{name} must be square, got shape {S.shape}")
    return S


def check_symmetric(S, name="matrix"):
    """Return ``S`` symmetrized, raising ShapeError if it is visibly asymmetric."""
    S = _check_square(S, name)
    scale = np.max(np.abs(S), axis=(-1, -2), keepdims=True)
    gap = np.max(np.abs(S - np.swapaxes(S, -1, -2)), axis=(-1, -2), keepdims=True)
    if np.any(gap > SYM_RTOL * np.maximum(scale, 1.0)):
        raise ShapeError(f"{name} is not symmetric")
    return symmetrize(S)


def spd_eigh(S, name="matrix"):
    """Eigen-decompose a symmetric matrix and enforce the SPD floor.

    Returns ``(w, Q)`` with ascending eigenvalues ``w``.
    """
    S = check_symmetric(S, name)
    w, Q = np.linalg.eigh(S)
    top = w[..., -1]
    low = w[..., 0]
    bad = ~(low > SPD_FLOOR * np.maximum(top, 0.0)) | ~(top > 0.0)
    if np.any(bad):
        worst = float(np.min(low))
        raise NearSingularError(
            f"{name} is not positive definite (smallest eigenvalue {worst:.3g})",
            eigenvalue=worst,
        )
    return w, Q


def is_spd(S):
    try:
        spd_eigh(S)
    except (NearSingularError, ShapeError):
        return False
    return True


def _from_eig(w, Q):
    return symmetrize((Q * w[..., None, :]) @ np.swapaxes(Q, -1, -2))


def sym_sqrt(S):
    """Symmetric positive definite square root of an SPD matrix."""
    w, Q = spd_eigh(S)
    return _from_eig(np.sqrt(w), Q)


def inv_sqrt(S):
    """Inverse of the symmetric square root, so that ``Q @ S @ Q = I``."""
    w, Q = spd_eigh(S)
    return _from_eig(1.0 / np.sqrt(w), Q)


def inv_spd(S):
    w, Q = spd_eigh(S)
    return _from_eig(1.0 / w, Q)


def logdet(S):
    """Natural log-determinant of an SPD matrix, summed from its eigenvalues."""
    w, _ = spd_eigh(S)
    return np.sum(np.log(w), axis=-1)


def gram(X):
    """``X'X`` for an n x m block (or stack of blocks), exactly symmetric."""
    X = np.asarray(X, dtype=float)
    if X.ndim < 2:
        raise ShapeError(f"block must be two-dimensional, got shape {X.shape}")
    return symmetrize(np.swapaxes(X, -1, -2) @ X)


def check_spd_stack(X, name="X"):
    """Validate a stack of SPD matrices, returning a float array of shape (k, m, m).

    A single m x m matrix is promoted to a stack of one.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[0] == 0:
        raise ShapeError(f"{name} must be a nonempty stack of square matrices, got shape {X.shape}")
    _check_square(X, name)
    spd_eigh(X, name)
    return symmetrize(X)


def check_block_stack(X, name="X"):
    """Validate a stack of n x m blocks with n >= m."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[0] == 0:
        raise ShapeError(f"{name} must be a nonempty stack of blocks, got shape {X.shape}")
    if X.shape[1] < X.shape[2]:
        raise ShapeError(f"{name} blocks need rows >= cols, got {X.shape[1]}x{X.shape[2]}")
    if not np.all(np.isfinite(X)):
        raise ShapeError(f"{name} contains non-finite entries")
    return X
