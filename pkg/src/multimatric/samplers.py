"""Constructive samplers: a spherical matrix pushed through the transforms.

Draw ``i`` of a batch always consumes stream ``rng.substream(i)``, so a batch
is reproducible whatever the chunking or thread count.
"""

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .densities import FAMILY_NAMES, _COMPANION, default_split
from .errors import ShapeError
from .kernels import check_dim, sample_radius
from .linalg import gram, inv_spd
from .transforms import decompose_blocks, trimatric_decompose

CHUNK = 4096


def max_threads():
    """Thread cap from ``MMV_THREADS`` (default: up to 4 cores)."""
    env = os.environ.get("MMV_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return max(1, min(4, os.cpu_count() or 1))


def _one_spherical(N, m, kernel, gen):
    Z = gen.standard_normal((N, m))
    if kernel.family == "gaussian":
        return Z
    if kernel.family == "pearson7":
        nu = kernel.params["nu"]
        return Z / np.sqrt(gen.gamma(0.5 * nu, 2.0 / nu))
    direction = Z / np.linalg.norm(Z)
    return direction * float(sample_radius(kernel, gen))


def sample_spherical(N, m, kernel, rng):
    """One N x m draw from the spherical law with kernel ``kernel``."""
    check_dim(kernel, N * m, "spherical sampler")
    return _one_spherical(int(N), int(m), kernel, rng.generator())


def spherical_batch(N, m, kernel, n_draws, rng):
    """Stack of ``n_draws`` spherical draws; draw i uses ``rng.substream(i)``."""
    check_dim(kernel, N * m, "spherical sampler")
    out = np.empty((n_draws, N, m))

    def fill(start):
        for i in range(start, min(start + CHUNK, n_draws)):
            out[i] = _one_spherical(N, m, kernel, rng.substream(i).generator())

    starts = range(0, n_draws, CHUNK)
    threads = min(max_threads(), len(starts))
    if threads <= 1:
        for start in starts:
            fill(start)
    else:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(fill, starts))
    return out


def _split_rows(X, dof):
    edges = np.cumsum([0] + list(dof))
    return [X[:, lo:hi, :] for lo, hi in zip(edges[:-1], edges[1:])]


def sample_family(name, shape, kernel, n_draws, rng, split=None):
    """Draw ``n_draws`` samples of the family called ``name``.

    Returns a tuple of stacked arrays, one per matrix in
    :func:`multimatric.densities.matrix_names` order, each with the draw
    index as its leading axis.  The kernel must be bound to D = n* m; the
    marginal families need it too, to generate the spherical matrix.
    """
    if name not in FAMILY_NAMES:
        raise ShapeError(f"unknown family {name!r}; expected one of {FAMILY_NAMES}")
    dof = shape.require_integer()
    m = shape.m
    N = int(sum(dof))
    X = spherical_batch(N, m, kernel, int(n_draws), rng)
    blocks = _split_rows(X, dof)

    if name == "gen-wishart":
        return tuple(gram(B) for B in blocks)
    if name in _COMPANION:
        anchor, comps = decompose_blocks(blocks, _COMPANION[name])
        return (anchor, *comps) if name.startswith("wishart-") else tuple(comps)
    if name in ("tri-wtp2", "tri-wb2b1"):
        if len(blocks) != 3:
            raise ShapeError(f"{name} needs shape with k=2, got k={shape.k}")
        W, T, R = trimatric_decompose(*blocks)
        return (W, T, R) if name == "tri-wtp2" else (W, gram(T), gram(R))
    split = default_split(name, shape) if split is None else int(split)
    if name == "gw-inv-wishart":
        mats = [gram(B) for B in blocks]
    else:
        _, mats = decompose_blocks(blocks, "beta2")
    return tuple(S if i < split else inv_spd(S) for i, S in enumerate(mats))
