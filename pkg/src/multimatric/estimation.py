"""Maximum-likelihood fitting of the matrix beta type II models.

Two likelihoods are available for a sample F_1..F_k of m x m SPD matrices
sharing a common shape ``a``:

* ``dependent``: the single multimatric beta II joint density of all k.
* ``independent``: a product of k single-matrix beta II densities.

:class:`MatrixBetaII` wraps :func:`fit_beta2` as a scikit-learn estimator and
:class:`GramReducer` turns raw configuration blocks into beta II matrices, so
the two compose in a :class:`sklearn.pipeline.Pipeline`.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .errors import DomainError, ShapeError
from .linalg import check_block_stack, check_spd_stack, logdet
from .special import ln_mv_gamma
from .transforms import decompose_blocks

MODELS = ("dependent", "independent")

#: Seed scalings tried by the default five restarts.
RESTART_SCALES = (1.0, 0.1, 0.5, 2.0, 10.0)

FALLBACK_SEED = (1.0, 1.0)

#: Fitted shapes beyond this are reported as a diverging search, not a fit.
DIVERGENCE_CAP = 1e8


class DegenerateSeedWarning(UserWarning):
    """Moment-based seeding was impossible; a fallback seed was used."""


@dataclass
class FitConfig:
    model: str = "dependent"
    max_iters: int = 5000
    f_tol: float = 1e-10
    x_tol: float = 1e-9
    seed_strategy: object = "univariate"
    restarts: int = 5

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if not (self.f_tol > 0 and self.x_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1 or self.restarts < 1:
            raise ValueError("max_iters and restarts must be >= 1")
        if self.seed_strategy != "univariate":
            a0, a = self.seed_strategy
            self.seed_strategy = (float(a0), float(a))


@dataclass
class FitResult:
    model: str
    a0_hat: float
    a_hat: float
    loglik: float
    iterations: int
    converged: bool
    seed_used: tuple
    message: str = ""
    trace: list = field(default_factory=list, repr=False)

    def to_dict(self):
        return {
            "model": self.model,
            "a0": self.a0_hat,
            "a": self.a_hat,
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
            "seed_used": list(self.seed_used),
        }


class _Stats:
    """Sufficient statistics of a beta II sample for both likelihoods."""

    def __init__(self, data):
        F = check_spd_stack(data, "F")
        self.k, self.m = F.shape[0], F.shape[1]
        eye = np.eye(self.m)
        self.sum_logdet = float(np.sum(logdet(F)))
        self.logdet_sum = float(logdet(eye + F.sum(axis=0)))
        self.sum_logdet_1p = float(np.sum(logdet(eye + F)))

    def loglik(self, model, a0, a):
        m, k = self.m, self.k
        bound = 0.5 * (m - 1)
        if not (a0 > bound and a > bound) or not (math.isfinite(a0) and math.isfinite(a)):
            return -math.inf
        shape_term = (a - 0.5 * (m + 1)) * self.sum_logdet
        if model == "dependent":
            return (
                ln_mv_gamma(m, a0 + k * a)
                - ln_mv_gamma(m, a0)
                - k * ln_mv_gamma(m, a)
                + shape_term
                - (a0 + k * a) * self.logdet_sum
            )
        return (
            k * (ln_mv_gamma(m, a0 + a) - ln_mv_gamma(m, a0) - ln_mv_gamma(m, a))
            + shape_term
            - (a0 + a) * self.sum_logdet_1p
        )


def loglik_beta2(model, a0, a, data):
    """Log-likelihood of (a0, a) for a stack of SPD matrices ``data``.

    Parameters outside ``a0, a > (m-1)/2`` give ``-inf``.
    """
    if model not in MODELS:
        raise ValueError(f"model must be one of {MODELS}, got {model!r}")
    return _Stats(data).loglik(model, float(a0), float(a))


def seed_univariate(data):
    """Moment-matched beta-prime seed from the pooled eigenvalues of ``data``.

    Matches the mean ``a / (a0 - 1)`` and second moment of a univariate
    beta-prime(a, a0) and clamps into ``a0, a > (m-1)/2``.  Returns ``(a0, a)``.
    """
    F = check_spd_stack(data, "F")
    m = F.shape[1]
    floor = 0.5 * (m - 1) + 1e-6
    x = np.linalg.eigvalsh(F).ravel()
    mean = float(np.mean(x))
    var = float(np.var(x))
    if x.size < 2 or not var > 1e-12 * max(mean * mean, 1e-300):
        warnings.warn(
            "moments are inestimable (fewer than two distinct eigenvalues); using fallback seed",
            DegenerateSeedWarning,
            stacklevel=2,
        )
        return tuple(v + 0.5 * (m - 1) for v in FALLBACK_SEED)
    a0 = 2.0 + mean * (1.0 + mean) / var
    a = mean * (a0 - 1.0)
    return max(a0, floor), max(a, floor)


def _fit_once(stats, model, seed, config, trace):
    bound = 0.5 * (stats.m - 1)

    def objective(z):
        a0, a = bound + math.exp(z[0]), bound + math.exp(z[1])
        value = stats.loglik(model, a0, a)
        # best-so-far across every restart of this fit
        trace.append(value if not trace else max(trace[-1], value))
        return -value if math.isfinite(value) else math.inf

    z0 = np.log(np.array(seed) - bound)
    with np.errstate(over="ignore"):
        res = minimize(
            objective,
            z0,
            method="Nelder-Mead",
            options={"maxiter": config.max_iters, "xatol": config.x_tol, "fatol": config.f_tol},
        )
    a0, a = bound + math.exp(res.x[0]), bound + math.exp(res.x[1])
    return a0, a, res


def fit_beta2(data, config=None):
    """Maximise the beta II likelihood over (a0, a) with restarted Nelder-Mead.

    The search runs in ``ln(a - (m-1)/2)`` coordinates so every probe stays
    inside the parameter domain.  Restart ``i`` scales the seed's distance to
    the boundary by ``RESTART_SCALES[i]``; the best finite result wins, ties
    going to the earliest restart.
    """
    config = config or FitConfig()
    stats = _Stats(data)
    m = stats.m
    bound = 0.5 * (m - 1)
    if config.seed_strategy == "univariate":
        seed = seed_univariate(data)
    else:
        seed = config.seed_strategy
        if not (seed[0] > bound and seed[1] > bound):
            raise DomainError(f"explicit seed {seed} must exceed (m-1)/2 = {bound}")

    candidates = [(loglik_beta2(config.model, seed[0], seed[1], data), seed[0], seed[1], False, "seed")]
    total_iters = 0
    trace = []
    for i in range(config.restarts):
        scale = RESTART_SCALES[i % len(RESTART_SCALES)] * (1 + i // len(RESTART_SCALES))
        start = (bound + scale * (seed[0] - bound), bound + scale * (seed[1] - bound))
        a0, a, res = _fit_once(stats, config.model, start, config, trace)
        total_iters += int(res.nit)
        value = loglik_beta2(config.model, a0, a, data)
        candidates.append((value, a0, a, bool(res.success), str(res.message)))

    finite = [c for c in candidates if math.isfinite(c[0])]
    if not finite:
        a0, a, converged, message = seed[0], seed[1], False, "all restarts diverged"
    else:
        best_value = max(c[0] for c in finite)
        # earliest candidate attaining the maximum
        _, a0, a, _, message = next(c for c in finite if c[0] == best_value)
        slack = config.f_tol * max(1.0, abs(best_value))
        converged = any(c[3] and c[0] >= best_value - slack for c in finite[1:])
        if not converged:
            message = f"no restart met the tolerances ({message})"
        elif max(a0, a) > DIVERGENCE_CAP:
            # e.g. a single scalar observation: the likelihood grows without bound
            converged = False
            message = f"parameters diverge past {DIVERGENCE_CAP:g}; the likelihood has no finite maximiser"
    return FitResult(
        model=config.model,
        a0_hat=float(a0),
        a_hat=float(a),
        loglik=float(loglik_beta2(config.model, a0, a, data)),
        iterations=total_iters,
        converged=converged,
        seed_used=(float(seed[0]), float(seed[1])),
        message=str(message),
        trace=trace,
    )


# ----------------------------------------------------------------------------
# scikit-learn wrappers


class MatrixBetaII(BaseEstimator):
    """Maximum-likelihood beta type II model for a sample of SPD matrices.

    Parameters
    ----------
    model : {"dependent", "independent"}, default="dependent"
        Joint multimatric likelihood, or a product of single-matrix densities.
    seed : "univariate" or (a0, a), default="univariate"
        Starting point for the simplex search.
    restarts : int, default=5
    max_iter : int, default=5000
    f_tol, x_tol : float
        Nelder-Mead stopping tolerances on the log-likelihood and on the
        log-transformed parameters.

    Attributes
    ----------
    a0_, a_ : float
        Fitted shape parameters.
    loglik_ : float
    converged_ : bool
    n_iter_ : int
    result_ : FitResult
    """

    def __init__(self, model="dependent", seed="univariate", restarts=5, max_iter=5000, f_tol=1e-10, x_tol=1e-9):
        self.model = model
        self.seed = seed
        self.restarts = restarts
        self.max_iter = max_iter
        self.f_tol = f_tol
        self.x_tol = x_tol

    def fit(self, X, y=None):
        X = check_spd_stack(X, "X")
        config = FitConfig(
            model=self.model,
            max_iters=self.max_iter,
            f_tol=self.f_tol,
            x_tol=self.x_tol,
            seed_strategy=self.seed,
            restarts=self.restarts,
        )
        result = fit_beta2(X, config)
        self.result_ = result
        self.a0_ = result.a0_hat
        self.a_ = result.a_hat
        self.loglik_ = result.loglik
        self.converged_ = result.converged
        self.n_iter_ = result.iterations
        self.n_features_in_ = X.shape[1]
        return self

    def score(self, X, y=None):
        """Log-likelihood of ``X`` at the fitted parameters."""
        check_is_fitted(self, "result_")
        X = check_spd_stack(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ShapeError(f"fitted on {self.n_features_in_}x{self.n_features_in_} matrices, got {X.shape[1:]}")
        return loglik_beta2(self.model, self.a0_, self.a_, X)


class GramReducer(TransformerMixin, BaseEstimator):
    """Turn a stack of n x m blocks into beta type II matrices.

    The block at ``anchor_index`` plays X_0; every other block X_i becomes
    ``F_i = T_i'T_i`` with ``T_i = X_i (X_0'X_0)^(-1/2)``.  With
    ``anchor_index=None`` the plain Gram matrices ``X_i'X_i`` are returned.
    """

    def __init__(self, anchor_index=0):
        self.anchor_index = anchor_index

    def fit(self, X, y=None):
        X = check_block_stack(X, "X")
        self.n_features_in_ = X.shape[2]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_block_stack(X, "X")
        if self.anchor_index is None:
            return np.swapaxes(X, 1, 2) @ X
        idx = int(self.anchor_index)
        if not -X.shape[0] <= idx < X.shape[0]:
            raise ShapeError(f"anchor_index {idx} out of range for {X.shape[0]} blocks")
        idx %= X.shape[0]
        rest = [X[i] for i in range(X.shape[0]) if i != idx]
        _, F = decompose_blocks([X[idx], *rest], "beta2")
        return np.stack(F)
