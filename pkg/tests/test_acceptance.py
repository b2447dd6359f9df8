"""The ten acceptance criteria, each at its stated tolerance and time budget.

Every test prints one ``ACCEPTANCE <id> PASS|FAIL`` line.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from multimatric import ExtendedShape, RngStream, logpdf_elliptical, make_kernel, sample_family
from multimatric.estimation import FitConfig, fit_beta2, loglik_beta2
from multimatric.special import ln_mv_gamma
from multimatric.verify import (
    CHECKS,
    check_bimatrix_identity,
    check_jacobian_fd,
    check_kernel_invariance,
    check_pushforward,
    check_wishart_mean,
)


@pytest.fixture
def report(capsys):
    def emit(ident, passed, detail, elapsed=None, budget=None):
        timing = "" if elapsed is None else f" [{elapsed:.2f}s" + (f" / {budget:g}s]" if budget else "]")
        with capsys.disabled():
            print(f"\nACCEPTANCE {ident} {'PASS' if passed else 'FAIL'}: {detail}{timing}")
        return passed

    return emit


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


def test_01_special_functions(report):
    rng = np.random.default_rng(101)
    worst = 0.0
    with Timer() as t:
        for _ in range(1000):
            m = int(rng.integers(1, 16))
            a = 0.5 * (m - 1) + rng.exponential(5.0) + 1e-9
            product = m * (m - 1) / 4 * math.log(math.pi) + sum(math.lgamma(a - j / 2) for j in range(m))
            worst = max(worst, abs(ln_mv_gamma(m, a) - product) / max(1.0, abs(product)))
            b = rng.exponential(5.0) + 1e-9
            worst = max(worst, abs(ln_mv_gamma(1, b) - math.lgamma(b)) / max(1.0, abs(math.lgamma(b))))
    ok = worst <= 1e-12 and t.elapsed < 1.0
    assert report("1 special-functions", ok, f"max rel err {worst:.2e} (tol 1e-12)", t.elapsed, 1)


def test_02_jacobians(report):
    reports = []
    with Timer() as t:
        for name in ("t_to_r", "r_to_t"):
            for n, m in ((1, 1), (2, 1), (2, 2), (3, 2)):
                reports.append(check_jacobian_fd(name, n, m, trials=100))
    worst = max(r.statistic for r in reports)
    ok = all(r.passed for r in reports) and t.elapsed < 30
    assert report("2 jacobians", ok, f"max rel err {worst:.2e} over 8 configurations (tol 1e-5)", t.elapsed, 30)


NORMALIZATION = [
    "normalization:t:0", "normalization:t:1",
    "normalization:beta2:0", "normalization:beta2:1",
    "normalization:pearson2:0", "normalization:pearson2:1",
    "normalization:beta1:0", "normalization:beta1:1",
    "normalization:wishart-t:0",
]


def test_03_normalization(report):
    with Timer() as t:
        reports = [CHECKS[name]() for name in NORMALIZATION]
    worst = max(abs(r.statistic - 1.0) for r in reports)
    ok = all(r.passed for r in reports) and t.elapsed < 120
    assert report("3 normalization", ok, f"max |mass - 1| {worst:.2e} over {len(reports)} cases (tol 1e-3)", t.elapsed, 120)


def test_04_bimatrix_identity(report):
    with Timer() as t:
        r = check_bimatrix_identity(trials=1000, m=3)
    ok = r.passed and t.elapsed < 10
    assert report("4 bimatrix-identity", ok, f"max gap {r.statistic:.2e} (tol 1e-10)", t.elapsed, 10)


def test_05_pushforward(report):
    with Timer() as t:
        reports = [check_pushforward("t", "pearson2", trials=500), check_pushforward("beta2", "beta1", trials=500)]
    ok = all(r.passed for r in reports) and t.elapsed < 10
    detail = ", ".join(f"{r.name} {r.statistic:.2e}" for r in reports)
    assert report("5 pushforward", ok, f"{detail} (tol 1e-10)", t.elapsed, 10)


def test_06_sampler_density(report):
    with Timer() as t:
        reports = [CHECKS[f"sampler:{name}:0"]() for name in ("t", "beta1", "beta2", "pearson2")]
    ok = all(r.passed for r in reports) and t.elapsed < 60
    detail = ", ".join(f"{r.name.split(':')[1]} p={r.statistic:.3f}" for r in reports)
    assert report("6 sampler-density", ok, f"{detail} (need p > 0.01)", t.elapsed, 60)


def test_07_kernel_invariance(report):
    with Timer() as t:
        r = check_kernel_invariance(n_draws=100_000)
    assert report("7 kernel-invariance", r.passed, f"KS p={r.statistic:.3f} (need p > 0.01)", t.elapsed)


def test_08_wishart_mean(report):
    with Timer() as t:
        r = check_wishart_mean(m=2, n0=5, n_draws=100_000)
    assert report("8 wishart-mean", r.passed, f"max deviation {r.statistic:.2f} standard errors (limit 3)", t.elapsed)


def test_09_estimation(report):
    with Timer() as t:
        # (a) k = 1: the two likelihoods coincide
        rng = np.random.default_rng(9)
        gap = 0.0
        for m in (1, 2, 3):
            X = rng.standard_normal((m + 3, m))
            F = (X.T @ X)[None]
            for a0, a in ((0.5 * m + 0.2, 0.5 * m + 1.1), (4.0, 2.5)):
                dep = loglik_beta2("dependent", a0, a, F)
                ind = loglik_beta2("independent", a0, a, F)
                gap = max(gap, abs(dep - ind) / max(1.0, abs(dep)))
        ok_a = gap <= 4 * np.finfo(float).eps

        # (b) independent model on 500 beta-prime(2, 3) scalars: a0 = 3, a = 2
        data = stats.betaprime(2.0, 3.0).rvs(size=500, random_state=np.random.default_rng(2)).reshape(-1, 1, 1)
        fit_b = fit_beta2(data, FitConfig(model="independent"))
        err_b = max(abs(fit_b.a0_hat - 3.0) / 3.0, abs(fit_b.a_hat - 2.0) / 2.0)
        ok_b = fit_b.converged and err_b <= 0.1

        # (c) dependent model on one joint draw of k = 200 2x2 beta II matrices
        dof0, dof = 8, 5
        shape = ExtendedShape.from_dof(2, (dof0,) + (dof,) * 200)
        draws = sample_family("beta2", shape, make_kernel("gaussian", dim=shape.total_dim), 1, RngStream(2024))
        F = np.stack([D[0] for D in draws])
        fit_c = fit_beta2(F, FitConfig(model="dependent"))
        at_seed = loglik_beta2("dependent", *fit_c.seed_used, F)
        at_truth = loglik_beta2("dependent", dof0 / 2, dof / 2, F)
        ok_c = fit_c.converged and fit_c.loglik >= at_seed and fit_c.loglik >= at_truth - 1e-6
    ok = ok_a and ok_b and ok_c and t.elapsed < 120
    detail = (
        f"(a) rel gap {gap:.1e}; (b) a0={fit_b.a0_hat:.3f} a={fit_b.a_hat:.3f} max rel err {err_b:.3f}; "
        f"(c) loglik {fit_c.loglik:.4f} vs seed {at_seed:.4f}, truth {at_truth:.4f}, converged={fit_c.converged}"
    )
    assert report("9 estimation", ok, detail, t.elapsed, 120)


def test_10_elliptical_density(report):
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(50):
        N, m = (int(v) for v in rng.integers(1, 6, 2))
        Z, mu = rng.standard_normal((N, m)), rng.standard_normal((N, m))
        s, th = rng.uniform(0.2, 3.0, N), rng.uniform(0.2, 3.0, m)
        got = logpdf_elliptical(Z, mu, np.diag(s), np.diag(th), make_kernel("gaussian", dim=N * m))
        expected = stats.norm.logpdf(Z, mu, np.sqrt(np.outer(s, th))).sum()
        worst = max(worst, abs(got - expected))
    assert report("10 elliptical-density", worst <= 1e-10, f"max gap {worst:.2e} over 50 diagonal cases (tol 1e-10)")
