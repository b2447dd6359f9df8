import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from multimatric import ExtendedShape, RngStream, make_kernel, matrix_names, sample_family, sample_spherical
from multimatric.errors import DomainError, ShapeError
from multimatric.kernels import parse_kernel
from multimatric.samplers import CHUNK, max_threads, spherical_batch
from multimatric.verify import check_sampler_density, check_wishart_mean

FAMILIES = [
    "gen-wishart", "wishart-t", "t", "wishart-beta2", "beta2", "wishart-pearson2", "pearson2",
    "wishart-beta1", "beta1", "tri-wtp2", "tri-wb2b1", "gw-inv-wishart", "beta2-inv",
]


def gauss(shape):
    return make_kernel("gaussian", dim=shape.total_dim)


@pytest.mark.parametrize("name", FAMILIES)
def test_output_layout(name):
    shape = ExtendedShape.from_dof(2, (4, 3, 2))
    draws = sample_family(name, shape, gauss(shape), 5, RngStream(1))
    names = matrix_names(name, shape)
    assert len(draws) == len(names)
    for symbol, D in zip(names, draws):
        assert D.shape[0] == 5 and D.shape[-1] == 2
        if symbol[0] in "TR":
            assert D.shape[1] in (3, 2)
        else:
            assert D.shape[1] == 2
            np.testing.assert_array_equal(D, np.swapaxes(D, 1, 2))


def test_same_seed_same_draws():
    shape = ExtendedShape.from_dof(2, (3, 2))
    a = sample_family("wishart-t", shape, gauss(shape), 50, RngStream(9))
    b = sample_family("wishart-t", shape, gauss(shape), 50, RngStream(9))
    c = sample_family("wishart-t", shape, gauss(shape), 50, RngStream(10))
    for x, y, z in zip(a, b, c):
        assert np.array_equal(x, y)
        assert not np.array_equal(x, z)


def test_thread_count_does_not_change_draws(monkeypatch):
    kernel = make_kernel("kotz", {"T": 2, "r": 0.5, "s": 1}, dim=6)
    n = 2 * CHUNK + 17
    monkeypatch.setenv("MMV_THREADS", "1")
    assert max_threads() == 1
    one = spherical_batch(3, 2, kernel, n, RngStream(5))
    monkeypatch.setenv("MMV_THREADS", "4")
    four = spherical_batch(3, 2, kernel, n, RngStream(5))
    assert np.array_equal(one, four)


def test_draw_i_uses_substream_i():
    kernel = make_kernel("pearson7", {"nu": 3}, dim=4)
    batch = spherical_batch(2, 2, kernel, 10, RngStream(3, stream_id=100))
    assert np.array_equal(batch[7], sample_spherical(2, 2, kernel, RngStream(3, stream_id=107)))


def test_bad_thread_env_falls_back(monkeypatch):
    monkeypatch.setenv("MMV_THREADS", "lots")
    assert max_threads() >= 1


def test_kernel_dimension_must_match():
    shape = ExtendedShape.from_dof(2, (3, 2))
    with pytest.raises(ShapeError):
        sample_family("t", shape, make_kernel("gaussian", dim=4), 3, RngStream(0))


def test_real_shapes_cannot_be_sampled():
    shape = ExtendedShape(1, 1.3, (0.8,))
    with pytest.raises(DomainError, match="integer degrees of freedom"):
        sample_family("beta2", shape, gauss(shape), 3, RngStream(0))


def test_unknown_family():
    shape = ExtendedShape.from_dof(1, (2, 2))
    with pytest.raises(ShapeError):
        sample_family("gamma", shape, gauss(shape), 3, RngStream(0))


def test_wishart_mean():
    report = check_wishart_mean(m=2, n0=5, n_draws=20_000, seed=4)
    assert report.passed, report


def test_pearson7_spherical_covariance():
    nu = 7.0
    kernel = make_kernel("pearson7", {"nu": nu}, dim=6)
    Z = spherical_batch(3, 2, kernel, 40_000, RngStream(11)).reshape(-1, 6)
    cov = np.cov(Z, rowvar=False)
    np.testing.assert_allclose(cov, nu / (nu - 2) * np.eye(6), atol=0.06)


def test_kotz_spherical_radius():
    T, r, s, D = 2.0, 0.5, 1.0, 6
    kernel = make_kernel("kotz", {"T": T, "r": r, "s": s}, dim=D)
    Z = spherical_batch(3, 2, kernel, 20_000, RngStream(12))
    u = np.sum(Z**2, axis=(1, 2))
    assert stats.kstest(r * u**s, stats.gamma((D / 2 + T - 1) / s).cdf).pvalue > 0.01


@pytest.mark.parametrize(
    "name,dof,kernel_text",
    [
        ("t", (1, 1), "gaussian"),
        ("beta1", (2, 2), "kotz:T=2,r=0.5,s=1"),
        ("beta2", (4, 3), "pearson7:nu=5"),
        ("pearson2", (3, 1), "gaussian"),
        ("gen-wishart", (3,), "gaussian"),
    ],
)
def test_one_dimensional_goodness_of_fit(name, dof, kernel_text):
    shape = ExtendedShape.from_dof(1, dof)
    kernel = parse_kernel(kernel_text, shape.total_dim)
    report = check_sampler_density(name, shape, kernel, n_draws=30_000, seed=21)
    assert report.passed, report


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 3), st.integers(0, 3), st.integers(0, 10_000))
def test_draws_lie_in_support(m, extra, seed):
    dof = (m + extra, m + 1, m)
    shape = ExtendedShape.from_dof(m, dof)
    kernel = gauss(shape)
    (U1, U2) = sample_family("beta1", shape, kernel, 20, RngStream(seed))
    for U in (U1, U2):
        w = np.linalg.eigvalsh(U)
        assert np.all(w > 0) and np.all(w < 1)
    (R1, R2) = sample_family("pearson2", shape, kernel, 20, RngStream(seed))
    for R in (R1, R2):
        assert np.all(np.linalg.norm(R, 2, axis=(1, 2)) < 1)
