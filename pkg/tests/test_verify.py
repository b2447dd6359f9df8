import math

import pytest

from multimatric import ExtendedShape, make_kernel
from multimatric.densities import FAMILY_NAMES
from multimatric import verify
from multimatric.verify import (
    CHECKS,
    CheckReport,
    check_bimatrix_identity,
    check_jacobian_fd,
    check_normalization,
    check_pushforward,
    check_sampler_density,
    registry_gaps,
    scalar_layout,
)


def test_every_family_is_covered():
    assert registry_gaps() == []
    for name in FAMILY_NAMES:
        assert any(key.startswith(f"normalization:{name}:") for key in CHECKS)
        assert any(key.startswith(f"sampler:{name}:") for key in CHECKS)


def test_report_dict():
    report = CheckReport("x", 1.0, 1.0, 0.1, True, "ok")
    assert report.to_dict() == {
        "name": "x", "statistic": 1.0, "target": 1.0, "tolerance": 0.1, "passed": True, "detail": "ok"
    }


def test_layouts():
    shape = ExtendedShape.from_dof(1, (2, 3, 1))
    assert scalar_layout("wishart-t", shape) == [("pos", 1), ("real", 3), ("real", 1)]
    assert scalar_layout("beta1", shape) == [("unit", 1), ("unit", 1)]
    assert scalar_layout("tri-wtp2", shape) == [("pos", 1), ("real", 3), ("ball", 1)]
    assert scalar_layout("gw-inv-wishart", shape) == [("pos", 1)] * 3


def test_quadrature_refuses_many_coordinates():
    shape = ExtendedShape.from_dof(1, (3, 1, 1))
    report = check_normalization("tri-wtp2", shape, make_kernel("gaussian", dim=5))
    assert not report.passed and "at most 2" in report.detail


def test_normalization_detects_a_wrong_constant(monkeypatch):
    shape = ExtendedShape(1, 1.0, (1.5,))
    assert check_normalization("beta2", shape).passed
    real = verify.logpdf
    monkeypatch.setattr(verify, "logpdf", lambda *a, **k: real(*a, **k) + math.log(1.01))
    report = check_normalization("beta2", shape)
    assert not report.passed
    assert report.statistic == pytest.approx(1.01, rel=1e-6)


def test_sampler_check_detects_a_wrong_density(monkeypatch):
    shape = ExtendedShape.from_dof(1, (4, 3))
    kernel = make_kernel("gaussian", dim=shape.total_dim)
    wrong = ExtendedShape.from_dof(1, (4, 4))
    real = verify.logpdf
    monkeypatch.setattr(verify, "logpdf", lambda name, mats, s, *a, **k: real(name, mats, wrong, *a, **k))
    assert not check_sampler_density("beta2", shape, kernel, n_draws=20_000).passed


def test_jacobian_check_detects_a_wrong_jacobian(monkeypatch):
    from multimatric import transforms

    real = transforms.t_to_r
    monkeypatch.setattr(verify, "t_to_r", lambda T: (real(T)[0], real(T)[1] * 1.01))
    assert not check_jacobian_fd("t_to_r", 2, 2, trials=10).passed


def test_unknown_names():
    with pytest.raises(ValueError):
        check_jacobian_fd("cholesky", 2, 2)
    with pytest.raises(ValueError):
        check_pushforward("t", "beta1")
    with pytest.raises(ValueError):
        check_normalization("beta2", ExtendedShape(1, 1.0, (1.0,)), method="simpson")


def test_bimatrix_small():
    assert check_bimatrix_identity(trials=50, m=4, seed=3).passed


@pytest.mark.slow
@pytest.mark.parametrize("name", list(CHECKS))
def test_registered_check(name):
    report = CHECKS[name]()
    assert report.passed, report
