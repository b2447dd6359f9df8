import numpy as np
import pytest


def random_spd(rng, m, low=0.2, high=3.0):
    Q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    S = (Q * rng.uniform(low, high, m)) @ Q.T
    return 0.5 * (S + S.T)


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
