import numpy as np
import pytest

from mhp.evaluation import min_sinr, performance_ratio, total_power
from mhp.fd_design import sinr
from tests.test_sdp import channel_set_from_vectors


def test_single_ue_min_is_its_own_sinr():
    channels = channel_set_from_vectors([[np.array([1.0 + 0j, 0.5])]])
    w = np.array([[1.0], [0.5]], dtype=complex)
    assert min_sinr(channels, w) == pytest.approx(sinr(channels, w, 0, 0))


def test_adding_a_ue_never_increases_min():
    rng = np.random.default_rng(0)
    h1 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    h2 = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    w = rng.standard_normal((3, 1)) + 1j * rng.standard_normal((3, 1))
    small = channel_set_from_vectors([[h1]])
    large = channel_set_from_vectors([[h1, h2]])
    assert min_sinr(large, w) <= min_sinr(small, w)


def test_min_sinr_matches_naive_loop():
    rng = np.random.default_rng(1)
    vectors = [
        [rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(3)],
        [rng.standard_normal(4) + 1j * rng.standard_normal(4) for _ in range(2)],
    ]
    channels = channel_set_from_vectors(vectors)
    w = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    naive = min(
        sinr(channels, w, j, k)
        for j in range(2)
        for k in range(len(vectors[j]))
    )
    assert min_sinr(channels, w) == pytest.approx(naive, rel=1e-12)


def test_total_power_examples():
    assert total_power(np.array([[np.sqrt(10.0)]])) == pytest.approx(10.0)
    rng = np.random.default_rng(2)
    w = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
    assert total_power(q @ w) == pytest.approx(total_power(w), rel=1e-12)


def test_performance_ratio():
    assert performance_ratio(1.0, 1.0) == pytest.approx(1.0)
    assert performance_ratio(0.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        performance_ratio(1.0, 0.0)
