import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robustbo import kernel_value, matern52_spec, rq_spec, scaled_distance
from robustbo.kernels import gram, kernel_matrix
from robustbo.linalg import jittered_cholesky


def test_scaled_distance_identity():
    spec = matern52_spec([1.0, 2.0])
    assert scaled_distance([0.3, -1.0], [0.3, -1.0], spec) == 0.0


def test_scaled_distance_unit_difference():
    spec = matern52_spec([1.0])
    assert scaled_distance([0.0], [1.0], spec) == pytest.approx(1.0)


def test_scaled_distance_weighted():
    spec = matern52_spec([2.0, 1.0])
    r = scaled_distance([0.0, 0.0], [2.0, 1.0], spec)
    assert r == pytest.approx(np.sqrt(2.0), abs=1e-12)


def test_scaled_distance_dim_mismatch():
    spec = matern52_spec([1.0, 1.0])
    with pytest.raises(ValueError):
        scaled_distance([0.0], [1.0], spec)


def test_matern_zero_distance():
    spec = matern52_spec([1.0], signal_variance=1.0)
    assert kernel_value([0.5], [0.5], spec) == pytest.approx(1.0)


def test_matern_unit_distance():
    spec = matern52_spec([1.0])
    expected = (7.0 / 3.0) * np.exp(-1.0)  # 0.85839...
    assert kernel_value([0.0], [1.0], spec) == pytest.approx(expected,
                                                             abs=1e-12)


def test_rq_unit_distance():
    spec = rq_spec([1.0], alpha=2.0)
    assert kernel_value([0.0], [1.0], spec) == pytest.approx(0.64, abs=1e-12)


def test_gram_single_point():
    spec = matern52_spec([1.0])
    K = gram(np.array([[0.0]]), spec, noise_variance=0.1)
    assert K == pytest.approx(np.array([[1.1]]))


def test_gram_two_points():
    spec = matern52_spec([1.0])
    K = gram(np.array([[0.0], [1.0]]), spec, 0.0)
    v = (7.0 / 3.0) * np.exp(-1.0)
    assert np.allclose(K, [[1.0, v], [v, 1.0]], atol=1e-12)


def test_gram_exact_symmetry():
    rng = np.random.default_rng(0)
    X = rng.random((20, 3))
    spec = matern52_spec([0.5, 1.0, 2.0], signal_variance=1.7)
    K = gram(X, spec, 1e-4)
    assert np.array_equal(K, K.T)


@given(st.integers(0, 1000))
@settings(max_examples=40, deadline=None)
def test_kernel_symmetry_property(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 5))
    spec = matern52_spec(rng.uniform(0.1, 3.0, d),
                         signal_variance=float(rng.uniform(0.1, 5.0)))
    x, x2 = rng.standard_normal(d), rng.standard_normal(d)
    assert kernel_value(x, x2, spec) == pytest.approx(
        kernel_value(x2, x, spec), rel=1e-12)


@given(st.integers(0, 1000), st.booleans())
@settings(max_examples=40, deadline=None)
def test_kernel_bounded_property(seed, use_rq):
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, 4))
    sf2 = float(rng.uniform(0.1, 5.0))
    ls = rng.uniform(0.1, 3.0, d)
    spec = rq_spec(ls, sf2, 2.0) if use_rq else matern52_spec(ls, sf2)
    x, x2 = rng.standard_normal(d), rng.standard_normal(d)
    k = kernel_value(x, x2, spec)
    assert 0.0 < k <= sf2 + 1e-12
    if not np.array_equal(x, x2):
        assert k < sf2


@pytest.mark.parametrize("make_spec", [
    lambda: matern52_spec([1.0], 2.0),
    lambda: rq_spec([1.0], 2.0, 2.0),
])
def test_monotone_decay(make_spec):
    spec = make_spec()
    rs = np.linspace(0.0, 5.0, 50)
    vals = [kernel_value([0.0], [r], spec) for r in rs]
    assert np.all(np.diff(vals) < 0.0)


@pytest.mark.parametrize("seed", range(5))
def test_gram_psd_random(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 51))
    d = int(rng.integers(1, 5))
    X = rng.random((n, d))
    spec = matern52_spec(rng.uniform(0.1, 2.0, d))
    L, _ = jittered_cholesky(gram(X, spec, 1e-8))
    assert np.all(np.isfinite(L))


def test_invalid_spec_rejected():
    with pytest.raises(ValueError):
        matern52_spec([-1.0])
    with pytest.raises(ValueError):
        matern52_spec([1.0], signal_variance=0.0)
    with pytest.raises(ValueError):
        rq_spec([1.0], alpha=-1.0)


def test_kernel_matrix_matches_scalar():
    rng = np.random.default_rng(3)
    X1, X2 = rng.random((4, 2)), rng.random((3, 2))
    spec = matern52_spec([0.5, 1.5], 2.0)
    K = kernel_matrix(X1, X2, spec)
    for i in range(4):
        for j in range(3):
            assert K[i, j] == pytest.approx(
                kernel_value(X1[i], X2[j], spec), rel=1e-12)
