import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.polynomial import chebyshev as C

from sparsemoments import (
    DomainError,
    FunctionFamily,
    JordanSupport,
    NumericalFailure,
    chebyshev_measure_support,
    classical_T,
    extrema_sets,
    generalized_chebyshev,
    verify_dual_polynomial,
)
from sparsemoments.chebyshev import RemezOptions


def t_k_power_coefficients(k):
    return C.cheb2poly(np.eye(k + 1)[k])


def test_classical_examples():
    assert classical_T(2, 0.0) == -1.0
    assert classical_T(3, np.cos(np.pi / 3)) == pytest.approx(-1.0, abs=1e-15)
    assert classical_T(5, 1.0) == 1.0
    assert classical_T(0, 0.3) == 1.0
    with pytest.raises(DomainError):
        classical_T(2, 1.5)


@given(st.integers(0, 40), st.floats(-1, 1))
def test_classical_matches_trigonometric(k, x):
    assert classical_T(k, x) == pytest.approx(np.cos(k * np.arccos(x)), abs=1e-12)


def test_extrema_examples():
    assert extrema_sets(2) == JordanSupport((1.0, -1.0), (0.0,))
    assert extrema_sets(1) == JordanSupport((1.0,), (-1.0,))
    e3 = extrema_sets(3)
    np.testing.assert_allclose(e3.plus, [-0.5, 1.0], atol=1e-15)
    np.testing.assert_allclose(e3.minus, [-1.0, 0.5], atol=1e-15)


@pytest.mark.parametrize("k", range(1, 16))
def test_extrema_sets_hit_plus_minus_one(k):
    e = extrema_sets(k)
    assert len(e) == k + 1
    assert not set(e.plus) & set(e.minus)
    np.testing.assert_allclose(classical_T(k, np.array(e.plus)), 1.0, atol=1e-12)
    np.testing.assert_allclose(classical_T(k, np.array(e.minus)), -1.0, atol=1e-12)


def test_power_k3():
    res = generalized_chebyshev(FunctionFamily.power(3), 3)
    np.testing.assert_allclose(res.alternation_points, [-1, -0.5, 0.5, 1], atol=1e-9)
    assert res.sup_norm == pytest.approx(1.0, abs=1e-9)
    np.testing.assert_allclose(res.coefficients, t_k_power_coefficients(3), atol=1e-9)


def test_cosine_k2():
    res = generalized_chebyshev(FunctionFamily.cosine(2), 2)
    np.testing.assert_allclose(res.alternation_points, [0, 0.5, 1], atol=1e-9)
    np.testing.assert_allclose(res.coefficients, [0, 0, 1], atol=1e-9)


def test_power_k1():
    res = generalized_chebyshev(FunctionFamily.power(1), 1)
    np.testing.assert_allclose(res.coefficients, [0, 1], atol=1e-12)
    np.testing.assert_allclose(res.alternation_points, [-1, 1])


def test_measure_support_examples():
    s3 = chebyshev_measure_support(FunctionFamily.power(3), 3)
    np.testing.assert_allclose(s3.plus, [-0.5, 1.0], atol=1e-9)
    np.testing.assert_allclose(s3.minus, [-1.0, 0.5], atol=1e-9)
    c1 = chebyshev_measure_support(FunctionFamily.cosine(1), 1)
    assert c1 == JordanSupport((1.0,), (0.0,))
    p2 = chebyshev_measure_support(FunctionFamily.power(2), 2)
    assert p2.plus == (-1.0, 1.0)
    np.testing.assert_allclose(p2.minus, [0.0], atol=1e-12)


@pytest.mark.parametrize(
    "fam",
    [
        FunctionFamily.power(7),
        FunctionFamily.cosine(9),
        FunctionFamily.laplace(6),
        FunctionFamily.stieltjes([1.5, -1.5, 2.5, -2.5]),
        FunctionFamily.muntz([0.5, 1.0, 1.5, 2.0, 2.5]),
    ],
    ids=lambda f: f.kind,
)
def test_equioscillation_and_certificate(fam):
    k = fam.n
    res = generalized_chebyshev(fam, k)
    vals = res.values
    assert len(res.alternation_points) == k + 1
    assert np.all(np.diff(res.alternation_points) > 0)
    assert np.all(np.sign(vals[1:]) == -np.sign(vals[:-1]))
    # above 1 only by the cancellation error of evaluating sum a_k u_k
    rounding = 4 * np.finfo(float).eps * np.abs(res.coefficients).sum()
    assert np.all(np.abs(vals) <= 1 + rounding) and np.all(np.abs(vals) >= 1 - 1e-8)
    assert res.sign_at_right_end == 1.0
    assert res(np.array([fam.interval[1]]))[0] > 0
    grid = np.linspace(*fam.interval, 20_001)
    assert np.abs(res(grid)).max() <= 1 + 1e-8
    cert = verify_dual_polynomial(res.coefficients, res.family,
                                  chebyshev_measure_support(fam, k))
    assert cert.verified


def test_complex_family_rejected():
    with pytest.raises(ValueError):
        generalized_chebyshev(FunctionFamily.complex_exponential(3), 2)
    with pytest.raises(ValueError):
        generalized_chebyshev(FunctionFamily.power(3), 4)


def test_non_convergence_reported():
    with pytest.raises(NumericalFailure) as info:
        generalized_chebyshev(FunctionFamily.laplace(6), 6, RemezOptions(max_iter=1))
    assert info.value.payload is not None
