import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import expit

from ordinal_thresholds.probability_models import (
    BiasVector, acl_pmf, as_pmf, cl_delta_thresholds, cl_pmf, is_unimodal, mode_set, unimodal_region_scan,
)


def test_mode_set():
    assert mode_set([0.1, 0.2, 0.4, 0.2, 0.1]) == {3}
    assert mode_set([0.3, 0.3, 0.2, 0.2]) == {1, 2}
    assert mode_set([0.25] * 4) == {1, 2, 3, 4}


def test_is_unimodal():
    assert is_unimodal([0.1, 0.2, 0.4, 0.2, 0.1])
    assert not is_unimodal([0.4, 0.1, 0.5])
    assert is_unimodal([0.2] * 5)
    # plateau between two modes is fine, a dip is not
    assert is_unimodal([0.1, 0.3, 0.3, 0.3])
    assert not is_unimodal([0.3, 0.1, 0.3, 0.3])


def test_as_pmf_rejects():
    with pytest.raises(ValueError):
        as_pmf([0.5, 0.5])
    with pytest.raises(ValueError):
        as_pmf([0.5, 0.6, -0.1 + 1e-3])
    with pytest.raises(ValueError):
        as_pmf([0.2, 0.2, 0.2])


def test_bias_vector_invariants():
    with pytest.raises(ValueError):
        BiasVector([0.1, 0.2])
    with pytest.raises(ValueError):
        BiasVector([0.0, 1.0, 0.5], ordered=True)
    b = BiasVector([0.0, 1.0, 0.5])
    assert not b.is_sorted and b.K == 4
    assert np.allclose(BiasVector.equal_interval(2.0, 4).values, [0, 2, 4])
    assert np.allclose(BiasVector.grave(1.0).values, [0, 1, 2, 3, 5, 4, 6, 7, 8])
    with pytest.raises(ValueError):
        BiasVector.acute(1.0, K=5)


def test_cl_pmf_basic():
    assert np.allclose(cl_pmf(0.0, [0.0, 0.0]), [0.5, 0.0, 0.5])
    p = cl_pmf(-800.0, BiasVector.equal_interval(1.0, 5))
    assert p[0] == pytest.approx(1.0) and np.all(p[1:] < 1e-12)
    with pytest.raises(ValueError, match="CL requires ordered bias"):
        cl_pmf(0.0, BiasVector.grave(1.0))


def test_cl_pmf_example_mode_and_symmetry():
    b = BiasVector.equal_interval(3.0, 10)
    p = cl_pmf(1.5, b)
    assert mode_set(p) == {2}
    for s in (0.3, 1.0, 2.2):
        assert cl_pmf(1.5 + s, b)[1] == pytest.approx(cl_pmf(1.5 - s, b)[1], abs=1e-12)


def test_cl_cumulative_matches_sigmoid(rng):
    b = np.sort(rng.normal(size=6))
    b -= b[0]
    for u in rng.normal(scale=3, size=20):
        cum = np.cumsum(cl_pmf(u, b))[:-1]
        assert np.allclose(cum, expit(b - u), atol=1e-12)


def test_acl_zero_bias_uniform():
    assert np.allclose(acl_pmf(0.0, np.zeros(4)), 0.2)


@settings(max_examples=60, deadline=None)
@given(st.floats(-30, 30), st.lists(st.floats(-5, 5), min_size=2, max_size=8))
def test_acl_adjacent_ratio(u, tail):
    b = np.array([0.0] + tail)
    p = acl_pmf(u, b)
    assert abs(p.sum() - 1) < 1e-10
    ok = (p[:-1] > 1e-200) & (p[1:] > 1e-200)
    ratio = np.log(p[1:][ok]) - np.log(p[:-1][ok])
    assert np.allclose(ratio, (u - b)[ok], atol=1e-8)


def test_acl_no_overflow():
    p = acl_pmf(700.0, BiasVector.equal_interval(3.0, 10))
    assert np.all(np.isfinite(p)) and p[-1] == pytest.approx(1.0)


def test_acl_grave_not_unimodal():
    assert not is_unimodal(acl_pmf(4.5, BiasVector.grave(1.0)))


def test_unimodal_region_scan():
    grid = np.linspace(-3, 27, 1001)
    assert unimodal_region_scan("acl", BiasVector.equal_interval(1.0, 10), grid).all()
    assert unimodal_region_scan("cl", BiasVector.equal_interval(3.0, 10), grid).all()
    assert not unimodal_region_scan("cl", BiasVector.equal_interval(1 / 3, 10), np.linspace(-3, 9, 1001)).all()


def test_cl_delta_thresholds():
    assert cl_delta_thresholds(-0.5, 10)[0] == 0.0
    d1, _ = cl_delta_thresholds(1.0, 10)
    assert d1 == pytest.approx(-np.log((1 - np.exp(-1)) / 2))
    assert d1 == pytest.approx(1.1518, abs=1e-4)
    # from delta1 on, the chain P(1) <= P(2) holds; just below it fails
    p = cl_pmf(1.0, BiasVector.equal_interval(d1 + 1e-6, 10))
    assert p[0] <= p[1]
    p = cl_pmf(1.0, BiasVector.equal_interval(d1 - 1e-3, 10))
    assert p[0] > p[1]


def test_cl_delta2_bisection():
    u = 5.0
    _, d2 = cl_delta_thresholds(u, 10)
    b_hi = BiasVector.equal_interval(d2 * (1 + 1e-6), 10)
    p = cl_pmf(u, b_hi)
    assert p[-1] <= p[-2]
    p = cl_pmf(u, BiasVector.equal_interval(d2 * (1 - 1e-3), 10))
    assert p[-1] > p[-2]
