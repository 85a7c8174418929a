import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from macroparasite.clump import (
    Degenerate,
    FiniteSupport,
    Geometric,
    GeometricMixture,
    LogShapeKind,
    NegativeBinomial,
    Poisson,
    classify_log_shape,
    clump_from_spec,
)
from macroparasite.errors import InvalidParameters

ALL = [
    Degenerate(1),
    Degenerate(3),
    Geometric(0.5),
    Geometric(0.2),
    NegativeBinomial(1.0, 1.0),
    NegativeBinomial(2.5, 0.4),
    Poisson(4.0),
    FiniteSupport((0.3, 0.4, 0.3)),
    FiniteSupport((0.0, 0.5, 0.0, 0.5)),
    GeometricMixture((0.5, 0.5), (0.3, 0.7)),
]


def test_pmf_values():
    assert Geometric(0.5).pmf(2) == pytest.approx(0.125, abs=1e-15)
    assert Degenerate(1).pmf(1) == 1.0
    assert Degenerate(1).pmf(0) == 0.0
    assert FiniteSupport((0.3, 0.4, 0.3)).pmf(1) == pytest.approx(0.4)
    assert FiniteSupport((0.3, 0.4, 0.3)).pmf(7) == 0.0


def test_pgf_values():
    z = np.linspace(0, 1, 11)
    np.testing.assert_allclose(Degenerate(1).pgf(z), z, atol=1e-15)
    assert Geometric(0.5).pgf(0.5) == pytest.approx(2 / 3, abs=1e-15)
    for c in ALL:
        assert c.pgf(1.0) == pytest.approx(1.0, abs=1e-13)


def test_pgf_rejects_outside_disk():
    with pytest.raises(InvalidParameters):
        Poisson(1.0).pgf(1.5)
    with pytest.raises(InvalidParameters):
        Poisson(1.0).pgf(-0.1)


def test_pgf_deriv_values():
    assert Degenerate(1).pgf_deriv(1.0, 1) == pytest.approx(1.0)
    assert NegativeBinomial(1, 1).pgf_deriv(1.0, 1) == pytest.approx(1.0, rel=1e-12)
    assert Poisson(4.0).pgf_deriv(1.0, 2) == pytest.approx(16.0, rel=1e-12)


@pytest.mark.parametrize("clump", ALL, ids=repr)
def test_pgf_deriv_matches_central_differences(clump):
    z = np.linspace(0.1, 0.9, 9)
    h = 1e-6
    fd = (clump.pgf(z + h) - clump.pgf(z - h)) / (2 * h)
    np.testing.assert_allclose(clump.pgf_deriv(z, 1), fd, atol=1e-6)


@pytest.mark.parametrize("clump", ALL, ids=repr)
def test_pgf_matches_pmf_series(clump):
    K = clump.truncate(1e-17) if clump.support_max is None else clump.support_max
    p = clump.pmf(np.arange(K + 1))
    z = np.linspace(0, 1, 6)
    np.testing.assert_allclose(clump.pgf(z), np.polyval(p[::-1], z), atol=1e-13)


def test_tail_values():
    assert Geometric(0.5).tail_beta(1) == pytest.approx(0.25, abs=1e-15)
    assert Degenerate(1).tail_beta(0) == 1.0
    assert Degenerate(1).tail_beta(1) == 0.0
    assert FiniteSupport((0.3, 0.4, 0.3)).tail_beta(1) == pytest.approx(0.3)


@pytest.mark.parametrize("clump", ALL, ids=repr)
def test_tail_matches_brute_force(clump):
    K = clump.truncate(1e-18) if clump.support_max is None else clump.support_max
    p = clump.pmf(np.arange(K + 1))
    brute = 1.0 - np.cumsum(p)
    j = np.arange(min(K, 40))
    np.testing.assert_allclose(clump.tail_beta(j), brute[j], atol=1e-12)


@pytest.mark.parametrize("clump", ALL, ids=repr)
def test_tail_sum_is_mean(clump):
    K = clump.truncate(1e-16) if clump.support_max is None else clump.support_max
    total = np.sum(clump.tail_beta(np.arange(K + 200)))
    assert total == pytest.approx(clump.mean, rel=1e-10)
    assert clump.pgf_deriv(1.0, 1) == pytest.approx(clump.mean, rel=1e-10)


def test_scipy_backed_negative_binomial_matches_gamma_poisson_formula():
    m, k = 2.5, 0.4
    n = np.arange(30)
    direct = stats.nbinom(k, k / (k + m)).pmf(n)
    np.testing.assert_allclose(NegativeBinomial(m, k).pmf(n), direct, rtol=1e-12)
    # PGF (1 + m(1 - z)/k)^-k
    z = np.linspace(0, 1, 5)
    np.testing.assert_allclose(NegativeBinomial(m, k).pgf(z), (1 + m * (1 - z) / k) ** -k, rtol=1e-12)


@pytest.mark.parametrize("clump", [c for c in ALL if c.support_max is None], ids=repr)
def test_truncate_is_smallest_bound(clump):
    for tol in (1e-6, 1e-12):
        K = clump.truncate(tol)
        assert clump.tail_beta(K) < tol
        assert K == 0 or clump.tail_beta(K - 1) >= tol


def test_log_shape_examples():
    assert classify_log_shape(Poisson(4.0)).classification == LogShapeKind.LOG_CONCAVE
    assert classify_log_shape(Geometric(0.5)).classification == LogShapeKind.BOTH
    assert classify_log_shape(FiniteSupport((0.5, 0.1, 0.4))).classification == LogShapeKind.LOG_CONVEX
    assert classify_log_shape(GeometricMixture((0.5, 0.5), (0.3, 0.7))).classification == LogShapeKind.LOG_CONVEX
    assert classify_log_shape(FiniteSupport((0.3, 0.4, 0.3))).classification == LogShapeKind.LOG_CONCAVE


def test_log_shape_interior_zero_has_witness():
    shape = classify_log_shape(FiniteSupport((0.0, 0.5, 0.0, 0.5)))
    assert shape.classification == LogShapeKind.NEITHER
    assert shape.witness_index == 2


def test_log_shape_ignores_zero_at_origin():
    # the support {1, 2, 3} is an interval; pi(0) = 0 lies outside it
    assert classify_log_shape(FiniteSupport((0.0, 0.3, 0.4, 0.3))).classification == LogShapeKind.LOG_CONCAVE


def test_log_shape_negative_binomial():
    assert classify_log_shape(NegativeBinomial(2.0, 3.0)).classification == LogShapeKind.LOG_CONCAVE
    assert classify_log_shape(NegativeBinomial(2.0, 0.5)).classification == LogShapeKind.LOG_CONVEX


@pytest.mark.parametrize("bad", [
    lambda: Geometric(0.0),
    lambda: Geometric(1.0),
    lambda: Degenerate(0),
    lambda: Poisson(0.0),
    lambda: NegativeBinomial(1.0, -1.0),
    lambda: FiniteSupport((0.5, 0.6)),
    lambda: FiniteSupport((1.0,)),
    lambda: GeometricMixture((0.5, 0.6), (0.3, 0.7)),
])
def test_invalid_parameters(bad):
    with pytest.raises(InvalidParameters):
        bad()


@pytest.mark.parametrize("clump", ALL, ids=repr)
def test_spec_round_trip(clump):
    assert clump_from_spec(clump.to_spec()) == clump


def test_unknown_spec():
    with pytest.raises(InvalidParameters):
        clump_from_spec({"type": "zipf", "s": 2})
    with pytest.raises(InvalidParameters):
        clump_from_spec({"type": "negbin", "mean": 1.0})


@settings(max_examples=60, deadline=None)
@given(p=st.floats(0.05, 0.95), j=st.integers(0, 30))
def test_geometric_tail_closed_form(p, j):
    assert Geometric(p).tail_beta(j) == pytest.approx((1 - p) ** (j + 1), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(w=st.lists(st.floats(0.01, 1.0), min_size=2, max_size=8), z=st.floats(0.0, 1.0))
def test_finite_support_pgf_in_unit_interval(w, z):
    w = np.array(w) / np.sum(w)
    c = FiniteSupport(tuple(w))
    g = c.pgf(z)
    assert -1e-15 <= g <= 1 + 1e-12
    assert c.mean == pytest.approx(np.dot(np.arange(len(w)), w), rel=1e-12)


@pytest.mark.parametrize("clump", ALL, ids=repr)
@pytest.mark.parametrize("lam", [0.0, 0.3, 0.5, 0.8, 0.9, 0.999, 1 - 1e-9, 1.0])
def test_tail_sums_match_series(clump, lam):
    K = clump.truncate(1e-18) if clump.support_max is None else clump.support_max
    j = np.arange(K + 1)
    beta = clump.tail_beta(j)
    powers = lam ** j.astype(float)
    D = np.sum(beta * powers)
    # sum_{i<j} lam^i, accumulated without the (1 - lam^j) / (1 - lam) quotient
    partial = np.concatenate([[0.0], np.cumsum(powers)[:-1]])
    H = np.sum(beta * partial)
    got_D, got_H = clump.tail_sums(lam)
    assert got_D == pytest.approx(D, rel=1e-12, abs=1e-15)
    assert got_H == pytest.approx(H, rel=1e-11, abs=1e-14)
