import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from macroparasite import orders
from macroparasite.errors import InvalidParameters
from macroparasite.orders import Relation
from macroparasite.pmf import Pmf

BERNOULLI = Pmf([0.5, 0.5])
SYMMETRIC = Pmf([3 / 14, 8 / 14, 3 / 14])

pmf_lists = st.lists(st.floats(0.0, 1.0), min_size=2, max_size=25).filter(lambda w: sum(w[1:]) > 1e-3)


def as_pmf(w):
    w = np.asarray(w, float)
    return Pmf(w / w.sum())


def brute_gini(P):
    k = P.support
    m = P.mean
    return float(np.sum(P.mass[:, None] * P.mass[None, :] * np.abs(k[:, None] - k[None, :])) / (2 * m))


def test_lorenz_point_mass_is_egalitarian():
    curve = orders.lorenz_curve(Pmf.point_mass(3))
    assert curve.knots == [(0.0, 0.0), (1.0, 1.0)]
    np.testing.assert_allclose(curve(np.linspace(0, 1, 7)), np.linspace(0, 1, 7))


def test_lorenz_bernoulli_knots():
    assert orders.lorenz_curve(BERNOULLI).knots == [(0.0, 0.0), (0.5, 0.0), (1.0, 1.0)]


def test_lorenz_scale_invariance():
    scaled = Pmf([0.5, 0.0, 0.5])
    a, b = orders.lorenz_curve(BERNOULLI), orders.lorenz_curve(scaled)
    np.testing.assert_array_equal(a.u, b.u)
    np.testing.assert_array_equal(a.L, b.L)


@settings(max_examples=60, deadline=None)
@given(w=pmf_lists, c=st.integers(2, 5))
def test_lorenz_scale_invariance_property(w, c):
    P = as_pmf(w)
    mass = np.zeros(c * P.k_max + 1)
    mass[::c] = P.mass
    a, b = orders.lorenz_curve(P), orders.lorenz_curve(Pmf(mass))
    np.testing.assert_allclose(a.u, b.u, atol=1e-15)
    np.testing.assert_allclose(a.L, b.L, atol=1e-14)


def test_index_values():
    assert orders.gini(Pmf.point_mass(4)) == 0.0
    assert orders.pietra(Pmf.point_mass(4)) == 0.0
    assert orders.gini(BERNOULLI) == pytest.approx(0.5, abs=1e-15)
    assert orders.pietra(BERNOULLI) == pytest.approx(0.5, abs=1e-15)


def test_gini_poisson_monte_carlo():
    P = Pmf.from_scipy(stats.poisson(2.5))
    g = orders.gini(P)
    rng = np.random.default_rng(12345)
    x, y = rng.poisson(2.5, size=(2, 1_000_000))
    d = np.abs(x - y) / (2 * 2.5)
    assert abs(d.mean() - g) < 3 * d.std() / np.sqrt(d.size)


def test_gini_single_sum_branch_matches_double_sum():
    P = Pmf.from_scipy(stats.nbinom(0.3, 0.3 / (0.3 + 200)), tol=1e-9)
    assert P.mass.size > 1024
    F = P.cdf() / P.total
    short = Pmf(P.mass[:1000] / P.mass[:1000].sum())
    assert orders.gini(short) == pytest.approx(brute_gini(short), abs=1e-12)
    assert orders.gini(P) == pytest.approx(np.sum(F * (1 - F)) / (P.mean / P.total), rel=1e-12)
    assert orders.gini(P) == pytest.approx(orders.gini_lorenz_area(P), abs=1e-10)


@settings(max_examples=80, deadline=None)
@given(w=pmf_lists)
def test_index_identities(w):
    P = as_pmf(w)
    g = orders.gini(P)
    assert g == pytest.approx(brute_gini(P), abs=1e-12)
    assert g == pytest.approx(orders.gini_lorenz_area(P), abs=1e-12)
    assert orders.pietra(P) == pytest.approx(orders.pietra_lorenz_gap(P), abs=1e-12)
    assert orders.pietra(P) <= g + 1e-12


def test_zero_mean_rejected():
    with pytest.raises(InvalidParameters):
        orders.lorenz_curve(Pmf([1.0]))


def test_stop_loss_brute_force():
    P = as_pmf([0.1, 0.2, 0.3, 0.25, 0.15])
    k = P.support
    brute = [np.dot(np.maximum(k - t, 0), P.mass) for t in range(7)]
    np.testing.assert_allclose(orders.stop_loss(P, 6), brute, atol=1e-15)


def test_convex_examples():
    assert orders.convex_order_check(SYMMETRIC, SYMMETRIC).relation == Relation.EQUAL
    assert orders.convex_order_check(Pmf.point_mass(1), SYMMETRIC).relation == Relation.LEFT_SMALLER
    assert orders.convex_order_check(SYMMETRIC, Pmf.point_mass(1)).relation == Relation.RIGHT_SMALLER
    poisson = Pmf.from_scipy(stats.poisson(2.0))
    negbin = Pmf.from_scipy(stats.nbinom(2.0, 0.5))
    verdict = orders.convex_order_check(poisson, negbin)
    assert verdict.relation == Relation.LEFT_SMALLER
    # brute-force stop-loss sums
    t_max = max(poisson.k_max, negbin.k_max)
    for t in range(t_max + 1):
        kp, kq = poisson.support, negbin.support
        assert np.dot(np.maximum(kp - t, 0), poisson.mass) <= np.dot(np.maximum(kq - t, 0), negbin.mass) + 1e-12


def test_convex_incomparable_has_witness():
    # equal means 1, neither dominates: crossing stop-loss transforms
    P = Pmf([0.5, 0.0, 0.5])
    Q = Pmf([0.3, 0.6, 0.0, 0.0, 0.1])
    verdict = orders.convex_order_check(P, Q)
    assert verdict.relation == Relation.INCOMPARABLE
    w = verdict.certificate["witness"]
    assert w["left_smaller_at"]["margin"] > 0 > w["right_smaller_at"]["margin"]


def test_convex_needs_equal_means():
    with pytest.raises(InvalidParameters):
        orders.convex_order_check(Pmf.point_mass(1), Pmf.point_mass(2))


def test_lorenz_examples():
    for m1, m2 in [(4.0, 2.0), (2.5, 0.5)]:
        P, Q = Pmf.from_scipy(stats.poisson(m1)), Pmf.from_scipy(stats.poisson(m2))
        assert orders.lorenz_order_check(P, Q).relation == Relation.LEFT_SMALLER
        assert orders.lorenz_order_check(Q, P).relation == Relation.RIGHT_SMALLER
    for (m1, k1), (m2, k2) in [((3.0, 2.0), (2.0, 1.0)), ((3.0, 2.0), (3.0, 0.5))]:
        P = Pmf.from_scipy(stats.nbinom(k1, k1 / (k1 + m1)))
        Q = Pmf.from_scipy(stats.nbinom(k2, k2 / (k2 + m2)))
        assert orders.lorenz_order_check(P, Q).relation == Relation.LEFT_SMALLER
    P = Pmf.from_scipy(stats.poisson(3.0))
    assert orders.lorenz_order_check(P, P).relation == Relation.EQUAL


def test_truncation_slack_blocks_verdict():
    P = Pmf(np.array([3 / 14, 8 / 14, 3 / 14]), tail_bound=0.3)
    verdict = orders.convex_order_check(Pmf.point_mass(1), P)
    assert verdict.relation == Relation.EQUAL
    assert verdict.certificate["slack"] > 0.3


def test_survival_crossing_examples():
    verdict = orders.survival_crossing_check(Pmf.point_mass(1), SYMMETRIC)
    assert verdict.relation == Relation.LEFT_SMALLER
    assert verdict.certificate["sign_changes"] == 1
    assert orders.survival_crossing_check(SYMMETRIC, Pmf.point_mass(1)).relation == Relation.RIGHT_SMALLER
    assert orders.survival_crossing_check(SYMMETRIC, SYMMETRIC).relation == Relation.EQUAL


def test_survival_crossing_falls_back_on_multiple_crossings():
    P = Pmf([0.5, 0.0, 0.5])
    Q = Pmf([0.3, 0.6, 0.0, 0.0, 0.1])
    verdict = orders.survival_crossing_check(P, Q)
    assert verdict.certificate["survival_sign_changes"] > 1
    assert verdict.relation == orders.convex_order_check(P, Q).relation


@settings(max_examples=80, deadline=None)
@given(w=pmf_lists, v=pmf_lists)
def test_lorenz_verdict_orders_indices(w, v):
    P, Q = as_pmf(w), as_pmf(v)
    verdict = orders.lorenz_order_check(P, Q)
    if verdict.relation == Relation.LEFT_SMALLER:
        assert orders.gini(P) <= orders.gini(Q) + 1e-10
        assert orders.pietra(P) <= orders.pietra(Q) + 1e-10
        assert P.cv <= Q.cv + 1e-9
    swapped = orders.lorenz_order_check(Q, P).relation
    mirror = {Relation.LEFT_SMALLER: Relation.RIGHT_SMALLER, Relation.RIGHT_SMALLER: Relation.LEFT_SMALLER}
    assert swapped == mirror.get(verdict.relation, verdict.relation)


def mean_preserving_spread(P):
    """X + 1 and X + 1 + e with e = -1 or +1 with probability 1/2 each."""
    base = Pmf(np.concatenate([[0.0], P.mass]))
    spread = np.zeros(P.k_max + 3)
    spread[: P.k_max + 1] += 0.5 * P.mass
    spread[2:] += 0.5 * P.mass
    return base, Pmf(spread)


@settings(max_examples=80, deadline=None)
@given(w=pmf_lists)
def test_convex_verdict_orders_variance(w):
    base, spread = mean_preserving_spread(as_pmf(w))
    verdict = orders.convex_order_check(base, spread)
    assert verdict.relation == Relation.LEFT_SMALLER
    assert base.variance <= spread.variance
    assert orders.survival_crossing_check(base, spread).relation in (Relation.LEFT_SMALLER,)
    assert orders.lorenz_order_check(base, spread).relation == Relation.LEFT_SMALLER
