import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gaussian_moment
from gpqmt.errors import InvalidParameterError, ResourceLimitError
from gpqmt.sigma_points import (
    UnitPointSet,
    gh_points,
    hermite_rule_1d,
    make_rule,
    scaled_ut_points,
    sr_points,
    ut_points,
)


def integrate(rule, exponents):
    """Rule estimate of ``E[prod_d xi_d**a_d]``, summed with exact rounding."""
    vals = np.prod(rule.points ** np.asarray(exponents)[:, None], axis=0)
    return math.fsum(rule.mean_weights * vals)


def exact(exponents):
    return math.prod(gaussian_moment(a) for a in exponents)


class TestUT:
    def test_dim1_kappa0(self):
        r = ut_points(1, 0.0)
        np.testing.assert_allclose(r.points, [[0.0, 1.0, -1.0]])
        np.testing.assert_allclose(r.mean_weights, [0.0, 0.5, 0.5])

    def test_dim2_kappa1(self):
        r = ut_points(2, 1.0)
        assert r.points[0, 1] == pytest.approx(math.sqrt(3))
        np.testing.assert_allclose(r.mean_weights, [1 / 3] + [1 / 6] * 4)

    def test_dim3_count(self):
        r = ut_points(3)
        assert r.n_points == 7
        assert r.mean_weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_column_order(self):
        c = math.sqrt(2)
        expected = np.array([[0, c, 0, -c, 0], [0, 0, c, 0, -c]])
        np.testing.assert_array_equal(ut_points(2).points, expected)

    @pytest.mark.parametrize("kappa", [-1.0, -2.5])
    def test_nonpositive_spread(self, kappa):
        with pytest.raises(InvalidParameterError):
            ut_points(1, kappa)

    def test_readonly(self):
        r = ut_points(2)
        with pytest.raises(ValueError):
            r.points[0, 0] = 1.0


class TestScaledUT:
    def test_alpha1_reduction(self):
        s, u = scaled_ut_points(3, 0.0, 1.0, 2.0), ut_points(3, 0.0)
        np.testing.assert_allclose(s.mean_weights, u.mean_weights)
        assert s.cov_weights[0] == pytest.approx(u.mean_weights[0] + 2.0)
        np.testing.assert_allclose(s.cov_weights[1:], u.mean_weights[1:])

    def test_beta0_identical(self):
        s, u = scaled_ut_points(1, 0.0, 1.0, 0.0), ut_points(1, 0.0)
        np.testing.assert_array_equal(s.points, u.points)
        np.testing.assert_allclose(s.mean_weights, u.mean_weights)
        np.testing.assert_allclose(s.cov_weights, u.mean_weights)

    def test_points_equal_ut(self):
        np.testing.assert_allclose(scaled_ut_points(2, 1.0, 1.0, 2.0).points, ut_points(2, 1.0).points)

    def test_zero_spread(self):
        with pytest.raises(InvalidParameterError):
            scaled_ut_points(2, -2.0, 1.0, 2.0)


class TestSR:
    def test_dim2(self):
        r = sr_points(2)
        assert r.n_points == 4
        assert r.points[0, 0] == pytest.approx(math.sqrt(2))
        np.testing.assert_allclose(r.mean_weights, 0.25)

    def test_dim1(self):
        r = sr_points(1)
        np.testing.assert_allclose(r.points, [[1.0, -1.0]])
        np.testing.assert_allclose(r.mean_weights, [0.5, 0.5])

    def test_dim5(self):
        r = sr_points(5)
        assert r.n_points == 10
        assert r.mean_weights.sum() == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("dim", [0, -1, 1.5])
    def test_bad_dim(self, dim):
        with pytest.raises(InvalidParameterError):
            sr_points(dim)

    @pytest.mark.parametrize("dim", [1, 2, 4])
    def test_odd_and_square_moments(self, dim):
        r = sr_points(dim)
        for d in range(dim):
            e = np.zeros(dim, dtype=int)
            e[d] = 1
            assert integrate(r, e) == pytest.approx(0.0, abs=1e-14)
            e[d] = 3
            assert integrate(r, e) == pytest.approx(0.0, abs=1e-14)
            e[d] = 2
            assert integrate(r, e) == pytest.approx(1.0, abs=1e-14)


class TestHermite:
    def test_order2(self):
        x, w = hermite_rule_1d(2)
        np.testing.assert_allclose(x, [-1.0, 1.0], atol=1e-14)
        np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-14)

    def test_order3(self):
        x, w = hermite_rule_1d(3)
        np.testing.assert_allclose(x, [-math.sqrt(3), 0.0, math.sqrt(3)], atol=1e-14)
        np.testing.assert_allclose(w, [1 / 6, 2 / 3, 1 / 6], atol=1e-14)

    def test_order1(self):
        x, w = hermite_rule_1d(1)
        np.testing.assert_array_equal(x, [0.0])
        np.testing.assert_array_equal(w, [1.0])

    @pytest.mark.parametrize("order", [2, 5, 10, 20, 40])
    def test_matches_numpy(self, order):
        # numpy's hermegauss integrates against exp(-x^2/2); normalize by sqrt(2 pi)
        xr, wr = np.polynomial.hermite_e.hermegauss(order)
        x, w = hermite_rule_1d(order)
        np.testing.assert_allclose(x, xr, atol=1e-12)
        np.testing.assert_allclose(w, wr / math.sqrt(2 * math.pi), rtol=1e-10, atol=1e-300)

    @pytest.mark.parametrize("order", range(2, 31))
    def test_symmetric_increasing(self, order):
        x, w = hermite_rule_1d(order)
        assert np.all(np.diff(x) > 0)
        np.testing.assert_array_equal(x, -x[::-1])
        np.testing.assert_allclose(w, w[::-1], rtol=1e-12)

    @pytest.mark.parametrize("order", range(2, 11))
    def test_exactness(self, order):
        r = gh_points(1, order)
        for p in range(2 * order):
            assert integrate(r, [p]) == pytest.approx(exact([p]), rel=1e-9, abs=1e-9)

    def test_bad_order(self):
        with pytest.raises(InvalidParameterError):
            hermite_rule_1d(0)


class TestGH:
    def test_dim2_order2(self):
        r = gh_points(2, 2)
        np.testing.assert_allclose(r.points, [[-1, -1, 1, 1], [-1, 1, -1, 1]], atol=1e-14)
        np.testing.assert_allclose(r.mean_weights, 0.25)

    def test_dim1_matches_1d(self):
        x, w = hermite_rule_1d(5)
        r = gh_points(1, 5)
        np.testing.assert_array_equal(r.points[0], x)
        np.testing.assert_array_equal(r.mean_weights, w)

    def test_dim3_order3(self):
        r = gh_points(3, 3)
        assert r.n_points == 27
        assert r.mean_weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_budget(self):
        with pytest.raises(ResourceLimitError):
            gh_points(6, 10)
        with pytest.raises(ResourceLimitError):
            gh_points(2, 5, max_points=10)

    def test_tensor_exactness(self):
        r = gh_points(2, 4)
        for a, b in itertools.product(range(8), repeat=2):
            assert integrate(r, [a, b]) == pytest.approx(exact([a, b]), abs=1e-9)


@pytest.mark.parametrize("dim", [1, 2, 3])
def test_ut_total_degree_3(dim):
    r = ut_points(dim, 0.0)
    for e in itertools.product(range(4), repeat=dim):
        if sum(e) <= 3:
            assert abs(integrate(r, e) - exact(e)) < 1e-10


@settings(max_examples=50, deadline=None)
@given(
    name=st.sampled_from(["ut", "sut", "sr", "gh"]),
    dim=st.integers(1, 4),
    kappa=st.floats(0.0, 5.0),
    order=st.integers(1, 5),
)
def test_weights_sum_to_one(name, dim, kappa, order):
    r = make_rule(name, dim, kappa=kappa, order=order)
    assert isinstance(r, UnitPointSet)
    assert r.mean_weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert r.points.shape == (dim, r.n_points)


def test_unknown_rule():
    with pytest.raises(InvalidParameterError):
        make_rule("simpson", 2)


def test_table_layout():
    t = gh_points(2, 2).table()
    assert t.shape == (4, 5)
    np.testing.assert_array_equal(t[:, 0], np.arange(4))
