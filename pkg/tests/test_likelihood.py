import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genlik import (
    FiniteJoint,
    ObservedMarginal,
    beta_derivative,
    entropy_profile,
    expansion_estimate,
    h_likelihood,
    hellinger,
    joint_entropy,
    log_generalized_likelihood,
    log_marginal_likelihood,
    relative_entropy,
    top_u_likelihood,
    zeta_kernel,
)
from genlik.errors import (
    AllZeroColumn,
    DimensionMismatch,
    InvalidDistribution,
    LogOfZero,
    NonPositiveBeta,
    SupportViolation,
)

from conftest import random_joint, random_simplex


def loop_L(p, w, beta):
    """Term-by-term oracle for the generalized likelihood."""
    total = 0.0
    for y in range(p.shape[1]):
        if w[y] == 0:
            continue
        s = 0.0
        for x in range(p.shape[0]):
            if p[x, y] > 0:
                s += p[x, y] ** beta
        total += w[y] * math.log(s)
    return total / beta


class TestTypes:
    def test_renormalizes_small_drift(self):
        j = FiniteJoint(np.full((2, 2), 0.25 * (1 + 1e-10)))
        assert abs(j.p.sum() - 1.0) < 1e-15

    def test_rejects_large_drift(self):
        with pytest.raises(InvalidDistribution):
            FiniteJoint(np.full((2, 2), 0.3))

    def test_rejects_negative(self):
        with pytest.raises(InvalidDistribution):
            ObservedMarginal([1.2, -0.2])

    def test_marginals(self, rng):
        p = random_joint(rng, 3, 4)
        j = FiniteJoint(p)
        np.testing.assert_allclose(j.marginal_y(), p.sum(axis=0))
        np.testing.assert_allclose(j.marginal_x(), p.sum(axis=1))

    def test_immutable(self):
        j = FiniteJoint(np.full((2, 2), 0.25))
        with pytest.raises(ValueError):
            j.p[0, 0] = 1.0

    def test_csv_roundtrip(self, rng):
        j = FiniteJoint(random_joint(rng, 3, 5))
        text = j.to_csv()
        assert text.splitlines()[0] == "x,y,p"
        back = FiniteJoint.from_csv(text)
        np.testing.assert_allclose(back.p, j.p, rtol=0, atol=1e-15)


class TestMarginalLikelihood:
    def test_uniform(self):
        assert log_marginal_likelihood(np.full((2, 2), 0.25), [0.5, 0.5]) == pytest.approx(-math.log(2), abs=1e-15)

    def test_product(self, rng):
        px, py = random_simplex(rng, 3), random_simplex(rng, 4)
        val = log_marginal_likelihood(np.outer(px, py), py)
        assert val == pytest.approx(float(np.sum(py * np.log(py))), abs=1e-14)

    def test_direct_sum(self, rng):
        p, w = random_joint(rng, 3, 3), random_simplex(rng, 3)
        expected = sum(w[y] * math.log(sum(p[x, y] for x in range(3))) for y in range(3))
        assert log_marginal_likelihood(p, w) == pytest.approx(expected, abs=1e-14)

    def test_zero_weight_column_ignored(self):
        p = np.array([[0.5, 0.0], [0.5, 0.0]])
        assert log_marginal_likelihood(p, [1.0, 0.0]) == 0.0

    def test_log_of_zero(self):
        p = np.array([[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(LogOfZero):
            log_marginal_likelihood(p, [0.5, 0.5])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            log_marginal_likelihood(np.full((2, 2), 0.25), [0.2, 0.3, 0.5])


class TestGeneralizedLikelihood:
    def test_beta_one_reduction(self, rng):
        p, w = random_joint(rng, 4, 3), random_simplex(rng, 3)
        assert log_generalized_likelihood(p, w, 1.0) == pytest.approx(log_marginal_likelihood(p, w), abs=1e-14)
        assert log_generalized_likelihood(p, w, 1.0 + 1e-15) == pytest.approx(log_marginal_likelihood(p, w), abs=1e-13)

    @pytest.mark.parametrize("n,m,beta", [(2, 3, 0.5), (4, 4, 0.9), (3, 5, 2.0)])
    def test_uniform_closed_form(self, rng, n, m, beta):
        w = random_simplex(rng, m)
        val = log_generalized_likelihood(np.full((n, m), 1 / (n * m)), w, beta)
        assert val == pytest.approx(math.log(n) / beta - math.log(n * m), abs=1e-14)

    def test_power_sum_oracle(self, rng):
        p, w = random_joint(rng, 4, 4), random_simplex(rng, 4)
        assert log_generalized_likelihood(p, w, 0.9) == pytest.approx(loop_L(p, w, 0.9), abs=1e-13)

    def test_zero_entries_are_exact(self):
        p = np.array([[0.5, 0.0], [0.0, 0.5]])
        # columns are point masses: L_beta = sum pY ln 0.5 for every beta
        for beta in (0.3, 1.0, 7.0):
            assert log_generalized_likelihood(p, [0.5, 0.5], beta) == pytest.approx(math.log(0.5), abs=1e-15)

    def test_nonpositive_beta(self):
        with pytest.raises(NonPositiveBeta):
            log_generalized_likelihood(np.full((2, 2), 0.25), [0.5, 0.5], 0.0)


class TestHLikelihood:
    def test_uniform(self):
        assert h_likelihood(np.full((3, 2), 1 / 6), [0.3, 0.7]) == pytest.approx(-math.log(6), abs=1e-15)

    def test_deterministic_conditional(self, rng):
        p = np.zeros((3, 3))
        p[[2, 0, 1], [0, 1, 2]] = random_simplex(rng, 3)
        w = random_simplex(rng, 3)
        assert h_likelihood(p, w) == pytest.approx(log_marginal_likelihood(p, w), abs=1e-15)

    def test_large_beta_limit(self, rng):
        p, w = random_joint(rng, 3, 3), random_simplex(rng, 3)
        assert log_generalized_likelihood(p, w, 1e4) == pytest.approx(h_likelihood(p, w), abs=1e-3)


class TestTopU:
    def test_u1_is_h(self, rng):
        p, w = random_joint(rng, 3, 4), random_simplex(rng, 4)
        assert top_u_likelihood(p, w, 1) == pytest.approx(h_likelihood(p, w), abs=1e-15)

    def test_uniform(self):
        assert top_u_likelihood(np.full((3, 3), 1 / 9), [0.2, 0.3, 0.5], 2) == pytest.approx(-math.log(9), abs=1e-15)

    def test_sort_oracle(self, rng):
        p, w = random_joint(rng, 3, 3), random_simplex(rng, 3)
        expected = 0.0
        for y in range(3):
            col = sorted(p[:, y], reverse=True)
            expected += w[y] * (math.log(col[0]) + math.log(col[1])) / 2
        assert top_u_likelihood(p, w, 2) == pytest.approx(expected, abs=1e-14)

    def test_zero_order_statistic(self):
        p = np.array([[0.5, 0.2], [0.0, 0.3]])
        with pytest.raises(LogOfZero):
            top_u_likelihood(p, [0.5, 0.5], 2)


class TestZeta:
    def test_posterior_of_product(self, rng):
        px, py = random_simplex(rng, 4), random_simplex(rng, 3)
        z = zeta_kernel(np.outer(px, py), 1.0)
        np.testing.assert_allclose(z, np.repeat(px[:, None], 3, axis=1), atol=1e-15)

    def test_large_beta_indicator(self):
        p = np.array([[0.1, 0.3], [0.5, 0.2], [0.2, 0.1]])
        z = zeta_kernel(p, 1e4)
        np.testing.assert_allclose(z, [[0, 1], [1, 0], [0, 0]], atol=1e-6)

    def test_power_normalize_oracle(self, rng):
        col = rng.uniform(size=5)
        p = np.column_stack([col, rng.uniform(size=5)]) / 10
        expected = col**0.5 / np.sum(col**0.5)
        np.testing.assert_allclose(zeta_kernel(p, 0.5)[:, 0], expected, rtol=0, atol=1e-14)

    def test_all_zero_column(self):
        p = np.array([[0.5, 0.0], [0.5, 0.0]])
        with pytest.raises(AllZeroColumn):
            zeta_kernel(p, 0.7)
        z = zeta_kernel(p, 0.7, pY=[1.0, 0.0])
        np.testing.assert_allclose(z[:, 1], 0.0)


class TestBetaDerivative:
    def test_uniform(self):
        for beta in (0.5, 1.0, 3.0):
            val = beta_derivative(np.full((4, 3), 1 / 12), [0.2, 0.3, 0.5], beta)
            assert val == pytest.approx(-math.log(4) / beta**2, abs=1e-14)

    def test_deterministic(self, rng):
        p = np.zeros((3, 2))
        p[1, 0], p[2, 1] = 0.4, 0.6
        assert beta_derivative(p, [0.5, 0.5], 0.8) == 0.0

    def test_finite_difference(self, rng):
        p, w = random_joint(rng, 3, 3), random_simplex(rng, 3)
        h = 1e-5
        fd = (log_generalized_likelihood(p, w, 0.8 + h) - log_generalized_likelihood(p, w, 0.8 - h)) / (2 * h)
        assert beta_derivative(p, w, 0.8) == pytest.approx(fd, rel=1e-6)

    def test_finite_difference_100_instances(self, rng):
        h = 1e-5
        for _ in range(100):
            n, m = rng.integers(2, 6, size=2)
            p, w = random_joint(rng, n, m), random_simplex(rng, m)
            beta = rng.uniform(0.3, 3.0)
            fd = (log_generalized_likelihood(p, w, beta + h) - log_generalized_likelihood(p, w, beta - h)) / (2 * h)
            assert beta_derivative(p, w, beta) == pytest.approx(fd, rel=1e-6)


class TestExpansion:
    def test_beta_one(self, rng):
        p, w = random_joint(rng, 3, 3), random_simplex(rng, 3)
        assert expansion_estimate(p, w, 1.0) == log_marginal_likelihood(p, w)

    def test_deterministic_conditionals(self, rng):
        p = np.zeros((3, 3))
        p[[0, 2, 2], [0, 1, 2]] = random_simplex(rng, 3)
        w = random_simplex(rng, 3)
        for beta in (0.5, 0.9, 1.3):
            assert expansion_estimate(p, w, beta) == pytest.approx(log_marginal_likelihood(p, w), abs=1e-15)

    def test_cubic_error_decay(self, rng):
        p, w = random_joint(rng, 3, 3), random_simplex(rng, 3)
        eps = np.array([0.005, 0.01, 0.02])
        err = np.array([abs(expansion_estimate(p, w, 1 - e) - log_generalized_likelihood(p, w, 1 - e)) for e in eps])
        slope = np.polyfit(np.log(eps), np.log(err), 1)[0]
        assert slope == pytest.approx(3.0, abs=0.1)
        C = np.max(err / eps**3)
        assert err[1] <= C * 0.01**3

    def test_entropy_profile_bounds(self, rng):
        p = random_joint(rng, 5, 4)
        S = entropy_profile(p)
        assert np.all(S >= 0) and np.all(S <= math.log(5) + 1e-15)


class TestDivergences:
    def test_identity(self, rng):
        p = random_joint(rng, 3, 3)
        assert hellinger(p, p) == pytest.approx(0.0, abs=1e-15)
        assert relative_entropy(p, p) == 0.0

    def test_disjoint(self):
        assert hellinger([1.0, 0.0], [0.0, 1.0]) == 1.0

    def test_elementwise_oracle(self, rng):
        p, q = random_joint(rng, 3, 4), random_joint(rng, 3, 4)
        h = 1 - sum(math.sqrt(a * b) for a, b in zip(p.ravel(), q.ravel()))
        k = sum(a * math.log(a / b) for a, b in zip(p.ravel(), q.ravel()))
        assert hellinger(p, q) == pytest.approx(h, abs=1e-14)
        assert relative_entropy(p, q) == pytest.approx(k, abs=1e-14)

    def test_support_violation(self):
        with pytest.raises(SupportViolation):
            relative_entropy([0.5, 0.5], [1.0, 0.0])

    def test_joint_entropy_range(self, rng):
        p = random_joint(rng, 3, 4)
        assert 0 <= joint_entropy(p) <= math.log(12)
        assert joint_entropy(np.full((3, 4), 1 / 12)) == pytest.approx(math.log(12), abs=1e-14)


dims = st.tuples(st.integers(1, 5), st.integers(1, 5))


@st.composite
def joint_and_marginal(draw):
    n, m = draw(dims)
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    return random_joint(rng, n, m), random_joint(rng, m, 1).ravel(), rng


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(joint_and_marginal(), st.floats(0.05, 5.0), st.floats(0.05, 5.0))
    def test_beta_monotone(self, data, b1, b2):
        p, w, _ = data
        lo, hi = sorted((b1, b2))
        assert log_generalized_likelihood(p, w, lo) >= log_generalized_likelihood(p, w, hi) - 1e-12

    @settings(max_examples=200, deadline=None)
    @given(joint_and_marginal(), st.floats(0.05, 1.0), st.floats(0.01, 0.99))
    def test_concave_below_one(self, data, beta, lam):
        p1, w, rng = data
        p2 = random_joint(rng, *p1.shape)
        mix = lam * p1 + (1 - lam) * p2
        lhs = log_generalized_likelihood(mix, w, beta)
        rhs = lam * log_generalized_likelihood(p1, w, beta) + (1 - lam) * log_generalized_likelihood(p2, w, beta)
        assert lhs >= rhs - 1e-12

    @settings(max_examples=100, deadline=None)
    @given(joint_and_marginal(), st.floats(0.1, 4.0))
    def test_weak_conditionality(self, data, beta):
        p_cond, w, rng = data
        k = 3
        pj = random_simplex(rng, k)
        # p(x, y, j) = p(j) p(x, y | j); the j-th block is a sub-normalized grid
        blocks = [pj[j] * (p_cond if j == 1 else random_joint(rng, *p_cond.shape)) for j in range(k)]
        gap = log_generalized_likelihood(blocks[1], w, beta) - log_generalized_likelihood(p_cond, w, beta)
        assert gap == pytest.approx(math.log(pj[1]), abs=1e-12)
