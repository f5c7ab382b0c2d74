import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from adavol import (
    GarchParams,
    ModelOrder,
    NonNegativityViolation,
    StationarityViolation,
    UnsupportedOrder,
    VteParams,
    fourth_moment_ok,
    random_params,
    simulate,
    strict_stationarity_estimate,
    validate,
)


class TestModelOrder:
    def test_parse(self):
        assert ModelOrder.parse("1,1") == ModelOrder(1, 1)
        assert ModelOrder.parse("2") == ModelOrder(2, 0)
        assert ModelOrder(1, 0).is_arch

    @pytest.mark.parametrize("p,q", [(0, 0), (-1, 1), (1, -1)])
    def test_rejects_invalid(self, p, q):
        with pytest.raises(UnsupportedOrder):
            ModelOrder.checked(p, q)


class TestValidate:
    def test_easy_regime_params_in_k(self):
        p = GarchParams(2.0, [0.6])
        assert validate(p, require_K=True) is p

    def test_constant_variance_model(self):
        validate(GarchParams(1.0, [0.0], [0.0]))

    def test_boundary_is_not_in_k(self):
        with pytest.raises(StationarityViolation):
            validate(GarchParams(1.0, [0.5], [0.5]), require_K=True)
        validate(GarchParams(1.0, [0.5], [0.5]))

    @pytest.mark.parametrize("omega,alpha,beta", [(0.0, [0.1], []), (-1.0, [0.1], []),
                                                  (1.0, [-0.1], []), (1.0, [0.1], [-1e-9])])
    def test_negative_coefficients(self, omega, alpha, beta):
        with pytest.raises(NonNegativityViolation):
            validate(GarchParams(omega, alpha, beta))

    @given(st.floats(-1, 2), st.lists(st.floats(-0.5, 1.0), min_size=1, max_size=2),
           st.lists(st.floats(-0.5, 1.0), max_size=2), st.booleans())
    def test_matches_direct_predicate(self, omega, alpha, beta, require_k):
        ok = omega > 0 and all(a >= 0 for a in alpha) and all(b >= 0 for b in beta)
        if require_k:
            ok = ok and sum(alpha) + sum(beta) < 1
        params = GarchParams(omega, alpha, beta)
        if ok:
            assert validate(params, require_K=require_k) is params
        else:
            with pytest.raises((NonNegativityViolation, StationarityViolation)):
                validate(params, require_K=require_k)


class TestParamTypes:
    def test_vector_round_trip(self):
        p = GarchParams(1e-8, [0.2], [0.7])
        assert GarchParams.from_vector(p.to_vector(), p.order) == p
        assert p.dim == 3 and math.isclose(p.persistence, 0.9)

    def test_vte_implied_omega(self):
        v = VteParams([0.1], [0.8], 0.25)
        assert math.isclose(v.omega, 0.25 * 0.1)
        full = v.to_full()
        assert math.isclose(full.unconditional_variance(), 0.25)
        assert math.isclose(full.to_vte().gamma2, 0.25)


class TestFourthMoment:
    def test_arch_half(self):
        # 0.25 + 2 * 0.25 = 0.75
        assert fourth_moment_ok(GarchParams(1.0, [0.5]))

    def test_arch_threshold_near_057(self):
        # a^2 (1 + 2) < 1  <=>  a < 1/sqrt(3)
        assert fourth_moment_ok(GarchParams(1.0, [0.577]))
        assert not fourth_moment_ok(GarchParams(1.0, [0.578]))

    def test_garch_formula(self):
        a, b = 0.2, 0.7
        assert fourth_moment_ok(GarchParams(1.0, [a], [b])) == ((a + b) ** 2 + 2 * a * a < 1)

    def test_higher_orders_unsupported(self):
        with pytest.raises(UnsupportedOrder):
            fourth_moment_ok(GarchParams(1.0, [0.1, 0.1]))


def _quad_log_moment(a, b):
    f = lambda z: math.log(a * z * z + b) * stats.norm.pdf(z)
    # split at the log singularity when b = 0
    return sum(integrate.quad(f, lo, hi, limit=200)[0] for lo, hi in ((-np.inf, 0), (0, np.inf)))


class TestStrictStationarity:
    def test_alpha_zero_is_exact(self):
        assert strict_stationarity_estimate(GarchParams(1.0, [0.0], [0.5])) == math.log(0.5)

    def test_garch_matches_quadrature(self):
        est = strict_stationarity_estimate(GarchParams(1.0, [0.2], [0.7]), seed=3)
        ref = _quad_log_moment(0.2, 0.7)
        assert est < 0 and ref < 0
        assert abs(est - ref) < 5e-3

    def test_arch_06_negative(self):
        assert strict_stationarity_estimate(GarchParams(1.0, [0.6])) < 0

    def test_arch_threshold_is_two_exp_euler(self):
        # E log(a Z^2) = log a - euler_gamma - log 2 vanishes at a = 2 exp(euler_gamma)
        threshold = 2.0 * math.exp(np.euler_gamma)
        assert abs(threshold - 3.562) < 1e-3
        assert abs(_quad_log_moment(threshold, 0.0)) < 1e-8
        assert strict_stationarity_estimate(GarchParams(1.0, [3.50])) < 0
        assert strict_stationarity_estimate(GarchParams(1.0, [3.62])) > 0

    def test_requires_enough_draws(self):
        with pytest.raises(ValueError):
            strict_stationarity_estimate(GarchParams(1.0, [0.2]), mc_draws=100)


class TestSimulate:
    def test_constant_model(self):
        out = simulate(GarchParams(1.0, [0.0], [0.0]), 50, seed=1)
        np.testing.assert_array_equal(out.true_vol2, 1.0)

    def test_unconditional_variance(self):
        out = simulate(GarchParams(2.0, [0.6]), 20000, seed=7)
        assert abs(np.var(out.returns) / 5.0 - 1.0) < 0.10

    def test_deterministic(self):
        a = simulate(GarchParams(2.0, [0.6]), 100, seed=11)
        b = simulate(GarchParams(2.0, [0.6]), 100, seed=11)
        np.testing.assert_array_equal(a.returns, b.returns)
        np.testing.assert_array_equal(a.true_vol2, b.true_vol2)

    def test_output_is_read_only(self):
        out = simulate(GarchParams(2.0, [0.6]), 10, seed=0)
        with pytest.raises(ValueError):
            out.returns[0] = 1.0

    def test_explosive_rejected(self):
        with pytest.raises(StationarityViolation):
            simulate(GarchParams(1.0, [0.5], [0.5]), 10)

    def test_recursion_oracle(self):
        # rebuild the path with an explicit loop from the same innovations
        params = GarchParams(0.3, [0.1, 0.05], [0.6])
        out = simulate(params, 200, burn_in=0, seed=5)
        z = np.random.default_rng(5).standard_normal(200)
        v0 = params.unconditional_variance()
        x2, v = [v0, v0], [v0]
        for t in range(200):
            s2 = v0 if t == 0 else 0.3 + 0.1 * x2[0] + 0.05 * x2[1] + 0.6 * v[0]
            xt = math.sqrt(s2) * z[t]
            assert math.isclose(out.true_vol2[t], s2, rel_tol=1e-13)
            assert math.isclose(out.returns[t], xt, rel_tol=1e-13, abs_tol=1e-15)
            x2 = [xt * xt, x2[0]]
            v = [s2]

    @given(st.integers(0, 2**31 - 1))
    def test_variance_at_least_omega(self, seed):
        params = random_params(ModelOrder(1, 1), seed)
        out = simulate(params, 200, burn_in=50, seed=seed)
        assert np.all(out.true_vol2 >= params.omega * (1 - 1e-12))

    @pytest.mark.slow
    def test_long_path_variance_most_seeds(self):
        params = GarchParams(1.0, [0.1], [0.5])
        hits = sum(abs(np.var(simulate(params, 100_000, seed=s).returns) / 2.5 - 1) < 0.1 for s in range(40))
        assert hits >= 38


class TestRandomParams:
    @given(st.integers(0, 2**32 - 1), st.sampled_from([(1, 0), (1, 1), (2, 1)]))
    def test_in_k_and_omega_bounds(self, seed, order):
        p = random_params(order, seed)
        validate(p, require_K=True)
        # U in (0, 1] and tau >= 1; U can be tiny, so there is no positive lower bound
        assert 0.0 < p.omega <= 0.1

    def test_reproducible(self):
        assert random_params((1, 1), 42) == random_params((1, 1), 42)

    def test_scales_span_one_to_eight_decades(self):
        omegas = np.array([random_params((1, 0), s).omega for s in range(400)])
        assert omegas.max() > 1e-2 and omegas.min() < 1e-8
