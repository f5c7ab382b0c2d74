import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from adavol import GarchParams, ModelOrder, VteParams, random_params, simulate
from adavol.errors import ModeMismatch
from adavol.filter import (
    FilterState,
    derivative_path,
    gradient_step,
    variance_path,
    variance_step_full,
    variance_step_vte,
)


def reference_variances(x, omega, alpha, beta, x2_init=0.0, v_init=0.0):
    """Plain-loop conditional variances, used as an independent oracle."""
    p, q = len(alpha), len(beta)
    x2lag, vlag = [x2_init] * p, [v_init] * q
    out = []
    for xt in x:
        v = omega + sum(a * l for a, l in zip(alpha, x2lag)) + sum(b * l for b, l in zip(beta, vlag))
        out.append(v)
        x2lag = ([xt * xt] + x2lag)[:p]
        vlag = ([v] + vlag)[:q]
    return np.array(out)


def reference_vte_variances(x, alpha, beta, g2):
    p, q = len(alpha), len(beta)
    x2lag, vlag = [g2] * p, [g2] * q
    out = []
    for xt in x:
        v = g2 + sum(a * (l - g2) for a, l in zip(alpha, x2lag)) + sum(b * (l - g2) for b, l in zip(beta, vlag))
        out.append(v)
        x2lag = ([xt * xt] + x2lag)[:p]
        vlag = ([v] + vlag)[:q]
    return np.array(out)


class TestVarianceStepFull:
    def test_constant_model(self):
        st_ = FilterState((1, 1), "full", x2_init=7.0, v_init=3.0)
        assert variance_step_full(st_, GarchParams(1.0, [0.0], [0.0]), None) == 1.0

    def test_arch_hand_value(self):
        st_ = FilterState((1, 0), "full", x2_init=4.0)
        assert variance_step_full(st_, GarchParams(2.0, [0.6]), None) == pytest.approx(4.4, rel=1e-15)

    def test_garch_hand_value(self):
        st_ = FilterState((1, 1), "full", x2_init=1.0, v_init=2.0)
        assert variance_step_full(st_, GarchParams(1.0, [0.2], [0.7]), None) == pytest.approx(2.6, rel=1e-15)

    def test_pushes_previous_observation(self):
        st_ = FilterState((1, 0), "full")
        p = GarchParams(2.0, [0.6])
        variance_step_full(st_, p, None)
        assert variance_step_full(st_, p, 2.0) == pytest.approx(4.4)

    def test_mode_mismatch(self):
        with pytest.raises(ModeMismatch):
            variance_step_full(FilterState((1, 0), "vte"), GarchParams(1.0, [0.1]), None)
        with pytest.raises(ModeMismatch):
            variance_step_vte(FilterState((1, 0), "full"), VteParams([0.1], [], 1.0), None)


class TestVarianceStepVte:
    def test_collapses_to_gamma2(self):
        st_ = FilterState((1, 1), "vte", x2_init=5.0, v_init=9.0)
        assert variance_step_vte(st_, VteParams([0.0], [0.0], 0.25), None) == 0.25

    def test_hand_value(self):
        st_ = FilterState((1, 1), "vte", x2_init=1.0, v_init=1.0)
        v = variance_step_vte(st_, VteParams([0.1], [0.8], 0.25), None)
        assert v == pytest.approx(0.925, rel=1e-15)

    @given(st.floats(0, 0.5), st.floats(0, 0.49), st.floats(0.01, 10))
    def test_gamma2_is_fixed_point(self, a, b, g2):
        params = VteParams([a], [b], g2)
        st_ = FilterState.seeded(params)
        assert variance_step_vte(st_, params, None) == pytest.approx(g2, rel=1e-14)


class TestGradientStep:
    def test_vte_vanishes_at_fixed_point(self):
        params = VteParams([0.1], [0.8], 0.25)
        st_ = FilterState.seeded(params)
        st_.advance(params, None)
        np.testing.assert_array_equal(gradient_step(st_, params, "vte"), 0.0)

    def test_full_without_recursion(self):
        params = GarchParams(1.0, [0.3], [0.0])
        st_ = FilterState((1, 1), "full", x2_init=4.0, v_init=2.0)
        st_.advance(params, None)
        np.testing.assert_array_equal(gradient_step(st_, params, "full"), [1.0, 4.0, 2.0])

    def test_mode_argument_checked(self):
        params = GarchParams(1.0, [0.3])
        st_ = FilterState((1, 0), "full")
        st_.advance(params, None)
        with pytest.raises(ModeMismatch):
            gradient_step(st_, params, "vte")

    @given(st.integers(0, 10_000), st.sampled_from([(1, 0), (2, 0)]))
    def test_beta_zero_gives_innovation_vector(self, seed, order):
        params = random_params(order, seed)
        x = simulate(params, 30, seed=seed).returns
        _, dv, _ = derivative_path(x, params)
        x2 = np.concatenate((np.zeros(order[0]), x**2))
        for t in range(len(x)):
            lags = [x2[order[0] + t - 1 - i] for i in range(order[0])]
            np.testing.assert_allclose(dv[t], [1.0, *lags], rtol=1e-15, atol=0)


def _central_diff_jacobian(x, params, h=1e-6):
    """d sigma2[t] / d theta by re-running the reference recursion from scratch."""
    theta = params.to_vector() if isinstance(params, GarchParams) else np.asarray(params.to_vector())
    order = params.order
    cols = []
    for k in range(len(theta)):
        up, dn = theta.copy(), theta.copy()
        up[k] += h
        dn[k] -= h
        if isinstance(params, GarchParams):
            f = lambda th: reference_variances(x, th[0], th[1 : 1 + order.p], th[1 + order.p :])
        else:
            f = lambda th: reference_vte_variances(x, th[: order.p], th[order.p :], params.gamma2)
        cols.append((f(up) - f(dn)) / (2 * h))
    return np.stack(cols, axis=1)


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("vte", [False, True])
def test_gradient_matches_finite_differences(seed, vte):
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(0.05, 0.4), rng.uniform(0.1, 0.55)
    full = GarchParams(rng.uniform(0.5, 2.0), [a], [b])
    x = simulate(full, 50, seed=seed).returns
    params = full.to_vte() if vte else full
    _, dv, _ = derivative_path(x, params)
    fd = _central_diff_jacobian(x, params)
    err = np.abs(dv - fd).max() / np.abs(fd).max()
    assert err < 1e-5


@pytest.mark.parametrize("order", [(1, 1), (2, 1), (1, 2), (2, 2)])
@pytest.mark.parametrize("vte", [False, True])
def test_second_derivative_matches_finite_differences(order, vte):
    full = random_params(order, 3)
    full = GarchParams(1.0, full.alpha, full.beta)
    x = simulate(full, 60, seed=4).returns
    params = full.to_vte(1.3) if vte else full
    _, _, d2v = derivative_path(x, params, second_order=True)
    theta = params.to_vector()
    h = 1e-6
    for k in range(len(theta)):
        up, dn = theta.copy(), theta.copy()
        up[k] += h
        dn[k] -= h
        rebuild = (lambda th: GarchParams.from_vector(th, params.order)) if not vte else \
                  (lambda th: VteParams.from_vector(th, params.order, params.gamma2))
        _, dv_up, _ = derivative_path(x, rebuild(up))
        _, dv_dn, _ = derivative_path(x, rebuild(dn))
        fd = (dv_up - dv_dn) / (2 * h)
        scale = max(np.abs(fd).max(), 1.0)
        assert np.abs(d2v[:, :, k] - fd).max() / scale < 1e-5
    np.testing.assert_allclose(d2v, np.swapaxes(d2v, 1, 2), atol=1e-12)


class TestPaths:
    @given(st.integers(0, 2**31 - 1), st.sampled_from([(1, 0), (1, 1), (2, 1), (1, 2)]))
    def test_kernel_matches_reference(self, seed, order):
        params = random_params(order, seed)
        x = simulate(params, 80, seed=seed).returns
        ref = reference_variances(x, params.omega, params.alpha, params.beta)
        ref = np.maximum(ref, 1e-12)
        np.testing.assert_allclose(variance_path(x, params), ref, rtol=1e-12)
        np.testing.assert_allclose(derivative_path(x, params)[0], ref, rtol=1e-12)

    @given(st.integers(0, 2**31 - 1), st.sampled_from([(1, 0), (1, 1), (2, 2)]))
    def test_vte_equals_full_with_consistent_seeds(self, seed, order):
        full = random_params(order, seed)
        g2 = full.unconditional_variance()
        x = simulate(full, 200, seed=seed).returns
        v_full = variance_path(x, full, x2_init=g2, v_init=g2)
        v_vte = variance_path(x, full.to_vte(g2))
        np.testing.assert_allclose(v_vte, v_full, rtol=1e-12)

    @given(st.integers(0, 2**31 - 1), st.floats(0.0, 5.0))
    def test_initialization_forgotten_geometrically(self, seed, gap):
        params = random_params((1, 1), seed)
        x = simulate(params, 100, seed=seed).returns
        base = params.unconditional_variance()
        v1 = variance_path(x, params, x2_init=0.0, v_init=base)
        v2 = variance_path(x, params, x2_init=0.0, v_init=base + gap * base)
        beta = params.beta[0]
        t = np.arange(1, 101)
        bound = beta**t * gap * base
        # slack of a few ulps of the variances themselves
        assert np.all(np.abs(v1 - v2) <= bound * (1 + 1e-9) + 1e-14 * np.maximum(v1, v2))

    def test_state_copy_is_independent(self):
        params = GarchParams(1.0, [0.2], [0.7])
        a = FilterState.seeded(params)
        a.advance(params, None)
        b = a.copy()
        b.advance(params, 3.0)
        assert a.t == 1 and b.t == 2
        assert a.lag_x2[0] == 0.0
