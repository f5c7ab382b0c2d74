import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adavol import GarchParams, simulate
from adavol.errors import AlphaOutOfRange, DomainError, LengthMismatch, NonPositiveTruth
from adavol.metrics import (
    DEFAULT_ALPHAS,
    EvalReport,
    evaluate,
    mae_var,
    mape,
    mpe,
    norm_inv_cdf,
    pinball,
    qs_score,
)

mpmath.mp.dps = 50


def mp_quantile(p):
    """High-precision reference quantile by root-finding on the normal CDF."""
    p = mpmath.mpf(p)
    lo = p if p < 0.5 else 1 - p
    guess = -mpmath.sqrt(-2 * mpmath.log(lo)) if lo < 0.01 else mpmath.sqrt(2) * mpmath.erfinv(2 * lo - 1)
    z = mpmath.findroot(lambda z: mpmath.log(mpmath.ncdf(z)) - mpmath.log(lo), guess)
    return float(z if p < 0.5 else -z)


class TestNormInvCdf:
    def test_examples(self):
        assert norm_inv_cdf(0.5) == 0.0
        assert norm_inv_cdf(0.975) == pytest.approx(1.95996398, abs=1e-8)

    def test_against_high_precision_oracle(self):
        ps = np.concatenate((np.linspace(1e-6, 1 - 1e-6, 301), [1e-6, 0.02425, 0.075, 0.425, 0.575, 1 - 1e-6]))
        got = norm_inv_cdf(ps)
        ref = np.array([mp_quantile(p) for p in ps])
        assert np.max(np.abs(got - ref)) <= 1e-8

    def test_deep_tail(self):
        for p in (1e-12, 1e-20, 1e-100):
            assert norm_inv_cdf(p) == pytest.approx(mp_quantile(p), rel=1e-12)

    @given(st.floats(1e-12, 0.5))
    def test_antisymmetry(self, p):
        # use a pair that sums to one exactly in floating point
        q = 1 - p
        p = 1 - q
        assert abs(norm_inv_cdf(p) + norm_inv_cdf(q)) <= 1e-10 * max(1.0, abs(norm_inv_cdf(p)))

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, math.nan])
    def test_domain(self, p):
        with pytest.raises(DomainError):
            norm_inv_cdf(p)

    def test_vectorized_shape(self):
        assert norm_inv_cdf(np.array([[0.1, 0.9]])).shape == (1, 2)


class TestPercentageErrors:
    def test_identical(self):
        s = np.array([0.3, 1.2, 4.0])
        assert mpe(s, s) == 0.0 and mape(s, s) == 0.0

    def test_hand_values(self):
        assert mpe([1, 2], [1, 1]) == 0.25
        assert mpe([1, 1], [2, 0]) == 0.0
        assert mape([1, 1], [2, 0]) == 1.0

    @given(arrays(np.float64, 20, elements=st.floats(0.01, 10)), arrays(np.float64, 20, elements=st.floats(0, 10)))
    def test_mape_dominates_mpe(self, s, e):
        assert mape(s, e) >= abs(mpe(s, e)) - 1e-15

    def test_errors(self):
        with pytest.raises(LengthMismatch):
            mpe([1, 2], [1])
        with pytest.raises(NonPositiveTruth):
            mape([0, 1], [1, 1])
        with pytest.raises(LengthMismatch):
            mpe([], [])


class TestMae:
    def test_exact_fit(self):
        r = np.array([0.1, -0.3])
        assert mae_var(r, r**2) == 0.0

    def test_hand_value(self):
        assert mae_var([1, 2], [0, 0]) == 2.5

    def test_length(self):
        with pytest.raises(LengthMismatch):
            mae_var([1, 2], [0])


class TestPinball:
    @given(st.floats(-10, 10))
    def test_median_case(self, x):
        assert pinball(x, 1.3, 0.5) == pytest.approx(0.5 * abs(x), abs=1e-15)

    def test_zero_at_quantile(self):
        q = norm_inv_cdf(0.9) * 2.0
        assert pinball(q, 2.0, 0.9) == 0.0

    def test_reference_value(self):
        assert pinball(0.0, 1.0, 0.975) == pytest.approx(0.025 * mp_quantile(0.975), rel=1e-12)
        assert pinball(0.0, 1.0, 0.975) == pytest.approx(0.048999, abs=1e-6)

    @given(st.floats(-10, 10), st.floats(0.01, 5), st.floats(0.001, 0.999))
    def test_non_negative_piecewise(self, x, vol, a):
        q = norm_inv_cdf(a) * vol
        ref = a * (x - q) if x > q else (1 - a) * (q - x)
        assert pinball(x, vol, a) == pytest.approx(ref, rel=1e-12, abs=1e-15)
        assert pinball(x, vol, a) >= 0

    @pytest.mark.parametrize("a", [0.0, 1.0, -0.5])
    def test_alpha_range(self, a):
        with pytest.raises(AlphaOutOfRange):
            pinball(0.1, 1.0, a)


class TestQs:
    def test_single_median_level(self):
        r = np.array([0.5, -1.0, 2.0])
        assert qs_score(r, np.ones(3), [0.5]) == pytest.approx(np.mean(0.5 * np.abs(r)))

    def test_matches_double_loop(self, rng):
        r = rng.standard_normal(30)
        s = rng.uniform(0.5, 2, 30)
        alphas = [0.05, 0.3, 0.5, 0.9]
        ref = sum(pinball(rt, st_, a) for rt, st_ in zip(r, s) for a in alphas) / 30
        assert qs_score(r, s, alphas) == pytest.approx(ref, rel=1e-12)

    def test_default_grid(self):
        np.testing.assert_allclose(DEFAULT_ALPHAS, np.arange(1, 100) / 100)
        assert len(DEFAULT_ALPHAS) == 99

    @given(st.permutations(list(range(12))))
    def test_order_invariant(self, perm):
        r = np.linspace(-2, 2, 12)
        s = np.linspace(0.5, 1.5, 12)
        assert qs_score(r[perm], s[perm]) == pytest.approx(qs_score(r, s), rel=1e-12)

    def test_empty_alphas(self):
        with pytest.raises(AlphaOutOfRange):
            qs_score([0.1], [1.0], [])

    def test_true_vol_beats_constant_forecast(self):
        params = GarchParams(1.0, [0.3], [0.6])
        diffs = []
        for seed in range(100):
            sim = simulate(params, 2000, seed=seed)
            const = np.full(2000, math.sqrt(np.var(sim.returns)))
            diffs.append(qs_score(sim.returns, np.sqrt(sim.true_vol2)) - qs_score(sim.returns, const))
        assert np.mean(diffs) < 0


class TestReport:
    def test_evaluate_and_serialize(self, rng):
        r = rng.standard_normal(50)
        tv = rng.uniform(0.5, 2, 50)
        rep = evaluate(r, tv * 1.1, true_var=tv)
        assert rep.mpe == pytest.approx(mpe(np.sqrt(tv), np.sqrt(tv * 1.1)))
        assert rep.mape >= abs(rep.mpe) and rep.mae >= 0 and rep.qs >= 0 and rep.n == 50
        d = json.loads(rep.to_json())
        assert d["n"] == 50 and len(d["alphas"]) == 99
        row = rep.to_csv_row().split(",")
        assert len(row) == len(EvalReport.csv_header().split(",")) and float(row[0]) == rep.mpe

    def test_without_truth(self):
        rep = evaluate([0.1, 0.2], [1.0, 1.0])
        assert math.isnan(rep.mpe)
        assert json.loads(rep.to_json())["mpe"] is None
