import numpy as np
import pytest

from bcsm_nlms.kernels import (
    FilterConfig,
    FilterState,
    bcsm_nlms_step,
    bias_compensation_vector,
    compute_error,
    nlms_step,
    sm_nlms_step,
)


def make_state(weights, mu=1.0, gamma=0.0, eps=1e-8, mode="symmetric"):
    w = np.asarray(weights, dtype=float)
    cfg = FilterConfig(
        length=w.size, step_size=mu, error_bound=gamma, regularizer=eps, bound_mode=mode
    )
    return FilterState(cfg, w)


class TestComputeError:
    def test_zero_weights_pass_desired_through(self):
        state = make_state([0.0, 0.0])
        assert compute_error(state, [1.0, 2.0], 3.0) == 3.0

    def test_perfect_model_gives_zero(self):
        state = make_state([1.0, 1.0])
        assert compute_error(state, [1.0, 2.0], 3.0) == 0.0

    def test_against_dot_product_oracle(self):
        state = make_state([0.5, 0.5])
        # independent evaluation: 3 - (0.5*1 + 0.5*2)
        expected = 3.0 - (0.5 * 1.0 + 0.5 * 2.0)
        assert compute_error(state, [1.0, 2.0], 3.0) == pytest.approx(expected, rel=1e-15)
        assert expected == 1.5

    def test_dimension_mismatch_raises(self):
        state = make_state([0.0, 0.0])
        with pytest.raises(ValueError, match="regressor"):
            compute_error(state, [1.0, 2.0, 3.0], 1.0)


class TestSmNlmsStep:
    def test_inside_bound_holds_bitwise(self):
        state = make_state([0.25, -0.75], gamma=1.0)
        before = state.weights.tobytes()
        out = sm_nlms_step(state, [1.0, 0.5], 0.5)  # e = 0.625, inside the bound
        assert not out.updated
        assert abs(out.error) <= 1.0
        assert state.weights.tobytes() == before

    def test_positive_error_update_scalar_oracle(self):
        # gamma=1, mu=1, w=[0], x=[1], d=2 -> e=2, w <- (2-1)/(1+eps)
        state = make_state([0.0], gamma=1.0)
        out = sm_nlms_step(state, [1.0], 2.0)
        assert out.updated and out.error == 2.0
        expected = (2.0 - 1.0) * 1.0 / (1.0 + 1e-8)
        np.testing.assert_allclose(state.weights, [expected], rtol=1e-15)
        np.testing.assert_allclose(state.weights, [1.0], rtol=1e-6)

    def test_negative_error_symmetric_mode(self):
        # symmetric: alpha = e - gamma*sign(e) = -2 + 1 = -1
        state = make_state([0.0], gamma=1.0, mode="symmetric")
        out = sm_nlms_step(state, [1.0], -2.0)
        assert out.updated and out.error == -2.0
        expected = -1.0 / (1.0 + 1e-8)
        np.testing.assert_allclose(state.weights, [expected], rtol=1e-15)
        np.testing.assert_allclose(state.weights, [-1.0], rtol=1e-6)

    def test_negative_error_literal_mode_overcorrects(self):
        # literal: alpha = e - gamma = -3
        state = make_state([0.0], gamma=1.0, mode="literal")
        sm_nlms_step(state, [1.0], -2.0)
        np.testing.assert_allclose(state.weights, [-3.0], rtol=1e-6)

    def test_modes_coincide_for_positive_errors(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            x = rng.standard_normal(4)
            w0 = rng.standard_normal(4) * 0.1
            d = float(x @ w0) + 2.0 + rng.uniform(0, 1)  # force e > gamma
            s_lit = make_state(w0, gamma=0.5, mode="literal")
            s_sym = make_state(w0, gamma=0.5, mode="symmetric")
            if abs(compute_error(s_lit, x, d)) <= 0.5 or compute_error(s_lit, x, d) < 0:
                continue
            sm_nlms_step(s_lit, x, d)
            sm_nlms_step(s_sym, x, d)
            np.testing.assert_array_equal(s_lit.weights, s_sym.weights)


class TestNlmsStep:
    def test_scalar_oracle(self):
        state = make_state([0.0])
        out = nlms_step(state, [1.0], 2.0)
        assert out.updated
        np.testing.assert_allclose(state.weights, [2.0 / (1.0 + 1e-8)], rtol=1e-15)
        np.testing.assert_allclose(state.weights, [2.0], rtol=1e-6)

    def test_zero_error_leaves_weights(self):
        state = make_state([1.0, 1.0])
        out = nlms_step(state, [1.0, 2.0], 3.0)  # e = 0 exactly
        assert out.error == 0.0
        assert out.updated  # nlms always reports an update
        np.testing.assert_array_equal(state.weights, [1.0, 1.0])

    def test_gamma_zero_sm_equals_nlms_on_sequences(self):
        rng = np.random.default_rng(3)
        s_nlms = make_state(np.zeros(6), mu=0.7)
        s_sm = make_state(np.zeros(6), mu=0.7, gamma=0.0)
        for _ in range(300):
            x = rng.standard_normal(6)
            d = rng.standard_normal()
            nlms_step(s_nlms, x, d)
            sm_nlms_step(s_sm, x, d)
        np.testing.assert_allclose(s_sm.weights, s_nlms.weights, rtol=1e-12)


class TestBiasCompensationVector:
    def test_no_noise_no_bound_gives_zero(self):
        state = make_state([1.0, -2.0], mu=0.5)
        xi = bias_compensation_vector(state, [1.0, 1.0], 0.7, 0.0)
        np.testing.assert_array_equal(xi, [0.0, 0.0])

    def test_weight_term_oracle(self):
        # mu=0.5, sigma=1, gamma=0, w=[2,0], x=[1,1]: xi = 0.5*[2,0]/(2+eps)
        state = make_state([2.0, 0.0], mu=0.5)
        xi = bias_compensation_vector(state, [1.0, 1.0], 0.3, 1.0)
        expected = 0.5 * 1.0 / (2.0 + 1e-8) * np.array([2.0, 0.0])
        np.testing.assert_allclose(xi, expected, rtol=1e-15)
        np.testing.assert_allclose(xi, [0.5, 0.0], rtol=1e-6)

    def test_bound_term_oracle_both_modes(self):
        # mu=1, sigma=0, gamma=1, x=[0,2], e=3: xi = 1*1*[0,2]/(4+eps)
        for mode in ("literal", "symmetric"):
            state = make_state([0.0, 0.0], mu=1.0, gamma=1.0, mode=mode)
            xi = bias_compensation_vector(state, [0.0, 2.0], 3.0, 0.0)
            np.testing.assert_allclose(xi, [0.0, 2.0 / (4.0 + 1e-8)], rtol=1e-15)
            np.testing.assert_allclose(xi, [0.0, 0.5], rtol=1e-6)

    def test_symmetric_bound_term_follows_error_sign(self):
        state = make_state([0.0, 0.0], mu=1.0, gamma=1.0, mode="symmetric")
        xi_neg = bias_compensation_vector(state, [0.0, 2.0], -3.0, 0.0)
        np.testing.assert_allclose(xi_neg, [0.0, -0.5], rtol=1e-6)

    def test_negative_variance_rejected(self):
        state = make_state([0.0, 0.0])
        with pytest.raises(ValueError, match="sigma_eta_sq"):
            bias_compensation_vector(state, [1.0, 1.0], 0.5, -1e-9)


class TestBcsmNlmsStep:
    def test_scalar_oracle(self):
        # mu=1, gamma=0, sigma=1, w=[1], x=[2], d=4: e=2,
        # w <- 1 + 2*2/(4+eps) + 1*1/(4+eps) = 2.25 for negligible eps
        state = make_state([1.0], mu=1.0)
        out = bcsm_nlms_step(state, [2.0], 4.0, 1.0)
        assert out.updated and out.compensation_applied
        assert out.error == pytest.approx(2.0, rel=1e-15)
        den = 4.0 + 1e-8
        expected = 1.0 + 2.0 * 2.0 / den + 1.0 * 1.0 / den
        np.testing.assert_allclose(state.weights, [expected], rtol=1e-15)
        np.testing.assert_allclose(state.weights, [2.25], rtol=1e-6)

    def test_hold_branch_is_bit_identical(self):
        rng = np.random.default_rng(8)
        for _ in range(50):
            w = rng.standard_normal(5)
            x = rng.standard_normal(5)
            gamma = rng.uniform(0.1, 1.0)
            # choose d so that |e| < gamma by construction
            d = float(x @ w) + rng.uniform(-0.9, 0.9) * gamma
            state = make_state(w, mu=0.9, gamma=gamma)
            before = state.weights.tobytes()
            out = bcsm_nlms_step(state, x, d, 0.4)
            assert abs(out.error) <= gamma
            assert not out.updated and not out.compensation_applied
            assert state.weights.tobytes() == before

    def test_reduces_to_nlms_without_noise_and_bound(self):
        rng = np.random.default_rng(21)
        s_b = make_state(np.zeros(4), mu=0.6)
        s_n = make_state(np.zeros(4), mu=0.6)
        for _ in range(200):
            x = rng.standard_normal(4)
            d = rng.standard_normal()
            bcsm_nlms_step(s_b, x, d, 0.0)
            nlms_step(s_n, x, d)
        np.testing.assert_allclose(s_b.weights, s_n.weights, rtol=1e-12)

    def test_negative_variance_rejected(self):
        state = make_state([0.0])
        with pytest.raises(ValueError, match="sigma_eta_sq"):
            bcsm_nlms_step(state, [1.0], 2.0, -0.1)


class TestNormSafety:
    def test_zero_regressor_is_finite(self):
        for step, args in (
            (nlms_step, ()),
            (sm_nlms_step, ()),
            (bcsm_nlms_step, (0.5,)),
        ):
            state = make_state([1.0, -1.0], mu=0.8, gamma=0.1)
            out = step(state, [0.0, 0.0], 5.0, *args)
            assert out.error == 5.0  # e = d on an all-zero regressor
            assert np.all(np.isfinite(state.weights))

    def test_zero_regressor_inside_bound_holds(self):
        state = make_state([1.0, -1.0], gamma=10.0)
        out = sm_nlms_step(state, [0.0, 0.0], 5.0)
        assert not out.updated
        np.testing.assert_array_equal(state.weights, [1.0, -1.0])


class TestScaleProperty:
    def test_scaled_instances_match_recomputed_update(self):
        # in symmetric mode, (c*x, c*d) scales e by c; the update must
        # equal the formula mu*alpha(c*e)*(c*x)/(||c*x||^2 + eps) exactly
        rng = np.random.default_rng(17)
        for c in (0.1, 3.0, 17.0):
            for _ in range(20):
                w = rng.standard_normal(6) * 0.3
                x = rng.standard_normal(6) * 2.0
                d = rng.standard_normal() * 4.0
                gamma = 0.05
                base = make_state(w, mu=0.7, gamma=gamma)
                e0 = compute_error(base, x, d)
                if abs(e0) <= gamma / min(c, 1.0):
                    continue
                state = make_state(w, mu=0.7, gamma=gamma)
                xs, ds = c * x, c * d
                out = sm_nlms_step(state, xs, ds)
                # error scales by c
                assert out.error == pytest.approx(c * e0, rel=1e-12)
                # independent recomputation of the whole update
                e_s = float(ds - xs @ w)
                sign = 1.0 if e_s > 0 else -1.0
                alpha = e_s - gamma * sign
                expected = w + 0.7 * alpha / (float(xs @ xs) + 1e-8) * xs
                np.testing.assert_allclose(state.weights, expected, rtol=1e-12)


class TestValidation:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(length=0, step_size=0.5),
            dict(length=3, step_size=0.0),
            dict(length=3, step_size=-1.0),
            dict(length=3, step_size=0.5, error_bound=-0.1),
            dict(length=3, step_size=0.5, regularizer=0.0),
            dict(length=3, step_size=0.5, bound_mode="sideways"),
        ],
    )
    def test_bad_config_rejected(self, kwargs):
        with pytest.raises(ValueError):
            FilterConfig(**kwargs)

    def test_bad_initial_weights_rejected(self):
        cfg = FilterConfig(length=2, step_size=0.5)
        with pytest.raises(ValueError):
            FilterState(cfg, np.array([1.0, 2.0, 3.0]))
        with pytest.raises(ValueError):
            FilterState(cfg, np.array([1.0, np.nan]))

    def test_default_weights_are_zero(self):
        cfg = FilterConfig(length=4, step_size=0.5)
        np.testing.assert_array_equal(FilterState(cfg).weights, np.zeros(4))
