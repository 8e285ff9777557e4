"""Tests for bias, influence, and contour math.

Dual routes everywhere: the library evaluates the digamma/trigamma forms,
and these tests recompute the same quantities from the elementary
identities psi(x+1) - psi(x) = 1/x and psi1(x+1) - psi1(x) = -1/x^2,
which reduce the treatment-side bracket to the closed form
(alpha/(1-alpha)) * 1/(g(1-g)).
"""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from austen.core import (
    BiasCurve,
    Estimand,
    PredictionFrame,
    SensitivityParams,
    bias,
    bias_contour,
    clip_propensity,
    default_alpha_grid,
    delta_from_r2,
    digamma_bracket,
    r2_par,
    tau_hat,
    trigamma_variance_term,
)
from austen.errors import DegenerateDataError, InputValidationError
from austen.specfun import trigamma

from conftest import make_constant_g_frame, make_frame


def closed_form_bias(frame: PredictionFrame, alpha: float, delta: float, estimand: Estimand) -> float:
    """Independent route: delta * (alpha/(1-alpha)) * E[1/(g(1-g))]."""
    g = frame.g[frame.estimand_rows(estimand)]
    return delta * (alpha / (1.0 - alpha)) * float(np.mean(1.0 / (g * (1.0 - g))))


# ---------------------------------------------------------------------------
# parameters and frame plumbing
# ---------------------------------------------------------------------------


def test_sensitivity_params_validation() -> None:
    p = SensitivityParams(alpha=0.25, delta=1.5)
    assert p.m == pytest.approx(3.0)
    with pytest.raises(InputValidationError):
        SensitivityParams(alpha=0.0, delta=1.0)
    with pytest.raises(InputValidationError):
        SensitivityParams(alpha=1.0, delta=1.0)
    with pytest.raises(InputValidationError):
        SensitivityParams(alpha=0.3)
    with pytest.raises(InputValidationError):
        SensitivityParams(alpha=0.3, delta=1.0, r2_par=0.2)
    with pytest.raises(InputValidationError):
        SensitivityParams(alpha=0.3, r2_par=1.0)
    with pytest.raises(InputValidationError):
        SensitivityParams(alpha=0.3, r2_par=-0.1)
    assert SensitivityParams(alpha=0.3, r2_par=0.0).r2_par == 0.0


def test_frame_validation() -> None:
    y = np.zeros(4)
    t = np.array([0.0, 1.0, 0.0, 1.0])
    g = np.full(4, 0.5)
    with pytest.raises(InputValidationError):
        PredictionFrame(y=y[:3], t=t, g=g, q0=y, q1=y)
    with pytest.raises(InputValidationError):
        PredictionFrame(y=np.array([0.0, np.nan, 0.0, 0.0]), t=t, g=g, q0=y, q1=y)
    with pytest.raises(InputValidationError):
        PredictionFrame(y=y, t=np.array([0.0, 1.0, 0.5, 1.0]), g=g, q0=y, q1=y)
    with pytest.raises(InputValidationError):
        PredictionFrame(y=y, t=t, g=np.array([0.5, 0.5, 1.5, 0.5]), q0=y, q1=y)
    with pytest.raises(DegenerateDataError):
        PredictionFrame(y=y, t=np.ones(4), g=g, q0=y, q1=y)
    with pytest.raises(InputValidationError):
        PredictionFrame(y=y[:1], t=t[:1], g=g[:1], q0=y[:1], q1=y[:1])


def test_frame_clips_extreme_propensities_and_counts() -> None:
    y = np.zeros(4)
    t = np.array([0.0, 1.0, 0.0, 1.0])
    g = np.array([0.0, 0.5, 1.0, 1e-9])
    f = PredictionFrame(y=y, t=t, g=g, q0=y, q1=y)
    assert f.clip_count == 3
    assert f.g.min() > 0.0
    assert f.g.max() < 1.0


def test_frame_arrays_are_immutable(frame: PredictionFrame) -> None:
    with pytest.raises(ValueError):
        frame.y[0] = 99.0
    with pytest.raises(ValueError):
        frame.g[0] = 0.5


def test_clip_propensity_rejects_out_of_range() -> None:
    with pytest.raises(InputValidationError):
        clip_propensity(np.array([0.5, -0.01]))
    clipped, n = clip_propensity(np.array([0.5, 1.0]))
    assert n == 1
    assert clipped[1] < 1.0


def test_tau_hat_hand_values() -> None:
    f = PredictionFrame(
        y=np.zeros(4),
        t=np.array([1.0, 1.0, 0.0, 0.0]),
        g=np.full(4, 0.5),
        q0=np.array([0.0, 0.0, 0.0, 0.0]),
        q1=np.array([2.0, 4.0, 6.0, 8.0]),
    )
    assert tau_hat(f) == pytest.approx(5.0)
    assert tau_hat(f, Estimand.ATT) == pytest.approx(3.0)


def test_q_observed_and_residuals(frame: PredictionFrame) -> None:
    q = np.where(frame.t == 1.0, frame.q1, frame.q0)
    np.testing.assert_array_equal(frame.q_observed, q)
    np.testing.assert_array_equal(frame.residuals, frame.y - q)


# ---------------------------------------------------------------------------
# bracket and variance terms: dual-route oracles
# ---------------------------------------------------------------------------


def test_bracket_equals_reciprocal_closed_form() -> None:
    rng = np.random.default_rng(42)
    g = rng.uniform(0.02, 0.98, 300)
    for alpha in (0.05, 0.3, 0.7, 0.95):
        m = 1.0 / alpha - 1.0
        got = digamma_bracket(g, alpha)
        want = 1.0 / (g * m) + 1.0 / ((1.0 - g) * m)
        np.testing.assert_allclose(got, want, rtol=1e-11)


def test_variance_term_recurrence_route() -> None:
    rng = np.random.default_rng(43)
    g = rng.uniform(0.05, 0.95, 300)
    t = (rng.random(300) < 0.5).astype(float)
    for alpha in (0.1, 0.5, 0.9):
        m = 1.0 / alpha - 1.0
        got = trigamma_variance_term(g, t, alpha)
        base = trigamma(g * m) + trigamma((1.0 - g) * m)
        want = base - t / (g * m) ** 2 - (1.0 - t) / ((1.0 - g) * m) ** 2
        np.testing.assert_allclose(got, want, rtol=1e-9)


def test_bias_matches_closed_form_over_draws(frame: PredictionFrame) -> None:
    rng = np.random.default_rng(44)
    for _ in range(200):
        alpha = float(rng.uniform(0.02, 0.98))
        delta = float(rng.uniform(-3.0, 3.0)) or 0.5
        for estimand in (Estimand.ATE, Estimand.ATT):
            got = bias(SensitivityParams(alpha=alpha, delta=delta), frame, estimand)
            want = closed_form_bias(frame, alpha, delta, estimand)
            assert got == pytest.approx(want, rel=1e-9)


def test_bias_is_exactly_linear_in_delta(frame: PredictionFrame) -> None:
    p1 = SensitivityParams(alpha=0.4, delta=0.75)
    p2 = SensitivityParams(alpha=0.4, delta=1.5)
    assert bias(p2, frame) == 2.0 * bias(p1, frame)


def test_bias_requires_delta_parameterization(frame: PredictionFrame) -> None:
    with pytest.raises(InputValidationError):
        bias(SensitivityParams(alpha=0.3, r2_par=0.2), frame)


@settings(max_examples=100, deadline=None)
@given(
    st.floats(min_value=0.02, max_value=0.9, allow_nan=False),
    st.floats(min_value=0.01, max_value=0.08, allow_nan=False),
)
def test_bias_increases_with_alpha(alpha: float, gap: float) -> None:
    f = make_frame(n=30, seed=5)
    lo = bias(SensitivityParams(alpha=alpha, delta=1.0), f)
    hi = bias(SensitivityParams(alpha=alpha + gap, delta=1.0), f)
    assert hi > lo > 0.0


# ---------------------------------------------------------------------------
# partial R^2 and its inverse
# ---------------------------------------------------------------------------


def test_r2_par_direct_recomputation(frame: PredictionFrame) -> None:
    alpha, delta = 0.35, 1.2
    m = 1.0 / alpha - 1.0
    trig = trigamma(frame.g * m + frame.t) + trigamma((1.0 - frame.g) * m + 1.0 - frame.t)
    msr = float(np.mean(frame.residuals**2))
    want = delta * delta * float(trig.mean()) / msr
    got = r2_par(SensitivityParams(alpha=alpha, delta=delta), frame)
    assert got == pytest.approx(want, rel=1e-12)


def test_r2_par_quadruples_when_delta_doubles(frame: PredictionFrame) -> None:
    r1 = r2_par(SensitivityParams(alpha=0.3, delta=0.05), frame)
    r2 = r2_par(SensitivityParams(alpha=0.3, delta=0.1), frame)
    assert r2 == 4.0 * r1


def test_r2_par_independent_of_estimand_masking(frame: PredictionFrame) -> None:
    # the variance ratio is defined over the full sample; a frame whose
    # treated rows are reordered to the front gives the same value
    order = np.argsort(frame.t, kind="stable")[::-1]
    shuffled = PredictionFrame(y=frame.y[order], t=frame.t[order],
                               g=frame.g[order], q0=frame.q0[order],
                               q1=frame.q1[order])
    p = SensitivityParams(alpha=0.3, delta=0.4)
    assert r2_par(p, shuffled) == pytest.approx(r2_par(p, frame), rel=1e-12)


def test_delta_round_trip(frame: PredictionFrame) -> None:
    checked = 0
    for delta in (0.001, 0.01, 0.05):
        for alpha in (0.05, 0.5, 0.9):
            r2 = r2_par(SensitivityParams(alpha=alpha, delta=delta), frame)
            if r2 > 1.0:
                continue  # outside the inverse's domain
            back = delta_from_r2(r2, alpha, frame)
            assert back == pytest.approx(delta, rel=1e-12)
            checked += 1
    assert checked >= 6


def test_delta_from_r2_validation(frame: PredictionFrame) -> None:
    with pytest.raises(InputValidationError):
        delta_from_r2(-0.1, 0.3, frame)
    with pytest.raises(InputValidationError):
        delta_from_r2(1.5, 0.3, frame)
    assert delta_from_r2(0.0, 0.3, frame) == 0.0


# ---------------------------------------------------------------------------
# bias contours
# ---------------------------------------------------------------------------


def test_contour_passes_through_generating_point(frame: PredictionFrame) -> None:
    rng = np.random.default_rng(45)
    for _ in range(5):
        alpha0 = float(rng.uniform(0.05, 0.9))
        # scale delta so the generated point is feasible (r2 well below 1)
        delta0 = delta_from_r2(0.5, alpha0, frame) * float(rng.uniform(0.2, 1.0))
        target = bias(SensitivityParams(alpha=alpha0, delta=delta0), frame)
        grid = np.sort(np.append(rng.uniform(0.01, 0.99, 20), alpha0))
        curve = bias_contour(target, frame, alpha_grid=grid)
        idx = int(np.searchsorted(grid, alpha0))
        want = r2_par(SensitivityParams(alpha=alpha0, delta=delta0), frame)
        assert curve.feasible[idx]
        assert curve.r2[idx] == pytest.approx(want, rel=1e-9)


def test_contour_r2_scales_with_target_squared(frame: PredictionFrame) -> None:
    grid = default_alpha_grid()
    small = bias_contour(0.05, frame, alpha_grid=grid)
    big = bias_contour(0.1, frame, alpha_grid=grid)
    both = small.feasible & big.feasible
    assert both.any()
    np.testing.assert_array_equal(big.r2[both], 4.0 * small.r2[both])


def test_contour_limit_near_alpha_one(frame: PredictionFrame) -> None:
    # as alpha -> 1 the curve flattens to a positive constant:
    # target^2 * E[1/d^2] / (E_est[1/(g(1-g))]^2 * msr), d = 1-g on treated
    # rows and g on control rows
    g, t = frame.g, frame.t
    d = np.where(t == 1.0, 1.0 - g, g)
    msr = float(np.mean(frame.residuals**2))
    denom = float(np.mean(1.0 / (g * (1.0 - g)))) ** 2 * msr
    scale = float(np.mean(1.0 / d**2)) / denom
    target = float(np.sqrt(0.5 / scale))
    limit = target * target * scale
    curve = bias_contour(target, frame, alpha_grid=np.array([0.9999]))
    assert curve.feasible[0]
    assert curve.r2[0] == pytest.approx(limit, rel=1e-6)
    assert limit > 0.0


def test_contour_clips_and_flags_infeasible(frame: PredictionFrame) -> None:
    # a huge target cannot be explained at small alpha with r2 <= 1
    curve = bias_contour(500.0, frame, alpha_grid=default_alpha_grid())
    assert not curve.feasible.all()
    assert curve.r2.max() <= 1.0
    assert curve.r2[~curve.feasible].min() == 1.0
    tiny = bias_contour(500.0, frame, alpha_grid=np.array([0.01, 0.02]))
    assert tiny.all_infeasible


def test_contour_estimands_match_on_constant_g() -> None:
    f = make_constant_g_frame()
    grid = default_alpha_grid()
    a = bias_contour(0.2, f, estimand=Estimand.ATE, alpha_grid=grid)
    b = bias_contour(0.2, f, estimand=Estimand.ATT, alpha_grid=grid)
    np.testing.assert_allclose(a.r2, b.r2, rtol=1e-12)


def test_contour_validation(frame: PredictionFrame) -> None:
    with pytest.raises(InputValidationError):
        bias_contour(0.0, frame)
    with pytest.raises(InputValidationError):
        bias_contour(-1.0, frame)
    with pytest.raises(InputValidationError):
        bias_contour(0.5, frame, alpha_grid=np.array([0.5, 0.4]))
    with pytest.raises(InputValidationError):
        bias_contour(0.5, frame, alpha_grid=np.array([0.0, 0.5]))


def test_default_alpha_grid_shape() -> None:
    grid = default_alpha_grid()
    assert grid.shape == (199,)
    assert grid[0] == pytest.approx(0.005)
    assert grid[-1] == pytest.approx(0.995)
    assert np.any(np.isclose(grid, 0.3))
    assert np.all(np.diff(grid) > 0)


def test_curve_points_iteration(frame: PredictionFrame) -> None:
    curve = bias_contour(0.05, frame, alpha_grid=np.array([0.2, 0.4]))
    pts = curve.points
    assert len(pts) == 2
    assert pts[0].alpha == pytest.approx(0.2)
    assert isinstance(curve, BiasCurve)
