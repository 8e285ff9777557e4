"""Tests for leave-group-out calibration.

The estimators are plain ratios of means, so the oracles here are small
hand-computed examples rather than simulations.
"""

from __future__ import annotations

import numpy as np
import pytest

from austen.calibration import (
    LeaveOutPredictions,
    alpha_observed,
    calibrate_groups,
    covariate_influence,
    r2_observed,
)
from austen.core import PredictionFrame
from austen.errors import DegenerateDataError, InputValidationError

from conftest import make_frame


def _hand_frame() -> PredictionFrame:
    # residuals y - q_obs are exactly [1, -1, 1, -1] so msr = 1
    t = np.array([1.0, 0.0, 1.0, 0.0])
    q0 = np.array([0.0, 0.0, 0.0, 0.0])
    q1 = np.array([2.0, 2.0, 2.0, 2.0])
    y = np.array([3.0, -1.0, 3.0, -1.0])
    g = np.array([0.3, 0.3, 0.7, 0.7])
    return PredictionFrame(y=y, t=t, g=g, q0=q0, q1=q1)


def test_alpha_observed_hand_value() -> None:
    f = _hand_frame()
    # E[g(1-g)] = 0.21, leave-out at 0.5 gives 0.25: alpha = 1 - 0.21/0.25
    lo = LeaveOutPredictions("z", g_wo=np.full(4, 0.5), q_wo=f.q_observed)
    assert alpha_observed(f, lo) == pytest.approx(0.16, abs=1e-15)


def test_r2_observed_hand_value() -> None:
    f = _hand_frame()
    # leave-out residuals are [2, -2, 2, -2]: r2 = 1 - 1/4
    q_wo = f.q_observed + np.array([-1.0, 1.0, -1.0, 1.0])
    lo = LeaveOutPredictions("z", g_wo=f.g, q_wo=q_wo)
    assert r2_observed(f, lo) == pytest.approx(0.75, abs=1e-15)


def test_no_influence_group_sits_at_origin() -> None:
    f = _hand_frame()
    lo = LeaveOutPredictions("null", g_wo=f.g, q_wo=f.q_observed)
    dot = covariate_influence(f, lo)
    assert dot.alpha_hat == 0.0
    assert dot.r2_hat == 0.0
    assert not dot.clipped


def test_negative_raw_estimates_are_clipped_and_flagged() -> None:
    f = _hand_frame()
    # leave-out predictions more extreme than the full model push the raw
    # estimates negative
    lo = LeaveOutPredictions(
        "noise",
        g_wo=np.array([0.2, 0.2, 0.8, 0.8]),
        q_wo=f.q_observed + np.array([0.5, -0.5, 0.5, -0.5]),
    )
    dot = covariate_influence(f, lo)
    assert dot.alpha_raw < 0.0
    assert dot.r2_raw < 0.0
    assert dot.alpha_hat == 0.0
    assert dot.r2_hat == 0.0
    assert dot.clipped


def test_zero_leave_out_residuals_degenerate() -> None:
    f = _hand_frame()
    lo = LeaveOutPredictions("z", g_wo=f.g, q_wo=f.y.copy())
    with pytest.raises(DegenerateDataError):
        r2_observed(f, lo)


def test_misaligned_lengths_rejected() -> None:
    f = _hand_frame()
    lo = LeaveOutPredictions("z", g_wo=np.full(6, 0.5), q_wo=np.zeros(6))
    with pytest.raises(InputValidationError):
        alpha_observed(f, lo)
    with pytest.raises(InputValidationError):
        r2_observed(f, lo)


def test_leave_out_validation() -> None:
    with pytest.raises(InputValidationError):
        LeaveOutPredictions("", g_wo=np.full(4, 0.5), q_wo=np.zeros(4))
    with pytest.raises(InputValidationError):
        LeaveOutPredictions("z", g_wo=np.full(4, 0.5), q_wo=np.zeros(3))
    with pytest.raises(InputValidationError):
        LeaveOutPredictions("z", g_wo=np.array([0.5]), q_wo=np.zeros(1))
    lo = LeaveOutPredictions("z", g_wo=np.array([0.0, 0.5, 1.0]), q_wo=np.zeros(3))
    assert lo.clip_count == 2
    with pytest.raises(ValueError):
        lo.q_wo[0] = 1.0


def test_calibrate_groups_order_and_duplicates() -> None:
    f = make_frame(n=40, seed=9)
    lo1 = LeaveOutPredictions("a", g_wo=f.g, q_wo=f.q_observed + 0.5)
    lo2 = LeaveOutPredictions("b", g_wo=np.full(f.n, 0.5), q_wo=f.q_observed + 1.0)
    dots = calibrate_groups(f, [lo1, lo2])
    assert [d.group_name for d in dots] == ["a", "b"]
    with pytest.raises(InputValidationError):
        calibrate_groups(f, [lo1, LeaveOutPredictions("a", g_wo=f.g, q_wo=f.y)])
