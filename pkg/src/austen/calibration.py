"""Calibration: locating observed covariate groups on the sensitivity axes.

Refitting the models without a covariate group z gives leave-out
predictions (g_wo, q_wo). Comparing those to the full-model predictions
measures how much z influences treatment and outcome, on the same two
axes the bias contours use:

    alpha_hat = 1 - E[g (1 - g)] / E[g_wo (1 - g_wo)]
    r2_hat    = 1 - E[(y - q)^2] / E[(y - q_wo)^2]

Plain means over all rows. Sampling noise can push either estimate
below zero; negatives are clipped to 0 and the dot is flagged.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .core import PredictionFrame, clip_propensity, _column
from .errors import DegenerateDataError, InputValidationError

__all__ = [
    "LeaveOutPredictions",
    "CovariateInfluence",
    "alpha_observed",
    "r2_observed",
    "covariate_influence",
    "calibrate_groups",
]


@dataclass(frozen=True)
class LeaveOutPredictions:
    """Predictions from models refit without one covariate group.

    Row-aligned with the frame they were derived from. g_wo is clipped
    like any propensity column; clip_count records how many rows moved.
    """

    group_name: str
    g_wo: np.ndarray
    q_wo: np.ndarray
    clip_count: int = field(init=False, default=0)

    def __post_init__(self):
        if not isinstance(self.group_name, str) or not self.group_name:
            raise InputValidationError("group_name must be a non-empty string")
        g = _column("g_wo", self.g_wo)
        q = _column("q_wo", self.q_wo)
        if g.shape[0] != q.shape[0]:
            raise InputValidationError(
                "g_wo and q_wo must have equal length"
            )
        if g.shape[0] < 2:
            raise InputValidationError("leave-out predictions need >= 2 rows")
        g, n_clipped = clip_propensity(g)
        for name, arr in (("g_wo", g), ("q_wo", q)):
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "clip_count", n_clipped)

    @property
    def n(self) -> int:
        return self.g_wo.shape[0]


@dataclass(frozen=True)
class CovariateInfluence:
    """Where one covariate group lands on the sensitivity axes.

    alpha_hat / r2_hat are the plotted values (negatives clipped to 0);
    the raw estimates are kept alongside, and ``clipped`` is True when
    either raw value was negative.
    """

    group_name: str
    alpha_hat: float
    r2_hat: float
    alpha_raw: float
    r2_raw: float
    clipped: bool


def _check_aligned(frame: PredictionFrame, lo: LeaveOutPredictions) -> None:
    if lo.n != frame.n:
        raise InputValidationError(
            f"leave-out predictions for group {lo.group_name!r} have "
            f"{lo.n} rows, frame has {frame.n}"
        )


def alpha_observed(frame: PredictionFrame, lo: LeaveOutPredictions) -> float:
    """Raw treatment-side influence of the left-out group (may be < 0)."""
    _check_aligned(frame, lo)
    full = float(np.mean(frame.g * (1.0 - frame.g)))
    wo = float(np.mean(lo.g_wo * (1.0 - lo.g_wo)))
    return 1.0 - full / wo


def r2_observed(frame: PredictionFrame, lo: LeaveOutPredictions) -> float:
    """Raw outcome-side influence of the left-out group (may be < 0)."""
    _check_aligned(frame, lo)
    full = float(np.mean(frame.residuals ** 2))
    wo = float(np.mean((frame.y - lo.q_wo) ** 2))
    if wo <= 0.0:
        raise DegenerateDataError(
            f"leave-out residuals for group {lo.group_name!r} are "
            "identically zero; influence is undefined"
        )
    return 1.0 - full / wo


def covariate_influence(
    frame: PredictionFrame, lo: LeaveOutPredictions
) -> CovariateInfluence:
    """Both influence estimates for one group, clipped for plotting."""
    a_raw = alpha_observed(frame, lo)
    r_raw = r2_observed(frame, lo)
    return CovariateInfluence(
        group_name=lo.group_name,
        alpha_hat=max(a_raw, 0.0),
        r2_hat=max(r_raw, 0.0),
        alpha_raw=a_raw,
        r2_raw=r_raw,
        clipped=(a_raw < 0.0) or (r_raw < 0.0),
    )


def calibrate_groups(
    frame: PredictionFrame, leave_outs: Iterable[LeaveOutPredictions]
) -> list[CovariateInfluence]:
    """Influence dots for several groups, in input order."""
    los: Sequence[LeaveOutPredictions] = list(leave_outs)
    names = [lo.group_name for lo in los]
    if len(set(names)) != len(names):
        dupe = next(n for n in names if names.count(n) > 1)
        raise InputValidationError(f"duplicate group name {dupe!r}")
    return [covariate_influence(frame, lo) for lo in los]
