"""Core types and the bias / partial-R^2 operations.

The sensitivity model indexes unobserved confounding by two numbers:
``alpha`` in (0, 1) measures influence on treatment (how far the full
propensity can move from the observed one), and the outcome side is
either a raw slope ``delta`` or the scale-free partial R^2 it induces.
With m = 1/alpha - 1, the induced bias on the treatment-effect estimate
has the closed form

    bias = delta * E[ psi(g*m + 1) - psi((1-g)*m) - psi(g*m) + psi((1-g)*m + 1) ]

with the expectation over all units for the ATE and over treated units
for the ATT, and the outcome partial R^2 of the confounder is

    r2 = delta^2 * E[ psi'(g*m + t) + psi'((1-g)*m + 1 - t) ] / E[(y - q_t)^2]

always averaged over all units. ``bias_contour`` inverts these to trace,
for each alpha on a grid, the r2 needed to move the estimate by a target
amount.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from ._backend import kernels
from .errors import DegenerateDataError, InputValidationError

__all__ = [
    "G_CLIP",
    "Estimand",
    "PredictionFrame",
    "SensitivityParams",
    "ContourPoint",
    "BiasCurve",
    "default_alpha_grid",
    "clip_propensity",
    "tau_hat",
    "digamma_bracket",
    "bias",
    "trigamma_variance_term",
    "r2_par",
    "delta_from_r2",
    "bias_contour",
]

G_CLIP = 1e-6  # propensity predictions are pulled into [G_CLIP, 1 - G_CLIP]


class Estimand(str, Enum):
    """Which average effect the bias refers to."""

    ATE = "ate"
    ATT = "att"


def clip_propensity(g: np.ndarray) -> tuple[np.ndarray, int]:
    """Clip propensities into [G_CLIP, 1 - G_CLIP]; also report how many
    rows moved. Values outside [0, 1] are a caller error, not clipped."""
    if np.any(g < 0.0) or np.any(g > 1.0):
        bad = float(g[np.argmax((g < 0.0) | (g > 1.0))])
        raise InputValidationError(
            f"propensity out of [0, 1] (got {bad!r})"
        )
    clipped = np.clip(g, G_CLIP, 1.0 - G_CLIP)
    return clipped, int(np.count_nonzero(clipped != g))


def _column(name: str, values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InputValidationError(f"column {name!r} must be 1-dimensional")
    if not np.all(np.isfinite(arr)):
        raise InputValidationError(f"column {name!r} contains nan or inf")
    return arr


@dataclass(frozen=True)
class PredictionFrame:
    """Per-unit data a sensitivity analysis runs on.

    y: observed outcome; t: treatment indicator (exactly 0 or 1);
    g: predicted P(T=1 | X); q0, q1: predicted outcome under control
    and under treatment. g is clipped into [G_CLIP, 1 - G_CLIP] on
    construction and ``clip_count`` records how many rows that touched.
    """

    y: np.ndarray
    t: np.ndarray
    g: np.ndarray
    q0: np.ndarray
    q1: np.ndarray
    clip_count: int = field(init=False, default=0)

    def __post_init__(self):
        cols = {name: _column(name, getattr(self, name))
                for name in ("y", "t", "g", "q0", "q1")}
        n = cols["y"].shape[0]
        if n < 2:
            raise InputValidationError("frame needs at least 2 rows")
        for name, arr in cols.items():
            if arr.shape[0] != n:
                raise InputValidationError(
                    f"column {name!r} has length {arr.shape[0]}, expected {n}"
                )
        t = cols["t"]
        if not np.all((t == 0.0) | (t == 1.0)):
            bad = float(t[np.argmax((t != 0.0) & (t != 1.0))])
            raise InputValidationError(
                f"column 't' must be exactly 0 or 1 (got {bad!r})"
            )
        n_treated = int(t.sum())
        if n_treated == 0 or n_treated == n:
            raise DegenerateDataError(
                "frame needs at least one treated and one control unit"
            )
        g, n_clipped = clip_propensity(cols["g"])
        cols["g"] = g
        for name, arr in cols.items():
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "clip_count", n_clipped)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def treated(self) -> np.ndarray:
        return self.t == 1.0

    @property
    def q_observed(self) -> np.ndarray:
        """Prediction for the arm each unit actually received."""
        return np.where(self.t == 1.0, self.q1, self.q0)

    @property
    def residuals(self) -> np.ndarray:
        return self.y - self.q_observed

    def estimand_rows(self, estimand: Estimand) -> np.ndarray:
        """Boolean mask of the rows the estimand averages over."""
        if Estimand(estimand) is Estimand.ATT:
            return self.treated
        return np.ones(self.n, dtype=bool)


@dataclass(frozen=True)
class SensitivityParams:
    """A confounder strength: alpha plus exactly one of delta / r2_par.

    alpha in (0, 1) is the treatment-side influence; the outcome side is
    given either as the raw slope delta (signed) or as the partial R^2
    in [0, 1) it explains of the outcome residual.
    """

    alpha: float
    delta: float | None = None
    r2_par: float | None = None

    def __post_init__(self):
        a = self.alpha
        if not (np.isfinite(a) and 0.0 < a < 1.0):
            raise InputValidationError(
                f"alpha must lie strictly inside (0, 1) (got {a!r})"
            )
        if (self.delta is None) == (self.r2_par is None):
            raise InputValidationError(
                "give exactly one of delta or r2_par"
            )
        if self.delta is not None and not np.isfinite(self.delta):
            raise InputValidationError(f"delta must be finite (got {self.delta!r})")
        if self.r2_par is not None and not (
            np.isfinite(self.r2_par) and 0.0 <= self.r2_par < 1.0
        ):
            raise InputValidationError(
                f"r2_par must lie in [0, 1) (got {self.r2_par!r})"
            )

    @property
    def m(self) -> float:
        """Beta concentration 1/alpha - 1."""
        return 1.0 / self.alpha - 1.0


class ContourPoint(NamedTuple):
    alpha: float
    r2: float
    feasible: bool


@dataclass(frozen=True)
class BiasCurve:
    """One bias contour: for each alpha, the outcome partial R^2 that
    would shift the estimate by ``target_bias``. ``r2`` is clipped into
    [0, 1]; ``feasible`` is False where the unclipped value exceeded 1
    (no confounder that strong on the treatment side suffices)."""

    target_bias: float
    estimand: Estimand
    alpha_grid: np.ndarray
    r2: np.ndarray
    feasible: np.ndarray

    def __post_init__(self):
        grid = np.ascontiguousarray(np.asarray(self.alpha_grid, dtype=np.float64))
        r2 = np.ascontiguousarray(np.asarray(self.r2, dtype=np.float64))
        feas = np.ascontiguousarray(np.asarray(self.feasible, dtype=bool))
        if not (grid.shape == r2.shape == feas.shape) or grid.ndim != 1:
            raise InputValidationError("curve arrays must be equal-length 1-d")
        for arr, name in ((grid, "alpha_grid"), (r2, "r2")):
            if not np.all(np.isfinite(arr)):
                raise InputValidationError(f"{name} contains nan or inf")
        for arr in (grid, r2, feas):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha_grid", grid)
        object.__setattr__(self, "r2", r2)
        object.__setattr__(self, "feasible", feas)
        object.__setattr__(self, "estimand", Estimand(self.estimand))

    @property
    def points(self) -> list[ContourPoint]:
        return [
            ContourPoint(float(a), float(r), bool(f))
            for a, r, f in zip(self.alpha_grid, self.r2, self.feasible)
        ]

    @property
    def all_infeasible(self) -> bool:
        """True when no point of the grid can reach the target bias."""
        return not bool(self.feasible.any())


def default_alpha_grid() -> np.ndarray:
    """199 evenly spaced alphas from 0.005 to 0.995 (step 0.005)."""
    return np.linspace(0.005, 0.995, 199)


def _m_from_alpha(alpha: float) -> float:
    if not (np.isfinite(alpha) and 0.0 < alpha < 1.0):
        raise InputValidationError(
            f"alpha must lie strictly inside (0, 1) (got {alpha!r})"
        )
    return 1.0 / float(alpha) - 1.0


def _require_delta(params: SensitivityParams) -> float:
    if params.delta is None:
        raise InputValidationError(
            "params must carry delta; convert r2_par via delta_from_r2 first"
        )
    return float(params.delta)


def tau_hat(frame: PredictionFrame, estimand: Estimand = Estimand.ATE) -> float:
    """Unadjusted effect estimate: mean of q1 - q0 over the estimand rows."""
    rows = frame.estimand_rows(estimand)
    return float(np.mean(frame.q1[rows] - frame.q0[rows]))


def digamma_bracket(g, alpha: float):
    """Per-unit bias factor at treatment-influence alpha.

    Evaluated through digamma differences; algebraically it collapses to
    1/(g*m) + 1/((1-g)*m) with m = 1/alpha - 1, which the tests use as
    an independent check. Accepts a scalar or an array of g.
    """
    m = _m_from_alpha(alpha)
    arr = np.asarray(g, dtype=np.float64)
    if arr.size and (not np.all(np.isfinite(arr)) or np.any((arr <= 0.0) | (arr >= 1.0))):
        raise InputValidationError("g must lie strictly inside (0, 1)")
    out = kernels.bracket_rows(np.ascontiguousarray(arr.reshape(-1)), m)
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def bias(
    params: SensitivityParams,
    frame: PredictionFrame,
    estimand: Estimand = Estimand.ATE,
) -> float:
    """Bias of the unadjusted estimate induced by a confounder at
    ``params`` (delta form): tau_hat - tau_true equals this value."""
    delta = _require_delta(params)
    rows = frame.estimand_rows(estimand)
    bracket = kernels.bracket_rows(frame.g[rows], params.m)
    return delta * float(bracket.mean())


def trigamma_variance_term(g, t, alpha: float):
    """Per-unit variance of the confounder's outcome term at alpha:
    psi'(g*m + t) + psi'((1-g)*m + 1 - t). Accepts scalars or arrays."""
    m = _m_from_alpha(alpha)
    garr = np.asarray(g, dtype=np.float64)
    tarr = np.asarray(t, dtype=np.float64)
    if garr.shape != tarr.shape:
        raise InputValidationError("g and t must have the same shape")
    if garr.size and (not np.all(np.isfinite(garr)) or np.any((garr <= 0.0) | (garr >= 1.0))):
        raise InputValidationError("g must lie strictly inside (0, 1)")
    if tarr.size and not np.all((tarr == 0.0) | (tarr == 1.0)):
        raise InputValidationError("t must be exactly 0 or 1")
    out = kernels.trig_term_rows(
        np.ascontiguousarray(garr.reshape(-1)),
        np.ascontiguousarray(tarr.reshape(-1)),
        m,
    )
    if garr.ndim == 0:
        return float(out[0])
    return out.reshape(garr.shape)


def _mean_sq_residual(frame: PredictionFrame) -> float:
    msr = float(np.mean(frame.residuals ** 2))
    if msr <= 0.0:
        raise DegenerateDataError(
            "outcome residuals are identically zero; partial R^2 is undefined"
        )
    return msr


def r2_par(params: SensitivityParams, frame: PredictionFrame) -> float:
    """Outcome partial R^2 induced by a delta-form confounder.

    Averages over all rows regardless of estimand. Unclipped: values
    above 1 signal an infeasible delta for this frame.
    """
    delta = _require_delta(params)
    trig = kernels.trig_term_rows(frame.g, frame.t, params.m)
    return (delta * delta) * float(trig.mean()) / _mean_sq_residual(frame)


def delta_from_r2(r2: float, alpha: float, frame: PredictionFrame) -> float:
    """Nonnegative delta that induces outcome partial R^2 ``r2`` at
    ``alpha`` on this frame. Inverse of r2_par."""
    if not (np.isfinite(r2) and 0.0 <= r2 <= 1.0):
        raise InputValidationError(f"r2 must lie in [0, 1] (got {r2!r})")
    m = _m_from_alpha(alpha)
    trig_mean = float(kernels.trig_term_rows(frame.g, frame.t, m).mean())
    return float(np.sqrt(r2 * _mean_sq_residual(frame) / trig_mean))


def bias_contour(
    target_bias: float,
    frame: PredictionFrame,
    estimand: Estimand = Estimand.ATE,
    alpha_grid: np.ndarray | None = None,
) -> BiasCurve:
    """Trace the (alpha, r2) pairs that produce ``target_bias``.

    For each alpha the minimal |delta| is target / mean-bracket over the
    estimand rows; its r2 (all-rows) is the curve height. Heights above
    1 are clipped and flagged infeasible.
    """
    if not (np.isfinite(target_bias) and target_bias > 0.0):
        raise InputValidationError(
            f"target_bias must be a positive number (got {target_bias!r})"
        )
    if alpha_grid is None:
        grid = default_alpha_grid()
    else:
        grid = np.ascontiguousarray(np.asarray(alpha_grid, dtype=np.float64))
        if grid.ndim != 1 or grid.size == 0:
            raise InputValidationError("alpha_grid must be a non-empty 1-d array")
        if not np.all(np.isfinite(grid)) or np.any((grid <= 0.0) | (grid >= 1.0)):
            raise InputValidationError("alpha_grid values must lie inside (0, 1)")
        if grid.size > 1 and not np.all(np.diff(grid) > 0.0):
            raise InputValidationError("alpha_grid must be strictly increasing")
    estimand = Estimand(estimand)
    rows = frame.estimand_rows(estimand)
    g_rows = frame.g[rows]
    msr = _mean_sq_residual(frame)
    r2_raw = np.empty(grid.size)
    for i, a in enumerate(grid):
        m = 1.0 / float(a) - 1.0
        mean_bracket = float(kernels.bracket_rows(g_rows, m).mean())
        delta_star = float(target_bias) / mean_bracket
        trig_mean = float(kernels.trig_term_rows(frame.g, frame.t, m).mean())
        r2_raw[i] = (delta_star * delta_star) * trig_mean / msr
    feasible = r2_raw <= 1.0
    return BiasCurve(
        target_bias=float(target_bias),
        estimand=estimand,
        alpha_grid=grid,
        r2=np.minimum(r2_raw, 1.0),
        feasible=feasible,
    )
