"""Prediction-level bootstrap for contour bands and dot intervals.

Units are resampled with replacement jointly across the frame and any
leave-out prediction sets; models are not refit. Each replicate reduces
to reweighting precomputed per-row quantities, so the whole band costs
about one matrix product per replicate.

Replicates that lose an entire treatment arm are redrawn (bounded); the
count of redraws is reported in the result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernels
from .calibration import LeaveOutPredictions
from .core import Estimand, PredictionFrame
from .errors import DegenerateDataError, InputValidationError

__all__ = [
    "BootstrapConfig",
    "DotInterval",
    "BootstrapBand",
    "resample_rows",
    "bootstrap_band",
]


@dataclass(frozen=True)
class BootstrapConfig:
    """Replicate count, interval level, and the seed that fixes it all."""

    replicates: int = 100
    level: float = 0.95
    seed: int = 0
    max_retries: int = 100

    def __post_init__(self):
        if not isinstance(self.replicates, int) or self.replicates < 1:
            raise InputValidationError(
                f"replicates must be an int >= 1 (got {self.replicates!r})"
            )
        if not (np.isfinite(self.level) and 0.0 < self.level < 1.0):
            raise InputValidationError(
                f"level must lie strictly inside (0, 1) (got {self.level!r})"
            )
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InputValidationError(f"seed must be an int >= 0 (got {self.seed!r})")
        if not isinstance(self.max_retries, int) or self.max_retries < 0:
            raise InputValidationError("max_retries must be an int >= 0")


@dataclass(frozen=True)
class DotInterval:
    """Percentile interval for one calibration dot."""

    group_name: str
    alpha_low: float
    alpha_high: float
    r2_low: float
    r2_high: float


@dataclass(frozen=True)
class BootstrapBand:
    """Pointwise percentile band for a bias contour."""

    target_bias: float
    estimand: Estimand
    level: float
    replicates: int
    seed: int
    alpha_grid: np.ndarray
    r2_low: np.ndarray
    r2_high: np.ndarray
    dot_intervals: tuple[DotInterval, ...] = ()
    redraws: int = 0

    def __post_init__(self):
        grid = np.ascontiguousarray(np.asarray(self.alpha_grid, dtype=np.float64))
        lo = np.ascontiguousarray(np.asarray(self.r2_low, dtype=np.float64))
        hi = np.ascontiguousarray(np.asarray(self.r2_high, dtype=np.float64))
        if not (grid.shape == lo.shape == hi.shape) or grid.ndim != 1:
            raise InputValidationError("band arrays must be equal-length 1-d")
        if np.any(lo > hi):
            raise InputValidationError("band has r2_low > r2_high")
        for arr in (grid, lo, hi):
            arr.setflags(write=False)
        object.__setattr__(self, "alpha_grid", grid)
        object.__setattr__(self, "r2_low", lo)
        object.__setattr__(self, "r2_high", hi)
        object.__setattr__(self, "estimand", Estimand(self.estimand))

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "kind": "bootstrap_band",
            "target_bias": self.target_bias,
            "estimand": self.estimand.value,
            "level": self.level,
            "replicates": self.replicates,
            "seed": self.seed,
            "redraws": self.redraws,
            "alpha_grid": [float(a) for a in self.alpha_grid],
            "r2_low": [float(v) for v in self.r2_low],
            "r2_high": [float(v) for v in self.r2_high],
            "dot_intervals": [
                {
                    "group_name": d.group_name,
                    "alpha_low": d.alpha_low,
                    "alpha_high": d.alpha_high,
                    "r2_low": d.r2_low,
                    "r2_high": d.r2_high,
                }
                for d in self.dot_intervals
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BootstrapBand":
        dots = tuple(
            DotInterval(
                group_name=d["group_name"],
                alpha_low=float(d["alpha_low"]),
                alpha_high=float(d["alpha_high"]),
                r2_low=float(d["r2_low"]),
                r2_high=float(d["r2_high"]),
            )
            for d in doc.get("dot_intervals", [])
        )
        return cls(
            target_bias=float(doc["target_bias"]),
            estimand=Estimand(doc["estimand"]),
            level=float(doc["level"]),
            replicates=int(doc["replicates"]),
            seed=int(doc["seed"]),
            redraws=int(doc.get("redraws", 0)),
            alpha_grid=np.asarray(doc["alpha_grid"], dtype=np.float64),
            r2_low=np.asarray(doc["r2_low"], dtype=np.float64),
            r2_high=np.asarray(doc["r2_high"], dtype=np.float64),
            dot_intervals=dots,
        )


def resample_rows(
    rng: np.random.Generator, treated: np.ndarray, max_retries: int
) -> tuple[np.ndarray, int]:
    """n draws with replacement, redrawn until both arms survive.

    Returns the index array and how many redraws it took.
    """
    n = treated.shape[0]
    for attempt in range(max_retries + 1):
        idx = rng.integers(0, n, n)
        tm = treated[idx]
        if tm.any() and not tm.all():
            return idx, attempt
    raise DegenerateDataError(
        f"could not draw a bootstrap replicate with both arms in "
        f"{max_retries + 1} attempts"
    )


def _quantile_pair(values: np.ndarray, level: float, axis: int = 0):
    lo_q = (1.0 - level) / 2.0
    return (
        np.quantile(values, lo_q, axis=axis),
        np.quantile(values, 1.0 - lo_q, axis=axis),
    )


def bootstrap_band(
    frame: PredictionFrame,
    target_bias: float,
    alpha_grid: np.ndarray,
    cfg: BootstrapConfig,
    estimand: Estimand = Estimand.ATE,
    leave_outs: Iterable[LeaveOutPredictions] = (),
) -> BootstrapBand:
    """Band around the bias contour plus intervals for the dots.

    The curve per replicate uses the same construction as the point
    estimate (minimal delta for the target, clipped r2), so the band
    brackets exactly what is drawn.
    """
    if not (np.isfinite(target_bias) and target_bias > 0.0):
        raise InputValidationError(
            f"target_bias must be a positive number (got {target_bias!r})"
        )
    grid = np.ascontiguousarray(np.asarray(alpha_grid, dtype=np.float64))
    if grid.ndim != 1 or grid.size == 0:
        raise InputValidationError("alpha_grid must be a non-empty 1-d array")
    if not np.all(np.isfinite(grid)) or np.any((grid <= 0.0) | (grid >= 1.0)):
        raise InputValidationError("alpha_grid values must lie inside (0, 1)")
    estimand = Estimand(estimand)
    los: Sequence[LeaveOutPredictions] = list(leave_outs)
    for lo in los:
        if lo.n != frame.n:
            raise InputValidationError(
                f"leave-out predictions for group {lo.group_name!r} are not "
                "row-aligned with the frame"
            )

    n = frame.n
    n_grid = grid.size
    treated = frame.treated
    resid2 = frame.residuals ** 2

    bracket_mat = np.empty((n, n_grid))
    trig_mat = np.empty((n, n_grid))
    for j, a in enumerate(grid):
        m = 1.0 / float(a) - 1.0
        bracket_mat[:, j] = kernels.bracket_rows(frame.g, m)
        trig_mat[:, j] = kernels.trig_term_rows(frame.g, frame.t, m)

    gv = frame.g * (1.0 - frame.g)
    lo_stats = [
        (lo.group_name, lo.g_wo * (1.0 - lo.g_wo), (frame.y - lo.q_wo) ** 2)
        for lo in los
    ]

    r2_rows = np.empty((cfg.replicates, n_grid))
    dot_alpha = np.empty((cfg.replicates, len(los)))
    dot_r2 = np.empty((cfg.replicates, len(los)))
    redraws = 0
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.replicates)
    tmask = treated.astype(np.float64)

    for r in range(cfg.replicates):
        rng = np.random.default_rng(children[r])
        idx, extra = resample_rows(rng, treated, cfg.max_retries)
        redraws += extra
        w = np.bincount(idx, minlength=n).astype(np.float64)
        w /= n
        if estimand is Estimand.ATT:
            wt = w * tmask
            wt /= wt.sum()
            mean_bracket = wt @ bracket_mat
        else:
            mean_bracket = w @ bracket_mat
        msr = float(w @ resid2)
        if msr <= 0.0:
            raise DegenerateDataError(
                "bootstrap replicate has identically zero residuals"
            )
        delta_star = float(target_bias) / mean_bracket
        r2_rows[r] = np.minimum(delta_star * delta_star * (w @ trig_mat) / msr, 1.0)
        for c, (_, gvwo, res2wo) in enumerate(lo_stats):
            dot_alpha[r, c] = max(1.0 - float(w @ gv) / float(w @ gvwo), 0.0)
            wo = float(w @ res2wo)
            if wo <= 0.0:
                raise DegenerateDataError(
                    "bootstrap replicate has zero leave-out residuals"
                )
            dot_r2[r, c] = max(1.0 - msr / wo, 0.0)

    band_low, band_high = _quantile_pair(r2_rows, cfg.level)
    intervals = []
    for c, (name, _, _) in enumerate(lo_stats):
        a_lo, a_hi = _quantile_pair(dot_alpha[:, c], cfg.level)
        r_lo, r_hi = _quantile_pair(dot_r2[:, c], cfg.level)
        intervals.append(DotInterval(
            group_name=name,
            alpha_low=float(a_lo), alpha_high=float(a_hi),
            r2_low=float(r_lo), r2_high=float(r_hi),
        ))

    return BootstrapBand(
        target_bias=float(target_bias),
        estimand=estimand,
        level=cfg.level,
        replicates=cfg.replicates,
        seed=cfg.seed,
        alpha_grid=grid,
        r2_low=band_low,
        r2_high=band_high,
        dot_intervals=tuple(intervals),
        redraws=redraws,
    )
