"""Reference model fits: crossfit predictions and leave-group-out refits.

Working models are deliberately plain: logistic regression (IRLS, small
ridge) for the propensity, and one ridge regression per treatment arm
for the outcome. Every prediction is out of fold: rows are split into k
folds once, models are trained on each fold's complement, and a row is
only ever predicted by models that never saw it.

The full fit and every leave-group-out fit reuse the same fold split
(same seed, same retry path), so their predictions differ only by the
dropped columns, never by fold luck.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ._backend import kernels
from .bootstrap import BootstrapConfig, resample_rows
from .calibration import LeaveOutPredictions, covariate_influence
from .core import Estimand, PredictionFrame, tau_hat
from .errors import (
    ConvergenceWarning,
    DegenerateDataError,
    InputValidationError,
)

__all__ = [
    "Dataset",
    "GroupSpec",
    "FitConfig",
    "ConservatismReport",
    "crossfit_predictions",
    "leave_group_out_predictions",
    "conservatism_experiment",
]


@dataclass(frozen=True)
class Dataset:
    """Raw analysis data: outcome y, treatment t, covariate matrix x."""

    y: np.ndarray
    t: np.ndarray
    x: np.ndarray
    columns: tuple[str, ...]

    def __post_init__(self):
        y = np.asarray(self.y, dtype=np.float64)
        t = np.asarray(self.t, dtype=np.float64)
        x = np.asarray(self.x, dtype=np.float64)
        if y.ndim != 1 or t.ndim != 1 or x.ndim != 2:
            raise InputValidationError("y and t must be 1-d, x must be 2-d")
        n = y.shape[0]
        if t.shape[0] != n or x.shape[0] != n:
            raise InputValidationError("y, t, and x must have equal row counts")
        if n < 2:
            raise InputValidationError("dataset needs at least 2 rows")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(t))
                and np.all(np.isfinite(x))):
            raise InputValidationError("dataset contains nan or inf")
        if not np.all((t == 0.0) | (t == 1.0)):
            raise InputValidationError("column 't' must be exactly 0 or 1")
        n_treated = int(t.sum())
        if n_treated == 0 or n_treated == n:
            raise DegenerateDataError(
                "dataset needs at least one treated and one control unit"
            )
        columns = tuple(str(c) for c in self.columns)
        if len(columns) != x.shape[1]:
            raise InputValidationError(
                f"{len(columns)} column names for {x.shape[1]} columns"
            )
        if len(set(columns)) != len(columns) or any(not c for c in columns):
            raise InputValidationError("column names must be unique and non-empty")
        for name, arr in (("y", y), ("t", t), ("x", x)):
            arr = np.ascontiguousarray(arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "columns", columns)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    def column_indices(self, names: Sequence[str]) -> np.ndarray:
        lookup = {c: i for i, c in enumerate(self.columns)}
        missing = [c for c in names if c not in lookup]
        if missing:
            raise InputValidationError(
                f"unknown column(s) {missing!r}; dataset has {list(self.columns)!r}"
            )
        return np.asarray([lookup[c] for c in names], dtype=np.intp)


@dataclass(frozen=True)
class GroupSpec:
    """Named covariate groups that get left out together.

    Groups must not share columns unless ``allow_overlap`` is set;
    overlapping groups make the per-group influences double-count.
    """

    groups: Mapping[str, Sequence[str]]
    allow_overlap: bool = False

    def __post_init__(self):
        if not self.groups:
            raise InputValidationError("GroupSpec needs at least one group")
        norm: dict[str, tuple[str, ...]] = {}
        for name, cols in self.groups.items():
            if not isinstance(name, str) or not name:
                raise InputValidationError("group names must be non-empty strings")
            cols = tuple(str(c) for c in cols)
            if not cols:
                raise InputValidationError(f"group {name!r} has no columns")
            if len(set(cols)) != len(cols):
                raise InputValidationError(f"group {name!r} repeats a column")
            norm[name] = cols
        if not self.allow_overlap:
            seen: dict[str, str] = {}
            for name, cols in norm.items():
                for c in cols:
                    if c in seen:
                        raise InputValidationError(
                            f"column {c!r} appears in groups {seen[c]!r} and "
                            f"{name!r}; set allow_overlap to permit this"
                        )
                    seen[c] = name
        object.__setattr__(self, "groups", norm)

    def validate_against(self, dataset: Dataset) -> None:
        for name, cols in self.groups.items():
            dataset.column_indices(cols)  # raises on unknown columns


@dataclass(frozen=True)
class FitConfig:
    """Crossfitting controls: folds, ridge strength, IRLS stopping."""

    k: int = 5
    ridge: float = 1e-3
    max_iter: int = 100
    tol: float = 1e-8
    seed: int = 0
    max_retries: int = 20

    def __post_init__(self):
        if not isinstance(self.k, int) or self.k < 2:
            raise InputValidationError(f"k must be an int >= 2 (got {self.k!r})")
        if not (np.isfinite(self.ridge) and self.ridge >= 0.0):
            raise InputValidationError(f"ridge must be >= 0 (got {self.ridge!r})")
        if not isinstance(self.max_iter, int) or self.max_iter < 1:
            raise InputValidationError("max_iter must be an int >= 1")
        if not (np.isfinite(self.tol) and self.tol > 0.0):
            raise InputValidationError(f"tol must be > 0 (got {self.tol!r})")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InputValidationError(f"seed must be an int >= 0 (got {self.seed!r})")
        if not isinstance(self.max_retries, int) or self.max_retries < 0:
            raise InputValidationError("max_retries must be an int >= 0")


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _fold_assignment(t: np.ndarray, cfg: FitConfig) -> np.ndarray:
    """Random fold ids such that every fold's complement keeps both arms.

    Deterministic in (t, cfg.seed): the same config on the same rows
    always yields the same split, which is what keeps full and
    leave-group-out fits paired.
    """
    n = t.shape[0]
    if n < 2 * cfg.k:
        raise DegenerateDataError(
            f"crossfitting with k={cfg.k} needs at least {2 * cfg.k} rows, got {n}"
        )
    n_treated = int(t.sum())
    n_control = n - n_treated
    rng = np.random.default_rng(cfg.seed)
    fold_of = np.empty(n, dtype=np.intp)
    for _ in range(cfg.max_retries + 1):
        perm = rng.permutation(n)
        for f, chunk in enumerate(np.array_split(perm, cfg.k)):
            fold_of[chunk] = f
        ok = True
        for f in range(cfg.k):
            in_fold = fold_of == f
            tc = int(t[in_fold].sum())
            cc = int(in_fold.sum()) - tc
            if n_treated - tc < 1 or n_control - cc < 1:
                ok = False
                break
        if ok:
            return fold_of
    raise DegenerateDataError(
        f"could not split {n} rows into {cfg.k} folds with both arms in "
        f"every training set after {cfg.max_retries + 1} attempts"
    )


def _fit_logistic(xd: np.ndarray, t: np.ndarray, cfg: FitConfig) -> np.ndarray:
    """IRLS for ridge-penalized logistic regression on a design matrix
    whose first column is the intercept (unpenalized)."""
    p = xd.shape[1]
    pen = np.eye(p) * cfg.ridge
    pen[0, 0] = 0.0
    w = np.zeros(p)
    for it in range(cfg.max_iter):
        eta = xd @ w
        mu = _sigmoid(eta)
        wt = np.maximum(mu * (1.0 - mu), 1e-10)
        z = eta + (t - mu) / wt
        xtw = xd.T * wt
        w_new = np.linalg.solve(xtw @ xd + pen, xtw @ z)
        step = float(np.max(np.abs(w_new - w)))
        w = w_new
        if step < cfg.tol:
            return w
    warnings.warn(
        f"logistic fit stopped at max_iter={cfg.max_iter} with last step "
        f"{step:.3g} > tol={cfg.tol:g}",
        ConvergenceWarning,
        stacklevel=2,
    )
    return w


def _fit_ridge(xd: np.ndarray, y: np.ndarray, cfg: FitConfig) -> np.ndarray:
    """Ridge regression normal equations; intercept unpenalized."""
    p = xd.shape[1]
    pen = np.eye(p) * cfg.ridge
    pen[0, 0] = 0.0
    lhs = xd.T @ xd + pen
    rhs = xd.T @ y
    try:
        return np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(lhs, rhs, rcond=None)[0]


def _design(x: np.ndarray, mu: np.ndarray, sd: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(x.shape[0]), (x - mu) / sd])


def _crossfit(dataset: Dataset, cfg: FitConfig,
              keep: np.ndarray) -> PredictionFrame:
    """Out-of-fold predictions using only the ``keep`` columns."""
    xsub = dataset.x[:, keep]
    y, t = dataset.y, dataset.t
    n = dataset.n
    fold_of = _fold_assignment(t, cfg)
    g = np.empty(n)
    q0 = np.empty(n)
    q1 = np.empty(n)
    for f in range(cfg.k):
        test = fold_of == f
        train = ~test
        xtr = xsub[train]
        mu = xtr.mean(axis=0) if xtr.shape[1] else np.empty(0)
        sd = xtr.std(axis=0) if xtr.shape[1] else np.empty(0)
        sd = np.where(sd < 1e-12, 1.0, sd)
        xd_train = _design(xtr, mu, sd)
        xd_test = _design(xsub[test], mu, sd)
        w_log = _fit_logistic(xd_train, t[train], cfg)
        g[test] = _sigmoid(xd_test @ w_log)
        for arm, out in ((0.0, q0), (1.0, q1)):
            rows = train & (t == arm)
            w_lin = _fit_ridge(_design(xsub[rows], mu, sd), y[rows], cfg)
            out[test] = xd_test @ w_lin
    return PredictionFrame(y=y, t=t, g=g, q0=q0, q1=q1)


def crossfit_predictions(dataset: Dataset, cfg: FitConfig | None = None, *,
                         drop_columns: Sequence[str] = ()) -> PredictionFrame:
    """Out-of-fold (g, q0, q1) for every row, optionally with some
    columns withheld from both models."""
    cfg = cfg or FitConfig()
    if drop_columns:
        drop = set(dataset.column_indices(drop_columns).tolist())
        keep = np.asarray([i for i in range(len(dataset.columns))
                           if i not in drop], dtype=np.intp)
    else:
        keep = np.arange(len(dataset.columns), dtype=np.intp)
    return _crossfit(dataset, cfg, keep)


def leave_group_out_predictions(
    dataset: Dataset, groups: GroupSpec, cfg: FitConfig | None = None
) -> list[LeaveOutPredictions]:
    """Refit once per group with that group's columns withheld.

    Fold splits are shared with ``crossfit_predictions`` under the same
    config, so full and leave-out predictions are directly comparable.
    """
    cfg = cfg or FitConfig()
    groups.validate_against(dataset)
    out = []
    for name, cols in groups.groups.items():
        frame_wo = crossfit_predictions(dataset, cfg, drop_columns=cols)
        out.append(LeaveOutPredictions(
            group_name=name, g_wo=frame_wo.g, q_wo=frame_wo.q_observed))
    return out


@dataclass(frozen=True)
class ConservatismReport:
    """Head-to-head comparison for one observed covariate group.

    ``nonparametric_bias`` is what actually happens to the estimate
    when the group is dropped; ``sensitivity_bias`` is what the
    sensitivity model predicts for a confounder of the measured
    influence, evaluated on the without-group predictions. When the
    bootstrap ran, (ci_low, ci_high) bracket the difference
    sensitivity_bias - |nonparametric_bias| and ``agrees`` says whether
    that interval covers zero.
    """

    group_name: str
    estimand: Estimand
    tau_full: float
    tau_without: float
    nonparametric_bias: float
    alpha_hat: float
    r2_hat: float
    delta_hat: float
    sensitivity_bias: float
    ci_low: float | None = None
    ci_high: float | None = None
    agrees: bool | None = None
    boot_replicates: int = 0
    boot_redraws: int = 0


def _weighted_sens_bias(
    alpha_hat: float,
    r2_hat: float,
    g_wo: np.ndarray,
    t: np.ndarray,
    res2_wo: np.ndarray,
    w: np.ndarray,
    w_estimand: np.ndarray,
) -> tuple[float, float]:
    """(delta_hat, predicted |bias|) at measured influence, under row
    weights w (probability vector) and estimand weights w_estimand."""
    if alpha_hat <= 0.0 or r2_hat <= 0.0:
        return 0.0, 0.0
    m = 1.0 / alpha_hat - 1.0
    msr = float(w @ res2_wo)
    if msr <= 0.0:
        raise DegenerateDataError("leave-out residuals identically zero")
    trig = float(w @ kernels.trig_term_rows(g_wo, t, m))
    delta = float(np.sqrt(r2_hat * msr / trig))
    bracket = float(w_estimand @ kernels.bracket_rows(g_wo, m))
    return delta, delta * bracket


def conservatism_experiment(
    dataset: Dataset,
    groups: GroupSpec,
    cfg: FitConfig | None = None,
    *,
    estimand: Estimand = Estimand.ATE,
    bootstrap: BootstrapConfig | None = None,
) -> list[ConservatismReport]:
    """Drop each group for real and compare against the sensitivity
    model's prediction at the group's measured influence.

    The sensitivity side is computed on the without-group predictions:
    that is the position of an analyst who never had the group and asks
    what a confounder this strong would do.
    """
    cfg = cfg or FitConfig()
    estimand = Estimand(estimand)
    frame = crossfit_predictions(dataset, cfg)
    tau_full = tau_hat(frame, estimand)
    n = frame.n
    uniform = np.full(n, 1.0 / n)
    emask = frame.estimand_rows(estimand).astype(np.float64)
    e_uniform = emask / emask.sum()

    reports = []
    for name, cols in groups.groups.items():
        frame_wo = crossfit_predictions(dataset, cfg, drop_columns=cols)
        lo = LeaveOutPredictions(group_name=name, g_wo=frame_wo.g,
                                 q_wo=frame_wo.q_observed)
        dot = covariate_influence(frame, lo)
        tau_wo = tau_hat(frame_wo, estimand)
        nonpar = tau_wo - tau_full
        res2_wo = (frame.y - lo.q_wo) ** 2
        delta_hat, sens = _weighted_sens_bias(
            dot.alpha_hat, dot.r2_hat, frame_wo.g, frame.t,
            res2_wo, uniform, e_uniform,
        )

        ci_low = ci_high = None
        agrees = None
        redraws = 0
        if bootstrap is not None:
            gv = frame.g * (1.0 - frame.g)
            gvwo = frame_wo.g * (1.0 - frame_wo.g)
            res2 = frame.residuals ** 2
            dq_full = frame.q1 - frame.q0
            dq_wo = frame_wo.q1 - frame_wo.q0
            treated = frame.treated
            tmask = treated.astype(np.float64)
            diffs = np.empty(bootstrap.replicates)
            children = np.random.SeedSequence(bootstrap.seed).spawn(
                bootstrap.replicates)
            for r in range(bootstrap.replicates):
                rng = np.random.default_rng(children[r])
                idx, extra = resample_rows(rng, treated, bootstrap.max_retries)
                redraws += extra
                w = np.bincount(idx, minlength=n).astype(np.float64) / n
                if estimand is Estimand.ATT:
                    we = w * tmask
                    we /= we.sum()
                else:
                    we = w
                tau_full_b = float(we @ dq_full)
                tau_wo_b = float(we @ dq_wo)
                a_b = max(1.0 - float(w @ gv) / float(w @ gvwo), 0.0)
                r2_b = max(1.0 - float(w @ res2) / float(w @ res2_wo), 0.0)
                _, sens_b = _weighted_sens_bias(
                    a_b, r2_b, frame_wo.g, frame.t, res2_wo, w, we)
                diffs[r] = sens_b - abs(tau_wo_b - tau_full_b)
            lo_q = (1.0 - bootstrap.level) / 2.0
            ci_low = float(np.quantile(diffs, lo_q))
            ci_high = float(np.quantile(diffs, 1.0 - lo_q))
            agrees = bool(ci_low <= 0.0 <= ci_high)

        reports.append(ConservatismReport(
            group_name=name,
            estimand=estimand,
            tau_full=tau_full,
            tau_without=tau_wo,
            nonparametric_bias=nonpar,
            alpha_hat=dot.alpha_hat,
            r2_hat=dot.r2_hat,
            delta_hat=delta_hat,
            sensitivity_bias=sens,
            ci_low=ci_low,
            ci_high=ci_high,
            agrees=agrees,
            boot_replicates=0 if bootstrap is None else bootstrap.replicates,
            boot_redraws=redraws,
        ))
    return reports
