"""Synthetic data with a known unobserved confounder.

The generator draws covariates X, an observed propensity g(X), and then
a full propensity gtilde ~ Beta(g*m, (1-g)*m) with m = 1/alpha - 1, so
E[gtilde | X] = g and alpha controls how far treatment assignment can
move. Treatment is Bernoulli(gtilde). Outcomes add a confounder term
with slope delta on the centered logit:

    y_t = q(t, X) + delta * (logit gtilde - E[logit gtilde | X, T=t]) + noise

Centering by the arm-conditional mean keeps E[Y | T, X] = q(T, X), so
the observed-model predictions (g, q0, q1) are exactly right and all
remaining bias is attributable to the confounder. Both potential
outcomes are materialized, so true effects are known exactly.

Beta draws go through two log-gamma variables: logit gtilde is the
difference of the logs, which stays finite even where a Beta(a, b) draw
with a < 1 would underflow to 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import numpy as np

from ._backend import kernels
from .core import G_CLIP, PredictionFrame
from .errors import InputValidationError
from .reference_models import Dataset

__all__ = [
    "SimConfig",
    "SimSample",
    "ConfoundedScenario",
    "simulate",
    "empirical_alpha",
    "empirical_alpha_variance_form",
    "empirical_outcome_r2",
    "default_config",
    "constant_g_config",
    "monotone_scenario",
    "cancellation_scenario",
]

_TINY = np.finfo(np.float64).tiny
_LOGIT_CAP = 700.0


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0.0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def default_covariates(rng: np.random.Generator, n: int):
    """Three uniform columns; x3 influences nothing downstream."""
    return rng.random((n, 3)), ("x1", "x2", "x3")


def default_g_spec(x: np.ndarray) -> np.ndarray:
    return _sigmoid(-1.25 + 1.5 * x[:, 0] + 1.0 * x[:, 1])


def default_q_spec(t: float, x: np.ndarray) -> np.ndarray:
    return 0.5 + 2.0 * x[:, 0] + 1.0 * x[:, 1] + t * (1.5 + x[:, 0])


def _constant_g_spec(x: np.ndarray, g0: float) -> np.ndarray:
    return np.full(x.shape[0], g0)


@dataclass(frozen=True)
class SimConfig:
    """Everything a simulation run depends on, seed included."""

    n: int
    alpha: float
    delta: float
    noise_sd: float = 1.0
    seed: int = 0
    covariate_sampler: Callable = default_covariates
    g_spec: Callable = default_g_spec
    q_spec: Callable = default_q_spec

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 2:
            raise InputValidationError(f"n must be an int >= 2 (got {self.n!r})")
        if not (np.isfinite(self.alpha) and 0.0 < self.alpha < 1.0):
            raise InputValidationError(
                f"alpha must lie strictly inside (0, 1) (got {self.alpha!r})"
            )
        if not np.isfinite(self.delta):
            raise InputValidationError(f"delta must be finite (got {self.delta!r})")
        if not (np.isfinite(self.noise_sd) and self.noise_sd >= 0.0):
            raise InputValidationError(
                f"noise_sd must be >= 0 (got {self.noise_sd!r})"
            )
        if not isinstance(self.seed, int) or self.seed < 0:
            raise InputValidationError(f"seed must be an int >= 0 (got {self.seed!r})")
        for name in ("covariate_sampler", "g_spec", "q_spec"):
            if not callable(getattr(self, name)):
                raise InputValidationError(f"{name} must be callable")

    @property
    def m(self) -> float:
        return 1.0 / self.alpha - 1.0


@dataclass(frozen=True)
class SimSample:
    """One simulated draw plus every quantity needed to score it."""

    config: SimConfig
    x: np.ndarray
    covariate_names: tuple[str, ...]
    g_true: np.ndarray
    gtilde: np.ndarray
    logit_gtilde: np.ndarray
    logit_center: np.ndarray  # E[logit gtilde | X, T=t] for the drawn t
    t: np.ndarray
    y: np.ndarray
    y0: np.ndarray
    y1: np.ndarray
    q0: np.ndarray
    q1: np.ndarray
    tau_ate: float
    tau_att: float
    bias_ate: float
    bias_att: float

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def ate(self) -> float:
        """True ATE: the oracle estimate minus the analytic bias."""
        return self.tau_ate - self.bias_ate

    @property
    def att(self) -> float:
        return self.tau_att - self.bias_att

    def to_frame(self) -> PredictionFrame:
        """Frame with oracle predictions (true g and q)."""
        return PredictionFrame(y=self.y, t=self.t, g=self.g_true,
                               q0=self.q0, q1=self.q1)

    def to_dataset(self) -> Dataset:
        return Dataset(y=self.y, t=self.t, x=self.x,
                       columns=self.covariate_names)

    def ground_truth(self) -> dict:
        """Scalar truths for the simulation sidecar file."""
        return {
            "n": self.n,
            "alpha": self.config.alpha,
            "delta": self.config.delta,
            "noise_sd": self.config.noise_sd,
            "seed": self.config.seed,
            "tau_ate": self.tau_ate,
            "tau_att": self.tau_att,
            "bias_ate": self.bias_ate,
            "bias_att": self.bias_att,
            "ate": self.ate,
            "att": self.att,
        }


def _log_gamma_draws(rng: np.random.Generator, shape: np.ndarray) -> np.ndarray:
    """log of a Gamma(shape, 1) draw, safe for small shapes.

    For shape < 1 a plain draw underflows to 0 with high probability;
    there the draw is built as Gamma(shape+1) * U^(1/shape), which in
    log space never leaves float range.
    """
    out = np.empty_like(shape)
    small = shape < 1.0
    big = ~small
    if big.any():
        out[big] = np.log(np.maximum(rng.gamma(shape[big]), _TINY))
    if small.any():
        k = shape[small]
        boost = np.log(np.maximum(rng.gamma(k + 1.0), _TINY))
        u = np.maximum(rng.random(k.shape[0]), _TINY)
        out[small] = boost + np.log(u) / k
    return out


def simulate(config: SimConfig) -> SimSample:
    """Draw one dataset from the confounded generator."""
    rng = np.random.default_rng(config.seed)
    n = config.n

    x, names = config.covariate_sampler(rng, n)
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != n or x.shape[1] < 1:
        raise InputValidationError(
            f"covariate_sampler must return an (n, p) array, got {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise InputValidationError("covariates contain nan or inf")
    names = tuple(names)
    if len(names) != x.shape[1] or len(set(names)) != len(names):
        raise InputValidationError("covariate names must be unique, one per column")

    g = np.asarray(config.g_spec(x), dtype=np.float64)
    if g.shape != (n,) or not np.all(np.isfinite(g)):
        raise InputValidationError("g_spec must return n finite values")
    if np.any((g <= 0.0) | (g >= 1.0)):
        raise InputValidationError("g_spec values must lie strictly inside (0, 1)")
    g = np.clip(g, G_CLIP, 1.0 - G_CLIP)

    m = config.m
    a = g * m
    b = (1.0 - g) * m
    logit_gt = _log_gamma_draws(rng, a) - _log_gamma_draws(rng, b)
    logit_gt = np.clip(logit_gt, -_LOGIT_CAP, _LOGIT_CAP)
    gtilde = np.clip(_sigmoid(logit_gt),
                     np.nextafter(0.0, 1.0), np.nextafter(1.0, 0.0))

    t = (rng.random(n) < gtilde).astype(np.float64)

    # E[logit gtilde | X, T]: conjugate update tilts the Beta by the arm
    dg = kernels.digamma(np.concatenate([a, a + 1.0, b, b + 1.0]))
    center1 = dg[n:2 * n] - dg[2 * n:3 * n]   # psi(a+1) - psi(b)
    center0 = dg[:n] - dg[3 * n:]             # psi(a) - psi(b+1)
    center = np.where(t == 1.0, center1, center0)

    q0 = np.broadcast_to(
        np.asarray(config.q_spec(0.0, x), dtype=np.float64), (n,)).copy()
    q1 = np.broadcast_to(
        np.asarray(config.q_spec(1.0, x), dtype=np.float64), (n,)).copy()
    if not (np.all(np.isfinite(q0)) and np.all(np.isfinite(q1))):
        raise InputValidationError("q_spec must return finite values")

    eps0 = rng.normal(0.0, config.noise_sd, n)
    eps1 = rng.normal(0.0, config.noise_sd, n)
    y0 = q0 + config.delta * (logit_gt - center0) + eps0
    y1 = q1 + config.delta * (logit_gt - center1) + eps1
    y = np.where(t == 1.0, y1, y0)

    treated = t == 1.0
    bracket = kernels.bracket_rows(g, m)
    tau_ate = float(np.mean(q1 - q0))
    tau_att = float(np.mean(q1[treated] - q0[treated]))
    bias_ate = config.delta * float(bracket.mean())
    bias_att = config.delta * float(bracket[treated].mean())

    return SimSample(
        config=config, x=x, covariate_names=names, g_true=g, gtilde=gtilde,
        logit_gtilde=logit_gt, logit_center=center, t=t, y=y, y0=y0, y1=y1,
        q0=q0, q1=q1, tau_ate=tau_ate, tau_att=tau_att,
        bias_ate=bias_ate, bias_att=bias_att,
    )


def empirical_alpha(sample: SimSample) -> float:
    """Full-propensity gap between arms: mean gtilde|T=1 minus |T=0.

    Matches alpha when g is constant across units; with heterogeneous g
    the unconditional gap overshoots alpha (the per-X identity does not
    average through), which is why the variance form below exists.
    """
    treated = sample.t == 1.0
    if not treated.any() or treated.all():
        raise InputValidationError("sample needs both treatment arms")
    return float(sample.gtilde[treated].mean() - sample.gtilde[~treated].mean())


def empirical_alpha_variance_form(sample: SimSample) -> float:
    """1 - E[gtilde (1 - gtilde)] / E[g (1 - g)]: recovers alpha for any
    g distribution."""
    num = float(np.mean(sample.gtilde * (1.0 - sample.gtilde)))
    den = float(np.mean(sample.g_true * (1.0 - sample.g_true)))
    return 1.0 - num / den


def empirical_outcome_r2(sample: SimSample) -> float:
    """Realized share of residual variance the confounder term explains."""
    u = sample.config.delta * (sample.logit_gtilde - sample.logit_center)
    q_obs = np.where(sample.t == 1.0, sample.q1, sample.q0)
    resid = sample.y - q_obs
    denom = float(np.mean(resid ** 2))
    if denom <= 0.0:
        raise InputValidationError("residuals are identically zero")
    return float(np.mean(u ** 2)) / denom


def default_config(n: int, alpha: float, delta: float, *,
                   noise_sd: float = 1.0, seed: int = 0) -> SimConfig:
    """Heterogeneous-propensity generator over three uniform covariates."""
    return SimConfig(n=n, alpha=alpha, delta=delta, noise_sd=noise_sd, seed=seed)


def constant_g_config(n: int, alpha: float, delta: float, *, g0: float = 0.3,
                      noise_sd: float = 1.0, seed: int = 0) -> SimConfig:
    """Constant observed propensity g0 for every unit.

    With constant g the arm gap in gtilde equals alpha exactly, so this
    configuration is the one where `empirical_alpha` is a clean check.
    """
    if not (np.isfinite(g0) and 0.0 < g0 < 1.0):
        raise InputValidationError(f"g0 must lie strictly inside (0, 1) (got {g0!r})")
    return SimConfig(n=n, alpha=alpha, delta=delta, noise_sd=noise_sd,
                     seed=seed, g_spec=partial(_constant_g_spec, g0=g0))


@dataclass(frozen=True)
class ConfoundedScenario:
    """A dataset where the confounder is actually observed, plus which
    column group plays the confounder. Feeding the dataset to the model
    fits with and without that group reproduces the whole analysis
    under a known truth."""

    kind: str
    dataset: Dataset
    group_name: str
    group_columns: tuple[str, ...]
    sample: SimSample


def _monotone_covariates(rng: np.random.Generator, n: int):
    return rng.random((n, 1)), ("x1",)


def _monotone_q_spec(t: float, x: np.ndarray) -> np.ndarray:
    return np.full(x.shape[0], 1.0 + 2.0 * t)


def monotone_scenario(n: int, *, alpha: float = 0.3, delta: float = 2.0,
                      noise_sd: float = 1.0, seed: int = 0) -> ConfoundedScenario:
    """Confounding that a sensitivity analysis should match.

    The confounder column z is the true assignment logit itself:
    treatment is Bernoulli(sigmoid(z)) and the outcome is linear in z,
    so logistic / linear working models are exactly specified both with
    and without z. Omitting z then biases the estimate by the same
    amount the sensitivity model predicts at the measured influence of
    z, so the two bias estimates should agree up to sampling noise.
    """
    cfg = SimConfig(
        n=n, alpha=alpha, delta=delta, noise_sd=noise_sd, seed=seed,
        covariate_sampler=_monotone_covariates,
        g_spec=partial(_constant_g_spec, g0=0.4),
        q_spec=_monotone_q_spec,
    )
    sample = simulate(cfg)
    x = np.column_stack([sample.x, sample.logit_gtilde])
    dataset = Dataset(y=sample.y, t=sample.t, x=x, columns=("x1", "z"))
    return ConfoundedScenario(kind="monotone", dataset=dataset,
                              group_name="z", group_columns=("z",),
                              sample=sample)


def _cancellation_covariates(rng: np.random.Generator, n: int):
    x1 = rng.random(n)
    z = rng.standard_normal(n)
    return np.column_stack([x1, z, z * z]), ("x1", "z", "z_sq")


def _cancellation_g(x: np.ndarray) -> np.ndarray:
    return _sigmoid(-1.0 + 1.0 * x[:, 2])


def _cancellation_q(t: float, x: np.ndarray) -> np.ndarray:
    return 0.5 + 2.0 * x[:, 1] + 2.0 * t


def cancellation_scenario(n: int, *, noise_sd: float = 1.0,
                          seed: int = 0) -> ConfoundedScenario:
    """Confounding structure where a sensitivity analysis must overshoot.

    Treatment depends on z only through z^2 (even) while the outcome is
    linear in z (odd), so omitting the group {z, z_sq} moves the
    estimate by roughly nothing: the upward and downward pulls cancel
    by symmetry. The measured influences stay large on both axes, so
    the sensitivity bias at that point is far above the actual bias.
    The worst case over confounders at a given influence is exactly
    what the contours price, so conservatism here is correct behavior.
    """
    cfg = SimConfig(
        n=n, alpha=1e-6, delta=0.0, noise_sd=noise_sd, seed=seed,
        covariate_sampler=_cancellation_covariates,
        g_spec=_cancellation_g,
        q_spec=_cancellation_q,
    )
    sample = simulate(cfg)
    dataset = sample.to_dataset()
    return ConfoundedScenario(kind="cancellation", dataset=dataset,
                              group_name="z", group_columns=("z", "z_sq"),
                              sample=sample)
