"""Shared builders for the test suite.

Everything here is deterministic: a fixed seed always produces the same
arrays, so tests that freeze expected values stay stable.
"""

from __future__ import annotations

import numpy as np
import pytest

from austen.core import PredictionFrame


def make_frame(
    n: int = 80,
    seed: int = 7,
    g_low: float = 0.05,
    g_high: float = 0.95,
    noise_sd: float = 1.0,
) -> PredictionFrame:
    """Build a well-behaved random prediction frame with both arms present."""
    rng = np.random.default_rng(seed)
    g = rng.uniform(g_low, g_high, size=n)
    t = (rng.random(n) < g).astype(float)
    # force both arms so tiny n never degenerates
    t[0] = 0.0
    t[1] = 1.0
    q0 = rng.normal(0.0, 1.0, size=n)
    q1 = q0 + rng.normal(1.0, 0.5, size=n)
    y = np.where(t == 1.0, q1, q0) + rng.normal(0.0, noise_sd, size=n)
    return PredictionFrame(y=y, t=t, g=g, q0=q0, q1=q1)


def make_constant_g_frame(n: int = 60, g0: float = 0.4, seed: int = 11) -> PredictionFrame:
    """Frame whose propensity column is a single constant."""
    rng = np.random.default_rng(seed)
    t = (rng.random(n) < g0).astype(float)
    t[0] = 0.0
    t[1] = 1.0
    q0 = rng.normal(0.0, 1.0, size=n)
    q1 = q0 + 1.0
    y = np.where(t == 1.0, q1, q0) + rng.normal(0.0, 1.0, size=n)
    return PredictionFrame(y=y, t=t, g=np.full(n, g0), q0=q0, q1=q1)


@pytest.fixture
def frame() -> PredictionFrame:
    return make_frame()


@pytest.fixture
def tiny_frame() -> PredictionFrame:
    return make_frame(n=12, seed=3)
