"""Pure-numpy kernels: digamma/trigamma over arrays plus the two fused
row operations the sensitivity formulas need.

Algorithm (both functions): shift the argument upward by the recurrence
until it is at least 10, then evaluate the asymptotic de Moivre series.
Seven Bernoulli-number terms at x >= 10 put the series truncation error
below 1e-17 relative, so total error is dominated by float rounding
(a few ulp).

Inputs here are trusted: finite, positive, float64. Domain validation
lives in ``specfun``; callers inside the package pass arrays that are
valid by construction.
"""

from __future__ import annotations

import numpy as np

_SHIFT = 10.0

# psi(x) ~ ln x - 1/(2x) - sum_k DG[k-1] * x**(-2k)
_DG = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)

# psi1(x) ~ 1/x + 1/(2x^2) + sum_k TG[k-1] * x**(-2k-1)
_TG = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)


def digamma(x: np.ndarray) -> np.ndarray:
    z = np.array(x, dtype=np.float64, copy=True)
    acc = np.zeros_like(z)
    for _ in range(10):  # any x > 0 reaches the cutoff in <= 10 steps
        mask = z < _SHIFT
        if not mask.any():
            break
        acc[mask] -= 1.0 / z[mask]
        z[mask] += 1.0
    r = 1.0 / z
    r2 = r * r
    poly = np.full_like(z, _DG[-1])
    for c in _DG[-2::-1]:
        poly *= r2
        poly += c
    return acc + np.log(z) - 0.5 * r - r2 * poly


def trigamma(x: np.ndarray) -> np.ndarray:
    z = np.array(x, dtype=np.float64, copy=True)
    acc = np.zeros_like(z)
    for _ in range(10):
        mask = z < _SHIFT
        if not mask.any():
            break
        acc[mask] += 1.0 / (z[mask] * z[mask])
        z[mask] += 1.0
    r = 1.0 / z
    r2 = r * r
    poly = np.full_like(z, _TG[-1])
    for c in _TG[-2::-1]:
        poly *= r2
        poly += c
    return acc + r + 0.5 * r2 + (r2 * r) * poly


def bracket_rows(g: np.ndarray, m: float) -> np.ndarray:
    """Per-row psi(g*m + 1) - psi((1-g)*m) - psi(g*m) + psi((1-g)*m + 1)."""
    a = g * m
    b = (1.0 - g) * m
    n = a.shape[0]
    vals = digamma(np.concatenate([a + 1.0, b, a, b + 1.0]))
    return vals[:n] - vals[n:2 * n] - vals[2 * n:3 * n] + vals[3 * n:]


def trig_term_rows(g: np.ndarray, t: np.ndarray, m: float) -> np.ndarray:
    """Per-row psi1(g*m + t) + psi1((1-g)*m + 1 - t)."""
    n = g.shape[0]
    vals = trigamma(np.concatenate([g * m + t, (1.0 - g) * m + (1.0 - t)]))
    return vals[:n] + vals[n:]
