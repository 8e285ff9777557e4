"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the four hot kernels on realistic shapes (per-unit rows crossed with
an alpha grid, as in contour and band construction) plus one end-to-end
contour build per backend. Run from the repo root:

    python3 benchmarks/bench_kernels.py [--n 200000] [--repeats 7]

The two backends share semantics but not bitwise results; agreement is
checked here to 1e-12 relative before timing so a broken build fails fast.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from austen._backend import available_backends
from austen.core import PredictionFrame, bias_contour, default_alpha_grid


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _make_rows(n: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    g = rng.uniform(0.02, 0.98, size=n)
    t = (rng.uniform(size=n) < g).astype(float)
    return g, t


def _check_agreement(backends: dict, g, t) -> None:
    if len(backends) < 2:
        return
    ref = backends["python"]
    other = backends["compiled"]
    x = np.logspace(-4.0, 5.0, 1000)
    for name in ("digamma", "trigamma"):
        a, b = getattr(ref, name)(x), getattr(other, name)(x)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)
    for m in (0.05, 1.0, 50.0):
        np.testing.assert_allclose(ref.bracket_rows(g, m),
                                   other.bracket_rows(g, m), rtol=1e-12)
        np.testing.assert_allclose(ref.trig_term_rows(g, t, m),
                                   other.trig_term_rows(g, t, m), rtol=1e-12)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200_000,
                    help="rows per kernel call (default 200000)")
    ap.add_argument("--repeats", type=int, default=7,
                    help="repeats per timing; best is reported (default 7)")
    args = ap.parse_args()

    backends = available_backends()
    g, t = _make_rows(args.n)
    x = np.logspace(-3.0, 4.0, args.n)
    _check_agreement(backends, g, t)

    m_mid = 1.0 / 0.3 - 1.0  # alpha = 0.3
    cases = [
        ("digamma(x)", lambda k: k.digamma(x)),
        ("trigamma(x)", lambda k: k.trigamma(x)),
        ("bracket_rows(g, m)", lambda k: k.bracket_rows(g, m_mid)),
        ("trig_term_rows(g, t, m)", lambda k: k.trig_term_rows(g, t, m_mid)),
    ]

    print(f"rows per call: {args.n}, repeats: {args.repeats} (best shown)")
    header = f"{'kernel':<28}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for label, call in cases:
        times = {name: _time(lambda k=mod: call(k), args.repeats)
                 for name, mod in backends.items()}
        row = f"{label:<28}" + "".join(f"{times[b] * 1e3:>10.2f}ms"
                                       for b in backends)
        if len(times) == 2:
            row += f"{times['python'] / times['compiled']:>9.1f}x"
        print(row)

    # end to end: a full contour over the default grid, swapping the
    # backend module used by the core layer
    rng = np.random.default_rng(1)
    q = rng.normal(size=args.n // 10)
    y = q + rng.normal(size=q.size)
    gg, tt = _make_rows(args.n // 10, seed=1)
    frame = PredictionFrame(y=y, t=tt, g=gg, q0=q, q1=q)
    grid = default_alpha_grid()

    from austen import core
    times = {}
    original = core.kernels
    try:
        for name, mod in backends.items():
            core.kernels = mod
            times[name] = _time(
                lambda: bias_contour(0.5, frame, alpha_grid=grid),
                max(2, args.repeats // 2))
    finally:
        core.kernels = original
    row = (f"{'bias_contour (n/10 x 199)':<28}"
           + "".join(f"{times[b] * 1e3:>10.2f}ms" for b in backends))
    if len(times) == 2:
        row += f"{times['python'] / times['compiled']:>9.1f}x"
    print(row)


if __name__ == "__main__":
    main()
