"""Time the compiled kernels against the numpy fallback.

Usage: ``python benchmarks/bench_kernels.py [--repeat N]``
"""

import argparse
import timeit

import numpy as np

from pathvisc import _backend
from pathvisc import geometry as G


def cases():
    m = G.ConformalMetric(G.ScalarField.sine(2, 0.2))
    params = m.kernel_params
    x, p = np.array([0.3, 1.0]), np.array([0.5, -0.4])
    rng = np.random.default_rng(0)
    u1 = np.sin(np.linspace(0, 2 * np.pi, 400, endpoint=False))
    g1 = np.ones(400)
    u2 = rng.standard_normal((64, 64))
    g11 = np.ones((64, 64))
    g12 = np.zeros((64, 64))
    h1 = 2 * np.pi / 400
    return {
        "diag_flow (256 steps, tangent)": lambda k: k.diag_flow(*params, x, p, 256, True),
        "lf_advance_1d (400 nodes, t=0.2)": lambda k: k.lf_advance_1d(u1, g1, 1.0, 0.2, h1, 0.9, 10**7),
        "lf_advance_2d (64x64, t=0.05)": lambda k: k.lf_advance_2d(u2, g11, g12, g11, 1.0, 0.05,
                                                                  0.1, 0.9, 10**7),
        "hopf_lax_1d (400 nodes)": lambda k: k.hopf_lax_1d(u1, h1, 2 * np.pi, 0.2),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    fb, cc = _backend.fallback, _backend.compiled
    print(f"{'kernel':<36} {'numpy [ms]':>12} {'compiled [ms]':>14} {'speedup':>9}")
    for name, fn in cases().items():
        t_fb = min(timeit.repeat(lambda: fn(fb), number=1, repeat=args.repeat)) * 1e3
        if cc is None:
            print(f"{name:<36} {t_fb:>12.3f} {'n/a':>14} {'':>9}")
            continue
        t_cc = min(timeit.repeat(lambda: fn(cc), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:<36} {t_fb:>12.3f} {t_cc:>14.3f} {t_fb / t_cc:>8.1f}x")


if __name__ == "__main__":
    main()
