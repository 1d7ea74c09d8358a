"""Numba kernels against their pure-numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--n 32] [--repeat 5]

Both variants are called directly, so one process covers both backends
(``MICROPOLAR_DISABLE_NUMBA`` only changes which one the package uses).
Prints best-of-``repeat`` wall times and the max difference between outputs.
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from micropolar import _kernels
from micropolar._accel import HAVE_NUMBA
from micropolar.datagen import DataSpec, make_torus_field
from micropolar.linear import MaterialParams
from micropolar.solver import SolverConfig, _operators, _rhs_arrays
from micropolar.spectral import GridSpec


def _best(fn, repeat: int) -> float:
    fn()  # warm-up (includes jit compilation)
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def _max_diff(a, b) -> float:
    return max(float(np.max(np.abs(x - y))) for x, y in zip(np.atleast_1d(a), np.atleast_1d(b)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        raise SystemExit("numba is disabled (MICROPOLAR_DISABLE_NUMBA); nothing to compare")

    g = GridSpec(args.n)
    p = MaterialParams(0.05, 0.05, 0.05, 0.05)
    R = np.ascontiguousarray(g.xi_eff_sq.ravel())
    k = tuple(np.ascontiguousarray(x.ravel()) for x in g.xi_eff)
    z = make_torus_field(g, DataSpec(kind="torus-random", q=2, sigma=3, w_weight=1.0, seed=1))
    u = np.ascontiguousarray(z.u.data.reshape(3, -1))
    w = np.ascontiguousarray(z.w.data.reshape(3, -1))
    comps = _kernels._symbol_components_numpy(R, 1e-3, *p.as_tuple())
    rng = np.random.default_rng(0)
    a = rng.standard_normal((3, R.size))
    gu = rng.standard_normal((3, 3, R.size))
    gw = rng.standard_normal((3, 3, R.size))

    cases = [
        ("symbol_components", lambda: _kernels._symbol_components_numba(R, 1e-3, *p.as_tuple()),
         lambda: _kernels._symbol_components_numpy(R, 1e-3, *p.as_tuple())),
        ("apply_symbol", lambda: _kernels._apply_symbol_numba(u, w, *k, comps),
         lambda: _kernels._apply_symbol_numpy(u, w, *k, comps)),
        ("advect", lambda: _kernels._advect_numba(a, gu, gw),
         lambda: _kernels._advect_numpy(a, gu, gw)),
    ]
    print(f"grid n={args.n} ({R.size} modes), best of {args.repeat}")
    print(f"{'kernel':<20}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}{'max diff':>12}")
    for name, fast, slow in cases:
        tf, ts = _best(fast, args.repeat), _best(slow, args.repeat)
        diff = _max_diff(fast(), slow())
        print(f"{name:<20}{tf * 1e3:>12.3f}{ts * 1e3:>12.3f}{ts / tf:>10.2f}{diff:>12.2e}")

    cfg = SolverConfig(g, p, dt=1e-3, t_end=1e-3)
    ops = _operators(cfg)
    uh, wh = ops.half(z.u.data), ops.half(z.w.data)
    t_rhs = _best(lambda: _rhs_arrays(ops, uh, wh), args.repeat)
    print(f"{'full RHS (active)':<20}{t_rhs * 1e3:>12.3f}")


if __name__ == "__main__":
    main()
