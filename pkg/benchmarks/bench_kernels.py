"""Timing of the compiled kernels against the NumPy reference.

Run with ``python3 benchmarks/bench_kernels.py [--repeat R]``.  Each kernel
is called on the same inputs with both backends; the table reports the best
of ``R`` wall-clock timings and the largest difference between the outputs.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from zklab import kernels


def _slice_case(rng, n=200_000):
    y = rng.uniform(-30, 30, n)
    lo = rng.uniform(-20, 0, n)
    hi = lo + rng.uniform(0, 30, n)
    args = (1.3, 4.0, 2.5, 8.0, y, lo, hi)

    def call(mod):
        out = np.empty(n)
        mod.slice_lengths(*args, out)
        return out

    return call


def _mp_case(rng, S=300, M=64, Nx=64, Ny=32):
    def support():
        j = rng.integers(-Nx // 2, Nx // 2, S).astype(np.int_)
        q = rng.integers(-Ny // 2, Ny // 2, S).astype(np.int_)
        A = np.ascontiguousarray(rng.normal(size=(S, M)) + 1j * rng.normal(size=(S, M)))
        return j, q, rng.normal(size=S), A

    ja, qa, Da, Av = support()
    jb, qb, Db, Bv = support()

    def call(mod):
        out = np.zeros((Nx, Ny, M), dtype=complex)
        mod.mp_pair_sum(ja, qa, Da, Av, jb, qb, Db, Bv, Nx, Ny, 0.5, out)
        return out

    return call


def _grouped_case(rng, groups=8, size=600):
    starts = np.arange(0, (groups + 1) * size, size, dtype=np.int_)
    theta = np.concatenate([np.sort(rng.uniform(-5, 5, size)) for _ in range(groups)])
    z = rng.normal(size=theta.size) + 1j * rng.normal(size=theta.size)
    step, dmax = 1e-3, 4.0
    ktab = np.exp(-np.arange(-dmax, dmax + step / 2, step) ** 2)

    def call(mod):
        return np.array(mod.grouped_kernel_sum(starts, z, theta, ktab, dmax, step))

    return call


CASES = {"slice_lengths": _slice_case, "mp_pair_sum": _mp_case,
         "grouped_kernel_sum": _grouped_case}


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    mods = kernels.backends()
    if "cython" not in mods:
        print("compiled extension not available; timing the NumPy backend only")
    print(f"{'kernel':<20}" + "".join(f"{name + ' [s]':>14}" for name in mods)
          + f"{'speed-up':>10}{'max diff':>11}")
    for name, make in CASES.items():
        call = make(np.random.default_rng(0))
        times, outs = {}, {}
        for bname, mod in mods.items():
            outs[bname] = call(mod)
            times[bname] = min(timeit.repeat(lambda: call(mod), number=1, repeat=args.repeat))
        line = f"{name:<20}" + "".join(f"{times[b]:>14.4f}" for b in mods)
        if "cython" in mods:
            diff = float(np.max(np.abs(outs["cython"] - outs["python"])))
            line += f"{times['python'] / times['cython']:>10.1f}{diff:>11.1e}"
        print(line)


if __name__ == "__main__":
    main()
