"""Compare the compiled chain kernel with the numpy fallback.

Usage: ``python3 benchmarks/bench_chain.py [--slices 8 12 16] [--repeat 5]``

Each case applies a random unitary to every slice of a product state, the
inner loop of the brute-force chain check.
"""
import argparse
import timeit

import numpy as np

from repeated_qsde import _kernels


def sweep(kernel, state, op, dh, dn, slices):
    for slot in range(1, slices + 1):
        kernel(state, op, dh, dn, slices, slot)


def bench(dh, dn, slices, repeat, rng):
    size = dh * dn ** slices
    state = rng.normal(size=size) + 1j * rng.normal(size=size)
    q, _ = np.linalg.qr(rng.normal(size=(dh * dn,) * 2) + 1j * rng.normal(size=(dh * dn,) * 2))
    op = np.ascontiguousarray(q)
    a, b = state.copy(), state.copy()
    sweep(_kernels.apply_local_py, a, op, dh, dn, slices)
    if _kernels.apply_local_compiled is not None:
        sweep(_kernels.apply_local_compiled, b, op, dh, dn, slices)
        assert np.allclose(a, b, atol=1e-10 * np.linalg.norm(a)), "backends disagree"
    times = {"python": min(timeit.repeat(lambda: sweep(_kernels.apply_local_py, a, op, dh, dn, slices),
                                         number=1, repeat=repeat))}
    if _kernels.apply_local_compiled is not None:
        times["compiled"] = min(timeit.repeat(
            lambda: sweep(_kernels.apply_local_compiled, b, op, dh, dn, slices), number=1, repeat=repeat))
    return size, times


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--slices", type=int, nargs="+", default=[8, 12, 16])
    parser.add_argument("--dh", type=int, default=2)
    parser.add_argument("--dn", type=int, default=2)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"backend in use: {_kernels.BACKEND}")
    print(f"{'slices':>6} {'amplitudes':>11} {'python [s]':>11} {'compiled [s]':>13} {'speedup':>8}")
    for m in args.slices:
        size, t = bench(args.dh, args.dn, m, args.repeat, rng)
        comp = t.get("compiled")
        speed = f"{t['python'] / comp:8.2f}" if comp else "     n/a"
        comp_s = f"{comp:13.5f}" if comp else "          n/a"
        print(f"{m:>6} {size:>11} {t['python']:11.5f} {comp_s} {speed}")


if __name__ == "__main__":
    main()
