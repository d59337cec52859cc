"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints per-call times and the maximum relative disagreement.
"""
import argparse
import timeit

import numpy as np

from fracnls import _kernels

ARGS = (1.0, 2.5, 1.0, 2.5, 1.0, 1.2, 1.2)


def fields(shape, seed=0):
    rng = np.random.default_rng(seed)
    u1 = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    u2 = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return u1, u2


def cases(shape):
    u1, u2 = fields(shape)
    yield "nonlinear_coefficients", (u1, u2, *ARGS)
    yield "nonlinear_phase_step", (u1, u2, *ARGS, 1e-3)
    yield "power_sums", (u1, u2, 2.5, 2.5, 1.2, 1.2)


def rel_diff(a, b):
    a = [np.asarray(x) for x in (a if isinstance(a, tuple) else (a,))]
    b = [np.asarray(x) for x in (b if isinstance(b, tuple) else (b,))]
    return max(float(np.max(np.abs(x - y)) / max(np.max(np.abs(y)), 1e-300)) for x, y in zip(a, b))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()
    back = _kernels.backends()
    if "cython" not in back:
        print("compiled backend not built; only the numpy fallback is available")
    print(f"{'kernel':26s} {'size':>10s} " + " ".join(f"{k + ' ms':>12s}" for k in back) + f" {'speedup':>8s} {'rel diff':>9s}")
    for shape in ((64, 64), (128, 128), (256, 256)):
        for name, a in cases(shape):
            times, outs = {}, {}
            for key, mod in back.items():
                fn = getattr(mod, name)
                outs[key] = fn(*a)
                times[key] = timeit.timeit(lambda: fn(*a), number=args.repeat) / args.repeat * 1e3
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            diff = rel_diff(outs["cython"], outs["python"]) if "cython" in outs else 0.0
            cols = " ".join(f"{times[k]:12.3f}" for k in back)
            print(f"{name:26s} {'x'.join(map(str, shape)):>10s} {cols} {speed:8.2f} {diff:9.1e}")
    for n in (128, 512):
        u, _ = fields((n,))
        kernel = 1.0 / np.minimum(np.arange(n), n - np.arange(n)).clip(1) ** 1.5
        times, outs = {}, {}
        for key, mod in back.items():
            fn = mod.gagliardo_double_sum_1d
            outs[key] = fn(u, kernel)
            times[key] = timeit.timeit(lambda: fn(u, kernel), number=max(1, args.repeat // 4)) / max(1, args.repeat // 4) * 1e3
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        diff = rel_diff(outs["cython"], outs["python"]) if "cython" in outs else 0.0
        cols = " ".join(f"{times[k]:12.3f}" for k in back)
        print(f"{'gagliardo_double_sum_1d':26s} {n:>10d} {cols} {speed:8.2f} {diff:9.1e}")


if __name__ == "__main__":
    main()
