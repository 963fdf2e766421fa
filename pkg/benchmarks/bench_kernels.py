"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Both backends are imported directly, so the ADVPATH_PURE switch is ignored.
Outputs are checked for bit-equality before timings are printed.
"""
import argparse
import timeit

import numpy as np

from advpath import _fallback

try:
    from advpath import _kernels
except ImportError:
    _kernels = None


def sweep_case(size, density, seed):
    rng = np.random.default_rng(seed)
    free = (rng.random((size, size)) >= density).astype(np.uint8)
    free[0, 0] = free[size - 1, size - 1] = 1
    return free


def run_sweeps(mod, free, max_sweeps, tol):
    values = np.full(free.shape, -np.inf)
    values[-1, -1] = 10.0
    n = mod.value_sweeps(free, values, free.shape[1] - 1, free.shape[0] - 1,
                         -1.0, 10.0, max_sweeps, tol)
    return values, n


def svm_case(n, dim, seed):
    rng = np.random.default_rng(seed)
    X = (rng.random((n, dim)) < 0.05).astype(np.float64)
    w = rng.normal(size=dim)
    s = X @ w
    y = np.where(s > np.median(s), 1.0, -1.0)
    return np.ascontiguousarray(X @ X.T), y


def bench(label, fn, repeat):
    t = min(timeit.repeat(fn, number=1, repeat=repeat))
    print(f"  {label:<8} {t * 1e3:10.2f} ms")
    return t


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels not built; only the fallback is available")

    cases = [
        ("value_sweeps 28x28 exact", lambda m: run_sweeps(m, sweep_case(28, 0.2, 0), 785, 1e-9)),
        ("value_sweeps 28x28 limited 20", lambda m: run_sweeps(m, sweep_case(28, 0.2, 0), 20, -1.0)),
        ("value_sweeps 64x64 exact", lambda m: run_sweeps(m, sweep_case(64, 0.2, 1), 4097, 1e-9)),
    ]
    for n in (200, 600):
        K, y = svm_case(n, 2 * 28 * 28, n)
        cases.append((f"smo_solve n={n}", lambda m, K=K, y=y: m.smo_solve(K, y, 1.0, 1e-3, 50 * len(y))))

    for name, case in cases:
        print(name)
        t_py = bench("python", lambda: case(_fallback), args.repeat)
        if _kernels is None:
            continue
        ref, out = case(_fallback), case(_kernels)
        same = all(np.array_equal(np.asarray(a), np.asarray(b)) for a, b in zip(ref, out))
        t_c = bench("cython", lambda: case(_kernels), args.repeat)
        print(f"  speedup  {t_py / t_c:10.1f}x   identical={same}")


if __name__ == "__main__":
    main()
