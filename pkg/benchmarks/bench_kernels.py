"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--out bench.csv] [--repeat 5]

Each kernel runs on the shapes it sees in the default experiments (Student-t:
p=10, batch 500; sphere classifier: d=20, batch 5000). Reports the best of
``repeat`` timings per backend and the speed ratio.
"""

import argparse
import csv
import sys
import timeit

import numpy as np

from rsvrc import kernels


def cases(rng):
    A10 = rng.standard_normal((10_000, 10))
    A20 = rng.uniform(-1, 1, (100_000, 20))
    i500 = rng.integers(0, 10_000, 500)
    i5000 = rng.integers(0, 100_000, 5000)
    M = rng.standard_normal((10, 10))
    M = M + M.T
    Ms = np.stack([M] * 55)
    W = rng.standard_normal((500, 55))
    x = rng.standard_normal(20)
    labels = np.where(rng.random(100_000) < 0.5, -1.0, 1.0)
    H = rng.standard_normal((55, 55))
    H = (H + H.T) / 10
    g = rng.standard_normal(55) * 1e-2
    return {
        "quad_forms (b=500, p=10)": lambda K: K.quad_forms(A10, i500, M),
        "quad_forms_multi (b=500, p=10, k=55)": lambda K: K.quad_forms_multi(A10, i500, Ms),
        "weighted_gram (N=10^4, p=10)": lambda K: K.weighted_gram(A10, None, A10[:, 0]),
        "weighted_gram_multi (b=500, k=55)": lambda K: K.weighted_gram_multi(A10, i500, W),
        "margins (b=5000, d=20)": lambda K: K.margins(A20, i5000, x, labels),
        "weighted_rowsum (N=10^5, d=20)": lambda K: K.weighted_rowsum(A20, None, labels),
        "logistic_terms (N=10^5)": lambda K: K.logistic_terms(A20[:, 0] * 5),
        "cubic_gd (k=55, 200 steps)": lambda K: K.cubic_gd(g, H, 1.0, 0.05, 0.0, -1.0, 200, np.zeros(55)),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="bench_kernels.csv")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled core not built; only the fallback can be timed", file=sys.stderr)
    rows = []
    for name, fn in cases(np.random.default_rng(0)).items():
        row = {"kernel": name}
        for b in backends:
            mod = kernels.get_module(b)
            n = max(1, int(0.2 / max(timeit.timeit(lambda: fn(mod), number=1), 1e-6)))
            best = min(timeit.repeat(lambda: fn(mod), number=n, repeat=args.repeat)) / n
            row[f"{b}_us"] = best * 1e6
        if "cython" in backends:
            row["speedup"] = row["python_us"] / row["cython_us"]
        rows.append(row)
        print(f"{name:40s} " + "  ".join(f"{k}={v:10.1f}" for k, v in row.items() if k != "kernel"))
    cols = ["kernel"] + [f"{b}_us" for b in backends] + (["speedup"] if "cython" in backends else [])
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, cols)
        w.writeheader()
        for r in rows:
            w.writerow({k: (f"{v:.3f}" if isinstance(v, float) else v) for k, v in r.items()})
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
