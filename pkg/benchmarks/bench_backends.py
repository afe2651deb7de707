"""Compare the compiled kernels against the pure-numpy fallback.

Times each hot kernel head to head at training-realistic shapes, then an
end-to-end training run per backend in a subprocess (backend choice is
fixed at import time, so the in-process part imports both kernel modules
directly and the end-to-end part goes through FDD_BACKEND).

Usage: python3 benchmarks/bench_backends.py [--repeats N] [--skip-train]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from semifdd import _kernels_py

try:
    from semifdd import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

BATCH = 128
TRAIN_SCRIPT = """
import time
import numpy as np
from semifdd import backend, data, semigan

src = data.gen_synthetic_chiller(40, seed=11)
rng = np.random.default_rng(0)
idx = rng.permutation(src.n_rows)
labeled = src.take(idx[:40])
unlabeled = src.take(idx[40:2040]).without_labels()
cfg = semigan.SemiGanConfig(iterations=5, seed=3)
start = time.perf_counter()
model = semigan.train(cfg, labeled, unlabeled)
print(f"{backend.name} {time.perf_counter() - start:.3f}")
"""


def best_time(fn, repeats, inner=10):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        for _ in range(inner):
            fn()
        best = min(best, (time.perf_counter() - start) / inner)
    return best


def kernel_cases(rng):
    """(name, callable factory) pairs at the default network's shapes."""
    x = rng.normal(size=(BATCH, 61))
    w = rng.normal(size=(61, 32))
    b = rng.normal(size=32)
    d = rng.normal(size=(BATCH, 32))
    z = rng.normal(size=(BATCH, 64))
    dz = rng.normal(size=(BATCH, 64))
    n_params = 8 * 64 + 64 * 64 + 64 * 61 + 64 + 64 + 61
    params = rng.normal(size=n_params)
    grads = rng.normal(size=n_params)
    m = np.zeros(n_params)
    v = np.zeros(n_params)

    def adam(k):
        return lambda: k.adam_update(params, grads, m, v, 3, 2e-3, 0.5, 0.999, 1e-8)

    return [
        ("affine_forward 128x61x32", lambda k: lambda: k.affine_forward(x, w, b)),
        ("affine_backward 128x61x32", lambda k: lambda: k.affine_backward(x, w, d)),
        ("leaky_relu forward 128x64", lambda k: lambda: k.act_forward(
            _kernels_py.ACT_LEAKY_RELU, 0.2, z)),
        ("leaky_relu backward 128x64", lambda k: lambda: k.act_backward(
            _kernels_py.ACT_LEAKY_RELU, 0.2, z, dz)),
        ("tanh forward 128x64", lambda k: lambda: k.act_forward(
            _kernels_py.ACT_TANH, 0.0, z)),
        (f"adam_update {n_params} params", adam),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeats", type=int, default=7)
    parser.add_argument("--skip-train", action="store_true",
                        help="skip the end-to-end training comparison")
    args = parser.parse_args()

    if _kernels_c is None:
        print("compiled kernels unavailable; showing numpy fallback only")

    rng = np.random.default_rng(20240818)
    header = f"{'kernel':<28} {'numpy':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for name, make in kernel_cases(rng):
        t_py = best_time(make(_kernels_py), args.repeats)
        if _kernels_c is None:
            print(f"{name:<28} {t_py * 1e6:>8.1f}us {'n/a':>10} {'':>8}")
            continue
        t_c = best_time(make(_kernels_c), args.repeats)
        print(
            f"{name:<28} {t_py * 1e6:>8.1f}us {t_c * 1e6:>8.1f}us "
            f"{t_py / t_c:>7.2f}x"
        )

    if args.skip_train or _kernels_c is None:
        return
    print()
    times = {}
    for forced in ("python", "compiled"):
        env = dict(os.environ, FDD_BACKEND=forced)
        out = subprocess.run(
            [sys.executable, "-c", TRAIN_SCRIPT],
            capture_output=True, text=True, env=env, check=True,
        )
        name, seconds = out.stdout.split()
        times[name] = float(seconds)
        print(f"training (5 iterations, {name} backend): {float(seconds):.3f}s")
    print(f"end-to-end speedup: {times['python'] / times['compiled']:.2f}x")


if __name__ == "__main__":
    main()
