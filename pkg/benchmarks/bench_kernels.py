"""Timing comparison of the numba and pure-numpy kernel backends.

Run:  python benchmarks/bench_kernels.py
The package selects the backend at import via IFSLAB_NO_NUMBA; this script
imports both implementations directly and times representative workloads.
"""

import time

import numpy as np

from ifslab import _kernels_numpy as knp

try:
    from ifslab import _kernels_numba as knb
except ImportError:
    knb = None


def timeit(fn, *args, repeat=3):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    rng = np.random.default_rng(1)
    S, n, m, k = 10_000, 400, 2, 10
    words = rng.integers(0, m, size=(S, n)).astype(np.int64)
    logr = np.log(np.array([0.5, 0.25]))
    logp = np.log(np.array([0.618, 0.382]))
    rlo, rhi = k * (-1.1 - 0.3), k * (-1.1 + 0.3)
    plo, phi = k * (-0.66 - 0.3), k * (-0.66 + 0.3)

    # level-set style workload: all 2^16 binary words, extension scan + packing
    lwords = ((np.arange(1 << 16)[:, None] >> np.arange(15, -1, -1)) & 1).astype(np.int64)
    lwid = np.repeat(np.arange(1 << 16, dtype=np.int64), 2)
    lls = np.tile(np.array([0, 8], dtype=np.int64), 1 << 16)
    lratios = np.array([1 / 3, 1 / 3])
    lpre = np.array([0], dtype=np.int64)

    def levelset_steps(im):
        M, ok = im.extension_scan_batch(lwords, lwid, lls, lratios, 2e-4, 200)
        return im.assemble_cylinders(lwords, lwid, lls, M, lpre, 2, 1)

    jobs = [
        ("distinct_count_batch (1e4 x 400)",
         lambda im: im.distinct_count_batch(words, k, m)),
        ("collision_stat_batch (1e4 x 400)",
         lambda im: im.collision_stat_batch(words, k, m)),
        ("good_windows_batch  (1e4 x 400)",
         lambda im: im.good_windows_batch(words, k, m, logr, logp,
                                          rlo, rhi, plo, phi, n // 10, n // 20, True)),
        ("bad_window_count    (1e4 x 400)",
         lambda im: im.bad_window_count_batch(words, k, logr, logp,
                                              rlo, rhi, plo, phi)),
        ("extension+assemble  (2^17 pairs)", levelset_steps),
    ]

    if knb is not None:
        for name, job in jobs:
            job(knb)  # compile before timing

    print(f"{'kernel':<36} {'numpy':>9} {'numba':>9} {'speedup':>8}")
    for name, job in jobs:
        t_np, out_np = timeit(job, knp)
        if knb is None:
            print(f"{name:<36} {t_np:9.4f} {'n/a':>9} {'n/a':>8}")
            continue
        t_nb, out_nb = timeit(job, knb)
        a = out_np[0] if isinstance(out_np, tuple) else out_np
        b = out_nb[0] if isinstance(out_nb, tuple) else out_nb
        tag = "" if np.array_equal(a, b) else "  (MISMATCH)"
        print(f"{name:<36} {t_np:9.4f} {t_nb:9.4f} {t_np / t_nb:8.2f}x{tag}")


if __name__ == "__main__":
    main()
