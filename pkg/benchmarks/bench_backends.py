"""Compare the compiled and numpy kernels on the RANSAC hot loop.

    python3 benchmarks/bench_backends.py [--repeat 5] [--iters 1000]

Prints the best-of-N wall time per backend for the raw consensus kernel
and for a full 64x64 ransac_segment call, and checks both agree.
"""
import argparse
import timeit

import numpy as np

from robustseg import _backend
from robustseg.basis import make_dct_basis
from robustseg.fitting import fit_minimal_batch
from robustseg.ransac import RansacParams, draw_samples, ransac_segment
from robustseg.synthgen import outlier_block


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--iters", type=int, default=1000)
    args = ap.parse_args()

    img, _, _ = outlier_block(0)
    basis = make_dct_basis(64, 10)
    design = np.ascontiguousarray(basis.design)
    f = np.ascontiguousarray(img.ravel())
    eps = 1 + 0.22 * np.ptp(f)
    samples = draw_samples(f.size, basis.k, args.iters, np.random.default_rng(0))
    alphas, valid = fit_minimal_batch(design, f, samples)
    valid = valid.view(np.uint8)
    params = RansacParams(max_iters=args.iters)

    names = ["python"]
    try:
        _backend.get_kernels("cython")
        names.append("cython")
    except ImportError:
        print("compiled extension not built; timing the numpy fallback only")

    rows, results = [], {}
    for name in names:
        kern = _backend.get_kernels(name)
        t_kernel = min(timeit.repeat(lambda: kern.consensus_counts(design, f, alphas, eps),
                                     number=1, repeat=args.repeat))
        t_best = min(timeit.repeat(lambda: kern.best_consensus(design, f, alphas, valid, eps),
                                   number=1, repeat=args.repeat))
        saved = _backend.kernels
        _backend.kernels = kern
        try:
            t_full = min(timeit.repeat(lambda: ransac_segment(img, basis, params), number=1, repeat=args.repeat))
            results[name] = ransac_segment(img, basis, params)
        finally:
            _backend.kernels = saved
        rows.append((name, t_kernel, t_best, t_full))

    print(f"{args.iters} candidate models, 64x64 block, K=10, best of {args.repeat}")
    print(f"{'backend':<8} {'all counts':>12} {'best (pruned)':>14} {'ransac_segment':>15}")
    for name, a, b, c in rows:
        print(f"{name:<8} {a * 1e3:10.1f} ms {b * 1e3:12.1f} ms {c * 1e3:13.1f} ms")
    if len(rows) == 2:
        (_, pa, pb, pc), (_, ca, cb, cc) = rows
        print(f"{'speedup':<8} {pa / ca:11.1f}x {pb / cb:13.1f}x {pc / cc:14.1f}x")
        same = np.array_equal(results["python"].inlier_mask, results["cython"].inlier_mask)
        print(f"masks identical: {same}")


if __name__ == "__main__":
    main()
