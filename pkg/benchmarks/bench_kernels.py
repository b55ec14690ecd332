"""Compare the numba and numpy kernels on realistic sizes.

    python benchmarks/bench_kernels.py [--iterations 800] [--repeat 3]

Times the spectral FSE loop on a 48x48x3 volume (64x64x16 grid) and a
quarter-pel SSE search map, and checks both backends give the same answer.
The FSE loop updates its input spectrum in place, so every run gets a copy.
"""

import argparse
import time

import numpy as np

from mcfse import _accel, kernels
from mcfse.error_model import LossBlock
from mcfse.fse_core import ExtrapolationVolume, build_weight_volume, working_grid
from mcfse.motion import decision_area, upsample_plane


def best_time(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - start)
    return min(times), out


def fse_inputs(seed=0):
    rng = np.random.default_rng(seed)
    shape = (3, 48, 48)
    f = rng.uniform(0, 255, shape)
    support = np.ones(shape, bool)
    support[2, 16:32, 16:32] = False
    vol = ExtrapolationVolume(f, support, np.zeros(shape, bool), 0, 0, 0, 16, 2, 0, 16, 16)
    w = build_weight_volume(vol).w
    grid = working_grid(shape)
    R = np.fft.fftn(w * f, s=grid, axes=(0, 1, 2))
    Wf = np.fft.fftn(w, s=grid, axes=(0, 1, 2))
    return R, Wf, float(w.sum())


def sse_inputs(seed=0, D=4, d_max=16):
    rng = np.random.default_rng(seed)
    frame = rng.uniform(0, 255, (144, 176))
    current = rng.uniform(0, 255, (144, 176))
    valid = np.ones(frame.shape, bool)
    block = LossBlock(80, 64, 16, 16, 0)
    valid[64:80, 80:96] = False
    area = decision_area(valid, block, 4)
    up = upsample_plane(frame, D)
    radius = D * d_max
    refp = up.padded(radius)
    return refp, D * area.ys, D * area.xs, current[area.ys, area.xs], radius


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--iterations", type=int, default=800)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    if not _accel.HAS_NUMBA:
        print("numba is not installed; only the numpy backend can run")

    R, Wf, S = fse_inputs()
    refp, ys, xs, vals, radius = sse_inputs()
    rows = []
    results = {}
    for backend in ("numba", "numpy"):
        use = backend == "numba"
        if use and not _accel.HAS_NUMBA:
            continue
        if use:  # compile outside the timed region
            kernels.fse_iterate(R.copy(), Wf, S, 2, 0.7, use_numba=True)
            kernels.sse_map(refp, ys, xs, vals, radius, use_numba=True)
        t_fse, fse = best_time(lambda: kernels.fse_iterate(R.copy(), Wf, S, args.iterations, 0.7, use_numba=use), args.repeat)
        t_sse, sse = best_time(lambda: kernels.sse_map(refp, ys, xs, vals, radius, use_numba=use), args.repeat)
        results[backend] = (fse, sse)
        rows.append((backend, t_fse, t_sse))

    print(f"{'backend':<8} {'fse_iterate [s]':>16} {'sse_map [s]':>12}")
    for backend, t_fse, t_sse in rows:
        print(f"{backend:<8} {t_fse:>16.3f} {t_sse:>12.3f}")
    if len(rows) == 2:
        (_, a_fse, a_sse), (_, b_fse, b_sse) = rows
        print(f"speed-up  {b_fse / a_fse:>15.1f}x {b_sse / a_sse:>11.1f}x")
        (ca, sa, _), sse_a = results["numba"]
        (cb, sb, _), sse_b = results["numpy"]
        print(f"same selections: {np.array_equal(sa, sb)}, "
              f"max coefficient diff: {np.abs(ca - cb).max():.1e}, "
              f"sse maps identical: {np.array_equal(sse_a, sse_b)}")


if __name__ == "__main__":
    main()
