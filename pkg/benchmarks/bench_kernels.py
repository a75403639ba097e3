"""Compare the numba and pure-numpy kernels.

Times the two hot kernels on typical inputs (a 1250-day window for the
structure-function moments, a 65536-day series for the lag autocovariance)
and a small null-band run end to end under each backend.

Run: python3 benchmarks/bench_kernels.py --repeats 200 --sims 200
"""
import argparse
import os
import subprocess
import sys
import time

import numpy as np

from mrwtest import kernels

BAND_SNIPPET = """
import time
from mrwtest.mctest import mc_band
from mrwtest.synth import MrwParams
mc_band(MrwParams(0.2, 1250.0), 100, 1250, seed=1)  # warm-up and compilation
t0 = time.perf_counter()
mc_band(MrwParams(0.2, 1250.0), {sims}, 1250, seed=0)
print(time.perf_counter() - t0)
"""


def best_of(func, args, repeats):
    func(*args)  # warm-up (triggers compilation for numba)
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        func(*args)
        times.append(time.perf_counter() - t0)
    return min(times), float(np.median(times))


def band_seconds(flag, sims):
    env = dict(os.environ, MRWTEST_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", BAND_SNIPPET.format(sims=sims)], env=env,
                         capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeats", type=int, default=200)
    ap.add_argument("--sims", type=int, default=200, help="null simulations for the end-to-end timing")
    ap.add_argument("--skip-band", action="store_true", help="only time the kernels")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    x = rng.standard_normal(1250)
    cum = np.concatenate(([0.0], np.cumsum(x)))
    taus = np.arange(1, 31)
    qs = np.array([1.0, 2.0])
    w = np.exp(-np.arange(x.size) / 415.0)
    lv = rng.standard_normal(2 ** 16)
    lv -= lv.mean()

    cases = [
        ("abs_moments  n=1250 tau<=30 q={1,2}", kernels.abs_moments_numpy,
         kernels.abs_moments_numba, (cum, taus, qs, w)),
        ("lag_autocov  n=65536 h<=100", kernels.lag_autocov_numpy,
         kernels.lag_autocov_numba, (lv, 100)),
    ]
    print(f"numba available: {kernels.HAVE_NUMBA}; active backend: {kernels.backend()}")
    for name, f_np, f_nb, a in cases:
        t_np = best_of(f_np, a, args.repeats)
        line = f"{name}: numpy {t_np[0] * 1e6:9.1f} us"
        if f_nb is not None:
            t_nb = best_of(f_nb, a, args.repeats)
            line += f" | numba {t_nb[0] * 1e6:9.1f} us | speedup {t_np[0] / t_nb[0]:5.2f}x"
        print(line)

    if not args.skip_band:
        t_np = band_seconds("0", args.sims)
        line = f"mc_band {args.sims} sims x 1250: numpy {t_np:.2f} s"
        if kernels.HAVE_NUMBA:
            t_nb = band_seconds("1", args.sims)
            line += f" | numba {t_nb:.2f} s | speedup {t_np / t_nb:.2f}x"
        print(line)


if __name__ == "__main__":
    main()
