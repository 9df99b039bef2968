"""Time the hot kernels under the numba and pure-numpy backends.

Each backend runs in its own interpreter because the choice is fixed at import
time by ``FILTERCAST_DISABLE_NUMBA``.

    python benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import json
import os
import subprocess
import sys
import time

CHILD = r"""
import json, sys, time
import numpy as np
from filtercast import arima, metrics, rnn, backend_name

repeat = int(sys.argv[1])
rng = np.random.default_rng(0)
x = rng.normal(size=365)
ar1 = np.zeros(365)
for t in range(1, 365):
    ar1[t] = 0.7 * ar1[t - 1] + x[t]
data = rnn.make_windows(ar1, window=7)
spec = rnn.RnnSpec(epochs=50, patience=50)

def bench(fn):
    fn()  # warm-up, includes compilation
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best

out = {"backend": backend_name(), "seconds": {
    "pattern_codes_d5_x10k": bench(lambda: metrics.permutation_entropy(rng.normal(size=10_000), 5)),
    "css_residuals_arma22": bench(lambda: arima.css_residuals(ar1, 0.0, np.array([0.5, 0.1]), np.array([0.3, -0.2]))),
    "fit_css_arma22": bench(lambda: arima.fit_css(ar1, (2, 0, 2))),
    "grid_search_525": bench(lambda: arima.grid_search(ar1[:120])),
    "lstm_train_50_epochs": bench(lambda: rnn.train(spec, data)),
}}
print(json.dumps(out))
"""


def run(backend_off: bool, repeat: int) -> dict:
    env = dict(os.environ, FILTERCAST_DISABLE_NUMBA="1" if backend_off else "0")
    proc = subprocess.run([sys.executable, "-c", CHILD, str(repeat)], env=env, check=True,
                          capture_output=True, text=True)
    return json.loads(proc.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)
    t0 = time.perf_counter()
    fast = run(False, args.repeat)
    slow = run(True, args.repeat)
    print(f"{'kernel':28s} {fast['backend']:>12s} {slow['backend']:>12s} {'speedup':>8s}")
    for name, t_fast in fast["seconds"].items():
        t_slow = slow["seconds"][name]
        print(f"{name:28s} {t_fast:12.5f} {t_slow:12.5f} {t_slow / t_fast:8.1f}x")
    print(f"total wall time {time.perf_counter() - t0:.1f}s")


if __name__ == "__main__":
    main()
