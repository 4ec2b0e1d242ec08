"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Times the raw kernels on batch-reactor sized inputs, then a full shipped
scenario under each backend (each in its own interpreter, since the backend
is picked at import).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from qstc import _kernels_py, cli

try:
    from qstc import _kernels as _kernels_cy
except ImportError:
    _kernels_cy = None

RUN = ("import sys, time; from qstc import config, simkernel, kernels; "
       "sc = config.build_scenario(config.load_config(sys.argv[1])); simkernel.run_closed_loop(sc); "
       "t = time.perf_counter(); [simkernel.run_closed_loop(sc) for _ in range(int(sys.argv[2]))]; "
       "print(kernels.BACKEND, (time.perf_counter() - t) / int(sys.argv[2]))")


def kernel_inputs(rng):
    c = lambda a: np.ascontiguousarray(a, dtype=float)
    n, m, p, T = 4, 2, 2, 20
    return dict(
        A=c(np.eye(n) + 0.01 * rng.normal(size=(n, n))), B=c(rng.normal(size=(n, m)) * 0.01),
        K=c(rng.normal(size=(m, n))), L=c(rng.normal(size=(n, p)) * 0.02), C=c(rng.normal(size=(p, n))),
        x=c(rng.normal(size=n)), xh=c(rng.normal(size=n)), q=c(rng.normal(size=p)),
        coefE=c(np.linspace(0.01, 0.3, T + 1)), Gx=c(rng.normal(size=(T + 1, p, n)) * 0.01),
        Gq=c(rng.normal(size=(T + 1, p, p)) * 0.01), T=T)


def bench_raw(mod, d, number):
    adv = timeit.timeit(lambda: mod.advance_standard(d["A"], d["B"], d["K"], d["L"], d["C"], d["x"], d["xh"],
                                                     d["q"], True, 20), number=number)
    scan = timeit.timeit(lambda: mod.trigger_scan(d["coefE"], d["Gx"], d["Gq"], d["xh"], d["q"], 1.0, 1.0,
                                                  d["T"]), number=number)
    return adv / number * 1e6, scan / number * 1e6


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=2000)
    args = ap.parse_args()
    d = kernel_inputs(np.random.default_rng(0))
    mods = [("python", _kernels_py)] + ([("cython", _kernels_cy)] if _kernels_cy else [])
    print(f"{'backend':8s} {'advance x20 [us]':>17s} {'trigger scan [us]':>18s}")
    for name, mod in mods:
        a, s = bench_raw(mod, d, args.number)
        print(f"{name:8s} {a:17.2f} {s:18.2f}")
    cfg = str(cli.data_path("fig3_standard_N101.yaml"))
    print(f"\nfull run, {os.path.basename(cfg)} (400 steps), seconds per run")
    for name, _ in mods:
        env = dict(os.environ, QSTC_KERNELS=name)
        out = subprocess.run([sys.executable, "-c", RUN, cfg, str(args.repeat)], env=env, capture_output=True,
                             text=True, check=True)
        backend, t = out.stdout.split()
        print(f"{backend:8s} {float(t):.4f}")


if __name__ == "__main__":
    main()
