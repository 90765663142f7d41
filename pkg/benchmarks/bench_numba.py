"""Timing of the jitted kernels against their pure python/numpy fallbacks.

Kernels compared
----------------
run_network      time-domain network stepping (jitted loop vs the same loop
                 interpreted by python)
expander counts  hypothetical-update counting (jitted double loop vs the
                 vectorised numpy broadcast)

Outputs of both paths are checked for equality before timings are reported.

Usage: python benchmarks/bench_numba.py [--samples 20000] [--repeats 3] [--json out.json]
"""

import argparse
import importlib
import json
import time

import numpy as np

from thermosafe._jit import HAVE_NUMBA
from thermosafe.network import default_network
from thermosafe.network.simulate import advance, initial_state
from thermosafe.network import kernels
from thermosafe.safe_bo import expander_counts_kernel


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_network(n_samples, repeats):
    model = default_network().with_controller(1.5, 1.5e-3)

    def run():
        state = initial_state(model, 0)
        return advance(model, state, n_samples, record=True)

    jitted = kernels.run_network
    run()  # compile outside the timing
    t_fast, out_fast = best_of(run, repeats)
    kernels_fn = getattr(jitted, "py_func", jitted)
    # the package re-exports a function named ``simulate``; fetch the module itself
    sim = importlib.import_module("thermosafe.network.simulate")

    sim.run_network = kernels_fn
    try:
        t_slow, out_slow = best_of(run, 1)
    finally:
        sim.run_network = jitted
    same = all(np.array_equal(a, b) for a, b in zip(out_fast, out_slow))
    return {"kernel": "run_network", "size": n_samples, "numba_s": t_fast, "python_s": t_slow,
            "speedup": t_slow / t_fast, "identical": bool(same)}


def bench_expander(n_safe, n_unsafe, repeats):
    rng = np.random.default_rng(0)
    args = (rng.normal(0, 0.3, (n_safe, n_unsafe)), rng.normal(size=n_unsafe),
            rng.uniform(0.1, 1.0, n_unsafe), rng.normal(size=n_safe),
            rng.uniform(0.5, 2.0, n_safe), 2.0, 0.3)
    t_np, c_np = best_of(lambda: expander_counts_kernel(*args, backend="numpy"), repeats)
    if not HAVE_NUMBA:
        return {"kernel": "expander_counts", "size": n_safe * n_unsafe, "numpy_s": t_np}
    expander_counts_kernel(*args, backend="numba")
    t_nb, c_nb = best_of(lambda: expander_counts_kernel(*args, backend="numba"), repeats)
    return {"kernel": "expander_counts", "size": n_safe * n_unsafe, "numba_s": t_nb,
            "numpy_s": t_np, "speedup": t_np / t_nb, "identical": bool(np.array_equal(c_np, c_nb))}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=20000)
    ap.add_argument("--safe", type=int, default=800)
    ap.add_argument("--unsafe", type=int, default=1700)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--json", default=None)
    args = ap.parse_args(argv)
    if not HAVE_NUMBA:
        print("numba is disabled or missing; only the fallback paths are timed")
    results = [bench_expander(args.safe, args.unsafe, args.repeats)]
    if HAVE_NUMBA:
        results.insert(0, bench_network(args.samples, args.repeats))
    for r in results:
        parts = [f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}" for k, v in r.items()]
        print("  ".join(parts))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
