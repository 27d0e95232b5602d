"""Numba kernels vs the pure-numpy fallback.

Each backend runs in its own interpreter because the switch is read at
import time:

    python benchmarks/bench_kernels.py            # both, side by side
    python benchmarks/bench_kernels.py --child    # current backend only
"""
import argparse
import json
import os
import subprocess
import sys
import time


def _best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_child(repeat):
    import numpy as np

    from peptile import kernels
    from peptile.bitsplit import build_tile_machines, state_cost
    from peptile.sim import simulate_tile
    from peptile.synth import random_pool, random_text
    from peptile.tilepack import PackConfig, run_strategy

    rng = np.random.default_rng(0)
    pool20 = random_pool(rng, 20)
    pool100 = random_pool(rng, 100)
    pool250 = random_pool(rng, 250)
    text = random_text(rng, 100_000, pool100.peptides, 0.01)
    tm100 = build_tile_machines(pool100)

    # first call compiles (or loads the cache); keep it out of the timings
    t0 = time.perf_counter()
    build_tile_machines(pool20)
    simulate_tile(tm100, text[:100])
    warmup = time.perf_counter() - t0

    cases = {
        "tile machines, 20 peptides": lambda: build_tile_machines(pool20),
        "tile machines, 100 peptides": lambda: build_tile_machines(pool100),
        "exact cost, 100 peptides": lambda: state_cost(pool100, "exact"),
        "lockstep sim, 100k residues": lambda: simulate_tile(tm100, text),
        "greedy pack, 250 peptides": lambda: run_strategy("greedy", pool250, PackConfig()),
    }
    out = {"backend": kernels.BACKEND, "warmup_s": warmup}
    out["cases"] = {name: _best_of(fn, repeat) for name, fn in cases.items()}
    print(json.dumps(out))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--child", action="store_true")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if args.child:
        run_child(args.repeat)
        return
    results = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, PEPTILE_DISABLE_NUMBA=flag)
        proc = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(args.repeat)],
                              env=env, capture_output=True, text=True, check=True)
        results[label] = json.loads(proc.stdout.strip().splitlines()[-1])
    nb, np_ = results["numba"], results["numpy"]
    if nb["backend"] != "numba":
        print("numba is not importable; only the numpy path was measured")
    print(f"{'case':32} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    for name in nb["cases"]:
        a, b = nb["cases"][name] * 1000, np_["cases"][name] * 1000
        print(f"{name:32} {a:10.2f} {b:10.2f} {b / a:7.1f}x")
    print(f"{'warm-up (compile/cache load)':32} {nb['warmup_s'] * 1000:10.2f} {np_['warmup_s'] * 1000:10.2f}")


if __name__ == "__main__":
    main()
