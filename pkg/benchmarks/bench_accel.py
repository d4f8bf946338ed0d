"""Compare the numba kernels with the numpy / interpreted fallbacks.

Each backend runs in its own interpreter because the choice is made at import
time from RICCONFLICT_DISABLE_NUMBA.  Usage:

    python benchmarks/bench_accel.py [--steps N] [--trials K] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import os
import statistics
import subprocess
import sys
import time

WORKER_FLAG = "--worker"


def _best(fn, trials):
    fn()  # compile / warm caches
    times = []
    for _ in range(trials):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times), statistics.median(times)


def worker(steps: int, trials: int) -> dict:
    import numpy as np

    from ricconflict import backend
    from ricconflict.genc import simulate, synthesize_entities
    from ricconflict.graph import FEATURE_WIDTH, encode_dataset
    from ricconflict.learn import init_model
    from ricconflict.learn.model import Predictor, loss_and_grads, prepare
    from ricconflict.rules import annotate_arrays

    model = synthesize_entities(10, seed=0)
    ds = simulate(model, "high", steps, seed=0)
    out = {"backend": backend(), "steps": steps, "kernels": {}}
    k = out["kernels"]
    k["genc.simulate"] = _best(lambda: simulate(model, "high", steps, seed=0), trials)
    k["rules.annotate_arrays"] = _best(lambda: annotate_arrays(model, ds.rcp_xapp, ds.rcp_icp, ds.vk), trials)
    idx = np.arange(min(len(ds), 20000))
    pb = prepare(encode_dataset(ds, idx))
    gm = init_model("graphmp", FEATURE_WIDTH, seed=0)
    pred = Predictor(gm)
    k["graphmp.inference"] = _best(lambda: pred(pb), trials)
    k["graphmp.loss_and_grads"] = _best(lambda: loss_and_grads(gm, pb, pb.y), trials)
    # checksum so the two backends can be compared for identical output
    out["checksum"] = {
        "labels": int(ds.labels.astype(np.int64) @ np.arange(len(ds)) % 1_000_003),
        "icp_sum": float(np.round(ds.icp_values.sum(), 6)),
        "pred": int(pred(pb).sum()),
    }
    return out


def run_backend(disabled: bool, steps: int, trials: int) -> dict:
    env = dict(os.environ)
    env["RICCONFLICT_DISABLE_NUMBA"] = "1" if disabled else "0"
    cmd = [sys.executable, __file__, WORKER_FLAG, "--steps", str(steps), "--trials", str(trials)]
    res = subprocess.run(cmd, env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--steps", type=int, default=50_000)
    ap.add_argument("--trials", type=int, default=3)
    ap.add_argument("--json", help="write both result sets here")
    ap.add_argument(WORKER_FLAG, action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args(argv)
    if args.worker:
        print(json.dumps(worker(args.steps, args.trials)))
        return 0

    fast = run_backend(False, args.steps, args.trials)
    slow = run_backend(True, args.steps, args.trials)
    print(f"{'kernel':<24} {'numba (s)':>11} {'fallback (s)':>13} {'speedup':>9}")
    for name, (best, _) in fast["kernels"].items():
        fb = slow["kernels"][name][0]
        print(f"{name:<24} {best:11.4f} {fb:13.4f} {fb / best:8.1f}x")
    same = fast["checksum"] == slow["checksum"]
    print(f"outputs identical across backends: {same}")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"numba": fast, "fallback": slow, "identical": same}, fh, indent=1)
    return 0 if same else 1


if __name__ == "__main__":
    sys.exit(main())
