#!/usr/bin/env python3
"""Recompute Monte Carlo metrics from run logs and compare with metrics.json.

Usage: recompute_metrics.py OUT_DIR [--y-lo -1 --y-hi 1 --y-index 0]

OUT_DIR is what `ddspc montecarlo` writes: runs/run_XXX.csv and metrics.json.
Exit status 1 when any recomputed value disagrees.
"""
import argparse
import glob
import json
import math
import os
import sys

import numpy as np


def read_log(path):
    rows, aborted = [], False
    with open(path) as f:
        head = f.readline().strip().split(",")
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                aborted = True
                continue
            rows.append(dict(zip(head, line.split(","))))
    return rows, aborted


def close(a, b, tol=1e-9):
    if a is None or b is None:
        return a is None and b is None
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out_dir")
    ap.add_argument("--y-index", type=int, default=0)
    ap.add_argument("--y-lo", type=float, default=-1.0)
    ap.add_argument("--y-hi", type=float, default=1.0)
    a = ap.parse_args()

    with open(os.path.join(a.out_dir, "metrics.json")) as f:
        ref = json.load(f)
    alpha = ref["alpha"]
    logs = [read_log(p) for p in sorted(glob.glob(os.path.join(a.out_dir, "runs", "run_*.csv")))]
    done = [r for r, ab in logs if not ab]
    if not done:
        print("no completed runs")
        return 1
    K = min(len(r) for r in done)
    stage = np.array([[float(x["stage_cost"]) for x in r[:K]] for r in done])
    V = np.array([[float(x["V_Nk"]) for x in r[:K]] for r in done])
    y = np.array([[float(x["y%d" % a.y_index]) for x in r[:K]] for r in done])

    got = {
        "average_cost": stage.mean(),
        "y_violation_pooled": ((y < a.y_lo) | (y > a.y_hi)).mean(),
    }
    d = V[:, 1:] - V[:, :-1] + stage[:, :-1] - alpha
    n = d.shape[0]
    se = d.std(axis=0, ddof=1) / math.sqrt(n)
    got["decay_worst_z"] = float(np.max(d.mean(axis=0) / se))

    want = {
        "average_cost": ref["average_cost"],
        "y_violation_pooled": ref["y_violation_pooled"][ref["y_constrained"].index(a.y_index)],
        "decay_worst_z": ref["decay_worst_z"],
    }
    bad = 0
    for k in got:
        ok = close(got[k], want[k])
        bad += not ok
        print("%-20s recomputed %.10g  stored %.10g  %s" % (k, got[k], want[k], "ok" if ok else "MISMATCH"))
    print("completed runs %d of %d, steps %d" % (len(done), len(logs), K))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
