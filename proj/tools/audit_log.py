#!/usr/bin/env python3
"""Check closed-loop run logs step by step.

Usage: audit_log.py run.csv|OUT_DIR [...]

A directory stands for its runs/run_*.csv.

Per log: V <= J_tilde (relative 1e-6) from k = 1 on, the branch label agrees
with which costs are present, and no measured_fallback steps. Exit status 1
on any finding.
"""
import glob
import math
import os
import sys


def audit(path):
    found = []
    with open(path) as f:
        head = f.readline().strip().split(",")
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                if line:
                    found.append("aborted:" + line[len("# aborted:"):])
                continue
            r = dict(zip(head, line.split(",")))
            k, br = int(r["k"]), r["branch"]
            V, J = float(r["V_Nk"]), float(r["J_tilde"])
            Vm, Vb = float(r["V_measured"]), float(r["V_backup"])
            if k > 0 and V > J + 1e-6 * max(1.0, abs(J)):
                found.append("k=%d V %.6g > J_tilde %.6g" % (k, V, J))
            if br == "backup" and math.isnan(Vb):
                found.append("k=%d backup branch without a backup cost" % k)
            if br == "measured" and Vm != V:
                found.append("k=%d measured branch with V != V_measured" % k)
            if br == "measured_fallback":
                found.append("k=%d backup infeasible, measured fallback" % k)
    return found


def main():
    if len(sys.argv) < 2:
        print(__doc__)
        return 2
    paths = []
    for a in sys.argv[1:]:
        paths += sorted(glob.glob(os.path.join(a, "runs", "run_*.csv"))) if os.path.isdir(a) else [a]
    bad = 0
    for p in paths:
        f = audit(p)
        bad += bool(f)
        for x in f:
            print("%s: %s" % (p, x))
    print("%d of %d logs with findings" % (bad, len(paths)))
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
