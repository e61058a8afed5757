#!/usr/bin/env python3
"""Solve a dumped conic program with Clarabel and print the optimal value.

Usage: solve_dump.py program.txt
"""
import sys

import clarabel
import numpy as np
import scipy.sparse as sp


def load(path):
    n = 0
    P, q, blocks = [], {}, []
    const = 0.0
    with open(path) as f:
        for line in f:
            t = line.split()
            if t[0] == "conic_program":
                n = int(t[2])
                const = float(t[6])
            elif t[0] == "P":
                P.append((int(t[1]), int(t[2]), float(t[3])))
            elif t[0] == "q":
                q[int(t[1])] = float(t[2])
            elif t[0] == "block":
                blocks.append({"kind": t[1], "rows": int(t[2]), "order": int(t[3]), "A": [], "b": {}})
            elif t[0] == "A":
                blocks[-1]["A"].append((int(t[1]), int(t[2]), float(t[3])))
            elif t[0] == "b":
                blocks[-1]["b"][int(t[1])] = float(t[2])
    return n, P, q, blocks, const


def main():
    n, P, q, blocks, const = load(sys.argv[1])
    Pm = sp.csc_matrix(([v for _, _, v in P], ([i for i, _, _ in P], [j for _, j, _ in P])), shape=(n, n))
    qv = np.zeros(n)
    for i, v in q.items():
        qv[i] = v
    rows, cols, vals, bs, cones = [], [], [], [], []
    off = 0
    for b in blocks:
        for i, j, v in b["A"]:
            rows.append(off + i)
            cols.append(j)
            vals.append(-v)
        bb = np.zeros(b["rows"])
        for i, v in b["b"].items():
            bb[i] = v
        bs.append(bb)
        if b["kind"] == "zero":
            cones.append(clarabel.ZeroConeT(b["rows"]))
        elif b["kind"] == "nonneg":
            cones.append(clarabel.NonnegativeConeT(b["rows"]))
        elif b["kind"] == "soc":
            cones.append(clarabel.SecondOrderConeT(b["rows"]))
        else:
            sys.exit("psd blocks are not supported here")
        off += b["rows"]
    A = sp.csc_matrix((vals, (rows, cols)), shape=(off, n))
    s = clarabel.DefaultSettings()
    s.verbose = False
    sol = clarabel.DefaultSolver(sp.triu(Pm).tocsc(), qv, A, np.concatenate(bs), cones, s).solve()
    print(sol.status, sol.obj_val + const)


if __name__ == "__main__":
    main()
