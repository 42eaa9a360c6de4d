#!/usr/bin/env python3
"""Write q-expansion coefficients of an elliptic curve newform to JSON.

a(l) = l + 1 - #E(F_l) by point counting on the given minimal model, then
a(n) from multiplicativity and the weight-2 Hecke recursion.
"""
import argparse
import json

from sympy import factorint, primerange


def trace(ainvs, l):
    a1, a2, a3, a4, a6 = ainvs
    count = 1
    for x in range(l):
        for y in range(l):
            if (y * y + a1 * x * y + a3 * y - (x**3 + a2 * x * x + a4 * x + a6)) % l == 0:
                count += 1
    return l + 1 - count


def coefficients(ainvs, level, bound):
    ap = {l: trace(ainvs, l) for l in primerange(2, bound + 1)}
    a = [0] * (bound + 1)
    a[1] = 1
    for n in range(2, bound + 1):
        val = 1
        for l, e in factorint(n).items():
            pw = [1, ap[l]]
            for k in range(2, e + 1):
                nxt = ap[l] * pw[-1] - (0 if level % l == 0 else l * pw[-2])
                pw.append(nxt)
            val *= pw[e]
        a[n] = val
    return a


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--label", required=True)
    ap.add_argument("--level", type=int, required=True)
    ap.add_argument("--ainvs", required=True, help="a1,a2,a3,a4,a6")
    ap.add_argument("--bound", type=int, default=2000)
    ap.add_argument("--out", required=True)
    args = ap.parse_args()
    ainvs = [int(t) for t in args.ainvs.split(",")]
    a = coefficients(ainvs, args.level, args.bound)
    rec = {
        "$schema": "rskernel/newform/v1",
        "label": args.label,
        "field": "Q",
        "level": args.level,
        "weight": 2,
        "curve": ainvs,
        "bound": args.bound,
        "coefficients": a[1:],
        "source": "point counts on the model [a1,a2,a3,a4,a6] plus Hecke recursion",
    }
    with open(args.out, "w") as fh:
        json.dump(rec, fh, separators=(",", ":"))
        fh.write("\n")


if __name__ == "__main__":
    main()
