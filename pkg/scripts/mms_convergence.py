"""Manufactured-solution error table for the two-phase mode Stokes solver.

    python3 scripts/mms_convergence.py --modes 0 1 2 3 --ns 8 12 16 24 32
"""

import argparse

from osmoflow.core import PhysParams
from osmoflow.manufactured import convergence_study


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--modes", type=int, nargs="+", default=[0, 1, 2, 3])
    ap.add_argument("--ns", type=int, nargs="+", default=[8, 12, 16, 24, 32])
    ap.add_argument("--nu-plus", type=float, default=1.0)
    ap.add_argument("--nu-minus", type=float, default=1.0)
    args = ap.parse_args()

    prm = PhysParams(nu_plus=args.nu_plus, nu_minus=args.nu_minus)
    for k in args.modes:
        ns, errs, orders = convergence_study(k, prm, tuple(args.ns))
        print(f"k = {k}")
        for i, (n, e) in enumerate(zip(ns, errs)):
            o = f"{orders[i - 1]:6.2f}" if i else "     -"
            print(f"  n = {n:3d}   max error {e:.3e}   order {o}")


if __name__ == "__main__":
    main()
