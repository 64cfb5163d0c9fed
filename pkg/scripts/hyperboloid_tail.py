"""Tail of rho * |alpha| along a meridian of the hyperboloid sheet z = c sqrt(1 + r^2).

Prints the product at growing chart radius next to two candidate limits:
c (meridian arclength as rho) and c / sqrt(1 + c^2) (chart radius as rho).
"""
import argparse

import numpy as np
from scipy.integrate import quad

from tamedsurf.surface import catalog, point_geometry


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--c", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    ap.add_argument("--radii", type=float, nargs="+", default=[10, 100, 1000, 10000])
    args = ap.parse_args()
    for c in args.c:
        imm = catalog("hyperboloid_sheet", c=c)
        print(f"c = {c:g}   candidates: c = {c:.6f}, c/sqrt(1+c^2) = {c / np.sqrt(1 + c * c):.6f}")
        for r in args.radii:
            speed = lambda s: np.sqrt(1 + c * c * s * s / (1 + s * s))
            rho = quad(speed, 0, r, limit=200)[0]
            a = float(point_geometry(imm, r, 0.0).alpha_norm)
            print(f"  r = {r:>8g}   rho = {rho:.6g}   rho*|alpha| = {rho * a:.6f}   r*|alpha| = {r * a:.6f}")


if __name__ == "__main__":
    main()
