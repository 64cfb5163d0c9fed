"""Mesh-refinement study: Gauss-Bonnet residual and disk eigenvalue error versus grid resolution."""
import argparse

import numpy as np
from scipy.special import jn_zeros

from tamedsurf.discretize import sample_for_radius
from tamedsurf.integrals import gauss_bonnet_annulus
from tamedsurf.surface import catalog
from tamedsurf.tone import dirichlet_lambda1_mesh


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--resolutions", type=int, nargs="+", default=[32, 64, 128, 256])
    args = ap.parse_args()
    cat, plane = catalog("catenoid"), catalog("plane")
    exact = jn_zeros(0, 1)[0] ** 2 / 16
    print(" res   GB residual (catenoid 3..12)   disk lambda1 rel. error (r=4)")
    for n in args.resolutions:
        gb = gauss_bonnet_annulus(cat, sample_for_radius(cat, 14.0, n), 3.0, 12.0).gb_residual
        lam = dirichlet_lambda1_mesh(sample_for_radius(plane, 5.0, n).ball(4.0)).lambda1
        print(f"{n:4d}   {gb:.3e}                      {abs(lam - exact) / exact:.3e}")


if __name__ == "__main__":
    main()
