"""Wigner function of the atom-projected field and its fringe visibility versus occupation.

With ``--out`` each Wigner grid is written as CSV (x, p, W) in displaced-frame coordinates.
"""
import argparse
from pathlib import Path

from thermalcat.analytic import analytic_cat_frame_state
from thermalcat.dynamics import JointState
from thermalcat.fock import FockSpace, truncation_for
from thermalcat.linalg import CompositeSpace
from thermalcat.phasespace import PhaseSpaceGrid, fringe_contrast, wigner


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=5.0)
    ap.add_argument("--n-th", type=float, nargs="+", default=[0.0, 0.1, 0.3, 1.0])
    ap.add_argument("--tau", type=float, default=4.0)
    ap.add_argument("--atom", choices=["e", "g"], default="e")
    ap.add_argument("--grid", type=int, default=121)
    ap.add_argument("--g", type=float, default=1.0)
    ap.add_argument("--out", type=Path)
    args = ap.parse_args()

    beta = 0.5j * args.g * args.tau
    centers = [-beta, beta]
    print(f"{'n_th':>6} {'N':>4} {'visibility':>11} {'min W':>9} {'norm':>7}")
    for n_th in args.n_th:
        space = FockSpace(truncation_for(abs(beta), n_th, 1e-12) + 6)
        rho = analytic_cat_frame_state(args.g, args.alpha, n_th, args.tau, space)
        field = JointState(rho, CompositeSpace((2, space.dim))).field_state(args.atom)
        grid = PhaseSpaceGrid.around(centers, n_th, widths=5, n=args.grid)
        wg = wigner(field, grid)
        vis = fringe_contrast(wg, centers)
        print(f"{n_th:6.2f} {space.dim:4d} {vis:11.4f} {wg.values.min():9.4f} {wg.normalization():7.4f}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / f"wigner_{args.atom}_n{n_th:g}.csv").write_text(wg.to_csv())


if __name__ == "__main__":
    main()
