"""Echo contrast under cavity decay, compared with the first-order contrast-loss formula.

Both a zero-temperature bath and a bath at the field occupation are run;
the formula makes no statement about the bath, so both are reported.
"""
import argparse

from thermalcat.echo import contrast_deficit_comparison
from thermalcat.fock import FockSpace, truncation_for


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=5.0)
    ap.add_argument("--n-th", type=float, default=0.0)
    ap.add_argument("--t-kick", type=float, default=3.0)
    ap.add_argument("--kappas", type=float, nargs="+", default=[0.002, 0.01])
    ap.add_argument("--dt", type=float, default=0.005)
    ap.add_argument("--g", type=float, default=1.0)
    args = ap.parse_args()

    space = FockSpace(truncation_for(args.g * args.t_kick + 1.0, args.n_th, 1e-10) + 2)
    baths = sorted({0.0, args.n_th})
    print(f"{'kappa':>7} {'n_b':>5} {'revival loss':>13} {'fit loss':>10} {'formula':>10} {'formula/rev':>12}")
    for kappa in args.kappas:
        for n_b in baths:
            r = contrast_deficit_comparison(
                args.g, args.alpha, args.n_th, kappa, args.t_kick, space, bath_occupation=n_b, dt=args.dt
            )
            print(
                f"{kappa:7.4f} {n_b:5.2f} {r['revival_deficit']:13.4e} {r['fit_deficit']:10.4e} "
                f"{r['formula_deficit']:10.4e} {r['ratio_formula_to_revival']:12.3f}"
            )


if __name__ == "__main__":
    main()
