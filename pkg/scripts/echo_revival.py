"""Echo revival after a phase kick, over a grid of displacements, occupations and kick times."""
import argparse
import itertools
import math

from thermalcat.echo import EchoSchedule, echo_run
from thermalcat.fock import FockSpace, truncation_for


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.5, 2.0, 6.0])
    ap.add_argument("--n-th", type=float, nargs="+", default=[0.0, 1.0])
    ap.add_argument("--t-kick", type=float, nargs="+", default=[0.7, 4.0])
    ap.add_argument("--frame", choices=["lab", "displaced"], default="lab")
    ap.add_argument("--g", type=float, default=1.0)
    args = ap.parse_args()

    print(f"{'alpha':>6} {'n_th':>5} {'t_kick':>6} {'N':>4} {'1-F':>10} {'1-Pg':>10}")
    for alpha, n_th, tk in itertools.product(args.alphas, args.n_th, args.t_kick):
        if args.frame == "lab":
            dim = truncation_for(alpha, n_th, 1e-10) + 2 * math.ceil(args.g * tk) + 6
        else:
            dim = truncation_for(0.5 * args.g * 2 * tk + 1.0, n_th, 1e-10) + 2
        s = echo_run(args.g, alpha, n_th, EchoSchedule(tk, 2 * tk, 41), FockSpace(dim), frame=args.frame)
        f, pg = s.metadata["revival_fidelity"], s.metadata["Pg_revival"]
        print(f"{alpha:6.2f} {n_th:5.2f} {tk:6.2f} {dim:4d} {1 - f:10.2e} {1 - pg:10.2e}")


if __name__ == "__main__":
    main()
