"""Fidelity of the analytic cat state against exact lab-frame JCM propagation.

    python scripts/cat_validity.py --alphas 4 6 8 --n-th 0 0.5 --tau 0.3
"""
import argparse
import time

from thermalcat.analytic import analytic_cat_joint_state
from thermalcat.dynamics import evolve, jcm_hamiltonian, single_mode_initial_state
from thermalcat.fock import FockSpace, truncation_for
from thermalcat.metrics import fidelity


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[4.0, 6.0, 8.0])
    ap.add_argument("--n-th", type=float, nargs="+", default=[0.0, 0.5])
    ap.add_argument("--tau", type=float, default=0.3)
    ap.add_argument("--g", type=float, default=1.0)
    ap.add_argument("--pad", type=int, default=8, help="Fock levels added above the thermal tail bound")
    args = ap.parse_args()

    print(f"{'n_th':>6} {'alpha':>6} {'N':>5} {'F':>10} {'1-F':>10} {'sec':>7}")
    for n_th in args.n_th:
        for alpha in args.alphas:
            t0 = time.perf_counter()
            space = FockSpace(truncation_for(alpha, n_th, 1e-10) + args.pad)
            rho0 = single_mode_initial_state(alpha, n_th, space, "g", "lab")
            exact = evolve(rho0, jcm_hamiltonian(args.g, space), args.tau)
            model = analytic_cat_joint_state(args.g, alpha, n_th, args.tau, space)
            f = fidelity(exact.rho, model.rho)
            dt = time.perf_counter() - t0
            print(f"{n_th:6.2f} {alpha:6.2f} {space.dim:5d} {f:10.6f} {1 - f:10.3e} {dt:7.2f}")


if __name__ == "__main__":
    main()
