"""Mode-mode negativity after one atom crosses two displaced thermal modes.

The atom is projected on |e> or |g> (or traced) and the negativity of the
remaining two-mode field is printed against the displacement.
"""
import argparse

import numpy as np

from thermalcat.dynamics import PROJ_G, JointState, evolve, multimode_displaced_hamiltonian
from thermalcat.fock import FockSpace, thermal_state, truncation_for
from thermalcat.linalg import CompositeSpace, kron
from thermalcat.metrics import BipartiteSplit, negativity


def two_mode_state(g, alpha, n_th, tau, tail=1e-10):
    dim = truncation_for(0.5 * g * tau + 1.0, n_th, tail) + 2
    spaces = [FockSpace(dim), FockSpace(dim)]
    th = thermal_state(n_th, spaces[0], allow_truncation=True)
    rho0 = kron(PROJ_G, th, th)
    state = JointState(rho0 / np.trace(rho0).real, CompositeSpace((2, dim, dim)))
    return evolve(state, multimode_displaced_hamiltonian([g, g], [alpha, alpha], spaces), tau), dim


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0])
    ap.add_argument("--n-th", type=float, default=0.2)
    ap.add_argument("--tau", type=float, default=0.6)
    ap.add_argument("--g", type=float, default=1.0)
    args = ap.parse_args()

    print(f"{'alpha':>6} {'N':>4} {'N_e':>8} {'N_g':>8} {'N_trace':>8} {'cos(4 a g tau)':>15}")
    for alpha in args.alphas:
        out, dim = two_mode_state(args.g, alpha, args.n_th, args.tau)
        split = BipartiteSplit.two_factor(dim, dim)
        vals = [negativity(out.field_state(p), split) for p in ("e", "g", "trace")]
        phase = np.cos(4 * alpha * args.g * args.tau)
        print(f"{alpha:6.2f} {dim:4d} " + " ".join(f"{v:8.4f}" for v in vals) + f" {phase:15.4f}")


if __name__ == "__main__":
    main()
