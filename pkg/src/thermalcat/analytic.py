"""Closed-form predictions for the large-displacement regime.

Everything in this module is an *approximate* model kept apart from the
exact numerics in :mod:`thermalcat.dynamics`, so comparisons always say which
side is which. Formulas are reproduced as published, with two documented
adjustments:

* The cat-state construction follows the atom's actual initial state. For an
  atom starting in ``|g> = (|+> - |->)/sqrt 2`` the ``|->`` branch carries a
  minus sign; the printed form with a plus sign is the ``|e>`` start and is
  available via ``atom="e"``.
* The two-mode phase uses ``(g1 + g2) alpha tau``, which is ``2 theta``
  whenever ``g1 = g2 = g``.

The probability formulas :func:`rabi_probability_analytic` and
:func:`two_mode_rabi_analytic` are verbatim. They track ``P_g`` for an atom
starting in ``|g>`` (they equal 1 at tau = 0). Their Gaussian exponent
``(n_th + 2)/4`` agrees with the trace of the cat state only at ``n_th = 0``;
:func:`rabi_probability_rwa` evaluates that trace, where the exponent is
``(2 n_th + 1)/2``.
"""

import math

import numpy as np

from .dynamics import ATOM_KETS, JointState, KET_MINUS, KET_PLUS
from .errors import DomainError
from .fock import (
    FockSpace,
    _displacement_full,
    padded_dim,
    displace_matrix,
    displacement_operator,
    displaced_thermal_fock_coeff,
    thermal_state,
    truncation_for,
)
from .linalg import CompositeSpace, dag, kron
from .timeseries import TimeSeries


def _atom_vector(atom):
    if isinstance(atom, str):
        if atom not in ATOM_KETS:
            raise DomainError(f"unknown atom state {atom!r}")
        return ATOM_KETS[atom]
    v = np.asarray(atom, dtype=complex)
    return v / np.linalg.norm(v)


def _branch_kraus(atom, phase, d_minus, d_plus):
    """Field operators ``X_e, X_g`` with ``|psi> = sum_a |a> X_a``.

    ``|+>`` picks up ``e^{-i phase} D(-beta)`` and ``|->`` picks up
    ``e^{+i phase} D(+beta)``.
    """
    v = _atom_vector(atom)
    c_plus = np.vdot(KET_PLUS, v)
    c_minus = np.vdot(KET_MINUS, v)
    branch_plus = c_plus * np.exp(-1j * phase) * d_minus
    branch_minus = c_minus * np.exp(1j * phase) * d_plus
    s = 1.0 / math.sqrt(2.0)
    # <e|+> = <e|-> = <g|+> = 1/sqrt2, <g|-> = -1/sqrt2
    return s * (branch_plus + branch_minus), s * (branch_plus - branch_minus)


def _assemble(x_e, x_g, field_rho):
    """Four atom-sector terms ``|a><b| (x) X_a rho X_b^dagger``."""
    blocks = {}
    for a, xa in (("e", x_e), ("g", x_g)):
        for b, xb in (("e", x_e), ("g", x_g)):
            blocks[a, b] = xa @ field_rho @ dag(xb)
    d = field_rho.shape[0]
    rho = np.zeros((2 * d, 2 * d), dtype=complex)
    rho[:d, :d] = blocks["e", "e"]
    rho[:d, d:] = blocks["e", "g"]
    rho[d:, :d] = blocks["g", "e"]
    rho[d:, d:] = blocks["g", "g"]
    return rho


def _frame_dim(beta_abs, n_th):
    return truncation_for(beta_abs, n_th, tail_tol=1e-14) + 4


def analytic_cat_frame_state(g, alpha, n_th, tau, space, atom="g"):
    """The cat state without the overall ``D(alpha)``: what the displaced frame sees."""
    alpha = float(alpha)
    theta = alpha * g * tau
    beta = 0.5j * g * tau
    x_e, x_g = _branch_kraus(
        atom, theta, displacement_operator(-beta, space), displacement_operator(beta, space)
    )
    rho = _assemble(x_e, x_g, thermal_state(n_th, space, allow_truncation=True))
    return rho / np.trace(rho).real


def analytic_cat_joint_state(g, alpha, n_th, tau, space, atom="g", frame="lab"):
    """Superposition of two displaced thermal branches correlated with the atom.

    ``rho = D(alpha) sum_ab |a><b| (x) X_a rho_th X_b^dagger D(alpha)^dagger`` with
    ``X_e, X_g`` built from ``e^{-/+ i theta} D(-/+ beta)``, ``theta = alpha g tau``,
    ``beta = i g tau / 2``. Valid for ``alpha >> 1``; not enforced.
    ``frame="displaced"`` omits the outer ``D(alpha)``.
    """
    if isinstance(alpha, complex) and alpha.imag != 0:
        raise DomainError("the analytic cat state is defined for real alpha")
    alpha = float(np.real(alpha))
    cs = CompositeSpace((2, space.dim))
    if frame == "displaced":
        rho = analytic_cat_frame_state(g, alpha, n_th, tau, space, atom)
        return JointState(rho, cs, tau, {"model": "analytic_cat", "frame": frame})
    if frame != "lab":
        raise DomainError(f"frame must be 'lab' or 'displaced', got {frame!r}")
    fs = FockSpace(_frame_dim(0.5 * g * tau, n_th))
    rf = analytic_cat_frame_state(g, alpha, n_th, tau, fs, atom)
    d = fs.dim
    rho = np.zeros((2 * space.dim, 2 * space.dim), dtype=complex)
    n = space.dim
    for i in range(2):
        for j in range(2):
            rho[i * n:(i + 1) * n, j * n:(j + 1) * n] = displace_matrix(
                rf[i * d:(i + 1) * d, j * d:(j + 1) * d], alpha, n
            )
    rho = 0.5 * (rho + dag(rho))
    tr = np.trace(rho).real
    return JointState(rho / tr, cs, tau, {"model": "analytic_cat", "frame": frame, "discarded_tail_mass": 1 - tr})


def rabi_probability_analytic(g, alpha, n_th, time_grid):
    """``(1 + exp(-(g tau)^2 (n_th + 2)/4) cos(2 Omega tau)) / 2`` with ``Omega = alpha g``."""
    tau = np.asarray(time_grid, dtype=float)
    omega = float(alpha) * g
    envelope = np.exp(-((g * tau) ** 2) * (n_th + 2.0) / 4.0)
    p = 0.5 * (1.0 + envelope * np.cos(2.0 * omega * tau))
    return TimeSeries(tau, {"P": p, "envelope": envelope}, {"g": g, "alpha": float(alpha), "n_th": n_th})


def thermal_characteristic(beta, n_th):
    """``Tr[rho_th D(beta)] = exp(-|beta|^2 (n_th + 1/2))``."""
    return math.exp(-abs(beta) ** 2 * (n_th + 0.5))


def rabi_probability_rwa(g, alpha, n_th, time_grid):
    """``P_g`` traced from the large-displacement cat state itself.

    ``P_g = (1 + Tr[rho_th D(2 beta)] cos(2 alpha g tau)) / 2`` with
    ``|2 beta| = g tau``, giving envelope ``exp(-(g tau)^2 (2 n_th + 1)/2)``.
    """
    tau = np.asarray(time_grid, dtype=float)
    envelope = np.exp(-((g * tau) ** 2) * (2.0 * n_th + 1.0) / 2.0)
    p = 0.5 * (1.0 + envelope * np.cos(2.0 * float(alpha) * g * tau))
    return TimeSeries(tau, {"P": p, "envelope": envelope}, {"g": g, "alpha": float(alpha), "n_th": n_th})


# --- two modes ---------------------------------------------------------------

def two_mode_frame_state(g1, g2, alpha, n_th1, n_th2, tau, spaces, atom="g"):
    s1, s2 = spaces
    phase = float(alpha) * (g1 + g2) * tau
    b1, b2 = 0.5j * g1 * tau, 0.5j * g2 * tau
    d_minus = kron(displacement_operator(-b1, s1), displacement_operator(-b2, s2))
    d_plus = kron(displacement_operator(b1, s1), displacement_operator(b2, s2))
    x_e, x_g = _branch_kraus(atom, phase, d_minus, d_plus)
    field_rho = kron(
        thermal_state(n_th1, s1, allow_truncation=True), thermal_state(n_th2, s2, allow_truncation=True)
    )
    rho = _assemble(x_e, x_g, field_rho)
    return rho / np.trace(rho).real


def two_mode_analytic_state(g1, g2, alpha, n_th1, n_th2, tau, spaces, atom="g", frame="lab"):
    """Entangled displaced thermal states of two modes sharing one atom.

    Both modes displaced by the same real ``alpha``; branch displacements
    ``D(-/+beta1, -/+beta2) = D1 (x) D2`` with ``beta_k = i g_k tau / 2``.
    ``frame="displaced"`` omits the outer ``D(alpha, alpha)``, which is a
    local unitary and leaves every entanglement measure unchanged.
    """
    s1, s2 = spaces
    cs = CompositeSpace((2, s1.dim, s2.dim))
    if frame == "displaced":
        rho = two_mode_frame_state(g1, g2, alpha, n_th1, n_th2, tau, spaces, atom)
        return JointState(rho, cs, tau, {"model": "two_mode_analytic", "frame": frame})
    if frame != "lab":
        raise DomainError(f"frame must be 'lab' or 'displaced', got {frame!r}")
    f1 = FockSpace(_frame_dim(0.5 * g1 * tau, n_th1))
    f2 = FockSpace(_frame_dim(0.5 * g2 * tau, n_th2))
    rf = two_mode_frame_state(g1, g2, alpha, n_th1, n_th2, tau, (f1, f2), atom)
    # displace each mode on its own padded space, then crop
    d1 = _displacement_full(alpha, padded_dim(max(s1.dim, f1.dim), abs(alpha)))[: s1.dim, : f1.dim]
    d2 = _displacement_full(alpha, padded_dim(max(s2.dim, f2.dim), abs(alpha)))[: s2.dim, : f2.dim]
    lift = kron(np.eye(2), d1, d2)
    rho = lift @ rf @ dag(lift)
    rho = 0.5 * (rho + dag(rho))
    tr = np.trace(rho).real
    return JointState(rho / tr, cs, tau, {"model": "two_mode_analytic", "frame": frame, "discarded_tail_mass": 1 - tr})


def two_mode_rabi_analytic(g1, g2, alpha, n_bar, time_grid):
    """``(1 + exp(-[(g1 tau)^2 + (g2 tau)^2](n + 2)/4) cos(4 Omega tau)) / 2``.

    ``Omega = alpha (g1 + g2) / 2``, i.e. ``alpha g`` for equal couplings.
    """
    tau = np.asarray(time_grid, dtype=float)
    omega = float(alpha) * 0.5 * (g1 + g2)
    envelope = np.exp(-((g1 * tau) ** 2 + (g2 * tau) ** 2) * (n_bar + 2.0) / 4.0)
    p = 0.5 * (1.0 + envelope * np.cos(4.0 * omega * tau))
    return TimeSeries(tau, {"P": p, "envelope": envelope}, {"g1": g1, "g2": g2, "alpha": float(alpha), "n": n_bar})


# --- decoherence -------------------------------------------------------------

def _sin_over_root(x, root):
    # sin(x root)/root, continuous at root = 0
    if root == 0:
        return x
    return math.sin(x * root) / root


def contrast_reduction_perturbative(g, n_th, alpha, kappa, t, n_max=None, mass_tol=1e-12):
    """First-order contrast loss from cavity decay at rate ``kappa``.

    Sums, over the Fock populations ``rho_nn`` of the initial displaced
    thermal state (series route), ``kappa sqrt(1 + 2 n_th) rho_nn`` times::

        t (2n - 1)/4 + sin(g t sqrt n)/(4 g sqrt n) - sin(g t sqrt(n-1))/(4 g sqrt(n-1))
        - [sqrt n (4n - 3) sin(g t sqrt n) cos(g t sqrt(n-1))
           - sqrt(n-1) (4n - 1) sin(g t sqrt(n-1)) cos(g t sqrt n)] / (4g)

    ``sin(x sqrt m)/sqrt m`` is continued to ``x`` at ``m = 0`` and the
    ``n = 0`` term, whose square roots go imaginary, is taken as 0.
    Meaningful only for ``kappa << g`` and ``kappa t << 1``.
    """
    if kappa == 0:
        return 0.0
    if n_max is None:
        n_max = truncation_for(alpha, n_th, tail_tol=mass_tol)
    pref = kappa * math.sqrt(1.0 + 2.0 * n_th)
    total = 0.0
    for n in range(1, n_max):
        rho_nn = displaced_thermal_fock_coeff(alpha, n_th, n, n).real
        sn, sn1 = math.sqrt(n), math.sqrt(n - 1)
        x = g * t
        bracket = (
            t * (2 * n - 1) / 4.0
            + _sin_over_root(x, sn) / (4 * g)
            - _sin_over_root(x, sn1) / (4 * g)
            - (
                sn * (4 * n - 3) * math.sin(x * sn) * math.cos(x * sn1)
                - sn1 * (4 * n - 1) * math.sin(x * sn1) * math.cos(x * sn)
            )
            / (4 * g)
        )
        total += rho_nn * bracket
    return pref * total
