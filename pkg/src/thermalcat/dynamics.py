"""Atom-field Hamiltonians and exact unitary propagation.

Tensor ordering is always atom first, then mode 1 [, mode 2]. The atom
basis has index 0 = |e>, index 1 = |g>.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .fock import (
    FockSpace,
    _displacement_full,
    displaced_thermal_state_with_tail,
    padded_dim,
    thermal_state,
)
from .linalg import CompositeSpace, Propagator, dag, kron, partial_trace
from .timeseries import TimeSeries

# --- atom basis --------------------------------------------------------------
KET_E = np.array([1.0, 0.0], dtype=complex)
KET_G = np.array([0.0, 1.0], dtype=complex)
KET_PLUS = (KET_E + KET_G) / math.sqrt(2)
KET_MINUS = (KET_E - KET_G) / math.sqrt(2)
S_PLUS = np.outer(KET_E, KET_G)  # |e><g|
S_MINUS = np.outer(KET_G, KET_E)  # |g><e|
S_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_X = S_PLUS + S_MINUS
PROJ_E = np.outer(KET_E, KET_E)
PROJ_G = np.outer(KET_G, KET_G)
I2 = np.eye(2, dtype=complex)

ATOM_KETS = {"e": KET_E, "g": KET_G, "+": KET_PLUS, "-": KET_MINUS}


def atom_ket(label):
    try:
        return ATOM_KETS[label]
    except KeyError:
        raise DomainError(f"unknown atom state {label!r}; expected one of {sorted(ATOM_KETS)}") from None


def atom_projector(label):
    k = atom_ket(label)
    return np.outer(k, k.conj())


@dataclass(frozen=True)
class CouplingParams:
    """Couplings and displacement, with the derived Rabi quantities.

    ``omega = alpha * g`` is the displaced-frame splitting scale; ``theta``
    and ``beta`` are the phase and conditional displacement after time tau.
    """

    g: float = 1.0
    alpha: complex = 0.0
    g1: float = None
    g2: float = None

    def __post_init__(self):
        if not self.g > 0:
            raise DomainError(f"coupling g must be > 0, got {self.g}")
        if (self.g1 is None) != (self.g2 is None):
            raise DomainError("two-mode coupling needs both g1 and g2")
        if self.g1 is not None and not (self.g1 > 0 and self.g2 > 0):
            raise DomainError("two-mode couplings must both be > 0")

    @property
    def omega(self):
        return self.alpha * self.g

    def theta(self, tau):
        return self.omega * tau

    def beta(self, tau):
        return 0.5j * self.g * tau

    def betas(self, tau):
        return 0.5j * self.g1 * tau, 0.5j * self.g2 * tau


@dataclass
class JointState:
    """Density matrix on atom (x) mode(s) plus elapsed interaction time."""

    rho: np.ndarray
    space: CompositeSpace
    time: float = 0.0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.space.check(self.rho)

    @property
    def mode_dims(self):
        return self.space.factor_dims[1:]

    def atom_block(self, label):
        """Unnormalized field operator ``<a| rho |a>`` for atom state ``a``."""
        k = atom_ket(label)
        d = self.space.total_dim // 2
        r = self.rho.reshape(2, d, 2, d)
        return np.einsum("i,ijkl,k->jl", k.conj(), r, k)

    def atom_probability(self, label):
        return float(np.real(np.trace(self.atom_block(label))))

    def field_state(self, projection=None):
        """Field density matrix: atom traced out, or projected on ``projection`` and renormalized."""
        if projection is None or projection == "trace":
            block = self.atom_block("e") + self.atom_block("g")
        else:
            block = self.atom_block(projection)
        tr = np.trace(block).real
        if tr <= 0:
            raise DomainError(f"atom outcome {projection!r} has zero probability")
        return block / tr

    def mode_state(self, mode, projection=None):
        """Reduced state of mode ``mode`` (1-based)."""
        field_ = self.field_state(projection)
        dims = self.mode_dims
        if len(dims) == 1:
            return field_
        return partial_trace(field_, CompositeSpace(dims), [mode - 1])

    def atom_state(self):
        return partial_trace(self.rho, self.space, [0])


# --- operators on the field factor -------------------------------------------

def mode_annihilators(spaces):
    """Annihilation operators of every mode embedded in the joint field space."""
    ops = []
    for k, sp in enumerate(spaces):
        mats = [s.identity for s in spaces]
        mats[k] = sp.a
        ops.append(kron(*mats))
    return ops


def _field_identity(spaces):
    return np.eye(int(np.prod([s.dim for s in spaces])), dtype=complex)


def jcm_hamiltonian(g, space):
    """Resonant Jaynes-Cummings coupling ``g (a^+ S^- + a S^+)`` on atom (x) mode."""
    return multimode_jcm_hamiltonian([g], [space])


def multimode_jcm_hamiltonian(couplings, spaces):
    ops = mode_annihilators(spaces)
    coupled = sum(gk * ak for gk, ak in zip(couplings, ops))
    return kron(S_MINUS, dag(coupled)) + kron(S_PLUS, coupled)


def two_mode_hamiltonian(g1, g2, space1, space2):
    """``(g1 a^+ + g2 b^+) S^- + (g1 a + g2 b) S^+`` on atom (x) mode1 (x) mode2."""
    return multimode_jcm_hamiltonian([g1, g2], [space1, space2])


def excitation_number(spaces):
    """``|e><e| + sum_k n_k`` on the joint space."""
    ops = mode_annihilators(spaces)
    n_tot = sum(dag(a) @ a for a in ops)
    return kron(PROJ_E, _field_identity(spaces)) + kron(I2, n_tot)


def displaced_ladder(alpha, space):
    """``D(alpha)^dagger a D(alpha)`` on ``space`` by explicit matrix products.

    The products run on a padded space and are cropped, so interior entries
    are exact; the result equals ``a + alpha`` up to roundoff there.
    """
    big = padded_dim(space.dim, abs(complex(alpha)))
    if big == space.dim:
        return np.array(space.a)
    d = _displacement_full(alpha, big)
    a_big = FockSpace(big).a
    return (dag(d) @ a_big @ d)[: space.dim, : space.dim]


def _embed(op, k, spaces):
    mats = [s.identity for s in spaces]
    mats[k] = op
    return kron(*mats)


def multimode_displaced_hamiltonian(couplings, alphas, spaces):
    """``D^dagger H D`` for the multimode coupling, by matrix similarity transform."""
    coupled = sum(
        gk * _embed(displaced_ladder(ak, sk), k, spaces)
        for k, (gk, ak, sk) in enumerate(zip(couplings, alphas, spaces))
    )
    h = kron(S_MINUS, dag(coupled)) + kron(S_PLUS, coupled)
    return 0.5 * (h + dag(h))


def displaced_hamiltonian(g, alpha, space):
    """Displaced-frame Hamiltonian ``D(alpha)^dagger H D(alpha)`` of the JCM.

    Computed as the exact similarity transform, not from any closed form.
    """
    return multimode_displaced_hamiltonian([g], [alpha], [space])


def two_mode_displaced_hamiltonian(g1, g2, alpha1, alpha2, space1, space2):
    return multimode_displaced_hamiltonian([g1, g2], [alpha1, alpha2], [space1, space2])


def displaced_hamiltonian_closed_form(g, alpha, space):
    """``g[(a^+ + alpha*) S^- + (a + alpha) S^+]``, the algebraic displaced-frame form."""
    return multimode_displaced_hamiltonian_closed_form([g], [alpha], [space])


def multimode_displaced_hamiltonian_closed_form(couplings, alphas, spaces):
    """``sum_k g_k[(a_k^+ + alpha_k*) S^- + (a_k + alpha_k) S^+]``."""
    ident = _field_identity(spaces)
    ops = mode_annihilators(spaces)
    coupled = sum(gk * (ak + complex(al) * ident) for gk, al, ak in zip(couplings, alphas, ops))
    return kron(S_MINUS, dag(coupled)) + kron(S_PLUS, coupled)


def _sigma_phi(phase):
    u = complex(math.cos(phase), math.sin(phase))
    return u * S_PLUS + np.conj(u) * S_MINUS


def multimode_rwa_hamiltonian(couplings, alphas, spaces):
    """Large-displacement approximation of the displaced-frame Hamiltonian.

    With ``c = sum g_k alpha_k = |c| e^{i phi}`` and
    ``sigma_phi = e^{i phi} S^+ + e^{-i phi} S^-``, keeps
    ``|c| sigma_phi + (1/2) sum g_k (e^{i phi} a_k^+ + e^{-i phi} a_k) sigma_phi``
    and drops the terms that rotate at ``2|c|``. For one mode and real
    alpha this is ``alpha g sigma_x + (g/2)(a + a^+) sigma_x``.
    """
    c = sum(gk * complex(ak) for gk, ak in zip(couplings, alphas))
    phase = math.atan2(c.imag, c.real) if c != 0 else 0.0
    u = complex(math.cos(phase), math.sin(phase))
    ops = mode_annihilators(spaces)
    quad = sum(0.5 * gk * (u * dag(ak) + np.conj(u) * ak) for gk, ak in zip(couplings, ops))
    field_part = abs(c) * _field_identity(spaces) + quad
    return kron(_sigma_phi(phase), field_part)


def rwa_hamiltonian(g, alpha, space):
    return multimode_rwa_hamiltonian([g], [alpha], [space])


def conditional_displacement_hamiltonian(g, space):
    """``(g/2)(a + a^+)(S^+ + S^-)``: the JCM plus anti-JCM coupling.

    Block-diagonal in the ``|+>, |->`` basis, where it displaces the field
    in opposite directions.
    """
    return kron(SIGMA_X, 0.5 * g * (space.a + space.a_dag))


# --- propagation -------------------------------------------------------------

def evolve(state, hamiltonian, t, propagator=None):
    """``rho -> U rho U^dagger`` with ``U = exp(-iHt)``."""
    if hamiltonian.shape != state.rho.shape:
        raise DomainError(f"Hamiltonian shape {hamiltonian.shape} does not match state {state.rho.shape}")
    prop = propagator if propagator is not None else Propagator(hamiltonian)
    rho = prop.evolve(state.rho, t)
    return JointState(0.5 * (rho + dag(rho)), state.space, state.time + t, dict(state.metadata))


def expectation_series(propagator, rho0, observable, times):
    """``Tr[rho(t) O]`` for every t from one eigendecomposition.

    In the eigenbasis ``Tr[rho(t) O] = sum_jk r_jk O_kj exp(-i(w_j - w_k)t)``,
    which costs ``O(d^2)`` per sample.
    """
    v = propagator.vectors
    r = dag(v) @ rho0 @ v
    o = dag(v) @ observable @ v
    m = r * o.T
    times = np.asarray(times, dtype=float)
    u = np.exp(1j * np.outer(times, propagator.energies))
    vals = np.einsum("tj,jk,tk->t", u.conj(), m, u)
    return np.real(vals)


def single_mode_initial_state(alpha, n_th, space, atom="g", frame="lab", tail_tol=None):
    """Atom (x) displaced thermal field. In the displaced frame the field is plain thermal."""
    if frame == "lab":
        field_rho, discarded = displaced_thermal_state_with_tail(alpha, n_th, space, tail_tol=tail_tol)
    elif frame == "displaced":
        field_rho = thermal_state(n_th, space, tail_tol=tail_tol)
        discarded = float(((n_th / (1.0 + n_th)) ** space.dim) if n_th > 0 else 0.0)
    else:
        raise DomainError(f"frame must be 'lab' or 'displaced', got {frame!r}")
    proj = atom_projector(atom) if isinstance(atom, str) else np.outer(atom, np.conj(atom))
    cs = CompositeSpace((2, space.dim))
    return JointState(kron(proj, field_rho), cs, 0.0, {"discarded_tail_mass": discarded, "frame": frame})


def rabi_probability_exact(g, alpha, n_th, time_grid, space, hamiltonian_choice="full", atom="g"):
    """Exact ``P_e(tau)`` and ``P_g(tau)`` for an atom meeting a displaced thermal field.

    ``hamiltonian_choice="full"`` propagates the lab-frame JCM on a space big
    enough for the displaced field. ``"displaced"`` propagates the exact
    displaced-frame Hamiltonian, where the field starts thermal and a much
    smaller space suffices. Both are exact; they differ only in truncation.
    """
    if hamiltonian_choice == "full":
        state = single_mode_initial_state(alpha, n_th, space, atom, frame="lab")
        h = jcm_hamiltonian(g, space)
    elif hamiltonian_choice == "displaced":
        state = single_mode_initial_state(alpha, n_th, space, atom, frame="displaced")
        h = displaced_hamiltonian(g, alpha, space)
    else:
        raise DomainError(f"hamiltonian_choice must be 'full' or 'displaced', got {hamiltonian_choice!r}")
    prop = Propagator(h)
    times = np.asarray(time_grid, dtype=float)
    proj_e = kron(PROJ_E, space.identity)
    proj_g = kron(PROJ_G, space.identity)
    pe = expectation_series(prop, state.rho, proj_e, times)
    pg = expectation_series(prop, state.rho, proj_g, times)
    meta = {
        "g": g,
        "alpha": [complex(alpha).real, complex(alpha).imag],
        "n_th": n_th,
        "dim": space.dim,
        "hamiltonian": hamiltonian_choice,
        "atom": atom,
        "discarded_tail_mass": state.metadata["discarded_tail_mass"],
    }
    return TimeSeries(times, {"Pe": pe, "Pg": pg}, meta)


def collapse_time(g, n_th):
    """Interaction time where ``g tau sqrt(n_th + 2) / 2 = 1``."""
    if not g > 0:
        raise DomainError("g must be > 0")
    return 2.0 / (g * math.sqrt(n_th + 2.0))
