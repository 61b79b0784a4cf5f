import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermalcat.dynamics import (
    PROJ_G,
    S_Z,
    CouplingParams,
    JointState,
    collapse_time,
    conditional_displacement_hamiltonian,
    displaced_hamiltonian,
    displaced_hamiltonian_closed_form,
    evolve,
    excitation_number,
    expectation_series,
    jcm_hamiltonian,
    multimode_displaced_hamiltonian_closed_form,
    rabi_probability_exact,
    rwa_hamiltonian,
    single_mode_initial_state,
    two_mode_displaced_hamiltonian,
    two_mode_hamiltonian,
)
from thermalcat.errors import DomainError
from thermalcat.fock import FockSpace, truncation_for
from thermalcat.linalg import CompositeSpace, Propagator, kron


def test_coupling_params():
    p = CouplingParams(g=0.5, alpha=4.0)
    assert p.omega == 2.0
    assert p.theta(0.3) == pytest.approx(0.6)
    assert p.beta(0.3) == pytest.approx(0.075j)
    with pytest.raises(DomainError):
        CouplingParams(g=0.0)
    with pytest.raises(DomainError):
        CouplingParams(g=1.0, g1=1.0)


@pytest.mark.parametrize("n_th,expected", [(0.0, math.sqrt(2)), (2.0, 1.0)])
def test_collapse_time(n_th, expected):
    assert collapse_time(1.0, n_th) == pytest.approx(expected, rel=1e-15)


def test_jcm_conserves_excitation_number():
    sp = FockSpace(15)
    h = jcm_hamiltonian(1.3, sp)
    n_exc = excitation_number([sp])
    comm = h @ n_exc - n_exc @ h
    assert np.abs(comm).max() < 1e-12
    h2 = two_mode_hamiltonian(1.0, 0.7, FockSpace(6), FockSpace(5))
    n2 = excitation_number([FockSpace(6), FockSpace(5)])
    assert np.abs(h2 @ n2 - n2 @ h2).max() < 1e-12


def test_kick_anticommutes_with_jcm():
    sp = FockSpace(10)
    h = jcm_hamiltonian(1.0, sp)
    k = kron(S_Z, sp.identity)
    assert np.allclose(k @ h @ k, -h, atol=0)


@pytest.mark.parametrize("n", [0, 1, 4, 9])
def test_vacuum_rabi_frequencies(n):
    """|e, n> oscillates with |g, n+1> at frequency g sqrt(n+1)."""
    g = 0.8
    sp = FockSpace(12)
    h = jcm_hamiltonian(g, sp)
    psi = np.zeros(2 * sp.dim, dtype=complex)
    psi[n] = 1.0
    rho = np.outer(psi, psi)
    state = JointState(rho, CompositeSpace((2, sp.dim)))
    t = 0.9
    out = evolve(state, h, t)
    pe = np.trace(out.rho[: sp.dim, : sp.dim]).real
    assert pe == pytest.approx(math.cos(g * math.sqrt(n + 1) * t) ** 2, abs=1e-12)


@pytest.mark.parametrize("alpha", [0.5, 2.0, 1.0 - 1.5j, 3.0j])
def test_displaced_hamiltonian_matches_closed_form(alpha):
    sp = FockSpace(20)
    num = displaced_hamiltonian(1.1, alpha, sp)
    ref = displaced_hamiltonian_closed_form(1.1, alpha, sp)
    assert np.abs(num - ref).max() < 1e-10


def test_two_mode_displaced_matches_closed_form():
    s1, s2 = FockSpace(8), FockSpace(7)
    num = two_mode_displaced_hamiltonian(1.0, 0.6, 2.0, -1.0j, s1, s2)
    ref = multimode_displaced_hamiltonian_closed_form([1.0, 0.6], [2.0, -1.0j], [s1, s2])
    assert np.abs(num - ref).max() < 1e-10


def test_rwa_is_real_alpha_sigma_x_form():
    g, alpha = 0.7, 5.0
    sp = FockSpace(6)
    sx = np.array([[0, 1], [1, 0]], dtype=complex)
    ref = kron(sx, alpha * g * sp.identity + 0.5 * g * (sp.a + sp.a_dag))
    assert np.allclose(rwa_hamiltonian(g, alpha, sp), ref, atol=1e-14)


def test_rwa_keeps_the_quadrature_along_the_drive_phase():
    sp = FockSpace(6)
    alpha = 3.0 * np.exp(0.4j)
    h = rwa_hamiltonian(1.0, alpha, sp)
    assert np.allclose(h, h.conj().T)
    # the dropped part of the exact frame Hamiltonian rotates at 2|alpha| g:
    # it averages to zero, so the difference has no block along sigma_phi (x) I
    diff = displaced_hamiltonian_closed_form(1.0, alpha, sp) - h
    u = np.exp(0.4j)
    sphi = np.array([[0, u], [np.conj(u), 0]])
    assert abs(np.trace(kron(sphi, sp.identity) @ diff)) < 1e-10


def test_conditional_displacement_is_block_diagonal_in_sigma_x_basis():
    sp = FockSpace(8)
    h = conditional_displacement_hamiltonian(1.0, sp)
    plus = np.array([1, 1]) / math.sqrt(2)
    minus = np.array([1, -1]) / math.sqrt(2)
    off = kron(np.outer(plus, minus), sp.identity)
    assert abs(np.trace(off @ h)) < 1e-14
    assert np.abs(kron(np.outer(plus, plus), sp.identity) @ h @ kron(np.outer(minus, minus), sp.identity)).max() < 1e-14


@pytest.mark.parametrize("alpha,n_th", [(2.0, 0.0), (3.0, 0.5), (1.5j, 1.0)])
def test_full_and_displaced_routes_agree(alpha, n_th):
    """Lab-frame JCM and exact frame Hamiltonian give the same P_e(t)."""
    times = np.linspace(0, 3, 31)
    n_lab = truncation_for(alpha, n_th, 1e-12) + 12
    n_frame = truncation_for(0.5 * 3, n_th, 1e-12) + 14
    lab = rabi_probability_exact(1.0, alpha, n_th, times, FockSpace(n_lab), "full")
    frame = rabi_probability_exact(1.0, alpha, n_th, times, FockSpace(n_frame), "displaced")
    assert np.abs(lab["Pe"] - frame["Pe"]).max() < 1e-8
    assert np.allclose(lab["Pe"] + lab["Pg"], 1.0, atol=1e-9)


def test_rabi_probability_exact_rejects_unknown_choice():
    with pytest.raises(DomainError):
        rabi_probability_exact(1.0, 1.0, 0.0, [0.0, 1.0], FockSpace(10), "rwa")


def test_initial_state_frames():
    sp = FockSpace(40)
    lab = single_mode_initial_state(2.0, 0.3, sp, "g", "lab")
    frame = single_mode_initial_state(2.0, 0.3, sp, "g", "displaced")
    assert lab.atom_probability("g") == pytest.approx(1.0)
    n = sp.n
    assert np.trace(lab.field_state() @ n).real == pytest.approx(4.3, abs=1e-8)
    assert np.trace(frame.field_state() @ n).real == pytest.approx(0.3, abs=1e-8)
    with pytest.raises(DomainError):
        single_mode_initial_state(2.0, 0.3, sp, "g", "rotating")
    with pytest.raises(DomainError):
        single_mode_initial_state(2.0, 0.3, sp, "x")


def test_joint_state_reductions():
    sp = FockSpace(5)
    st_ = single_mode_initial_state(0.0, 0.0, sp, "+", "lab")
    atom = st_.atom_state()
    assert np.allclose(atom, 0.5 * np.ones((2, 2)))
    assert np.allclose(st_.field_state("e"), st_.field_state("g"))
    with pytest.raises(DomainError):
        single_mode_initial_state(0.0, 0.0, sp, "e").field_state("g")


@pytest.mark.invariant
@given(
    g=st.floats(0.2, 2.0),
    alpha=st.floats(0.0, 2.0),
    t=st.floats(0.0, 5.0),
)
def test_unitary_evolution_preserves_trace_and_spectrum(g, alpha, t):
    sp = FockSpace(24)
    st0 = single_mode_initial_state(alpha, 0.2, sp, "g", "lab", tail_tol=1e-3)
    out = evolve(st0, jcm_hamiltonian(g, sp), t)
    assert abs(np.trace(out.rho).real - np.trace(st0.rho).real) < 1e-10
    w0 = np.linalg.eigvalsh(st0.rho)
    w1 = np.linalg.eigvalsh(out.rho)
    assert np.abs(w0 - w1).max() < 1e-10


def test_expectation_series_matches_stepwise_evolution():
    sp = FockSpace(16)
    h = jcm_hamiltonian(1.0, sp)
    st0 = single_mode_initial_state(1.2, 0.1, sp, "g", "lab", tail_tol=1e-6)
    prop = Propagator(h)
    proj = kron(PROJ_G, sp.identity)
    times = [0.0, 0.7, 2.2]
    fast = expectation_series(prop, st0.rho, proj, times)
    slow = [np.trace(proj @ evolve(st0, h, t, prop).rho).real for t in times]
    assert np.allclose(fast, slow, atol=1e-12)


def test_evolve_shape_mismatch():
    st0 = single_mode_initial_state(0.0, 0.0, FockSpace(5))
    with pytest.raises(DomainError):
        evolve(st0, jcm_hamiltonian(1.0, FockSpace(6)), 1.0)
