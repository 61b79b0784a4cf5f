import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import random_density_matrix, random_unitary
from thermalcat.dynamics import collapse_time
from thermalcat.errors import DomainError
from thermalcat.fock import FockSpace, displaced_thermal_state
from thermalcat.linalg import CompositeSpace, kron
from thermalcat.metrics import (
    BipartiteSplit,
    branch_overlap,
    branch_overlap_closed_form,
    fidelity,
    log_negativity,
    negativity,
    trace_distance,
)

seeds = st.integers(0, 2**32 - 1)


def _pure(v):
    v = np.asarray(v, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def test_fidelity_of_pure_states_is_overlap_squared(rng):
    a = rng.normal(size=6) + 1j * rng.normal(size=6)
    b = rng.normal(size=6) + 1j * rng.normal(size=6)
    ref = abs(np.vdot(a, b)) ** 2 / (np.vdot(a, a).real * np.vdot(b, b).real)
    assert fidelity(_pure(a), _pure(b)) == pytest.approx(ref, abs=1e-12)


def test_fidelity_near_one_is_resolved():
    """1 - F around 1e-10 must not be swamped by square-root rounding."""
    rho = np.diag([0.6, 0.4]).astype(complex)
    eps = 1e-5
    sigma = np.diag([0.6 + eps, 0.4 - eps]).astype(complex)
    ref = (math.sqrt(0.6 * (0.6 + eps)) + math.sqrt(0.4 * (0.4 - eps))) ** 2
    assert 1 - fidelity(rho, sigma) == pytest.approx(1 - ref, rel=1e-3)


@pytest.mark.invariant
@given(seed=seeds, dim=st.integers(2, 8))
def test_fidelity_and_trace_distance_bounds(seed, dim):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(rng, dim)
    sigma = random_density_matrix(rng, dim, rank=max(1, dim // 2))
    f = fidelity(rho, sigma)
    d = trace_distance(rho, sigma)
    assert f == pytest.approx(fidelity(sigma, rho), abs=1e-10)
    assert 0.0 <= d <= 1.0
    # Fuchs-van de Graaf
    assert 1 - math.sqrt(f) <= d + 1e-10
    assert d <= math.sqrt(1 - f) + 1e-10
    assert fidelity(rho, rho) == pytest.approx(1.0, abs=1e-10)


def test_shape_mismatch():
    with pytest.raises(DomainError):
        fidelity(np.eye(2) / 2, np.eye(3) / 3)


def test_bell_state_negativity():
    bell = _pure([1, 0, 0, 1])
    split = BipartiteSplit.two_factor(2, 2)
    assert negativity(bell, split) == pytest.approx(0.5, abs=1e-14)
    assert log_negativity(bell, split) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.invariant
@given(seed=seeds)
def test_negativity_zero_for_products_and_local_unitary_invariant(seed):
    rng = np.random.default_rng(seed)
    split = BipartiteSplit.two_factor(3, 4)
    prod = kron(random_density_matrix(rng, 3), random_density_matrix(rng, 4))
    assert negativity(prod, split) < 1e-12
    rho = random_density_matrix(rng, 12, rank=1)
    u = kron(random_unitary(rng, 3), random_unitary(rng, 4))
    assert negativity(u @ rho @ u.conj().T, split) == pytest.approx(negativity(rho, split), abs=1e-10)


def test_three_factor_split():
    space = CompositeSpace((2, 2, 2))
    ghz = _pure([1, 0, 0, 0, 0, 0, 0, 1])
    assert negativity(ghz, BipartiteSplit(space, (0,), (1, 2))) == pytest.approx(0.5, abs=1e-14)
    assert negativity(ghz, BipartiteSplit(space, (0, 1), (2,))) == pytest.approx(0.5, abs=1e-14)
    with pytest.raises(DomainError):
        BipartiteSplit(space, (0,), (1,))
    with pytest.raises(DomainError):
        BipartiteSplit(space, (), (0, 1, 2))


@pytest.mark.parametrize("n_th", [0.0, 0.5, 1.0, 2.0])
@pytest.mark.parametrize("beta", [0.3j, 0.7, 1.0 + 0.5j])
def test_branch_overlap_matrix_and_closed_form(n_th, beta):
    assert branch_overlap(5.0, n_th, beta) == pytest.approx(branch_overlap_closed_form(n_th, beta), abs=1e-12)


@pytest.mark.parametrize("n_th", [0.0, 0.2, 0.35])
def test_overlap_suppressed_at_collapse_time(n_th):
    """Branch overlap at tau_c is at least an e-fold below its value at beta = 0.

    Holds for small occupations; the collapse-time criterion shrinks the
    overlap only by exp(-4/((n+2)(2n+1))), which stops being an e-fold above n = (sqrt(41) - 5)/4 ~ 0.35.
    """
    tau = collapse_time(1.0, n_th)
    beta = 0.5j * tau
    ratio = branch_overlap(0.0, n_th, beta) / branch_overlap(0.0, n_th, 0.0)
    assert ratio <= math.exp(-1)


def test_branch_trace_distance_at_collapse_time():
    tau = collapse_time(1.0, 0.0)
    sp = FockSpace(30)
    plus = displaced_thermal_state(0.5j * tau, 0.0, sp)
    minus = displaced_thermal_state(-0.5j * tau, 0.0, sp)
    # pure branches: D = sqrt(1 - |<b|-b>|^2) = sqrt(1 - e^{-4|b|^2})
    assert trace_distance(plus, minus) == pytest.approx(math.sqrt(1 - math.exp(-2.0)), abs=1e-10)
