"""Distances, fidelity and entanglement measures for dense density matrices."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fock import FockSpace, ThermalParams, displaced_thermal_state, truncation_for
from .linalg import CompositeSpace, dag, partial_transpose, psd_sqrt


@dataclass(frozen=True)
class BipartiteSplit:
    """Partition of the factors of ``space`` into parts A and B."""

    space: CompositeSpace
    part_a: tuple
    part_b: tuple

    def __post_init__(self):
        a = tuple(sorted(int(k) for k in self.part_a))
        b = tuple(sorted(int(k) for k in self.part_b))
        if not a or not b:
            raise DomainError("both parts of a bipartition must be nonempty")
        if sorted(a + b) != list(range(self.space.n_factors)):
            raise DomainError(f"parts {a} | {b} must cover factors 0..{self.space.n_factors - 1} exactly once")
        object.__setattr__(self, "part_a", a)
        object.__setattr__(self, "part_b", b)

    @classmethod
    def two_factor(cls, dim_a, dim_b):
        return cls(CompositeSpace((dim_a, dim_b)), (0,), (1,))


def _same_shape(rho, sigma):
    rho = np.asarray(rho)
    sigma = np.asarray(sigma)
    if rho.shape != sigma.shape or rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DomainError(f"shape mismatch: {rho.shape} vs {sigma.shape}")
    return rho, sigma


def fidelity(rho, sigma):
    """Uhlmann fidelity ``(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2``.

    Evaluated as the squared nuclear norm of ``sqrt(rho) sqrt(sigma)``: the
    singular values carry absolute rather than square-rooted rounding error,
    so fidelities close to 1 stay accurate, and the result is symmetric.
    """
    rho, sigma = _same_shape(rho, sigma)
    s = np.linalg.svd(psd_sqrt(rho) @ psd_sqrt(sigma), compute_uv=False)
    return float(min(1.0, max(0.0, np.sum(s) ** 2)))


def trace_distance(rho, sigma):
    """``(1/2) ||rho - sigma||_1`` from the eigenvalues of the difference."""
    rho, sigma = _same_shape(rho, sigma)
    diff = rho - sigma
    w = np.linalg.eigvalsh(0.5 * (diff + dag(diff)))
    return float(0.5 * np.sum(np.abs(w)))


def negativity(rho, split):
    """Sum of the magnitudes of the negative eigenvalues of ``rho^{T_B}``."""
    rho = np.asarray(rho)
    split.space.check(rho)
    pt = rho
    for k in split.part_b:
        pt = partial_transpose(pt, split.space, k)
    w = np.linalg.eigvalsh(0.5 * (pt + dag(pt)))
    return float(-np.sum(w[w < 0]))


def log_negativity(rho, split):
    return math.log2(2 * negativity(rho, split) + 1)


def branch_overlap(alpha, n_th, beta, dim=None):
    """``Tr[D(-beta) rho_th D(-beta)^+ D(beta) rho_th D(beta)^+]`` by dense matrices.

    The common displacement ``alpha`` cancels inside the trace, so only
    ``beta`` and ``n_th`` matter; ``alpha`` is accepted for symmetry with the
    state constructors.
    """
    params = ThermalParams(n_th)
    if dim is None:
        dim = truncation_for(abs(complex(beta)), params, 1e-14) + 4
    space = FockSpace(dim)
    plus = displaced_thermal_state(beta, params, space)
    minus = displaced_thermal_state(-complex(beta), params, space)
    return float(np.real(np.sum(minus * plus.T)))


def branch_overlap_closed_form(n_th, beta):
    """Gaussian overlap ``exp(-4|beta|^2 / (2n+1)) / (2n+1)``."""
    s = 2.0 * n_th + 1.0
    return math.exp(-4.0 * abs(complex(beta)) ** 2 / s) / s
