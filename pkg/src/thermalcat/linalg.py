"""Dense complex matrix substrate.

Everything here works on plain ``numpy`` arrays. Hermitian eigenproblems go
through LAPACK (``numpy.linalg.eigh``); unitaries are always built from the
Hermitian eigendecomposition, never by scaling-and-squaring, so they are
unitary to roundoff and the factorization can be reused across many times.
"""

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .config import tolerances
from .errors import DomainError


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor factorization, atom first then modes."""

    factor_dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims:
            raise DomainError("CompositeSpace needs at least one factor")
        if any(d < 2 for d in dims):
            raise DomainError(f"every factor dimension must be >= 2, got {dims}")
        object.__setattr__(self, "factor_dims", dims)

    @property
    def total_dim(self):
        return int(np.prod(self.factor_dims))

    @property
    def n_factors(self):
        return len(self.factor_dims)

    def check(self, rho):
        if rho.shape != (self.total_dim, self.total_dim):
            raise DomainError(
                f"matrix shape {rho.shape} does not match composite dimension {self.total_dim}"
            )


def _require_square(m):
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermiticity_error(m):
    """max|M - M^dagger| relative to max|M| (0 for the zero matrix)."""
    m = np.asarray(m)
    scale = np.max(np.abs(m)) if m.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(m - m.conj().T)) / scale)


def is_hermitian(m, tol=None):
    tol = tolerances().hermiticity if tol is None else tol
    return hermiticity_error(m) <= tol


def dag(m):
    return np.conj(m).T


def hermitian_eig(m, tol=None):
    """Eigendecomposition of a Hermitian matrix.

    Returns ``(eigenvalues, eigenvectors)`` with real eigenvalues in ascending
    order and a unitary eigenvector matrix, so ``m = V @ diag(w) @ V^dagger``.
    Raises ``DomainError`` for non-square or non-Hermitian input.
    """
    m = _require_square(m)
    tol = tolerances().hermiticity if tol is None else tol
    err = hermiticity_error(m)
    if err > tol:
        raise DomainError(f"matrix is not Hermitian (relative asymmetry {err:.3e} > {tol:.1e})")
    w, v = np.linalg.eigh(m)
    return w, v


class Propagator:
    """Cached eigendecomposition of a Hamiltonian; ``U(t) = exp(-iHt)`` for any t."""

    def __init__(self, hamiltonian):
        self.hamiltonian = np.asarray(hamiltonian)
        self.energies, self.vectors = hermitian_eig(self.hamiltonian)

    def unitary(self, t):
        phases = np.exp(-1j * self.energies * t)
        return (self.vectors * phases) @ dag(self.vectors)

    def evolve(self, rho, t):
        """``U(t) rho U(t)^dagger`` evaluated in the eigenbasis."""
        v = self.vectors
        phases = np.exp(-1j * self.energies * t)
        r = dag(v) @ rho @ v
        r = phases[:, None] * r * phases.conj()[None, :]
        return v @ r @ dag(v)

    def eigenbasis(self, rho):
        return dag(self.vectors) @ rho @ self.vectors

    def evolve_from_eigenbasis(self, r0, t):
        phases = np.exp(-1j * self.energies * t)
        r = phases[:, None] * r0 * phases.conj()[None, :]
        return self.vectors @ r @ dag(self.vectors)


def unitary_from_hamiltonian(hamiltonian, t):
    """``exp(-iHt)`` through the Hermitian eigendecomposition of ``H``."""
    return Propagator(hamiltonian).unitary(t)


def kron(*mats):
    """Kronecker product of one or more matrices, left factor slowest."""
    return reduce(np.kron, mats)


def partial_trace(rho, space, keep):
    """Trace out every factor of ``space`` not listed in ``keep``.

    ``keep`` is an iterable of factor indices; the kept factors stay in their
    original order.
    """
    rho = np.asarray(rho)
    space.check(rho)
    keep = sorted(set(int(k) for k in keep))
    n = space.n_factors
    if any(k < 0 or k >= n for k in keep):
        raise DomainError(f"factor indices {keep} out of range for {n} factors")
    dims = space.factor_dims
    t = rho.reshape(dims + dims)
    # trace the highest index first so remaining axis numbers stay valid
    current = n
    for k in reversed(range(n)):
        if k in keep:
            continue
        t = np.trace(t, axis1=k, axis2=k + current)
        current -= 1
    d = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(d, d)


def partial_transpose(rho, space, factor):
    """Transpose the indices of a single factor, leaving the rest untouched."""
    rho = np.asarray(rho)
    space.check(rho)
    n = space.n_factors
    if not 0 <= factor < n:
        raise DomainError(f"factor index {factor} out of range for {n} factors")
    dims = space.factor_dims
    t = rho.reshape(dims + dims)
    axes = list(range(2 * n))
    axes[factor], axes[factor + n] = axes[factor + n], axes[factor]
    return t.transpose(axes).reshape(rho.shape)


def psd_sqrt(m, tol=None):
    """Hermitian square root of a positive semidefinite matrix.

    Eigenvalues down to ``-tol`` are clipped to zero; anything more negative
    raises ``DomainError``.
    """
    tol = tolerances().positivity_integrator if tol is None else tol
    w, v = hermitian_eig(0.5 * (m + dag(m)), tol=np.inf)
    if w[0] < -tol * max(1.0, abs(w[-1])):
        raise DomainError(f"matrix is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dag(v)


def check_density_matrix(rho, tol=None, positivity=None):
    """Raise ``DomainError`` unless ``rho`` is a unit-trace Hermitian PSD matrix."""
    tols = tolerances()
    tol = tols.hermiticity if tol is None else tol
    positivity = tols.positivity if positivity is None else positivity
    rho = _require_square(rho)
    tr = np.trace(rho)
    if abs(tr - 1.0) > max(tol, tols.trace_drift):
        raise DomainError(f"trace {tr:.12g} differs from 1")
    err = hermiticity_error(rho)
    if err > tol:
        raise DomainError(f"density matrix not Hermitian ({err:.3e})")
    w = np.linalg.eigvalsh(0.5 * (rho + dag(rho)))
    if w[0] < -positivity:
        raise DomainError(f"density matrix has eigenvalue {w[0]:.3e}")
    return rho


def purity(rho):
    return float(np.real(np.vdot(rho.conj().T, rho)))


def expectation(rho, op):
    return complex(np.sum(rho * op.T))
