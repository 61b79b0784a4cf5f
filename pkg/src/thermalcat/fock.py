"""Truncated Fock space for a single bosonic mode.

Displacements are built on a padded space and cropped back, so that the
returned ``N x N`` block is accurate wherever the displaced state actually
fits inside ``N`` levels.
"""

import cmath
import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import mpmath
import numpy as np
from scipy import constants

from .config import tolerances
from .errors import DomainError, SeriesError, TruncationError
from .linalg import dag, hermitian_eig


@dataclass(frozen=True)
class FockSpace:
    """Levels ``|0>, ..., |dim-1>`` with cached ladder and number operators."""

    dim: int

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise DomainError(f"Fock dimension must be an integer >= 2, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))

    @cached_property
    def a(self):
        a = np.diag(np.sqrt(np.arange(1, self.dim, dtype=float)), 1).astype(complex)
        a.setflags(write=False)
        return a

    @cached_property
    def a_dag(self):
        ad = dag(self.a).copy()
        ad.setflags(write=False)
        return ad

    @cached_property
    def n(self):
        n = np.diag(np.arange(self.dim, dtype=float)).astype(complex)
        n.setflags(write=False)
        return n

    @cached_property
    def identity(self):
        i = np.eye(self.dim, dtype=complex)
        i.setflags(write=False)
        return i

    @cached_property
    def parity(self):
        p = np.diag((-1.0) ** np.arange(self.dim)).astype(complex)
        p.setflags(write=False)
        return p


@dataclass(frozen=True)
class ThermalParams:
    """Mean thermal occupation of one mode (dimensionless)."""

    mean_occupation: float

    def __post_init__(self):
        n = float(self.mean_occupation)
        if not math.isfinite(n) or n < 0:
            raise DomainError(f"mean occupation must be finite and >= 0, got {n}")
        object.__setattr__(self, "mean_occupation", n)

    @classmethod
    def from_temperature(cls, omega, temperature):
        """Bose-Einstein occupation for angular frequency ``omega`` (rad/s) at ``temperature`` (K)."""
        if temperature < 0 or omega <= 0:
            raise DomainError("need omega > 0 and temperature >= 0")
        if temperature == 0:
            return cls(0.0)
        x = constants.hbar * omega / (constants.k * temperature)
        return cls(1.0 / math.expm1(x))

    @property
    def ratio(self):
        """Geometric ratio ``p_{n+1}/p_n``."""
        n = self.mean_occupation
        return n / (1.0 + n)


def ladder_operators(space):
    """``(a, a_dag)`` for ``space``."""
    return space.a, space.a_dag


def _as_params(params):
    return params if isinstance(params, ThermalParams) else ThermalParams(params)


def thermal_populations(params, dim):
    n = _as_params(params).mean_occupation
    if n == 0:
        p = np.zeros(dim)
        p[0] = 1.0
        return p
    k = np.arange(dim)
    return np.exp(k * math.log(n) - (k + 1) * math.log1p(n))


def thermal_tail_mass(params, dim):
    """Probability of ``n >= dim`` in the untruncated thermal distribution."""
    return _as_params(params).ratio ** dim


def thermal_state(params, space, allow_truncation=False, tail_tol=None):
    """Diagonal thermal density matrix, renormalized after truncation."""
    params = _as_params(params)
    tail_tol = tolerances().tail if tail_tol is None else tail_tol
    tail = thermal_tail_mass(params, space.dim)
    if tail > tail_tol and not allow_truncation:
        raise TruncationError(
            f"thermal tail mass {tail:.3e} above {tail_tol:.1e} at dim {space.dim} "
            f"(mean occupation {params.mean_occupation})"
        )
    p = thermal_populations(params, space.dim)
    return np.diag(p / p.sum()).astype(complex)


def padded_dim(dim, alpha_abs):
    """Working dimension that keeps ``D(alpha)|n>`` accurate for all ``n < dim``."""
    if alpha_abs == 0:
        return dim
    r = math.sqrt(dim) + alpha_abs
    return int(math.ceil(r * r + 12.0 * r + 16.0))


@lru_cache(maxsize=64)
def _generator_eig(dim, phase):
    # Hermitian generator i(e^{i phase} a^+ - e^{-i phase} a) for a unit displacement
    a = FockSpace(dim).a
    u = complex(math.cos(phase), math.sin(phase))
    gen = 1j * (u * dag(a) - np.conj(u) * a)
    w, v = hermitian_eig(gen)
    w.setflags(write=False)
    v.setflags(write=False)
    return w, v


def _displacement_full(alpha, dim):
    """``exp(alpha a^+ - alpha* a)`` exponentiated on exactly ``dim`` levels."""
    alpha = complex(alpha)
    r = abs(alpha)
    if r == 0:
        return np.eye(dim, dtype=complex)
    w, v = _generator_eig(dim, round(math.atan2(alpha.imag, alpha.real), 15))
    return (v * np.exp(-1j * r * w)) @ dag(v)


def displacement_operator(alpha, space):
    """``D(alpha)`` restricted to ``space``.

    Built on a padded space and cropped, so columns whose displaced image
    fits inside ``space`` are exact to roundoff.
    """
    alpha = complex(alpha)
    if not (math.isfinite(alpha.real) and math.isfinite(alpha.imag)):
        raise DomainError(f"displacement must be finite, got {alpha}")
    big = padded_dim(space.dim, abs(alpha))
    return _displacement_full(alpha, big)[: space.dim, : space.dim].copy()


def displace_matrix(m, alpha, dim_out=None):
    """``D(alpha) m D(alpha)^dagger`` for a single-mode operator ``m``.

    ``m`` is zero-padded to a working dimension large enough for both its own
    support and ``dim_out``; the result is cropped to ``dim_out``.
    """
    n_in = m.shape[0]
    dim_out = n_in if dim_out is None else dim_out
    alpha = complex(alpha)
    if alpha == 0 and dim_out == n_in:
        return np.array(m, dtype=complex)
    big = max(padded_dim(max(n_in, dim_out), abs(alpha)), n_in, dim_out)
    d = _displacement_full(alpha, big)[:, :n_in]
    out = d @ m @ dag(d)
    return out[:dim_out, :dim_out]


def _displaced_thermal_raw(alpha, params, dim):
    params = _as_params(params)
    # thermal support with tail well below double precision
    n_th = thermal_state(params, FockSpace(max(dim, _thermal_len(params, 1e-18))), allow_truncation=True)
    rho = displace_matrix(n_th, alpha, dim)
    return 0.5 * (rho + dag(rho))


def _thermal_len(params, tol):
    q = _as_params(params).ratio
    if q == 0:
        return 2
    return max(2, int(math.ceil(math.log(tol) / math.log(q))))


def displaced_thermal_tail(alpha, params, dim):
    """Mass of ``D(alpha) rho_th D(alpha)^dagger`` on levels ``>= dim``."""
    rho = _displaced_thermal_raw(alpha, params, dim)
    return max(0.0, 1.0 - float(np.real(np.trace(rho))))


def displaced_thermal_state(alpha, params, space, allow_truncation=False, tail_tol=None):
    """``D(alpha) rho_th D(alpha)^dagger`` cropped to ``space`` and renormalized."""
    rho, _ = displaced_thermal_state_with_tail(alpha, params, space, allow_truncation, tail_tol)
    return rho


def displaced_thermal_state_with_tail(alpha, params, space, allow_truncation=False, tail_tol=None):
    """As :func:`displaced_thermal_state`, also returning the discarded mass."""
    tail_tol = tolerances().tail if tail_tol is None else tail_tol
    rho = _displaced_thermal_raw(alpha, params, space.dim)
    discarded = max(0.0, 1.0 - float(np.real(np.trace(rho))))
    if discarded > tail_tol and not allow_truncation:
        raise TruncationError(
            f"displaced thermal state loses mass {discarded:.3e} > {tail_tol:.1e} "
            f"at dim {space.dim} (alpha={alpha}, n_th={_as_params(params).mean_occupation})"
        )
    return rho / np.trace(rho).real, discarded


def photon_distribution(alpha, params, dim):
    """Photon-number probabilities of the displaced thermal state on ``dim`` levels (unrenormalized)."""
    return np.real(np.diag(_displaced_thermal_raw(alpha, params, dim))).clip(0.0, None)


def truncation_for(alpha, params, tail_tol=None, floor=2):
    """Smallest dimension whose discarded displaced-thermal mass is below ``tail_tol``.

    The photon distribution is computed once at a generous trial dimension
    that does not depend on ``tail_tol``, which makes the result monotone in
    the tolerance.
    """
    tail_tol = tolerances().tail if tail_tol is None else tail_tol
    if not 0 < tail_tol < 1:
        raise DomainError(f"tail_tol must lie in (0, 1), got {tail_tol}")
    params = _as_params(params)
    a2 = abs(complex(alpha)) ** 2
    n = params.mean_occupation
    std = math.sqrt(a2 * (2 * n + 1) + n * (n + 1))
    trial = int(math.ceil(a2 + n + 12 * std + _thermal_len(params, 1e-16) + 12))
    p = photon_distribution(alpha, params, trial)
    # tails[k] = mass on levels >= k, computed from the top to avoid cancellation
    tails = np.concatenate([np.cumsum(p[::-1])[::-1], [0.0]])
    tails += max(0.0, 1.0 - p.sum())
    idx = np.nonzero(tails < tail_tol)[0]
    dim = int(idx[0]) if idx.size else trial
    return max(dim, floor)


# ---------------------------------------------------------------------------
# Fock-basis series for displaced thermal states

def _series_cutoff(n_bar, tol=1e-16):
    q = n_bar / (1.0 + n_bar)
    if q == 0:
        return 0
    return int(math.ceil(math.log(tol) / math.log(q)))


@lru_cache(maxsize=200_000)
def displacement_coefficient(nu, m, alpha):
    """``<m|D(alpha)|nu>`` from the finite binomial-type sum over ``l <= min(nu, m)``."""
    alpha = complex(alpha)
    r = abs(alpha)
    if r == 0:
        return complex(1.0 if nu == m else 0.0)
    # the alpha phase factors out of every term
    phase = cmath.exp(1j * (m - nu) * cmath.phase(alpha))
    log_pref = 0.5 * (math.lgamma(nu + 1) + math.lgamma(m + 1)) - 0.5 * r * r
    log_r = math.log(r)
    terms = []
    for l in range(min(nu, m) + 1):
        mag = (
            log_pref
            + (nu + m - 2 * l) * log_r
            - math.lgamma(l + 1)
            - math.lgamma(nu - l + 1)
            - math.lgamma(m - l + 1)
        )
        sign = -1.0 if (nu - l) % 2 else 1.0
        terms.append(sign * math.exp(mag))
    s = math.fsum(terms)
    biggest = max(abs(t) for t in terms)
    # lgamma/exp carry ~1e-15 relative error per term; once terms exceed the
    # sum by two digits that error becomes visible, so redo it exactly
    if biggest > 0 and abs(s) < biggest * 1e-2:
        s = _coefficient_mp(nu, m, r, biggest, s)
    return phase * s


def _coefficient_mp(nu, m, r, biggest, s_float):
    # cancellation: redo the real sum with enough digits to absorb it
    digits = 30 + int(math.log10(biggest / max(abs(s_float), 1e-300)))
    with mpmath.workdps(min(digits, 400)):
        rr = mpmath.mpf(r)
        pref = mpmath.sqrt(mpmath.factorial(nu) * mpmath.factorial(m)) * mpmath.exp(-rr * rr / 2)
        total = mpmath.mpf(0)
        for l in range(min(nu, m) + 1):
            total += (
                (-1) ** (nu - l)
                * rr ** (nu + m - 2 * l)
                / (mpmath.factorial(l) * mpmath.factorial(nu - l) * mpmath.factorial(m - l))
            )
        return float(pref * total)


def displaced_thermal_fock_coeff(alpha, n_bar, m, n, nu_max=None, tail_tol=None):
    """Fock matrix element ``rho_{m,n}`` of a displaced thermal state by series.

    Sums the thermal weights ``n_bar^nu / (1+n_bar)^(nu+1)`` against products
    of displacement coefficients up to ``nu_max``. Raises ``SeriesError`` if
    the thermal mass beyond the cutoff exceeds ``tail_tol``.
    """
    if m < 0 or n < 0:
        raise DomainError("Fock indices must be >= 0")
    if n_bar < 0:
        raise DomainError("n_bar must be >= 0")
    tail_tol = tolerances().tail if tail_tol is None else tail_tol
    if nu_max is None:
        nu_max = _series_cutoff(n_bar)
    q = n_bar / (1.0 + n_bar)
    tail = q ** (nu_max + 1)
    if tail > tail_tol:
        raise SeriesError(f"thermal mass {tail:.3e} beyond nu_max={nu_max} exceeds {tail_tol:.1e}")
    alpha = complex(alpha)
    total = 0j
    for nu in range(nu_max + 1):
        w = (1.0 / (1.0 + n_bar)) * q**nu
        if w == 0.0:
            break
        total += w * displacement_coefficient(nu, m, alpha) * np.conj(displacement_coefficient(nu, n, alpha))
    return complex(total)


def displaced_thermal_fock_matrix(alpha, n_bar, dim, nu_max=None):
    """All ``rho_{m,n}`` for ``m, n < dim`` by the series route."""
    out = np.empty((dim, dim), dtype=complex)
    for m in range(dim):
        for n in range(m, dim):
            v = displaced_thermal_fock_coeff(alpha, n_bar, m, n, nu_max=nu_max)
            out[m, n] = v
            out[n, m] = np.conj(v)
    return out
