"""Wigner functions on rectangular phase-space grids.

Phase-space points are complex amplitudes ``alpha = x + i p``, so a coherent
state ``|beta>`` peaks at ``(Re beta, Im beta)`` and the vacuum has
quadrature variance 1/4.
"""

import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .config import tolerances
from .errors import DomainError, TruncationError
from .fock import _generator_eig, padded_dim
from .linalg import dag
from .timeseries import format_float

_HALF_PI = round(math.pi / 2, 15)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    x_range: tuple
    p_range: tuple
    nx: int = 101
    np: int = 101

    def __post_init__(self):
        for name, (lo, hi) in (("x_range", self.x_range), ("p_range", self.p_range)):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise DomainError(f"{name} must be a finite nonempty interval, got {(lo, hi)}")
        if self.nx < 2 or self.np < 2:
            raise DomainError("need at least two samples per axis")
        object.__setattr__(self, "x_range", (float(self.x_range[0]), float(self.x_range[1])))
        object.__setattr__(self, "p_range", (float(self.p_range[0]), float(self.p_range[1])))

    @property
    def xs(self):
        return np.linspace(*self.x_range, self.nx)

    @property
    def ps(self):
        return np.linspace(*self.p_range, self.np)

    @property
    def cell(self):
        return (self.xs[1] - self.xs[0]) * (self.ps[1] - self.ps[0])

    @property
    def max_radius(self):
        return math.hypot(max(abs(v) for v in self.x_range), max(abs(v) for v in self.p_range))

    @classmethod
    def around(cls, centers, n_th=0.0, widths=4.0, n=101):
        """Box covering every center plus ``widths`` thermal standard deviations."""
        sigma = 0.5 * math.sqrt(2.0 * n_th + 1.0)
        centers = [complex(c) for c in centers]
        pad = widths * sigma
        xs = [c.real for c in centers]
        ps = [c.imag for c in centers]
        return cls((min(xs) - pad, max(xs) + pad), (min(ps) - pad, max(ps) + pad), n, n)


@dataclass
class WignerGrid:
    grid: PhaseSpaceGrid
    values: np.ndarray  # shape (nx, np)
    metadata: dict

    def normalization(self):
        """Riemann sum of ``W dx dp``."""
        return float(np.sum(self.values) * self.grid.cell)

    def at(self, points):
        interp = RegularGridInterpolator((self.grid.xs, self.grid.ps), self.values, method="cubic")
        pts = np.atleast_1d(np.asarray(points, dtype=complex))
        return interp(np.column_stack([pts.real, pts.imag]))

    def to_csv(self, path=None):
        buf = io.StringIO()
        buf.write("x,p,W\n")
        for i, x in enumerate(self.grid.xs):
            for j, p in enumerate(self.grid.ps):
                buf.write(f"{format_float(x)},{format_float(p)},{format_float(self.values[i, j])}\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    def to_json(self, path=None):
        doc = {
            "x": self.grid.xs.tolist(),
            "p": self.grid.ps.tolist(),
            "W": self.values.tolist(),
            "metadata": self.metadata,
        }
        text = json.dumps(doc, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def wigner(rho, grid, edge_tol=1e-3):
    """``W(alpha) = (2/pi) Tr[rho D(alpha) Pi D(alpha)^+]`` on ``grid``.

    Uses ``D(alpha) Pi D(alpha)^+ = D(2 alpha) Pi`` and the factorization
    ``D(2x + 2ip) = e^{4ixp} D(2x) D(2ip)``. In the eigenbases of the two
    quadrature generators this reduces to one ``d x d`` weight matrix,
    after which every grid point costs O(d). Everything is done on a padded
    Fock space so the displacements are exact for the state's support.

    Raises ``TruncationError`` if the state populates its top Fock level
    or if ``|W|`` on the grid boundary exceeds ``edge_tol`` times its peak
    (``edge_tol=None`` skips that check, for line cuts).
    """
    rho = np.asarray(rho)
    d = rho.shape[0]
    if rho.ndim != 2 or rho.shape[1] != d:
        raise DomainError(f"expected a single-mode density matrix, got shape {rho.shape}")
    top = abs(rho[d - 1, d - 1])
    if top > tolerances().truncation_monitor:
        raise TruncationError(f"state has population {top:.3e} in its top Fock level")
    big = padded_dim(d, 2.0 * grid.max_radius)
    nu, u = _generator_eig(big, 0.0)  # i(a^+ - a): D(2x) = U e^{-2ix nu} U^+
    mu, v = _generator_eig(big, _HALF_PI)  # -(a + a^+): D(2ip) = V e^{-2ip mu} V^+
    parity = np.where(np.arange(d) % 2 == 0, 1.0, -1.0)
    # S = V^+ Pi rho U restricted to the state's support
    s = dag(v[:d, :]) @ (parity[:, None] * rho) @ u[:d, :]
    q = dag(u) @ v
    m = s * q.T
    xs, ps = grid.xs, grid.ps
    diag = m @ np.exp(-2j * np.outer(nu, xs))  # (big, nx)
    vals = diag.T @ np.exp(-2j * np.outer(mu, ps))  # (nx, np)
    vals *= np.exp(4j * np.outer(xs, ps)) * (2.0 / math.pi)
    peak = float(np.max(np.abs(vals.real)))
    imag = float(np.max(np.abs(vals.imag)))
    w = vals.real.copy()
    edge = max(np.abs(w[0]).max(), np.abs(w[-1]).max(), np.abs(w[:, 0]).max(), np.abs(w[:, -1]).max())
    if edge_tol is not None and edge > edge_tol * peak:
        raise TruncationError(f"Wigner function reaches the grid boundary ({edge:.3e} vs peak {peak:.3e})")
    return WignerGrid(grid, w, {"dim": d, "padded_dim": big, "imag_residue": imag})


def fringe_contrast(wg, centers, n_line=401):
    """Interference-fringe visibility between two phase-space branches.

    Samples ``W`` along the line through the midpoint of the two centers,
    perpendicular to their separation, for ``|s| <= 2 pi / |c2 - c1|``
    (two fringe periods each side). Returns ``(max - min) / (4 sqrt(h1 h2))`` where
    ``h1, h2`` are ``W`` at the centers. A mixture gives about 0. A pure
    coherent-state cat approaches 1 as the separation grows; at finite
    separation the Gaussian envelope lowers the first fringe minimum.
    """
    c1, c2 = (complex(c) for c in centers)
    sep = c2 - c1
    if abs(sep) < 1e-9:
        raise DomainError("branch centers coincide")
    mid = 0.5 * (c1 + c2)
    perp = 1j * sep / abs(sep)
    period = 2.0 * math.pi / abs(sep)
    s = np.linspace(-period, period, n_line)
    line = wg.at(mid + s * perp)
    h1, h2 = wg.at([c1, c2])
    if h1 <= 0 or h2 <= 0:
        raise DomainError("Wigner function is not positive at the branch centers")
    c = (line.max() - line.min()) / (4.0 * math.sqrt(h1 * h2))
    return float(min(1.0, max(0.0, c)))
