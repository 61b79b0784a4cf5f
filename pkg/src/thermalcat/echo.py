"""Phase-kick echo and Lindblad cavity decay.

A kick ``S_z`` on the atom flips the sign of the JCM coupling
(``S_z H S_z = -H``), so evolution after the kick retraces the evolution
before it and the atom-field state returns, up to the kick itself, at twice
the kick time. Cavity decay spoils that return; :func:`lindblad_evolve`
integrates the master equation with a fixed-step RK4.
"""

import math
from dataclasses import dataclass

import numpy as np

from .config import tolerances
from .dynamics import (
    I2,
    PROJ_E,
    PROJ_G,
    S_Z,
    JointState,
    displaced_hamiltonian,
    expectation_series,
    jcm_hamiltonian,
    mode_annihilators,
    single_mode_initial_state,
)
from .errors import DomainError, ToleranceError, TruncationError
from .fock import FockSpace
from .linalg import Propagator, dag, kron, partial_trace, purity
from .metrics import fidelity
from .timeseries import TimeSeries


@dataclass(frozen=True)
class EchoSchedule:
    """Kick at ``t_kick``; run until ``t_total``; revival expected at ``2 t_kick``."""

    t_kick: float
    t_total: float
    n_samples: int = 401

    def __post_init__(self):
        if not 0 < self.t_kick < self.t_total:
            raise DomainError(f"need 0 < t_kick < t_total, got {self.t_kick}, {self.t_total}")
        if self.n_samples < 2:
            raise DomainError("need at least two samples")

    @property
    def t_revival(self):
        return 2.0 * self.t_kick

    def grid(self):
        pts = np.linspace(0.0, self.t_total, self.n_samples)
        extra = [self.t_kick] + ([self.t_revival] if self.t_revival <= self.t_total else [])
        return np.unique(np.concatenate([pts, extra]))


@dataclass(frozen=True)
class DecayParams:
    """Cavity energy decay rate and bath occupation (0 = zero-temperature bath)."""

    kappa: float
    bath_occupation: float = 0.0

    def __post_init__(self):
        if self.kappa < 0 or self.bath_occupation < 0:
            raise DomainError("kappa and bath occupation must be >= 0")

    def regime_warnings(self, g, t):
        """Flags where the weak-decay assumptions ``kappa << g``, ``kappa t << 1`` fail."""
        out = []
        if self.kappa > 0.1 * g:
            out.append(f"kappa/g = {self.kappa / g:.3g} is not << 1")
        if self.kappa * t > 0.1:
            out.append(f"kappa t = {self.kappa * t:.3g} is not << 1")
        return out


def kick_operator(space):
    """``S_z (x) I`` on the joint space."""
    return kron(S_Z, np.eye(space.total_dim // 2))


def phase_kick(state):
    """Instantaneous ``S_z`` on the atom: ``rho -> (S_z (x) I) rho (S_z (x) I)``."""
    # S_z is diagonal with entries +-1, so conjugation is a sign pattern
    d = state.space.total_dim // 2
    signs = np.concatenate([np.ones(d), -np.ones(d)])
    rho = state.rho * np.outer(signs, signs)
    return JointState(rho, state.space, state.time, dict(state.metadata))


def echo_run(g, alpha, n_th, schedule, space, atom="g", frame="lab"):
    """Evolve, kick at ``t_kick``, keep evolving to ``t_total``.

    ``frame="lab"`` uses the JCM on ``space`` with a displaced thermal field;
    ``frame="displaced"`` uses the exact displaced-frame Hamiltonian with a
    thermal field. Returns ``P_e``/``P_g`` on ``schedule.grid()``; metadata
    holds ``P_g`` and the joint-state fidelity with the kicked initial state
    at ``2 t_kick``.
    """
    state0 = single_mode_initial_state(alpha, n_th, space, atom, frame=frame)
    h = jcm_hamiltonian(g, space) if frame == "lab" else displaced_hamiltonian(g, alpha, space)
    prop = Propagator(h)
    times = schedule.grid()
    proj_e = kron(PROJ_E, space.identity)
    proj_g = kron(PROJ_G, space.identity)
    before = times <= schedule.t_kick
    after = ~before
    kicked = phase_kick(JointState(prop.evolve(state0.rho, schedule.t_kick), state0.space))
    pe = np.empty_like(times)
    pg = np.empty_like(times)
    pe[before] = expectation_series(prop, state0.rho, proj_e, times[before])
    pg[before] = expectation_series(prop, state0.rho, proj_g, times[before])
    pe[after] = expectation_series(prop, kicked.rho, proj_e, times[after] - schedule.t_kick)
    pg[after] = expectation_series(prop, kicked.rho, proj_g, times[after] - schedule.t_kick)
    meta = {
        "g": g,
        "alpha": [complex(alpha).real, complex(alpha).imag],
        "n_th": n_th,
        "dim": space.dim,
        "frame": frame,
        "t_kick": schedule.t_kick,
        "t_total": schedule.t_total,
        "discarded_tail_mass": state0.metadata["discarded_tail_mass"],
    }
    if schedule.t_revival <= schedule.t_total:
        revived = prop.evolve(kicked.rho, schedule.t_kick)
        target = phase_kick(state0).rho
        meta["revival_fidelity"] = fidelity(revived, target)
        meta["Pg_revival"] = float(np.real(np.trace(proj_g @ revived)))
    return TimeSeries(times, {"Pe": pe, "Pg": pg}, meta)


# --- open-system evolution ---------------------------------------------------

def _mode_spaces(space):
    return [FockSpace(d) for d in space.factor_dims[1:]]


def collapse_operators(space, decay, modes=None):
    """``[(rate, c), ...]`` for cavity loss (and thermal gain) on the given modes."""
    spaces = _mode_spaces(space)
    modes = range(1, len(spaces) + 1) if modes is None else modes
    ops = mode_annihilators(spaces)
    out = []
    for m in modes:
        a = kron(I2, ops[m - 1])
        if decay.kappa == 0:
            continue
        out.append((decay.kappa * (decay.bath_occupation + 1.0), a))
        if decay.bath_occupation > 0:
            out.append((decay.kappa * decay.bath_occupation, dag(a)))
    return out


def displaced_frame_drive(kappa, alpha, space, mode=1):
    """Extra Hamiltonian that cavity decay produces in a frame displaced by ``alpha``.

    Rewriting the dissipator of ``a + alpha`` in terms of ``a`` leaves the
    ordinary dissipator plus ``-i[H_drive, rho]`` with
    ``H_drive = (i kappa / 2)(alpha* a - alpha a^+)``, independent of the bath
    occupation.
    """
    spaces = _mode_spaces(space)
    a = kron(I2, mode_annihilators(spaces)[mode - 1])
    alpha = complex(alpha)
    return 0.5j * kappa * (np.conj(alpha) * a - alpha * dag(a))


class _Liouvillian:
    def __init__(self, hamiltonian, jumps):
        d = hamiltonian.shape[0]
        h_eff = np.array(hamiltonian, dtype=complex)
        for rate, c in jumps:
            h_eff = h_eff - 0.5j * rate * (dag(c) @ c)
        self.h_eff = h_eff
        self.h_eff_dag = dag(h_eff)
        self.jumps = [(rate, c, dag(c)) for rate, c in jumps]
        # crude spectral-radius bound for the RK4 stability check
        w = np.linalg.eigvalsh(0.5 * (hamiltonian + dag(hamiltonian)))
        self.radius = float(w[-1] - w[0]) + sum(rate * np.linalg.norm(c, 2) ** 2 for rate, c in jumps)
        self.dim = d

    def __call__(self, rho):
        out = -1j * (self.h_eff @ rho - rho @ self.h_eff_dag)
        for rate, c, cd in self.jumps:
            out += rate * (c @ rho @ cd)
        return out

    def rk4_step(self, rho, dt):
        k1 = self(rho)
        k2 = self(rho + 0.5 * dt * k1)
        k3 = self(rho + 0.5 * dt * k2)
        k4 = self(rho + dt * k3)
        return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_truncation(rho, space, limit):
    dims = space.factor_dims[1:]
    if not dims:
        return
    field_rho = partial_trace(rho, space, range(1, space.n_factors))
    for k, d in enumerate(dims):
        if len(dims) == 1:
            mode_rho = field_rho
        else:
            from .linalg import CompositeSpace

            mode_rho = partial_trace(field_rho, CompositeSpace(dims), [k])
        top = float(np.real(mode_rho[d - 1, d - 1]))
        if top > limit:
            raise TruncationError(f"mode {k + 1} has population {top:.3e} in its top Fock level")


def lindblad_trajectory(state, hamiltonian, decay, times, dt, modes=None):
    """Yield ``(t, JointState)`` at each requested time ``>= state.time``.

    Integrates ``drho/dt = -i[H, rho] + kappa (n_b + 1) D[a] rho + kappa n_b D[a^+] rho``
    with fixed-step RK4 between consecutive requested times. A step whose
    trace drift or purity growth exceeds tolerance is retried at half the
    step; the step is also capped by a spectral stability bound.
    """
    tols = tolerances()
    if dt <= 0:
        raise DomainError("dt must be > 0")
    if hamiltonian.shape != state.rho.shape:
        raise DomainError("Hamiltonian does not match the state dimension")
    liou = _Liouvillian(hamiltonian, collapse_operators(state.space, decay, modes))
    dt_cap = 2.5 / liou.radius if liou.radius > 0 else dt
    rho = np.array(state.rho, dtype=complex)
    t_now = state.time
    tr0 = np.trace(rho).real
    for t_target in times:
        if t_target < t_now - 1e-12:
            raise DomainError("requested times must be non-decreasing and not before the state time")
        span = t_target - t_now
        if span > 1e-15:
            n_steps = max(1, math.ceil(span / min(dt, dt_cap) - 1e-9))
            h = span / n_steps
            for _ in range(n_steps):
                rho = _guarded_step(liou, rho, h, tols)
        t_now = t_target
        yield t_now, JointState(rho.copy(), state.space, t_now, dict(state.metadata))
    drift = abs(np.trace(rho).real - tr0)
    if drift > tols.trace_drift:
        raise ToleranceError(f"trace drifted by {drift:.3e}")


def _guarded_step(liou, rho, h, tols, max_halvings=12):
    tr = np.trace(rho).real
    p0 = purity(rho)
    for level in range(max_halvings + 1):
        sub = 2**level
        trial = rho
        for _ in range(sub):
            trial = liou.rk4_step(trial, h / sub)
        trial = 0.5 * (trial + dag(trial))
        ok = np.all(np.isfinite(trial))
        ok = ok and abs(np.trace(trial).real - tr) <= tols.step_trace_drift
        ok = ok and purity(trial) <= max(p0, 1.0) + 1e-8
        if ok:
            return trial
    raise ToleranceError("RK4 step rejected after repeated halving")


def lindblad_evolve(state, hamiltonian, decay, t, dt, modes=None):
    """Master-equation evolution for time ``t``; see :func:`lindblad_trajectory`.

    Checks trace drift, the positivity floor and the top-Fock-level
    population of each mode at the end.
    """
    tols = tolerances()
    final = state
    for _, final in lindblad_trajectory(state, hamiltonian, decay, [state.time + t], dt, modes):
        pass
    w = np.linalg.eigvalsh(final.rho)
    if w[0] < -tols.positivity_integrator:
        raise ToleranceError(f"state lost positivity (min eigenvalue {w[0]:.3e})")
    _check_truncation(final.rho, final.space, tols.truncation_monitor)
    return final


def damped_echo_run(g, alpha, n_th, t_kick, decay, space, dt=0.005, n_samples=241, atom="g"):
    """Echo with cavity decay, integrated in the frame displaced by ``alpha``.

    The frame Hamiltonian is the exact transform of the JCM plus the decay
    drive from :func:`displaced_frame_drive`. Samples ``P_e``/``P_g`` on
    ``[0, 2 t_kick]``; metadata holds ``P_g`` and the contrast
    ``2 P_g - 1`` at the revival time.
    """
    state = single_mode_initial_state(alpha, n_th, space, atom, frame="displaced")
    h = displaced_hamiltonian(g, alpha, space) + displaced_frame_drive(decay.kappa, alpha, state.space)
    grid = np.unique(np.concatenate([np.linspace(0, 2 * t_kick, n_samples), [t_kick, 2 * t_kick]]))
    proj_g = kron(PROJ_G, space.identity)
    pg = []
    first = grid[grid <= t_kick]
    second = grid[grid > t_kick]
    current = state
    for t, st in lindblad_trajectory(state, h, decay, first, dt):
        pg.append(np.trace(proj_g @ st.rho).real)
        current = st
    current = phase_kick(current)
    for t, st in lindblad_trajectory(current, h, decay, second, dt):
        pg.append(np.trace(proj_g @ st.rho).real)
        current = st
    pg = np.array(pg)
    tr = 1.0
    pe = tr - pg
    w = np.linalg.eigvalsh(current.rho)
    if w[0] < -tolerances().positivity_integrator:
        raise ToleranceError(f"state lost positivity (min eigenvalue {w[0]:.3e})")
    _check_truncation(current.rho, current.space, tolerances().truncation_monitor)
    meta = {
        "g": g,
        "alpha": float(np.real(alpha)),
        "n_th": n_th,
        "kappa": decay.kappa,
        "bath_occupation": decay.bath_occupation,
        "t_kick": t_kick,
        "dim": space.dim,
        "dt": dt,
        "Pg_revival": float(pg[-1]),
        "contrast_revival": float(2 * pg[-1] - 1),
        "regime_warnings": decay.regime_warnings(g, 2 * t_kick),
    }
    return TimeSeries(grid, {"Pe": pe, "Pg": pg}, meta)


def damped_rabi_series(g, alpha, n_th, decay, t, space, dt=0.005, n_samples=201, atom="g"):
    """``P_g(tau)`` on ``[0, t]`` under the JCM with cavity decay (no kick)."""
    state = single_mode_initial_state(alpha, n_th, space, atom, frame="displaced")
    h = displaced_hamiltonian(g, alpha, space) + displaced_frame_drive(decay.kappa, alpha, state.space)
    grid = np.linspace(0.0, t, n_samples)
    proj_g = kron(PROJ_G, space.identity)
    pg = np.array([np.trace(proj_g @ st.rho).real for _, st in lindblad_trajectory(state, h, decay, grid, dt)])
    return TimeSeries(grid, {"Pg": pg}, {"g": g, "alpha": alpha, "n_th": n_th, "kappa": decay.kappa, "dim": space.dim})


def fitted_contrast(series, column="Pg", omega_guess=None):
    """Contrast ``2A`` of a Gaussian-damped cosine fitted to ``series[column]``."""
    from .fitting import fit_gaussian_oscillation

    fit = fit_gaussian_oscillation(series.times, series[column], omega_guess=omega_guess)
    return 2.0 * fit.amplitude, fit


def contrast_deficit_comparison(g, alpha, n_th, kappa, t, space, bath_occupation=0.0, dt=0.005, n_samples=201):
    """Simulated contrast loss versus the first-order formula.

    Two simulated deficits are reported. ``revival_deficit`` is the drop in
    echo revival contrast ``2 P_g - 1`` at ``2t`` with the kick at ``t``.
    ``fit_deficit`` is the drop in Gaussian-cosine fitted contrast of the
    unkicked ``P_g`` on ``[0, t]``. Both are differences between a run with
    decay and a closed run on the same grid.
    """
    from .analytic import contrast_reduction_perturbative

    omega = 2.0 * g * abs(alpha)
    decay = DecayParams(kappa, bath_occupation)
    closed = damped_rabi_series(g, alpha, n_th, DecayParams(0.0), t, space, dt, n_samples)
    damped = damped_rabi_series(g, alpha, n_th, decay, t, space, dt, n_samples)
    c0, _ = fitted_contrast(closed, omega_guess=omega)
    ck, _ = fitted_contrast(damped, omega_guess=omega)
    echo0 = damped_echo_run(g, alpha, n_th, t, DecayParams(0.0), space, dt, n_samples=5)
    echok = damped_echo_run(g, alpha, n_th, t, decay, space, dt, n_samples=5)
    revival = echo0.metadata["contrast_revival"] - echok.metadata["contrast_revival"]
    formula = contrast_reduction_perturbative(g, n_th, alpha, kappa, t)

    def ratio(x):
        return formula / x if x != 0 else float("inf")

    return {
        "formula_deficit": formula,
        "revival_deficit": revival,
        "ratio_formula_to_revival": ratio(revival),
        "fit_contrast_closed": c0,
        "fit_contrast_damped": ck,
        "fit_deficit": c0 - ck,
        "ratio_formula_to_fit": ratio(c0 - ck),
        "bath_occupation": bath_occupation,
    }
