"""Execute pulse programs and write their artifacts.

The runner keeps the joint state in a frame that moves with the
accumulated displacement of each mode. A ``displace`` step then only
shifts the frame offset, the field starts thermal, and the truncation
needed is set by how far the atom pushes the field, not by ``|alpha|^2``.
Every Hamiltonian is the exact transform of the lab-frame one into the
current frame (``rwa`` excepted, which is the approximation itself).
Kicks commute with displacements, so they act unchanged.
"""

import json
import math
import os
import platform
import tempfile
import time as _time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .analytic import (
    analytic_cat_frame_state,
    rabi_probability_analytic,
    two_mode_frame_state,
    two_mode_rabi_analytic,
)
from .config import profile_name, tolerances
from .dynamics import (
    PROJ_G,
    JointState,
    multimode_displaced_hamiltonian,
    multimode_displaced_hamiltonian_closed_form,
    mode_annihilators,
    multimode_rwa_hamiltonian,
)
from .echo import DecayParams, _check_truncation, displaced_frame_drive, lindblad_trajectory, phase_kick
from .errors import DomainError, ToleranceError, TruncationError
from .fitting import fit_gaussian_oscillation
from .fock import FockSpace, thermal_state, thermal_tail_mass, truncation_for
from .linalg import CompositeSpace, Propagator, kron, purity
from .metrics import BipartiteSplit, fidelity, negativity
from .phasespace import PhaseSpaceGrid, wigner
from .program import Displace, Evolve, Kick, Lindblad, Measure, Snapshot, program_to_dict
from .timeseries import TimeSeries

_T_EPS = 1e-12


def resolve_truncation(program):
    """Per-mode Fock dimensions actually used for ``program``.

    ``auto`` bounds how far the field can move in the co-moving frame: half
    the coupling times the total interaction time, plus the drift that decay
    adds at rate ``kappa |offset| / 2``, plus one unit of margin.
    """
    s = program.system
    if s.truncation != "auto":
        return tuple(s.truncation)
    t_total = program.duration
    dims = []
    for k in range(s.modes):
        shift = sum(abs(complex(st.amplitude if st.amplitude != "alpha" else s.alpha[k]))
                    for st in program.steps if isinstance(st, Displace) and st.mode == k + 1)
        drift = sum(0.5 * st.kappa * shift * st.duration for st in program.steps if isinstance(st, Lindblad))
        reach = 0.5 * s.couplings[k] * t_total + drift + 1.0
        dims.append(truncation_for(reach, s.n_th[k], s.tail_tol) + 2)
    return tuple(dims)


@dataclass
class RunResult:
    timeseries: TimeSeries = None
    summary: dict = field(default_factory=dict)
    wigners: list = field(default_factory=list)
    files: list = field(default_factory=list)


class _Run:
    def __init__(self, program):
        self.program = program
        s = program.system
        self.system = s
        self.dims = resolve_truncation(program)
        self.spaces = [FockSpace(d) for d in self.dims]
        self.space = CompositeSpace((2,) + self.dims)
        self.offsets = [0j] * s.modes
        self.t = 0.0
        fields = []
        tails = []
        for k in range(s.modes):
            tail = thermal_tail_mass(s.n_th[k], self.dims[k])
            if tail > s.tail_tol:
                raise TruncationError(f"mode {k + 1}: thermal tail {tail:.3e} exceeds {s.tail_tol:.1e} at dim {self.dims[k]}")
            tails.append(tail)
            fields.append(thermal_state(s.n_th[k], self.spaces[k], allow_truncation=True))
        atom = np.zeros((2, 2), dtype=complex)
        atom[(0, 0) if s.atom == "e" else (1, 1)] = 1.0
        self.rho = kron(atom, *fields)
        self.tails = tails
        self.rho0 = None
        self._ham_cache = {}
        # timeline events
        self.observables = program.measured()
        cadence = program.cadence()
        total = program.duration
        if cadence is not None:
            n = int(math.floor(total / cadence + 1e-9))
            grid = [k * cadence for k in range(n + 1)]
            if total - grid[-1] > _T_EPS:
                grid.append(total)
        else:
            grid = []
        self.sample_times = grid
        self.samples = {}
        kicks = []
        t = 0.0
        for st in program.steps:
            if isinstance(st, (Evolve, Lindblad)):
                t += st.duration
            elif isinstance(st, Kick):
                kicks.append(t)
        self.kicks = kicks
        self.checkpoints = sorted({2 * tk for tk in kicks if 0 < tk and 2 * tk <= total + _T_EPS})
        self.captured = {}
        self.snapshots = []
        self.wigners = []
        self.warnings = list(program.warnings)

    # --- observables ----------------------------------------------------------
    def _observable_ops(self):
        """Operators needed for the requested observables, keyed by name."""
        if getattr(self, "_ops", None) is None:
            field_id = np.eye(self.space.total_dim // 2)
            ops = {}
            for name in self.observables:
                if name == "Pg":
                    ops["Pg"] = kron(PROJ_G, field_id)
                elif name == "Pe":
                    ops["Pe"] = kron(np.diag([1.0, 0.0]), field_id)
                elif name == "mean_n":
                    for k, a in enumerate(mode_annihilators(self.spaces)):
                        ops[f"a_{k + 1}"] = kron(np.eye(2), a)
                        ops[f"n_{k + 1}"] = kron(np.eye(2), a.conj().T @ a)
            self._ops = ops
        return self._ops

    def _row(self, expect, t, pur):
        """One CSV row; ``expect(name)`` returns the frame expectation of an operator."""
        row = {}
        for name in self.observables:
            if name == "Pg":
                row["Pg_exact"] = float(np.real(expect("Pg")))
            elif name == "Pe":
                row["Pe_exact"] = float(np.real(expect("Pe")))
            elif name == "P_analytic":
                row["P_analytic"] = self._analytic_p(t)
            elif name == "mean_n":
                for k in range(self.system.modes):
                    o = self.offsets[k]
                    a_mean = complex(expect(f"a_{k + 1}"))
                    n_mean = float(np.real(expect(f"n_{k + 1}")))
                    # lab-frame <n> = <(a + o)^+ (a + o)> in the co-moving frame
                    row[f"mean_n_{k + 1}"] = n_mean + 2.0 * float(np.real(np.conj(o) * a_mean)) + abs(o) ** 2
            elif name == "purity":
                row["purity"] = pur
        return row

    def _observe(self, rho, t):
        ops = self._observable_ops()
        return self._row(lambda name: np.sum(rho * ops[name].T), t, purity(rho))

    def _analytic_p(self, t):
        s = self.system
        alpha = s.alpha[0].real
        if s.modes == 1:
            return float(rabi_probability_analytic(s.couplings[0], alpha, s.n_th[0], [t])["P"][0])
        n_bar = 0.5 * (s.n_th[0] + s.n_th[1])
        return float(two_mode_rabi_analytic(s.couplings[0], s.couplings[1], alpha, n_bar, [t])["P"][0])

    # --- timeline --------------------------------------------------------------
    def _pending(self, lo, hi, inclusive_lo=False):
        """Event times in ``(lo, hi)`` (or ``[lo, hi)``) not yet handled."""
        out = []
        for t in sorted(set(self.sample_times) | set(self.checkpoints)):
            after = t > lo + _T_EPS or (inclusive_lo and abs(t - lo) <= _T_EPS)
            if after and t < hi - _T_EPS and not self._done(t):
                out.append(t)
        return out

    def _done(self, t):
        key = round(t, 10)
        need_sample = any(abs(t - s) <= _T_EPS for s in self.sample_times) and key not in self.samples
        need_cp = any(abs(t - c) <= _T_EPS for c in self.checkpoints) and key not in self.captured
        return not (need_sample or need_cp)

    def _emit(self, t, rho, row=None):
        """Record a sample and/or capture a checkpoint at ``t``.

        ``rho`` may be a callable producing the state lazily; ``row`` is a
        precomputed sample row.
        """
        key = round(t, 10)
        if any(abs(t - s) <= _T_EPS for s in self.sample_times) and key not in self.samples:
            if row is None:
                row = self._observe(rho() if callable(rho) else rho, t)
            self.samples[key] = (t, row)
        if any(abs(t - c) <= _T_EPS for c in self.checkpoints) and key not in self.captured:
            self.captured[key] = (rho() if callable(rho) else rho).copy()

    def _flush(self):
        if self.rho0 is None:
            self.rho0 = self.rho.copy()
        self._emit(self.t, self.rho)

    def _hamiltonian(self, kind):
        key = (kind, tuple(self.offsets))
        if key not in self._ham_cache:
            g = self.system.couplings
            if kind == "full":
                h = multimode_displaced_hamiltonian(g, self.offsets, self.spaces)
            elif kind == "displaced":
                h = multimode_displaced_hamiltonian_closed_form(g, self.offsets, self.spaces)
            else:
                h = multimode_rwa_hamiltonian(g, self.offsets, self.spaces)
            self._ham_cache[key] = (h, None)
        h, prop = self._ham_cache[key]
        return h, key

    def _propagator(self, kind):
        h, key = self._hamiltonian(kind)
        prop = self._ham_cache[key][1]
        if prop is None:
            prop = Propagator(h)
            self._ham_cache[key] = (h, prop)
        return prop

    def _check(self):
        _check_truncation(self.rho, self.space, tolerances().truncation_monitor)

    def step_evolve(self, st):
        self._flush()
        if st.duration == 0:
            return
        prop = self._propagator(st.hamiltonian)
        t0, t1 = self.t, self.t + st.duration
        pending = self._pending(t0, t1)
        if pending:
            # samples from the eigenbasis: O(d^2) per time instead of O(d^3)
            v = prop.vectors
            r0 = v.conj().T @ self.rho @ v
            eig_ops = {k: v.conj().T @ op @ v for k, op in self._observable_ops().items()}
            pur = purity(self.rho)
            w = prop.energies
            for te in pending:
                ph = np.exp(-1j * w * (te - t0))
                r = r0 * np.outer(ph, ph.conj())
                row = self._row(lambda name: np.sum(r * eig_ops[name].T), te, pur)
                self._emit(te, lambda: prop.evolve(self.rho, te - t0), row)
        rho = prop.evolve(self.rho, st.duration)
        self.rho = 0.5 * (rho + rho.conj().T)
        self.t = t1
        self._check()

    def step_lindblad(self, st):
        self._flush()
        if st.duration == 0:
            return
        h, _ = self._hamiltonian(st.hamiltonian)
        modes = st.modes if st.modes is not None else tuple(range(1, self.system.modes + 1))
        for m in modes:
            h = h + displaced_frame_drive(st.kappa, self.offsets[m - 1], self.space, mode=m)
        decay = DecayParams(st.kappa, st.n_b)
        g = max(self.system.couplings)
        self.warnings.extend(f"lindblad at t={self.t:g}: {w}" for w in decay.regime_warnings(g, self.t + st.duration))
        t0, t1 = self.t, self.t + st.duration
        targets = self._pending(t0, t1) + [t1]
        state = JointState(self.rho, self.space, t0)
        for t, s in lindblad_trajectory(state, h, decay, targets, st.dt, modes):
            if t < t1 - _T_EPS:
                self._emit(t, s.rho)
            else:
                self.rho = s.rho
        self.t = t1
        w = np.linalg.eigvalsh(self.rho)
        if w[0] < -tolerances().positivity_integrator:
            raise ToleranceError(f"state lost positivity (min eigenvalue {w[0]:.3e})")
        self._check()

    def step_snapshot(self, st, index):
        rec = {"step": index, "what": st.what, "tau": self.t}
        if st.label:
            rec["label"] = st.label
        js = JointState(self.rho, self.space, self.t)
        if st.what == "wigner":
            proj = None if st.atom == "trace" else st.atom
            m = js.mode_state(st.mode, proj)
            off = self.offsets[st.mode - 1]
            lab = self._wigner_grid(st, m, off)
            frame = PhaseSpaceGrid(
                (lab.x_range[0] - off.real, lab.x_range[1] - off.real),
                (lab.p_range[0] - off.imag, lab.p_range[1] - off.imag),
                lab.nx,
                lab.np,
            )
            wg = wigner(m, frame)
            wg.grid = lab
            wg.metadata.update({"mode": st.mode, "atom": st.atom, "tau": self.t, "normalization": wg.normalization()})
            name = f"wigner_{index}" + (f"_{st.label}" if st.label else "")
            rec.update({"mode": st.mode, "atom": st.atom, "file": name, "normalization": wg.normalization(),
                        "min": float(wg.values.min()), "max": float(wg.values.max())})
            self.wigners.append((name, wg))
        elif st.what == "negativity":
            if st.split == "atom|field":
                split = BipartiteSplit(self.space, (0,), tuple(range(1, self.space.n_factors)))
                rec["value"] = negativity(self.rho, split)
            else:
                proj = None if st.atom == "trace" else st.atom
                f = js.field_state(proj)
                rec["value"] = negativity(f, BipartiteSplit.two_factor(*self.dims))
                rec["atom_probability"] = 1.0 if proj is None else js.atom_probability(proj)
            rec.update({"atom": st.atom, "split": st.split})
        else:
            rec["model"] = st.model
            rec["value"] = fidelity(self.rho, self._model_state(st.model))
        self.snapshots.append(rec)

    def _wigner_grid(self, st, m, off):
        if st.grid != "auto":
            x0, x1, p0, p1, nx, npts = st.grid
            return PhaseSpaceGrid((x0, x1), (p0, p1), nx, npts)
        sp = FockSpace(m.shape[0])
        a_mean = complex(np.sum(m * sp.a.T))
        x = 0.5 * (sp.a + sp.a_dag)
        p = -0.5j * (sp.a - sp.a_dag)
        vx = float(np.real(np.sum(m * (x @ x).T))) - a_mean.real ** 2
        vp = float(np.real(np.sum(m * (p @ p).T))) - a_mean.imag ** 2
        c = a_mean + off
        rx, rp = 5.0 * math.sqrt(max(vx, 0.25)), 5.0 * math.sqrt(max(vp, 0.25))
        return PhaseSpaceGrid((c.real - rx, c.real + rx), (c.imag - rp, c.imag + rp), 101, 101)

    def _model_state(self, model):
        s = self.system
        offs = self.offsets
        if any(o.imag != 0 for o in offs) or len({o for o in offs}) != 1:
            raise DomainError("analytic models need one real displacement shared by all modes")
        alpha = offs[0].real
        if model == "cat":
            return analytic_cat_frame_state(s.couplings[0], alpha, s.n_th[0], self.t, self.spaces[0], s.atom)
        return two_mode_frame_state(s.couplings[0], s.couplings[1], alpha, s.n_th[0], s.n_th[1], self.t,
                                    self.spaces, s.atom)

    def run(self):
        for i, st in enumerate(self.program.steps):
            if isinstance(st, Evolve):
                self.step_evolve(st)
            elif isinstance(st, Lindblad):
                self.step_lindblad(st)
            elif isinstance(st, Kick):
                self.rho = phase_kick(JointState(self.rho, self.space)).rho
            elif isinstance(st, Displace):
                amp = self.system.alpha[st.mode - 1] if st.amplitude == "alpha" else st.amplitude
                self.offsets[st.mode - 1] += complex(amp)
            elif isinstance(st, Snapshot):
                self._flush()
                self.step_snapshot(st, i)
            elif isinstance(st, Measure):
                pass
        self._flush()
        return self._result()

    # --- assembly -------------------------------------------------------------
    def _timeseries(self):
        if not self.samples:
            return None
        rows = [self.samples[k] for k in sorted(self.samples)]
        times = [t for t, _ in rows]
        names = list(rows[0][1])
        cols = {n: [r[n] for _, r in rows] for n in names}
        return TimeSeries(times, cols, self._resolved())

    def _resolved(self):
        return {
            "program": program_to_dict(self.program),
            "truncation": list(self.dims),
            "discarded_tail_mass": self.tails,
            "tolerance_profile": profile_name(),
            "tolerances": asdict(tolerances()),
            "frame": "co-moving displaced frame; observables reported in the lab frame",
        }

    def _result(self):
        ts = self._timeseries()
        summary = self._resolved()
        summary["duration"] = self.program.duration
        summary["final_offsets"] = [[o.real, o.imag] for o in self.offsets]
        if ts is not None:
            summary["final"] = {k: float(v[-1]) for k, v in ts.columns.items()}
        summary["snapshots"] = self.snapshots
        s = self.system
        if s.modes == 1:
            summary["collapse_time_formula"] = 2.0 / (s.couplings[0] * math.sqrt(s.n_th[0] + 2.0))
        revivals = []
        d = self.space.total_dim // 2
        for tk in self.kicks:
            key = round(2 * tk, 10)
            if tk <= 0 or key not in self.captured:
                continue
            rho = self.captured[key]
            target = phase_kick(JointState(self.rho0, self.space)).rho
            revivals.append({
                "t_kick": tk,
                "t_revival": 2 * tk,
                "Pg": float(np.real(np.trace(rho[d:, d:]))),
                "fidelity_with_kicked_initial": fidelity(rho, target),
            })
        summary["revivals"] = revivals
        if ts is not None and "Pg_exact" in ts.columns and "P_analytic" in ts.columns:
            summary["envelope_fit"] = self._envelope_fit(ts)
        summary["warnings"] = self.warnings
        return RunResult(ts, summary, self.wigners)

    def _envelope_fit(self, ts):
        s = self.system
        alpha = abs(s.alpha[0])
        if s.modes == 1:
            omega2 = 2.0 * s.couplings[0] * alpha
            width_formula = 2.0 / (s.couplings[0] * math.sqrt(s.n_th[0] + 2.0))
        else:
            g1, g2 = s.couplings
            omega2 = 2.0 * alpha * (g1 + g2)
            n_bar = 0.5 * (s.n_th[0] + s.n_th[1])
            width_formula = 2.0 / math.sqrt((g1 ** 2 + g2 ** 2) * (n_bar + 2.0))
        fit = fit_gaussian_oscillation(ts.times, ts["Pg_exact"], omega_guess=omega2)
        return {
            "width_fit": fit.width,
            "width_formula": width_formula,
            "width_ratio": fit.width / width_formula,
            "omega_fit": fit.omega,
            "omega_formula": omega2,
            "contrast_fit": 2.0 * fit.amplitude,
            "offset_fit": fit.offset,
            "tracks": "Pg",
        }


def _atomic_write(path, text):
    d = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp_")
    with os.fdopen(fd, "w", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def run_program(program, out_dir=None):
    """Run ``program``; when ``out_dir`` is given write its artifacts there.

    Artifacts: the time-series CSV plus a JSON twin carrying the resolved
    parameters, the summary JSON, one CSV/JSON pair per Wigner snapshot,
    and ``meta.json`` with timestamps and versions (the only file that
    varies between identical runs).
    """
    started = _time.time()
    result = _Run(program).run()
    if out_dir is None:
        return result
    os.makedirs(out_dir, exist_ok=True)
    out = program.output
    files = []
    if result.timeseries is not None:
        path = os.path.join(out_dir, out.timeseries)
        _atomic_write(path, result.timeseries.to_csv())
        stem = os.path.splitext(path)[0]
        _atomic_write(stem + ".json", result.timeseries.to_json() + "\n")
        files += [path, stem + ".json"]
    for name, wg in result.wigners:
        wg.metadata["resolved"] = result.summary["program"]
        wg.metadata["truncation"] = result.summary["truncation"]
        if "csv" in out.wigner_formats:
            _atomic_write(os.path.join(out_dir, name + ".csv"), wg.to_csv())
            files.append(os.path.join(out_dir, name + ".csv"))
        if "json" in out.wigner_formats:
            _atomic_write(os.path.join(out_dir, name + ".json"), wg.to_json() + "\n")
            files.append(os.path.join(out_dir, name + ".json"))
    path = os.path.join(out_dir, out.summary)
    _atomic_write(path, _json(result.summary))
    files.append(path)
    meta = {
        "started_unix": started,
        "finished_unix": _time.time(),
        "thermalcat_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }
    _atomic_write(os.path.join(out_dir, "meta.json"), _json(meta))
    result.files = files
    return result
