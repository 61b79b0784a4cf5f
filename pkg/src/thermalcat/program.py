"""Pulse-program documents: parsing, validation and canonical serialization.

A program is a YAML mapping with ``system``, ``steps`` and an optional
``output`` block; the grammar is documented in ``docs/program_format.md``.
Every validation error carries the offending line and field path.
"""

import cmath
import math
import re
from dataclasses import dataclass, field

import yaml

from .errors import ProgramError

HAMILTONIANS = ("full", "displaced", "rwa")
OBSERVABLES = ("Pg", "Pe", "mean_n", "purity", "P_analytic")
ATOM_CHOICES = ("e", "g", "trace")
SNAPSHOT_KINDS = ("wigner", "negativity", "fidelity_vs")
MODELS = ("cat", "two_mode")
SPLITS = ("atom|field", "1|2")


@dataclass(frozen=True)
class SystemSpec:
    modes: int
    couplings: tuple
    n_th: tuple
    alpha: tuple
    truncation: object = "auto"
    tail_tol: float = 1e-10
    atom: str = "g"


@dataclass(frozen=True)
class Displace:
    mode: int
    amplitude: object  # complex, or "alpha" for the declared value of that mode


@dataclass(frozen=True)
class Evolve:
    duration: float
    hamiltonian: str = "full"


@dataclass(frozen=True)
class Kick:
    pass


@dataclass(frozen=True)
class Lindblad:
    duration: float
    kappa: float
    n_b: float = 0.0
    dt: float = 0.005
    hamiltonian: str = "full"
    modes: tuple = None


@dataclass(frozen=True)
class Measure:
    observables: tuple
    cadence: float


@dataclass(frozen=True)
class Snapshot:
    what: str
    mode: int = 1
    atom: str = "trace"
    grid: object = "auto"  # "auto" or (x_lo, x_hi, p_lo, p_hi, nx, np)
    split: str = "1|2"
    model: str = None
    label: str = None


@dataclass(frozen=True)
class OutputSpec:
    timeseries: str = "timeseries.csv"
    summary: str = "summary.json"
    wigner_formats: tuple = ("csv", "json")


@dataclass(frozen=True)
class PulseProgram:
    system: SystemSpec
    steps: tuple
    output: OutputSpec = OutputSpec()
    name: str = ""
    warnings: tuple = field(default=(), compare=False)

    @property
    def duration(self):
        return sum(s.duration for s in self.steps if isinstance(s, (Evolve, Lindblad)))

    def measured(self):
        obs = []
        for s in self.steps:
            if isinstance(s, Measure):
                obs.extend(o for o in s.observables if o not in obs)
        return tuple(obs)

    def cadence(self):
        cads = {s.cadence for s in self.steps if isinstance(s, Measure)}
        return cads.pop() if cads else None


class _Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e-10``-style floats, which YAML 1.1 leaves as strings."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+][0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def load_yaml(text):
    """Parse YAML text with :class:`_Loader`."""
    return yaml.load(text, Loader=_Loader)


# --- YAML location index ------------------------------------------------------

def _index_lines(node, path=(), out=None):
    out = {} if out is None else out
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            key = k.value
            out[path + (key,)] = k.start_mark.line + 1
            _index_lines(v, path + (key,), out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _index_lines(v, path + (i,), out)
    return out


def _path_str(path):
    s = ""
    for p in path:
        s += f"[{p}]" if isinstance(p, int) else (f".{p}" if s else str(p))
    return s or "<document>"


class _Ctx:
    def __init__(self, lines, strict):
        self.lines = lines
        self.strict = strict
        self.warnings = []

    def fail(self, path, msg):
        line = None
        for k in range(len(path), -1, -1):
            if tuple(path[:k]) in self.lines:
                line = self.lines[tuple(path[:k])]
                break
        loc = f"line {line}, {_path_str(path)}" if line else _path_str(path)
        raise ProgramError(msg, loc)

    def mapping(self, obj, path, allowed, required=()):
        if not isinstance(obj, dict):
            self.fail(path, f"expected a mapping, got {type(obj).__name__}")
        for key in obj:
            if key not in allowed:
                if self.strict:
                    self.fail(path + (key,), f"unknown key {key!r} (allowed: {', '.join(allowed)})")
                self.warnings.append(f"{_path_str(path + (key,))}: ignored unknown key")
        for key in required:
            if key not in obj:
                self.fail(path, f"missing required key {key!r}")
        return obj

    def number(self, v, path, lo=None, strict_lo=False):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(path, f"expected a number, got {v!r}")
        v = float(v)
        if not math.isfinite(v):
            self.fail(path, "must be finite")
        if lo is not None and (v < lo or (strict_lo and v == lo)):
            self.fail(path, f"must be {'>' if strict_lo else '>='} {lo}, got {v}")
        return v

    def integer(self, v, path, lo=None):
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(path, f"expected an integer, got {v!r}")
        if lo is not None and v < lo:
            self.fail(path, f"must be >= {lo}, got {v}")
        return v

    def complex_(self, v, path):
        if isinstance(v, bool):
            self.fail(path, f"expected a number, got {v!r}")
        if isinstance(v, (int, float)):
            return complex(self.number(v, path))
        if isinstance(v, str):
            try:
                z = complex(v.replace(" ", ""))
            except ValueError:
                self.fail(path, f"cannot read {v!r} as a complex number")
            if not (cmath.isfinite(z)):
                self.fail(path, "must be finite")
            return z
        self.fail(path, f"expected a number, got {v!r}")

    def choice(self, v, path, options):
        if v not in options:
            self.fail(path, f"expected one of {', '.join(options)}, got {v!r}")
        return v

    def per_mode(self, v, path, modes, conv):
        if isinstance(v, list):
            if len(v) != modes:
                self.fail(path, f"expected {modes} values (one per mode), got {len(v)}")
            return tuple(conv(x, path + (i,)) for i, x in enumerate(v))
        return tuple(conv(v, path) for _ in range(modes))


# --- parsing -----------------------------------------------------------------

def parse_program(text, strict=True):
    """Validate a YAML pulse-program document and return a :class:`PulseProgram`."""
    try:
        data = load_yaml(text)
        node = yaml.compose(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"line {mark.line + 1}" if mark is not None else None
        raise ProgramError(f"syntax error: {getattr(exc, 'problem', None) or exc}", loc) from None
    ctx = _Ctx(_index_lines(node) if node is not None else {}, strict)
    doc = ctx.mapping(data, (), ("name", "system", "steps", "output"), ("system", "steps"))
    system = _parse_system(ctx, doc["system"], ("system",))
    steps = _parse_steps(ctx, doc["steps"], ("steps",), system)
    output = _parse_output(ctx, doc.get("output", {}) or {}, ("output",))
    name = doc.get("name", "")
    if not isinstance(name, str):
        ctx.fail(("name",), "expected a string")
    return PulseProgram(system, steps, output, name, tuple(ctx.warnings))


def load_program(path, strict=True):
    with open(path) as fh:
        return parse_program(fh.read(), strict=strict)


def _parse_system(ctx, raw, path):
    keys = ("modes", "g", "g1", "g2", "n_th", "alpha", "truncation", "tail_tol", "atom")
    sysd = ctx.mapping(raw, path, keys, ("modes", "n_th", "alpha"))
    modes = ctx.integer(sysd["modes"], path + ("modes",))
    if modes not in (1, 2):
        ctx.fail(path + ("modes",), f"modes must be 1 or 2, got {modes}")
    if modes == 1:
        if "g" not in sysd:
            ctx.fail(path, "missing required key 'g'")
        if "g1" in sysd or "g2" in sysd:
            ctx.fail(path, "g1/g2 are for two-mode systems; use g")
        couplings = (ctx.number(sysd["g"], path + ("g",), 0.0, strict_lo=True),)
    else:
        for k in ("g1", "g2"):
            if k not in sysd:
                ctx.fail(path, f"missing required key {k!r}")
        if "g" in sysd:
            ctx.fail(path + ("g",), "two-mode systems take g1 and g2, not g")
        couplings = tuple(ctx.number(sysd[k], path + (k,), 0.0, strict_lo=True) for k in ("g1", "g2"))
    n_th = ctx.per_mode(sysd["n_th"], path + ("n_th",), modes, lambda v, p: ctx.number(v, p, 0.0))
    alpha = ctx.per_mode(sysd["alpha"], path + ("alpha",), modes, ctx.complex_)
    trunc = sysd.get("truncation", "auto")
    if trunc != "auto":
        trunc = ctx.per_mode(trunc, path + ("truncation",), modes, lambda v, p: ctx.integer(v, p, 2))
    tail_tol = ctx.number(sysd.get("tail_tol", 1e-10), path + ("tail_tol",), 0.0, strict_lo=True)
    if tail_tol >= 1:
        ctx.fail(path + ("tail_tol",), "must be < 1")
    atom = ctx.choice(sysd.get("atom", "g"), path + ("atom",), ("e", "g"))
    return SystemSpec(modes, couplings, n_th, alpha, trunc, tail_tol, atom)


def _mode(ctx, v, path, system):
    m = ctx.integer(v, path, 1)
    if m > system.modes:
        ctx.fail(path, f"mode {m} is not declared (system has {system.modes} mode{'s' * (system.modes > 1)})")
    return m


def _parse_steps(ctx, raw, path, system):
    if not isinstance(raw, list) or not raw:
        ctx.fail(path, "steps must be a nonempty list")
    steps = []
    for i, item in enumerate(raw):
        p = path + (i,)
        if isinstance(item, str):
            kind, body = item, {}
        elif isinstance(item, dict) and len(item) == 1:
            kind, body = next(iter(item.items()))
            body = {} if body is None else body
        else:
            ctx.fail(p, "each step must be a single-key mapping such as {evolve: {...}}")
        p = p + (kind,)
        parser = _STEP_PARSERS.get(kind)
        if parser is None:
            ctx.fail(p, f"unknown step type {kind!r} (expected one of {', '.join(_STEP_PARSERS)})")
        steps.append(parser(ctx, body, p, system))
    if not any(isinstance(s, (Measure, Snapshot)) for s in steps):
        ctx.fail(path, "program needs at least one measure or snapshot step")
    cads = {s.cadence for s in steps if isinstance(s, Measure)}
    if len(cads) > 1:
        ctx.fail(path, f"all measure steps must share one cadence, got {sorted(cads)}")
    return tuple(steps)


def _p_displace(ctx, body, p, system):
    ctx.mapping(body, p, ("mode", "amplitude"), ("mode", "amplitude"))
    mode = _mode(ctx, body["mode"], p + ("mode",), system)
    amp = body["amplitude"]
    amp = "alpha" if amp == "alpha" else ctx.complex_(amp, p + ("amplitude",))
    return Displace(mode, amp)


def _p_evolve(ctx, body, p, system):
    ctx.mapping(body, p, ("duration", "hamiltonian"), ("duration",))
    return Evolve(
        ctx.number(body["duration"], p + ("duration",), 0.0),
        ctx.choice(body.get("hamiltonian", "full"), p + ("hamiltonian",), HAMILTONIANS),
    )


def _p_kick(ctx, body, p, system):
    ctx.mapping(body, p, ())
    return Kick()


def _p_lindblad(ctx, body, p, system):
    ctx.mapping(body, p, ("duration", "kappa", "n_b", "dt", "hamiltonian", "modes"), ("duration", "kappa"))
    modes = body.get("modes")
    if modes is not None:
        if not isinstance(modes, list) or not modes:
            ctx.fail(p + ("modes",), "expected a nonempty list of mode numbers")
        modes = tuple(_mode(ctx, m, p + ("modes", i), system) for i, m in enumerate(modes))
    return Lindblad(
        ctx.number(body["duration"], p + ("duration",), 0.0),
        ctx.number(body["kappa"], p + ("kappa",), 0.0),
        ctx.number(body.get("n_b", 0.0), p + ("n_b",), 0.0),
        ctx.number(body.get("dt", 0.005), p + ("dt",), 0.0, strict_lo=True),
        ctx.choice(body.get("hamiltonian", "full"), p + ("hamiltonian",), HAMILTONIANS),
        modes,
    )


def _p_measure(ctx, body, p, system):
    ctx.mapping(body, p, ("observables", "cadence"), ("observables", "cadence"))
    obs = body["observables"]
    if isinstance(obs, str):
        obs = [obs]
    if not isinstance(obs, list) or not obs:
        ctx.fail(p + ("observables",), "expected a nonempty list")
    obs = tuple(ctx.choice(o, p + ("observables", i), OBSERVABLES) for i, o in enumerate(obs))
    if "P_analytic" in obs and any(a.imag != 0 for a in system.alpha):
        ctx.fail(p + ("observables",), "P_analytic needs real displacement amplitudes")
    return Measure(obs, ctx.number(body["cadence"], p + ("cadence",), 0.0, strict_lo=True))


def _p_snapshot(ctx, body, p, system):
    keys = ("what", "mode", "atom", "grid", "split", "model", "label")
    ctx.mapping(body, p, keys, ("what",))
    what = ctx.choice(body["what"], p + ("what",), SNAPSHOT_KINDS)
    allowed = {
        "wigner": ("what", "mode", "atom", "grid", "label"),
        "negativity": ("what", "atom", "split", "label"),
        "fidelity_vs": ("what", "model", "label"),
    }[what]
    ctx.mapping(body, p, allowed)
    label = body.get("label")
    if label is not None and not isinstance(label, str):
        ctx.fail(p + ("label",), "expected a string")
    if what == "wigner":
        mode = _mode(ctx, body.get("mode", 1), p + ("mode",), system)
        atom = ctx.choice(body.get("atom", "trace"), p + ("atom",), ATOM_CHOICES)
        grid = body.get("grid", "auto")
        if grid != "auto":
            gp = p + ("grid",)
            ctx.mapping(grid, gp, ("x", "p", "n"), ("x", "p", "n"))
            rng = []
            for k in ("x", "p"):
                v = grid[k]
                if not isinstance(v, list) or len(v) != 2:
                    ctx.fail(gp + (k,), "expected [low, high]")
                lo, hi = (ctx.number(x, gp + (k, j)) for j, x in enumerate(v))
                if not lo < hi:
                    ctx.fail(gp + (k,), "low must be < high")
                rng += [lo, hi]
            n = ctx.integer(grid["n"], gp + ("n",), 2)
            grid = tuple(rng) + (n, n)
        return Snapshot("wigner", mode, atom, grid, label=label)
    if what == "negativity":
        atom = ctx.choice(body.get("atom", "e"), p + ("atom",), ATOM_CHOICES)
        split = ctx.choice(body.get("split", "1|2" if system.modes == 2 else "atom|field"), p + ("split",), SPLITS)
        if split == "1|2" and system.modes != 2:
            ctx.fail(p + ("split",), "split 1|2 needs a two-mode system")
        if split == "atom|field" and atom != "trace":
            ctx.fail(p + ("atom",), "an atom|field split keeps the atom; atom must be 'trace'")
        return Snapshot("negativity", atom=atom, split=split, label=label)
    model = ctx.choice(body.get("model"), p + ("model",), MODELS)
    if (model == "cat") != (system.modes == 1):
        ctx.fail(p + ("model",), f"model {model!r} does not fit a {system.modes}-mode system")
    return Snapshot("fidelity_vs", model=model, label=label)


_STEP_PARSERS = {
    "displace": _p_displace,
    "evolve": _p_evolve,
    "kick": _p_kick,
    "lindblad": _p_lindblad,
    "measure": _p_measure,
    "snapshot": _p_snapshot,
}


def _parse_output(ctx, raw, path):
    ctx.mapping(raw, path, ("timeseries", "summary", "wigner_formats"))
    out = {}
    for k in ("timeseries", "summary"):
        if k in raw:
            if not isinstance(raw[k], str) or not raw[k] or "/" in raw[k]:
                ctx.fail(path + (k,), "expected a plain file name")
            out[k] = raw[k]
    if "wigner_formats" in raw:
        fm = raw["wigner_formats"]
        if not isinstance(fm, list) or not fm:
            ctx.fail(path + ("wigner_formats",), "expected a nonempty list")
        out["wigner_formats"] = tuple(
            ctx.choice(f, path + ("wigner_formats", i), ("csv", "json")) for i, f in enumerate(fm)
        )
    return OutputSpec(**out)


# --- serialization -----------------------------------------------------------

def _num(z):
    z = complex(z)
    if z.imag == 0:
        return float(z.real)
    return repr(z).strip("()")


def program_to_dict(program):
    s = program.system
    system = {"modes": s.modes}
    if s.modes == 1:
        system["g"] = s.couplings[0]
    else:
        system["g1"], system["g2"] = s.couplings
    system["n_th"] = list(s.n_th)
    system["alpha"] = [_num(a) for a in s.alpha]
    system["truncation"] = s.truncation if s.truncation == "auto" else list(s.truncation)
    system["tail_tol"] = s.tail_tol
    system["atom"] = s.atom
    steps = []
    for st in program.steps:
        if isinstance(st, Displace):
            amp = st.amplitude if st.amplitude == "alpha" else _num(st.amplitude)
            steps.append({"displace": {"mode": st.mode, "amplitude": amp}})
        elif isinstance(st, Evolve):
            steps.append({"evolve": {"duration": st.duration, "hamiltonian": st.hamiltonian}})
        elif isinstance(st, Kick):
            steps.append({"kick": {}})
        elif isinstance(st, Lindblad):
            body = {"duration": st.duration, "kappa": st.kappa, "n_b": st.n_b, "dt": st.dt, "hamiltonian": st.hamiltonian}
            if st.modes is not None:
                body["modes"] = list(st.modes)
            steps.append({"lindblad": body})
        elif isinstance(st, Measure):
            steps.append({"measure": {"observables": list(st.observables), "cadence": st.cadence}})
        elif isinstance(st, Snapshot):
            body = {"what": st.what}
            if st.what == "wigner":
                body["mode"] = st.mode
                body["atom"] = st.atom
                if st.grid == "auto":
                    body["grid"] = "auto"
                else:
                    x0, x1, p0, p1, n, _ = st.grid
                    body["grid"] = {"x": [x0, x1], "p": [p0, p1], "n": n}
            elif st.what == "negativity":
                body["atom"] = st.atom
                body["split"] = st.split
            else:
                body["model"] = st.model
            if st.label is not None:
                body["label"] = st.label
            steps.append({"snapshot": body})
    out = program.output
    doc = {}
    if program.name:
        doc["name"] = program.name
    doc["system"] = system
    doc["steps"] = steps
    doc["output"] = {
        "timeseries": out.timeseries,
        "summary": out.summary,
        "wigner_formats": list(out.wigner_formats),
    }
    return doc


def serialize_program(program):
    """Canonical YAML text; ``parse_program(serialize_program(p)) == p``."""
    return yaml.safe_dump(program_to_dict(program), sort_keys=False, default_flow_style=None)
