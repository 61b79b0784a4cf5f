from pathlib import Path

import pytest
import yaml
from hypothesis import given
from hypothesis import strategies as st

from thermalcat.errors import ProgramError
from thermalcat.program import (
    Displace,
    Evolve,
    Kick,
    Lindblad,
    Measure,
    Snapshot,
    load_program,
    parse_program,
    program_to_dict,
    serialize_program,
)

PROGRAMS = sorted((Path(__file__).resolve().parent.parent / "programs").glob("*.yaml"))

MINIMAL = """\
system:
  modes: 1
  g: 1.0
  n_th: 0.5
  alpha: 5.0
steps:
  - displace: {mode: 1, amplitude: alpha}
  - evolve: {duration: 1.0}
  - measure: {observables: [Pg], cadence: 0.1}
"""


@pytest.mark.parametrize("path", PROGRAMS, ids=lambda p: p.stem)
def test_golden_programs_round_trip(path):
    prog = load_program(path)
    text = serialize_program(prog)
    again = parse_program(text)
    assert again == prog
    assert serialize_program(again) == text


def test_minimal_program_defaults():
    prog = parse_program(MINIMAL)
    s = prog.system
    assert s.couplings == (1.0,) and s.n_th == (0.5,) and s.alpha == (5 + 0j,)
    assert s.truncation == "auto" and s.tail_tol == 1e-10 and s.atom == "g"
    assert prog.steps == (Displace(1, "alpha"), Evolve(1.0, "full"), Measure(("Pg",), 0.1))
    assert prog.duration == 1.0
    assert prog.measured() == ("Pg",)
    assert prog.cadence() == 0.1


def test_all_step_kinds_parse():
    text = """\
system: {modes: 2, g1: 1.0, g2: 0.5, n_th: [0.1, 0.2], alpha: ['3+1j', 2.0], truncation: [20, 18]}
steps:
  - displace: {mode: 2, amplitude: '0.5-0.5j'}
  - evolve: {duration: 0.5, hamiltonian: rwa}
  - kick
  - lindblad: {duration: 0.2, kappa: 0.01, n_b: 0.1, dt: 0.002, modes: [1]}
  - measure: {observables: [Pg, mean_n, purity], cadence: 0.1}
  - snapshot: {what: wigner, mode: 2, atom: e, grid: {x: [-3, 3], p: [-2, 2], n: 21}}
  - snapshot: {what: negativity, atom: trace, split: '1|2'}
  - snapshot: {what: fidelity_vs, model: two_mode, label: f}
"""
    prog = parse_program(text)
    assert prog.system.alpha == (3 + 1j, 2 + 0j)
    assert prog.system.truncation == (20, 18)
    assert prog.steps[0] == Displace(2, 0.5 - 0.5j)
    assert prog.steps[2] == Kick()
    assert prog.steps[3] == Lindblad(0.2, 0.01, 0.1, 0.002, "full", (1,))
    assert prog.steps[5] == Snapshot("wigner", 2, "e", (-3.0, 3.0, -2.0, 2.0, 21, 21))
    assert prog.duration == pytest.approx(0.7)
    assert parse_program(serialize_program(prog)) == prog


def _mutate(path, value):
    doc = yaml.safe_load(MINIMAL)
    node = doc
    for key in path[:-1]:
        node = node[key]
    if value is _DELETE:
        del node[path[-1]]
    else:
        node[path[-1]] = value
    return yaml.safe_dump(doc, sort_keys=False)


_DELETE = object()


@pytest.mark.parametrize(
    "path,value,fragment",
    [
        (("system", "g"), -1.0, "system.g"),
        (("system", "g"), _DELETE, "missing required key 'g'"),
        (("system", "modes"), 3, "system.modes"),
        (("system", "n_th"), [0.1, 0.2], "one per mode"),
        (("system", "alpha"), "abc", "complex"),
        (("system", "tail_tol"), 2.0, "system.tail_tol"),
        (("system", "atom"), "x", "system.atom"),
        (("steps", 0, "displace", "mode"), 2, "steps[0].displace.mode"),
        (("steps", 1, "evolve", "duration"), "long", "steps[1].evolve.duration"),
        (("steps", 1, "evolve", "hamiltonian"), "jc", "steps[1].evolve.hamiltonian"),
        (("steps", 2, "measure", "observables"), ["Px"], "steps[2].measure.observables[0]"),
        (("steps", 2, "measure", "cadence"), 0.0, "steps[2].measure.cadence"),
        (("steps", 2), {"wait": {}}, "unknown step type"),
        (("steps",), [], "nonempty"),
        (("system", "bogus"), 1, "unknown key 'bogus'"),
    ],
)
def test_rejections_carry_location(path, value, fragment):
    with pytest.raises(ProgramError) as exc:
        parse_program(_mutate(path, value))
    msg = str(exc.value)
    assert fragment in msg
    assert msg.startswith("line ") or exc.value.location


def test_line_numbers_point_at_offending_field():
    text = MINIMAL.replace("mode: 1, amplitude", "mode: 3, amplitude")
    with pytest.raises(ProgramError) as exc:
        parse_program(text)
    assert exc.value.location == "line 7, steps[0].displace.mode"


def test_semantic_rejections():
    cases = {
        "at least one measure or snapshot": MINIMAL.replace("  - measure: {observables: [Pg], cadence: 0.1}\n", ""),
        "share one cadence": MINIMAL + "  - measure: {observables: [Pe], cadence: 0.2}\n",
        "real displacement": MINIMAL.replace("alpha: 5.0", "alpha: '5+1j'").replace("[Pg]", "[P_analytic]"),
        "two-mode system": MINIMAL + "  - snapshot: {what: negativity, atom: e, split: '1|2'}\n",
        "atom must be 'trace'": MINIMAL + "  - snapshot: {what: negativity, atom: e, split: 'atom|field'}\n",
        "does not fit": MINIMAL + "  - snapshot: {what: fidelity_vs, model: two_mode}\n",
        "low must be < high": MINIMAL + "  - snapshot: {what: wigner, grid: {x: [1, -1], p: [-1, 1], n: 5}}\n",
    }
    for fragment, text in cases.items():
        with pytest.raises(ProgramError, match=fragment):
            parse_program(text)


def test_yaml_syntax_error_has_line():
    with pytest.raises(ProgramError) as exc:
        parse_program("system: {modes: 1\nsteps: [")
    assert exc.value.location.startswith("line ")


def test_non_strict_mode_warns_on_unknown_keys():
    text = MINIMAL.replace("  g: 1.0\n", "  g: 1.0\n  colour: blue\n")
    with pytest.raises(ProgramError):
        parse_program(text)
    prog = parse_program(text, strict=False)
    assert prog.warnings == ("system.colour: ignored unknown key",)
    assert prog == parse_program(MINIMAL)


@given(
    g=st.floats(0.01, 10),
    n_th=st.floats(0, 5),
    re=st.floats(-8, 8),
    im=st.floats(-8, 8),
    dur=st.floats(0, 20),
    cad=st.floats(1e-3, 1),
)
def test_round_trip_property(g, n_th, re, im, dur, cad):
    text = f"""\
system: {{modes: 1, g: {g!r}, n_th: {n_th!r}, alpha: '{complex(re, im)!r}'}}
steps:
  - displace: {{mode: 1, amplitude: alpha}}
  - evolve: {{duration: {dur!r}}}
  - measure: {{observables: [Pg, Pe], cadence: {cad!r}}}
"""
    prog = parse_program(text)
    assert prog.system.alpha[0] == complex(re, im)
    assert parse_program(serialize_program(prog)) == prog
    assert program_to_dict(prog)["steps"][1]["evolve"]["duration"] == dur
