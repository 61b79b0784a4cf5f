"""Parameter sweeps over a pulse-program template."""

import copy
import csv
import io
import os
import re
from concurrent.futures import ThreadPoolExecutor

import yaml

from .errors import ProgramError, ThermalcatError
from .program import load_yaml, parse_program
from .runner import _atomic_write, run_program


def _split_path(path):
    parts = []
    for p in path.split("."):
        if not p:
            raise ProgramError(f"bad parameter path {path!r}")
        parts.append(int(p) if re.fullmatch(r"\d+", p) else p)
    return parts


def _locate(doc, parts, path):
    node = doc
    for p in parts[:-1]:
        try:
            node = node[p]
        except (KeyError, IndexError, TypeError):
            raise ProgramError(f"parameter {path!r} does not exist in the template") from None
    last = parts[-1]
    if isinstance(node, dict) and isinstance(last, str):
        # optional keys may be absent; validation rejects names that are not keys at all
        return node, last
    try:
        node[last]
    except (KeyError, IndexError, TypeError):
        raise ProgramError(f"parameter {path!r} does not exist in the template") from None
    return node, last


def set_parameter(doc, path, value):
    """Copy of ``doc`` with ``path`` set to ``value``.

    Steps are addressed by index and step type, e.g. ``steps.1.evolve.duration``.
    A scalar assigned to a per-mode list replaces every entry.
    """
    doc = copy.deepcopy(doc)
    node, last = _locate(doc, _split_path(path), path)
    if isinstance(node.get(last) if isinstance(node, dict) else node[last], list) and not isinstance(value, list):
        node[last] = [value] * len(node[last])
    else:
        node[last] = value
    return doc


def _flatten(summary):
    row = {}
    for k, v in sorted(summary.get("final", {}).items()):
        row[f"final_{k}"] = v
    for i, rev in enumerate(summary.get("revivals", [])):
        row[f"revival{i}_Pg"] = rev["Pg"]
        row[f"revival{i}_fidelity"] = rev["fidelity_with_kicked_initial"]
    for snap in summary.get("snapshots", []):
        if "value" in snap:
            tag = snap.get("label") or f"{snap['what']}{snap['step']}"
            row[tag] = snap["value"]
    for k, v in sorted(summary.get("envelope_fit", {}).items()):
        if isinstance(v, float):
            row[f"fit_{k}"] = v
    row["truncation"] = "x".join(str(d) for d in summary.get("truncation", []))
    return row


def _slug(value):
    return re.sub(r"[^0-9A-Za-z.+-]+", "_", str(value))


def sweep(template_text, parameter, values, out_dir, threads=1, strict=True):
    """Run the template once per value and write ``aggregate.csv``.

    Validation of the path and of every generated program happens before any
    point runs. A point that fails at run time is recorded with its exit
    code; it does not stop the sweep.
    """
    if not values:
        raise ProgramError("sweep needs at least one value")
    parse_program(template_text, strict=strict)
    doc = load_yaml(template_text)
    programs = []
    for v in values:
        text = yaml.safe_dump(set_parameter(doc, parameter, v), sort_keys=False)
        programs.append(parse_program(text, strict=strict))
    os.makedirs(out_dir, exist_ok=True)

    def one(i):
        sub = os.path.join(out_dir, f"point_{i:03d}_{_slug(values[i])}")
        try:
            res = run_program(programs[i], sub)
            return {"status": "ok", "exit_code": 0, "error": "", **_flatten(res.summary)}
        except ThermalcatError as exc:
            return {"status": "failed", "exit_code": exc.exit_code, "error": str(exc)}

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(one, range(len(values))))
    keys = []
    for r in rows:
        keys.extend(k for k in r if k not in keys and k not in ("status", "exit_code", "error"))
    header = [parameter] + keys + ["status", "exit_code", "error"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    from .timeseries import format_float

    for v, r in zip(values, rows):
        cells = [v] + [r.get(k, "") for k in keys] + [r["status"], r["exit_code"], r["error"]]
        w.writerow([format_float(c) if isinstance(c, float) else c for c in cells])
    _atomic_write(os.path.join(out_dir, "aggregate.csv"), buf.getvalue())
    return rows
