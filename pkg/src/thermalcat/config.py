"""Centralised numerical tolerances.

The ``THERMALCAT_TOL_PROFILE`` environment variable selects ``strict``
(default, scale 1) or ``relaxed`` (scale 10).
"""

import os
from dataclasses import dataclass, fields, replace

PROFILE_ENV = "THERMALCAT_TOL_PROFILE"
_PROFILE_SCALE = {"strict": 1.0, "relaxed": 10.0}


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-12
    unitarity: float = 1e-10
    trace_drift: float = 1e-8
    # floor for eigenvalues of states built by exact constructions
    positivity: float = 1e-10
    # floor for states produced by the RK4 integrator
    positivity_integrator: float = 1e-6
    # per-step trace drift accepted by lindblad_evolve before halving dt
    step_trace_drift: float = 1e-10
    # default tail mass for automatic Fock truncation
    tail: float = 1e-10
    # population allowed in the top Fock level during dynamics
    truncation_monitor: float = 1e-6

    def scaled(self, factor):
        return replace(self, **{f.name: getattr(self, f.name) * factor for f in fields(self)})


def profile_name():
    name = os.environ.get(PROFILE_ENV, "strict").strip().lower() or "strict"
    if name not in _PROFILE_SCALE:
        raise ValueError(f"{PROFILE_ENV} must be one of {sorted(_PROFILE_SCALE)}, got {name!r}")
    return name


def tolerances():
    """Tolerances for the active profile. Read on every call so tests can monkeypatch."""
    return Tolerances().scaled(_PROFILE_SCALE[profile_name()])
