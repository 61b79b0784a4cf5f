"""Least-squares fits of Gaussian-damped oscillations."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from .errors import DomainError


@dataclass(frozen=True)
class OscillationFit:
    amplitude: float
    width: float
    omega: float
    phase: float
    offset: float
    rms: float

    def as_dict(self):
        return {k: float(v) for k, v in self.__dict__.items()}


def gaussian_oscillation(t, amplitude, width, omega, phase, offset, center=0.0):
    x = t - center
    return offset + amplitude * np.exp(-((x / width) ** 2)) * np.cos(omega * x + phase)


def dominant_frequency(t, y):
    """Angular frequency of the largest non-DC FFT peak (uniform grid assumed)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float) - np.mean(y)
    dt = t[1] - t[0]
    n = 8 * t.size
    spec = np.abs(np.fft.rfft(y * np.hanning(t.size), n))
    freqs = np.fft.rfftfreq(n, dt)
    k = 1 + int(np.argmax(spec[1:]))
    return 2 * np.pi * freqs[k]


def fit_gaussian_oscillation(t, y, center=0.0, omega_guess=None, width_guess=None):
    """Fit ``c + A exp(-((t-center)/w)^2) cos(omega (t-center) + phi)``.

    Several starting widths are tried and the lowest-residual fit is kept.
    The returned width is positive and the amplitude is made positive by
    shifting the phase.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.size < 8:
        raise DomainError("need at least 8 samples to fit an oscillation")
    if omega_guess is None:
        omega_guess = dominant_frequency(t, y)
    span = float(np.max(np.abs(t - center)))
    if width_guess is None:
        width_guess = span / 3.0
    offset0 = float(np.mean(y))
    a0 = float(np.max(np.abs(y - offset0)))
    best = None

    def model(tt, amplitude, width, omega, phase, offset):
        return gaussian_oscillation(tt, amplitude, width, omega, phase, offset, center)

    for scale in (0.5, 1.0, 2.0):
        for phase0 in (0.0, np.pi):
            p0 = [a0, width_guess * scale, omega_guess, phase0, offset0]
            try:
                popt, _ = curve_fit(
                    model,
                    t,
                    y,
                    p0=p0,
                    bounds=([0.0, 1e-6, 0.0, -4 * np.pi, -np.inf], [np.inf, 1e3 * span + 1, np.inf, 4 * np.pi, np.inf]),
                    maxfev=20000,
                )
            except RuntimeError:
                continue
            rms = float(np.sqrt(np.mean((model(t, *popt) - y) ** 2)))
            if best is None or rms < best[1]:
                best = (popt, rms)
    if best is None:
        raise DomainError("oscillation fit did not converge")
    popt, rms = best
    amplitude, width, omega, phase, offset = popt
    phase = (phase + np.pi) % (2 * np.pi) - np.pi
    return OscillationFit(float(amplitude), float(abs(width)), float(omega), float(phase), float(offset), rms)
