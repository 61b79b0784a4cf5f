"""Sampled observable records and their CSV/JSON serialization."""

import io
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

CSV_FLOAT = "{:.17g}"


def format_float(x):
    x = float(x)
    if x == 0.0:
        return "0"
    return CSV_FLOAT.format(x)


@dataclass
class TimeSeries:
    """A strictly increasing time grid plus named columns of equal length."""

    times: np.ndarray
    columns: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)
    time_label: str = "tau"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1:
            raise DomainError("time grid must be one-dimensional")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise DomainError("time grid must be strictly increasing")
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        for name, col in self.columns.items():
            if col.shape != self.times.shape:
                raise DomainError(f"column {name!r} has length {col.size}, grid has {self.times.size}")

    def __getitem__(self, name):
        return self.columns[name]

    def __len__(self):
        return self.times.size

    def to_csv(self, path=None):
        """Header row then one row per sample, 17 significant digits."""
        names = list(self.columns)
        buf = io.StringIO()
        buf.write(",".join([self.time_label] + names) + "\n")
        for i, t in enumerate(self.times):
            row = [format_float(t)] + [format_float(self.columns[n][i]) for n in names]
            buf.write(",".join(row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, text, time_label=None):
        lines = [ln for ln in text.strip().splitlines() if ln]
        header = lines[0].split(",")
        data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]).reshape(-1, len(header))
        cols = {name: data[:, i + 1] for i, name in enumerate(header[1:])}
        return cls(data[:, 0], cols, time_label=time_label or header[0])

    def to_dict(self):
        return {
            self.time_label: self.times.tolist(),
            "columns": {k: v.tolist() for k, v in self.columns.items()},
            "metadata": self.metadata,
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text
