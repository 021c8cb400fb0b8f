"""Sampled functions on a grid and their CSV representation."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError


@dataclass
class SampledFunction:
    """Ordinates ``y`` on abscissae ``x`` plus free-form metadata.

    ``y`` may be real or complex and may carry extra trailing columns
    (shape ``(n,)`` or ``(n, k)``).
    """

    x: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y)
        if self.x.ndim != 1:
            raise FormatError("abscissae must be one-dimensional")
        if self.y.shape[:1] != self.x.shape:
            raise FormatError("ordinates and abscissae differ in length")
        if not np.all(np.isfinite(self.x)):
            raise FormatError("abscissae must be finite")

    def __len__(self):
        return self.x.size

    @classmethod
    def uniform(cls, start, stop, n, y=None, **meta):
        x = np.linspace(start, stop, n)
        return cls(x, np.zeros(n) if y is None else y, dict(meta))

    @classmethod
    def logspaced(cls, start, stop, n, y=None, **meta):
        x = np.geomspace(start, stop, n)
        return cls(x, np.zeros(n) if y is None else y, dict(meta))

    @property
    def is_increasing(self) -> bool:
        return bool(np.all(np.diff(self.x) > 0))

    @property
    def is_uniform(self) -> bool:
        if self.x.size < 2:
            return True
        d = np.diff(self.x)
        return bool(np.all(d > 0) and np.ptp(d) <= 1e-9 * abs(d.mean()))

    @property
    def spacing(self) -> float:
        """Grid step; raises :class:`FormatError` for non-uniform grids."""
        if not self.is_uniform or self.x.size < 2:
            raise FormatError("grid is not uniform")
        return float((self.x[-1] - self.x[0]) / (self.x.size - 1))

    def require_uniform(self) -> float:
        return self.spacing


def write_csv(path, columns: dict, header: dict | None = None):
    """Write named columns to CSV preceded by ``# key: value`` comment lines."""
    path = Path(path)
    names = list(columns)
    arrays = [np.asarray(columns[k]) for k in names]
    n = arrays[0].shape[0]
    buf = io.StringIO()
    for k, v in (header or {}).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for i in range(n):
        w.writerow([repr(float(a[i])) for a in arrays])
    path.write_text(buf.getvalue())


def read_csv(path, expected: list[str] | None = None):
    """Read a CSV written by :func:`write_csv` (or by hand).

    Returns ``(columns, header)`` where ``columns`` maps names to float
    arrays and ``header`` holds the ``# key: value`` comments.
    """
    header = {}
    rows = []
    names = None
    with open(path, newline="") as fh:
        for line in fh:
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                body = s.lstrip("#").strip()
                if ":" in body:
                    k, v = body.split(":", 1)
                    header[k.strip()] = v.strip()
                continue
            fields = next(csv.reader([s]))
            if names is None:
                names = [f.strip() for f in fields]
                continue
            if len(fields) != len(names):
                raise FormatError(f"{path}: row has {len(fields)} fields, expected {len(names)}")
            try:
                rows.append([float(f) for f in fields])
            except ValueError as exc:
                raise FormatError(f"{path}: non-numeric value ({exc})") from None
    if names is None:
        raise FormatError(f"{path}: missing header line")
    if expected is not None and names != expected:
        raise FormatError(f"{path}: columns {names}, expected {expected}")
    data = np.array(rows, dtype=float).reshape(-1, len(names))
    return {k: data[:, i] for i, k in enumerate(names)}, header


def read_force_csv(path) -> SampledFunction:
    cols, header = read_csv(path, ["t", "f"])
    sf = SampledFunction(cols["t"], cols["f"], {"source": str(path), **header})
    sf.require_uniform()
    return sf
