"""Text-matrix format shared by scans and spectra.

    # axis1: tau ps -1 0.05 121        (rows)
    # axis2: t ps -2 0.01 1001         (columns)
    <rows of whitespace-separated values, 9 significant digits>

Additional ``# key: value`` header lines are preserved as metadata.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class MatrixFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Axis:
    name: str
    unit: str
    start: float
    step: float
    count: int

    @property
    def values(self) -> np.ndarray:
        return self.start + self.step * np.arange(self.count)

    @classmethod
    def from_values(cls, name, unit, values, rtol=1e-6):
        values = np.asarray(values, dtype=float)
        if len(values) < 2:
            step = 1.0
        else:
            steps = np.diff(values)
            step = float(np.mean(steps))
            if np.max(np.abs(steps - step)) > rtol * abs(step):
                raise MatrixFormatError(f"axis {name} is not uniformly spaced")
        return cls(name, unit, float(values[0]), step, len(values))

    def header(self, label) -> str:
        return f"# {label}: {self.name} {self.unit} {self.start:.9g} {self.step:.9g} {self.count}"


def write_matrix(path, values, axis1: Axis, axis2: Axis, meta=None) -> None:
    values = np.asarray(values, dtype=float)
    if values.shape != (axis1.count, axis2.count):
        raise MatrixFormatError(f"matrix shape {values.shape} does not match axes ({axis1.count}, {axis2.count})")
    lines = [axis1.header("axis1"), axis2.header("axis2")]
    for key, val in (meta or {}).items():
        lines.append(f"# {key}: {val}")
    lines += [" ".join(f"{v:.9g}" for v in row) for row in values]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix(path):
    """Return ``(values, axis1, axis2, meta)``."""
    axes = {}
    meta = {}
    rows = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if line.startswith("#"):
            body = line[1:].strip()
            key, _, rest = body.partition(":")
            key = key.strip()
            if key in ("axis1", "axis2"):
                parts = rest.split()
                if len(parts) != 5:
                    raise MatrixFormatError(f"{path}:{lineno}: malformed axis header")
                axes[key] = Axis(parts[0], parts[1], float(parts[2]), float(parts[3]), int(parts[4]))
            elif key:
                meta[key] = rest.strip()
            continue
        if line.strip():
            rows.append([float(v) for v in line.split()])
    if set(axes) != {"axis1", "axis2"}:
        raise MatrixFormatError(f"{path}: missing axis headers")
    values = np.array(rows, dtype=float)
    if values.shape != (axes["axis1"].count, axes["axis2"].count):
        raise MatrixFormatError(f"{path}: matrix shape {values.shape} does not match axis headers")
    return values, axes["axis1"], axes["axis2"], meta
