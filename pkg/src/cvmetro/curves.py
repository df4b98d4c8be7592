"""Tabulated curves with provenance, serialised as CSV plus a JSON sidecar."""

from __future__ import annotations

import csv
import io
import json
import subprocess
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["CurveData", "git_describe"]


def git_describe() -> str:
    """``git describe`` of the source tree, or ``"unknown"``."""
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=10,
            check=True,
        )
        return out.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


@dataclass
class CurveData:
    """One curve ``y(x)`` plus optional error bars and extra columns.

    Attributes
    ----------
    x_label, y_label : str
        Column names; units go in ``x_units`` / ``y_units``.
    columns : dict
        Additional named columns aligned with ``x``.
    provenance : dict
        Parameter echo, seed and source revision.
    """

    x_label: str
    y_label: str
    x: np.ndarray
    y: np.ndarray
    y_err: np.ndarray | None = None
    x_units: str = ""
    y_units: str = ""
    columns: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        n = self.x.size
        if self.x.ndim != 1 or self.y.shape != (n,):
            raise ValueError("x and y must be 1-D arrays of equal length")
        if self.y_err is not None:
            self.y_err = np.asarray(self.y_err, dtype=float)
            if self.y_err.shape != (n,):
                raise ValueError("y_err must align with x")
        self.columns = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        for k, v in self.columns.items():
            if v.shape != (n,):
                raise ValueError(f"column {k!r} must align with x")
        if n > 1:
            dx = np.diff(self.x)
            if not (np.all(dx > 0) or np.all(dx < 0)):
                raise ValueError("x must be strictly monotone")
        for name, arr in self._all_columns():
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite values in column {name!r}")

    def _all_columns(self):
        yield self.x_label, self.x
        yield self.y_label, self.y
        if self.y_err is not None:
            yield self.y_label + "_err", self.y_err
        yield from self.columns.items()

    def __len__(self) -> int:
        return self.x.size

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        cols = list(self._all_columns())
        writer.writerow([name for name, _ in cols])
        for i in range(len(self)):
            writer.writerow([repr(float(arr[i])) for _, arr in cols])
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "x": {"label": self.x_label, "units": self.x_units},
            "y": {"label": self.y_label, "units": self.y_units},
            "columns": [name for name, _ in self._all_columns()],
            "rows": len(self),
            "provenance": self.provenance,
        }

    def write(self, stem) -> tuple[Path, Path]:
        """Write ``<stem>.csv`` and ``<stem>.meta.json``."""
        stem = Path(stem)
        stem.parent.mkdir(parents=True, exist_ok=True)
        csv_path = stem.with_name(stem.name + ".csv")
        meta_path = stem.with_name(stem.name + ".meta.json")
        csv_path.write_text(self.to_csv_text(), encoding="utf-8", newline="")
        meta_path.write_text(
            json.dumps(self.metadata(), indent=2, sort_keys=True, default=_jsonable) + "\n",
            encoding="utf-8",
        )
        return csv_path, meta_path


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"cannot serialise {type(obj).__name__}")
