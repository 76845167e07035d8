"""Output writers: CSV series, JSON summaries, snapshots and the run manifest."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .grid import write_snapshot

__all__ = ["OutputError", "OutputDir", "RunManifest", "format_float", "read_csv", "sha256"]


class OutputError(OSError):
    pass


def format_float(v) -> str:
    """17 significant digits, so decimal text round-trips to the same double."""
    return format(float(v), ".17g")


def _plain(obj):
    """JSON-safe copy: numpy scalars become Python numbers, non-finite floats strings."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Header and float rows of a CSV written by :meth:`OutputDir.csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    return rows[0], data.reshape(len(rows) - 1, len(rows[0]))


@dataclass
class RunManifest:
    config: str
    version: str
    mode: str
    wall_clock: float = 0.0
    status: str = "ok"
    message: str = ""
    files: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(_plain(asdict(self)), indent=2, sort_keys=True) + "\n"


class OutputDir:
    """Single writer for one run directory; records every file it writes."""

    def __init__(self, root):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OutputError(f"cannot create output directory {self.root}: {exc}") from exc
        self.written: list[Path] = []

    def _path(self, name: str) -> Path:
        return self.root / name

    def _record(self, *paths):
        for p in paths:
            if p not in self.written:
                self.written.append(p)

    def csv(self, name: str, header, rows) -> Path:
        path = self._path(name)
        try:
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for r in rows:
                    w.writerow([format_float(v) for v in r])
        except OSError as exc:
            raise OutputError(f"writing {path}: {exc}") from exc
        self._record(path)
        return path

    def json(self, name: str, obj) -> Path:
        path = self._path(name)
        try:
            path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            raise OutputError(f"writing {path}: {exc}") from exc
        self._record(path)
        return path

    def snapshot(self, name: str, grid, f, time: float) -> Path:
        path = self._path(name)
        try:
            paths = write_snapshot(path, grid, f, time)
        except OSError as exc:
            raise OutputError(f"writing {path}: {exc}") from exc
        self._record(*paths)
        return path

    def manifest(self, man: RunManifest) -> Path:
        """Hash every recorded file and write ``manifest.json`` (not listed in itself)."""
        man.files = {p.name: sha256(p) for p in sorted(self.written)}
        path = self._path("manifest.json")
        try:
            path.write_text(man.to_json())
        except OSError as exc:
            raise OutputError(f"writing {path}: {exc}") from exc
        return path
