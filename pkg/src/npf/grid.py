"""Uniform cell-centred grids on a unit-measure box.

Fields are plain ``numpy`` arrays of shape ``grid.shape`` holding values at
cell centres.  Every reduction uses midpoint quadrature, so the constant
field 1 integrates to exactly ``prod(side_lengths) == 1``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["Grid", "write_snapshot", "read_snapshot"]


@dataclass(frozen=True)
class Grid:
    """Box ``prod_i (0, L_i)`` split into ``n_i`` equal cells per direction.

    Parameters
    ----------
    cells : tuple of int
        Cell counts ``(n_1,)`` or ``(n_1, n_2)``; each at least 4.
    side_lengths : tuple of float, optional
        Box side lengths.  Their product must be 1 (the domain has unit
        measure).  Defaults to the unit square/interval.
    """

    cells: tuple[int, ...]
    side_lengths: tuple[float, ...] | None = None

    def __post_init__(self):
        cells = tuple(int(n) for n in np.atleast_1d(self.cells))
        if len(cells) not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {len(cells)}")
        if any(n < 4 for n in cells):
            raise ValueError(f"every cell count must be >= 4, got {cells}")
        sides = self.side_lengths
        if sides is None:
            sides = (1.0,) * len(cells)
        sides = tuple(float(s) for s in np.atleast_1d(sides))
        if len(sides) != len(cells):
            raise ValueError("side_lengths and cells differ in length")
        if any(s <= 0 for s in sides):
            raise ValueError("side lengths must be positive")
        if abs(np.prod(sides) - 1.0) > 1e-12:
            raise ValueError(f"domain must have unit measure, got {np.prod(sides)!r}")
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "side_lengths", sides)

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def size(self) -> int:
        return int(np.prod(self.cells))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.side_lengths, self.cells))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        """Cell-centre coordinates along each direction."""
        return [(np.arange(n) + 0.5) * h for n, h in zip(self.cells, self.spacing)]

    def coords(self) -> tuple[np.ndarray, ...]:
        """Cell-centre coordinate arrays, each of shape ``self.shape``."""
        return tuple(np.meshgrid(*self.axes(), indexing="ij"))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape)

    def full(self, value: float) -> np.ndarray:
        return np.full(self.shape, float(value))

    def check(self, f) -> np.ndarray:
        """Return ``f`` as a float array on this grid or raise."""
        f = np.asarray(f, dtype=float)
        if f.shape != self.shape:
            raise ValueError(f"field shape {f.shape} does not match grid {self.shape}")
        if not np.all(np.isfinite(f)):
            raise ValueError("field contains non-finite values")
        return f

    # -- quadrature and norms -------------------------------------------------

    def integrate(self, f) -> float:
        return float(np.sum(self.check(f)) * self.cell_volume)

    def inner(self, f, g) -> float:
        return float(np.sum(self.check(f) * self.check(g)) * self.cell_volume)

    def lp_norm(self, f, p: float = 2) -> float:
        """L^p norm for ``p >= 1`` or ``p = inf``."""
        f = self.check(f)
        if p == np.inf:
            return float(np.max(np.abs(f))) if f.size else 0.0
        if not p >= 1:
            raise ValueError(f"p must be >= 1 or inf, got {p!r}")
        a = np.abs(f)
        m = a.max()
        if m == 0:
            return 0.0
        # scale by the max to avoid overflow for large p
        return float(m * (np.sum((a / m) ** p) * self.cell_volume) ** (1.0 / p))

    def norm(self, f) -> float:
        return self.lp_norm(f, 2)

    # -- Dirichlet Laplacian ---------------------------------------------------

    def apply_A(self, f) -> np.ndarray:
        """Discrete ``-Laplace`` with homogeneous Dirichlet data.

        Second-order central differences; ghost values ``-f`` outside each
        face put the zero boundary value exactly on the face.
        """
        f = self.check(f)
        out = np.zeros_like(f)
        for axis, h in enumerate(self.spacing):
            pad = [(0, 0)] * f.ndim
            pad[axis] = (1, 1)
            g = np.pad(f, pad)
            lo = [slice(None)] * f.ndim
            hi = [slice(None)] * f.ndim
            lo[axis], hi[axis] = 0, -1
            g[tuple(lo)] = -np.take(f, 0, axis=axis)
            g[tuple(hi)] = -np.take(f, -1, axis=axis)
            out += (2 * f - np.take(g, range(0, f.shape[axis]), axis=axis)
                    - np.take(g, range(2, f.shape[axis] + 2), axis=axis)) / h**2
        return out

    def h1_seminorm_sq(self, f) -> float:
        """Discrete ``||grad f||^2`` matching ``inner(apply_A(f), f)``."""
        f = self.check(f)
        total = 0.0
        vol = self.cell_volume
        for axis, h in enumerate(self.spacing):
            d = np.diff(f, axis=axis) / h
            total += np.sum(d**2) * vol
            # boundary faces: the gradient 2 f_b / h acts over a half cell
            for idx in (0, -1):
                fb = np.take(f, idx, axis=axis)
                total += np.sum((2 * fb / h) ** 2) * vol / 2
        return float(total)

    def dirichlet_eigenvalue(self, k: tuple[int, ...] | int = 1) -> float:
        """Eigenvalue of the discrete ``A`` for the sine mode ``k`` (1-based)."""
        k = np.broadcast_to(np.atleast_1d(k), (self.dim,))
        return float(sum(4 / h**2 * np.sin(ki * np.pi * h / (2 * L)) ** 2
                         for ki, h, L in zip(k, self.spacing, self.side_lengths)))

    def tridiagonal(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Sub-, main and super-diagonal of ``A`` in 1D."""
        if self.dim != 1:
            raise ValueError("tridiagonal form exists only in 1D")
        n, h = self.cells[0], self.spacing[0]
        main = np.full(n, 2.0 / h**2)
        main[[0, -1]] = 3.0 / h**2
        off = np.full(n - 1, -1.0 / h**2)
        return off, main, off.copy()

    def to_json(self) -> dict:
        return {"dimension": self.dim, "cell_counts": list(self.cells),
                "side_lengths": list(self.side_lengths)}


def write_snapshot(path, grid: Grid, f, time: float = 0.0) -> tuple[Path, Path]:
    """Write ``f`` as raw little-endian float64 (row-major) plus a JSON sidecar.

    Returns the paths of the binary and the descriptor (``<path>.json``).
    """
    path = Path(path)
    f = grid.check(f)
    path.write_bytes(np.ascontiguousarray(f, dtype="<f8").tobytes(order="C"))
    meta = dict(grid.to_json(), time=float(time))
    side = path.with_name(path.name + ".json")
    side.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return path, side


def read_snapshot(path) -> tuple[Grid, np.ndarray, float]:
    path = Path(path)
    meta = json.loads(path.with_name(path.name + ".json").read_text())
    grid = Grid(tuple(meta["cell_counts"]), tuple(meta["side_lengths"]))
    if meta["dimension"] != grid.dim:
        raise ValueError("snapshot descriptor has inconsistent dimension")
    data = np.frombuffer(path.read_bytes(), dtype="<f8")
    if data.size != grid.size:
        raise ValueError(f"snapshot holds {data.size} values, expected {grid.size}")
    return grid, data.reshape(grid.shape).astype(float), float(meta["time"])
