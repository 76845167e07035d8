"""The nonlocal operator ``J[u](x) = -int_Omega K(x - y) u(y) dy``.

The kernel is sampled on the lattice of cell-centre offsets, so the discrete
operator is ``(J u)_i = -h sum_j K(x_i - x_j) u_j``.  Two evaluation paths
exist: zero-padded linear convolution by FFT (the production path) and the
O(N^2) double sum used as its oracle.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from .grid import Grid

__all__ = [
    "KernelSpec",
    "NonlocalOperator",
    "BoundReport",
    "SpectralDecomp",
    "read_kernel_table",
    "MAX_EIG_CELLS",
]

MAX_EIG_CELLS = 128 * 128


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("NPF_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class KernelSpec:
    """Interaction kernel ``K_s(x) = s^-d K(x / s)``.

    ``family`` is one of ``"gaussian"``, ``"bump"``, ``"table"`` or ``"zero"``.
    For ``"table"``, ``offsets``/``values`` sample the profile: when all
    offsets are nonnegative it is a radial profile ``K(|x|)`` (even by
    construction); signed offsets give a 1D profile that need not be even.
    Table profiles are used as given, without the ``s^-d`` rescaling.
    """

    family: str = "gaussian"
    scale: float = 0.1
    amplitude: float = 1.0
    offsets: tuple[float, ...] | None = None
    values: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family not in ("gaussian", "bump", "table", "zero"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.scale <= 0:
            raise ValueError("kernel scale must be positive")
        if self.amplitude < 0:
            raise ValueError("kernel amplitude must be nonnegative")
        if self.family == "table":
            if self.offsets is None or self.values is None:
                raise ValueError("table kernel needs offsets and values")
            off = np.asarray(self.offsets, dtype=float)
            if off.shape != np.shape(self.values) or off.size < 2:
                raise ValueError("table offsets/values mismatch")
            if np.any(np.diff(off) <= 0):
                raise ValueError("table offsets must be strictly increasing")
            object.__setattr__(self, "offsets", tuple(off))
            object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @property
    def radial(self) -> bool:
        return self.family != "table" or min(self.offsets) >= 0

    def __call__(self, *x) -> np.ndarray:
        """Evaluate the kernel at offset components ``x = (x_1, ..., x_d)``."""
        x = [np.asarray(c, dtype=float) for c in x]
        d = len(x)
        r = np.sqrt(sum(c**2 for c in x))
        s, a = self.scale, self.amplitude
        if self.family == "zero" or a == 0:
            return np.zeros_like(r)
        if self.family == "gaussian":
            return a * s**-d * np.exp(-(r**2) / (2 * s**2))
        if self.family == "bump":
            q = np.minimum((r / s) ** 2, 1.0)
            out = np.zeros_like(r)
            inside = q < 1
            out[inside] = np.exp(-1.0 / (1.0 - q[inside]))
            return a * s**-d * out
        off, val = np.asarray(self.offsets), np.asarray(self.values)
        if self.radial:
            arg = r
        elif d == 1:
            arg = x[0]
        else:
            raise ValueError("signed table kernels are 1D only")
        return a * np.interp(arg, off, val, left=0.0, right=0.0)

    def asymmetry(self, grid: Grid) -> float:
        """Largest ``|K(z) - K(-z)|`` over the grid's offset lattice."""
        z = _offset_lattice(grid)
        return float(np.max(np.abs(self(*z) - self(*[-c for c in z]))))


def read_kernel_table(path, **kw) -> KernelSpec:
    """Load a ``(offset, value)`` CSV (header optional) as a table kernel."""
    rows = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                if rows:
                    raise
    off, val = zip(*rows)
    return KernelSpec("table", offsets=off, values=val, **kw)


def _offset_lattice(grid: Grid) -> list[np.ndarray]:
    """Offsets ``k h`` for ``k = -(n-1) .. n-1`` in each direction."""
    ax = [np.arange(-(n - 1), n) * h for n, h in zip(grid.cells, grid.spacing)]
    return list(np.meshgrid(*ax, indexing="ij"))


@dataclass
class BoundReport:
    """Sampled check of ``||Ju||_p <= L ||u||_p`` and ``||Ju||_inf <= C ||u||_1``."""

    L: float
    C_inf: float
    p_star: float
    ratios: dict
    smoothing_ratio: float
    selfadjoint_residual: float
    sample_count: int
    bound_pass: bool
    smoothing_pass: bool
    selfadjoint_pass: bool

    @property
    def passed(self) -> bool:
        return self.bound_pass and self.smoothing_pass and self.selfadjoint_pass

    def to_json(self) -> str:
        d = asdict(self)
        d["ratios"] = {str(k): v for k, v in self.ratios.items()}
        d["pass"] = self.passed
        return json.dumps(d, indent=2, sort_keys=True)


@dataclass
class SpectralDecomp:
    """Leading eigenpairs of ``J``, sorted by ``|mu|`` descending.

    ``vectors[i]`` is a field with unit ``L^2`` norm.
    """

    op: "NonlocalOperator"
    values: np.ndarray
    vectors: np.ndarray
    trace: float

    @property
    def m(self) -> int:
        return len(self.values)

    def project(self, u, N: int) -> np.ndarray:
        """Orthogonal projection of ``u`` onto the first ``N`` eigenvectors."""
        if not 0 <= N <= self.m:
            raise ValueError(f"N must lie in [0, {self.m}]")
        grid = self.op.grid
        u = grid.check(u)
        if N == 0:
            return np.zeros_like(u)
        V = self.vectors[:N].reshape(N, -1)
        coef = V @ u.ravel() * grid.cell_volume
        return (coef @ V).reshape(grid.shape)

    def apply(self, u, N: int | None = None) -> np.ndarray:
        """Reconstruct ``J u`` from the first ``N`` eigenpairs."""
        N = self.m if N is None else N
        grid = self.op.grid
        V = self.vectors[:N].reshape(N, -1)
        coef = V @ grid.check(u).ravel() * grid.cell_volume
        return ((self.values[:N] * coef) @ V).reshape(grid.shape)

    def projector_bound(self, eta: float, samples: int = 500, seed: int = 0):
        """Check ``||Jv||^2 <= eta ||v||^2 + c ||Pi v||^2`` on random ``v``.

        ``N`` counts eigenvalues with ``mu^2 > eta``, ``c = max mu^2``.

        Returns
        -------
        N : int
        c : float
        passed : bool
        worst : float
            Largest ``lhs - rhs`` seen (nonpositive when the bound holds).
        """
        if eta <= 0:
            raise ValueError("eta must be positive")
        mu2 = self.values**2
        N = int(np.sum(mu2 > eta))
        c = float(mu2.max()) if N > 0 else 0.0
        grid = self.op.grid
        rng = np.random.default_rng(seed)
        worst = -np.inf
        for _ in range(samples):
            v = rng.standard_normal(grid.shape)
            lhs = grid.norm(self.op.apply(v)) ** 2
            rhs = eta * grid.norm(v) ** 2 + c * grid.norm(self.project(v, N)) ** 2
            worst = max(worst, lhs - rhs)
        return N, c, bool(worst <= 1e-9), float(worst)


class NonlocalOperator:
    """``J = -(K_s * .)`` restricted to the grid, with cached FFT table.

    Parameters
    ----------
    kernel : KernelSpec
    grid : Grid
    """

    def __init__(self, kernel: KernelSpec, grid: Grid):
        self.kernel = kernel
        self.grid = grid
        self._lattice = self.kernel(*_offset_lattice(grid))
        n = grid.cells
        self._fft_shape = tuple(scipy.fft.next_fast_len(2 * k - 1, real=True) for k in n)
        pad = np.zeros(self._fft_shape)
        pad[tuple(slice(0, 2 * k - 1) for k in n)] = self._lattice
        self._khat = scipy.fft.rfftn(pad, workers=_workers())
        self._lattice.setflags(write=False)

    @classmethod
    def zero(cls, grid: Grid) -> "NonlocalOperator":
        return cls(KernelSpec("zero"), grid)

    @property
    def is_zero(self) -> bool:
        return not np.any(self._lattice)

    @cached_property
    def L(self) -> float:
        """Discrete l1 mass of the sampled kernel (Young's-inequality bound)."""
        return float(np.sum(np.abs(self._lattice)) * self.grid.cell_volume)

    @cached_property
    def C_inf(self) -> float:
        """Sup of the sampled kernel: ``||Ju||_inf <= C_inf ||u||_1``."""
        return float(np.max(np.abs(self._lattice)))

    p_star = 1.0

    @cached_property
    def kappa(self) -> np.ndarray:
        """``kappa(x) = int_Omega K(x - y) dy`` by direct quadrature."""
        k = -self.apply_direct(self.grid.full(1.0))
        k.setflags(write=False)
        return k

    def _check(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.shape != self.grid.shape:
            raise ValueError(f"field shape {u.shape} does not match operator grid {self.grid.shape}")
        return u

    def apply(self, u) -> np.ndarray:
        """FFT evaluation of ``J u``."""
        u = self._check(u)
        if self.is_zero:
            return np.zeros_like(u)
        w = _workers()
        uhat = scipy.fft.rfftn(u, s=self._fft_shape, workers=w)
        conv = scipy.fft.irfftn(uhat * self._khat, s=self._fft_shape, workers=w)
        # linear convolution index i + (n-1) holds offset x_i - x_j
        sl = tuple(slice(k - 1, 2 * k - 1) for k in self.grid.cells)
        return -conv[sl] * self.grid.cell_volume

    __call__ = apply

    def matrix(self) -> np.ndarray:
        """Dense matrix ``M`` with ``(J u).ravel() == M @ u.ravel()``."""
        grid = self.grid
        if grid.size > MAX_EIG_CELLS:
            raise ValueError(f"dense assembly limited to {MAX_EIG_CELLS} cells")
        idx = np.indices(grid.shape).reshape(grid.dim, -1)
        n = np.array(grid.cells)[:, None, None]
        # entry (i, j) reads the lattice at offset index i - j + (n - 1)
        off = idx[:, :, None] - idx[:, None, :] + (n - 1)
        return -self._lattice[tuple(off)] * grid.cell_volume

    def apply_direct(self, u) -> np.ndarray:
        """O(N^2) double-sum evaluation of ``J u`` (oracle for :meth:`apply`)."""
        u = self._check(u)
        grid = self.grid
        flat = u.ravel()
        out = np.empty(grid.size)
        idx = np.indices(grid.shape).reshape(grid.dim, -1)
        n = np.array(grid.cells)[:, None]
        for i in range(grid.size):
            off = idx[:, i : i + 1] - idx + (n - 1)
            out[i] = -np.dot(self._lattice[tuple(off)], flat)
        return out.reshape(grid.shape) * grid.cell_volume

    def selfadjoint_residual(self, samples: int = 20, seed: int = 0) -> float:
        """Max of ``|(Ju, v) - (u, Jv)| / (||u|| ||v||)`` over random pairs."""
        rng = np.random.default_rng(seed)
        g = self.grid
        worst = 0.0
        for _ in range(samples):
            u, v = rng.standard_normal((2,) + g.shape)
            r = abs(g.inner(self.apply(u), v) - g.inner(u, self.apply(v)))
            worst = max(worst, r / (g.norm(u) * g.norm(v)))
        return worst

    def certify_bounds(self, sample_count: int = 200, seed: int = 0,
                       slack: float = 1e-9, sa_tol: float = 1e-11) -> BoundReport:
        """Sample the ``L^p -> L^p`` and ``L^1 -> L^inf`` ratios of ``J``.

        Random fields mix Gaussian noise, sparse spikes and smooth modes so
        that both near-extremal cases (constants for ``p`` bounds, spikes for
        the smoothing bound) are represented.
        """
        if sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        g = self.grid
        rng = np.random.default_rng(seed)
        ps = (1, 2, 4, np.inf)
        ratios = {p: 0.0 for p in ps}
        smooth = 0.0
        for k in range(sample_count):
            kind = k % 3
            if kind == 0:
                u = rng.standard_normal(g.shape)
            elif kind == 1:
                u = np.zeros(g.shape)
                u.flat[rng.integers(g.size)] = 1.0 / g.cell_volume
            else:
                u = 1.0 + 0.1 * rng.standard_normal(g.shape)
            Ju = self.apply(u)
            for p in ps:
                ratios[p] = max(ratios[p], g.lp_norm(Ju, p) / g.lp_norm(u, p))
            smooth = max(smooth, g.lp_norm(Ju, np.inf) / g.lp_norm(u, 1))
        sa = self.selfadjoint_residual(seed=seed + 1)
        return BoundReport(
            L=self.L, C_inf=self.C_inf, p_star=self.p_star, ratios=ratios,
            smoothing_ratio=smooth, selfadjoint_residual=sa,
            sample_count=sample_count,
            bound_pass=all(r <= self.L + slack for r in ratios.values()),
            smoothing_pass=smooth <= self.C_inf + slack,
            selfadjoint_pass=sa <= sa_tol,
        )

    def eigendecompose(self, m: int | None = None, sym_tol: float = 1e-12) -> SpectralDecomp:
        """Dense symmetric eigensolve; keeps the ``m`` largest ``|mu|``."""
        g = self.grid
        m = g.size if m is None else int(m)
        if not 0 <= m <= g.size:
            raise ValueError(f"m must lie in [0, {g.size}]")
        M = self.matrix()
        scale = max(np.max(np.abs(M)), 1e-300)
        if np.max(np.abs(M - M.T)) > sym_tol * scale:
            raise ValueError("operator is not self-adjoint; kernel must be even")
        M = 0.5 * (M + M.T)
        mu, U = np.linalg.eigh(M)
        order = np.argsort(-np.abs(mu), kind="stable")[:m]
        vecs = (U[:, order].T / np.sqrt(g.cell_volume)).reshape((m,) + g.shape)
        return SpectralDecomp(self, mu[order], vecs, float(np.trace(M)))
