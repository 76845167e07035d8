"""Manufactured-solution convergence harness (1D).

The exact pair is ``theta* = exp(-t) sin(pi x)``, ``chi* = exp(-t) sin(pi x) / 2``.
Sources are built from the continuous operators: ``A theta* = pi^2 theta*``
and ``J[chi*]`` by composite Gauss-Legendre quadrature of the kernel, so the
measured error contains the spatial discretization error of both ``A`` and
``J`` as well as the splitting error in time.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .grid import Grid
from .nonlocal_op import KernelSpec, NonlocalOperator
from .potentials import DoubleWell, LambdaField, Potential
from .stepper import IMEXStepper, Model, SchemeConfig, State

__all__ = ["continuous_J_sine", "manufactured_model", "mms_error", "MMSReport",
           "observed_orders", "temporal_study", "spatial_study"]


def continuous_J_sine(kernel: KernelSpec, x, panels: int = 64, order: int = 10) -> np.ndarray:
    """``-int_0^1 K(x - y) sin(pi y) dy`` at the points ``x``."""
    nodes, weights = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    y = (0.5 * (edges[:-1] + edges[1:])[:, None] + half[:, None] * nodes).ravel()
    w = (half[:, None] * weights).ravel()
    x = np.asarray(x, dtype=float)
    return -(kernel(x[:, None] - y[None, :]) * (w * np.sin(np.pi * y))).sum(axis=1)


def manufactured_model(grid: Grid, kernel: KernelSpec, pot: Potential | None = None,
                       lam: float = -1.0):
    """Model with sources matching the exact pair; returns ``(model, exact)``.

    ``exact(t)`` gives the exact :class:`State` sampled at cell centres.
    """
    if grid.dim != 1:
        raise ValueError("the manufactured solution is 1D")
    pot = DoubleWell() if pot is None else pot
    x = grid.coords()[0]
    s = np.sin(np.pi * x)
    Js = continuous_J_sine(kernel, x)
    lamf = LambdaField.constant(grid, lam)

    def g_theta(t):
        e = math.exp(-t)
        # theta_t + chi_t + A theta with A sin = pi^2 sin
        return (-1.0 - 0.5 + np.pi**2) * e * s

    def g_chi(t):
        e = math.exp(-t)
        chi = 0.5 * e * s
        return -chi + 0.5 * e * Js + pot.f0(chi) - lamf.values * chi - e * s

    def exact(t):
        e = math.exp(-t)
        return State.from_arrays(e * s, 0.5 * e * s, t)

    model = Model(grid, NonlocalOperator(kernel, grid), pot, lamf, g_theta, g_chi)
    return model, exact


def mms_error(n: int, dt: float, T: float = 0.5, kernel: KernelSpec | None = None,
              pot: Potential | None = None) -> float:
    """``L^2`` error of ``(theta, chi)`` at ``T`` on an ``n``-cell grid."""
    kernel = KernelSpec("gaussian", 0.1, 1.0) if kernel is None else kernel
    grid = Grid((n,))
    model, exact = manufactured_model(grid, kernel, pot)
    final = IMEXStepper(model, SchemeConfig(dt)).run(exact(0.0), T)
    ref = exact(T)
    return math.hypot(grid.norm(final.theta - ref.theta), grid.norm(final.chi - ref.chi))


@dataclass
class MMSReport:
    kind: str
    parameters: list
    errors: list
    orders: list
    threshold: float

    @property
    def passed(self) -> bool:
        return bool(self.orders) and min(self.orders) >= self.threshold

    def to_json(self) -> str:
        d = asdict(self)
        d["passed"] = self.passed
        return json.dumps(d, indent=2, sort_keys=True)


def observed_orders(errors, ratio: float = 2.0) -> list[float]:
    return [math.log(a / b) / math.log(ratio) for a, b in zip(errors, errors[1:])]


def temporal_study(dts=(0.05, 0.025, 0.0125), n: int = 256, T: float = 0.5,
                   threshold: float = 0.8, **kw) -> MMSReport:
    """Refine ``dt`` on a fine fixed grid; expects first order."""
    errs = [mms_error(n, dt, T, **kw) for dt in dts]
    return MMSReport("temporal", list(dts), errs, observed_orders(errs, dts[0] / dts[1]), threshold)


def spatial_study(cells=(32, 64, 128), T: float = 0.5, threshold: float = 1.8, **kw) -> MMSReport:
    """Refine ``h`` with ``dt = h^2`` so the time error tracks the spatial one."""
    errs = [mms_error(n, 1.0 / n**2, T, **kw) for n in cells]
    return MMSReport("spatial", list(cells), errs, observed_orders(errs, cells[1] / cells[0]), threshold)
