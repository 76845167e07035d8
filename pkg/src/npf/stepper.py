"""First-order IMEX time stepping for the coupled temperature/order system.

The system is::

    theta_t + chi_t + A theta = g_theta
    chi_t + J[chi] + f0(chi) - lambda chi = theta + g_chi

with ``A = -Laplace`` (Dirichlet).  One step first updates ``chi`` cell by
cell with ``f0`` and ``-lambda chi`` implicit and ``J[chi]``, ``theta``
explicit, then solves the implicit heat equation with the new ``chi``.
Because the order-parameter update is a monotone scalar solve bracketed
inside the domain of a singular ``f0``, every accepted state keeps
``|chi| < 1`` for logarithmic potentials.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .grid import Grid
from .nonlocal_op import NonlocalOperator
from .potentials import LambdaField, Potential
from .solvers import SolverFailure, Thomas, conjugate_residual, monotone_root

__all__ = [
    "State",
    "Model",
    "SchemeConfig",
    "StepFailure",
    "scalar_solve",
    "IMEXStepper",
    "Recorder",
    "step",
    "run",
    "SEPARATION_MARGIN",
]

# closest approach to the endpoints of a singular domain
SEPARATION_MARGIN = 1e-14


class StepFailure(SolverFailure):
    """A time step failed; ``state`` is the last accepted state."""

    def __init__(self, msg, state=None, **info):
        super().__init__(msg, **info)
        self.state = state


@dataclass(frozen=True)
class State:
    theta: np.ndarray
    chi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for a in (self.theta, self.chi):
            a.setflags(write=False)

    @classmethod
    def from_arrays(cls, theta, chi, t: float = 0.0) -> "State":
        return cls(np.array(theta, dtype=float), np.array(chi, dtype=float), float(t))


@dataclass
class Model:
    """Grid, nonlocal operator, potential, ``lambda`` and optional sources.

    ``g_theta`` and ``g_chi`` map a time to a field (or return ``None``).
    """

    grid: Grid
    op: NonlocalOperator
    pot: Potential
    lam: LambdaField
    g_theta: Optional[Callable] = None
    g_chi: Optional[Callable] = None

    def __post_init__(self):
        if self.op.grid != self.grid:
            raise ValueError("operator and model live on different grids")
        if not isinstance(self.lam, LambdaField):
            self.lam = LambdaField(np.broadcast_to(self.lam, self.grid.shape).copy())
        if self.lam.values.shape != self.grid.shape:
            raise ValueError("lambda does not match the grid")

    def with_potential(self, pot: Potential) -> "Model":
        return replace(self, pot=pot)


@dataclass(frozen=True)
class SchemeConfig:
    dt: float
    newton_tol: float = 1e-12
    newton_max_iter: int = 100
    linear_solver: Optional[str] = None
    cfl_guard: bool = True
    cr_rtol: float = 1e-10

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.linear_solver not in (None, "tridiagonal", "conjugate-residual"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")


def _f_and_df(pot: Potential, r):
    if hasattr(pot, "f0_and_df0"):
        return pot.f0_and_df0(r)
    return pot.f0(r), pot.df0(r)


def scalar_solve(pot: Potential, m, lam, b, x0=None, tol: float = 1e-12, maxiter: int = 100):
    """Solve ``m r + f0(r) - lam r = b`` elementwise.

    Requires ``m - lam > 0`` so the left side is strictly increasing.  The
    root has the sign of ``b`` and ``|r| <= |b| / (m - lam)``; for singular
    potentials the bracket is further cut to ``SEPARATION_MARGIN`` inside the
    domain.  Convergence means ``|residual| <= tol (1 + |b|)``.

    For singular potentials a root closer to an endpoint than the margin is
    not representable; such components saturate at ``+-(1 - SEPARATION_MARGIN)``,
    which is within the margin of the exact root.
    """
    b = np.asarray(b, dtype=float)
    slope = np.asarray(m, dtype=float) - np.asarray(lam, dtype=float)
    if np.any(slope <= 0):
        raise ValueError("scalar solve needs m - lam > 0")
    shape = np.broadcast_shapes(b.shape, slope.shape)
    b = np.broadcast_to(b, shape).ravel()
    slope = np.broadcast_to(slope, shape).ravel()
    lo = np.minimum(0.0, b / slope)
    hi = np.maximum(0.0, b / slope)
    out = np.empty(b.size)
    todo = np.ones(b.size, dtype=bool)
    if pot.singular:
        lo_b, hi_b = pot.bounds
        lo = np.maximum(lo, lo_b + SEPARATION_MARGIN)
        hi = np.minimum(hi, hi_b - SEPARATION_MARGIN)
        over = slope * hi + _f_and_df(pot, hi)[0] - b < 0
        under = slope * lo + _f_and_df(pot, lo)[0] - b > 0
        out[over], out[under] = hi[over], lo[under]
        todo = ~(over | under)
    if np.any(todo):
        sl, bb = slope[todo], b[todo]

        def phi(r):
            f, df = _f_and_df(pot, r)
            return sl * r + f - bb, sl + df

        guess = None if x0 is None else np.broadcast_to(np.asarray(x0, dtype=float), shape).ravel()[todo]
        out[todo] = monotone_root(phi, lo[todo], hi[todo], x0=guess, tol=tol,
                                  scale=1.0 + np.abs(bb), maxiter=maxiter)
    return out.reshape(shape)


class IMEXStepper:
    """Time stepper bound to one model and scheme configuration."""

    def __init__(self, model: Model, cfg: SchemeConfig):
        self.model, self.cfg = model, cfg
        grid, dt = model.grid, cfg.dt
        if cfg.cfl_guard and dt * model.lam.sup >= 1:
            raise ValueError(f"dt * sup(lambda) = {dt * model.lam.sup:g} must be < 1")
        solver = cfg.linear_solver or ("tridiagonal" if grid.dim == 1 else "conjugate-residual")
        if solver == "tridiagonal" and grid.dim != 1:
            raise ValueError("the tridiagonal heat solve is 1D only")
        self.linear_solver = solver
        if solver == "tridiagonal":
            sub, diag, sup = grid.tridiagonal()
            self._thomas = Thomas(sub, diag + 1.0 / dt, sup)

    def _heat_solve(self, rhs, guess):
        grid, dt = self.model.grid, self.cfg.dt
        if self.linear_solver == "tridiagonal":
            return self._thomas.solve(rhs)
        x, rel, _ = conjugate_residual(lambda v: v / dt + grid.apply_A(v), rhs, x0=guess,
                                       rtol=self.cfg.cr_rtol)
        return x

    def step(self, state: State) -> State:
        model, cfg = self.model, self.cfg
        dt, t1 = cfg.dt, state.t + cfg.dt
        b = state.chi / dt + state.theta - model.op.apply(state.chi)
        if model.g_chi is not None:
            b = b + model.g_chi(t1)
        try:
            chi = scalar_solve(model.pot, 1.0 / dt, model.lam.values, b, x0=state.chi,
                               tol=cfg.newton_tol, maxiter=cfg.newton_max_iter)
        except SolverFailure as exc:
            raise StepFailure(f"order-parameter update failed at t={t1:g}: {exc}",
                              state=state, **exc.info) from exc
        rhs = (state.theta - (chi - state.chi)) / dt
        if model.g_theta is not None:
            rhs = rhs + model.g_theta(t1)
        try:
            theta = self._heat_solve(rhs, state.theta)
        except SolverFailure as exc:
            raise StepFailure(f"heat solve failed at t={t1:g}: {exc}", state=state, **exc.info) from exc
        return State.from_arrays(theta, chi, t1)

    def run(self, init: State, T: float, callbacks=()) -> State:
        """Advance ``init`` to time ``T``; call each callback on every state.

        The callbacks see the initial state first.  On failure the
        :class:`StepFailure` carries the last accepted state; whatever the
        callbacks recorded up to then is left intact.
        """
        dt = self.cfg.dt
        span = T - init.t
        if span < -1e-12:
            raise ValueError("T precedes the initial time")
        n = int(round(span / dt))
        if abs(n * dt - span) > 1e-9 * max(1.0, abs(T)):
            raise ValueError(f"T - t0 = {span!r} is not a multiple of dt = {dt!r}")
        for cb in callbacks:
            cb(init)
        state = init
        for k in range(1, n + 1):
            state = self.step(state)
            # pin the clock to the grid so long runs do not drift
            state = State(state.theta, state.chi, init.t + k * dt)
            for cb in callbacks:
                cb(state)
        return state


@dataclass
class Recorder:
    """Callback storing every ``stride``-th state."""

    stride: int = 1
    states: list = field(default_factory=list)
    _count: int = 0

    def __call__(self, state: State):
        if self._count % self.stride == 0:
            self.states.append(state)
        self._count += 1

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.states])


def step(state: State, model: Model, cfg: SchemeConfig) -> State:
    return IMEXStepper(model, cfg).step(state)


def run(init: State, model: Model, cfg: SchemeConfig, T: float, callbacks=()) -> State:
    return IMEXStepper(model, cfg).run(init, T, callbacks)
