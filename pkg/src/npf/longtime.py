"""Long-time experiments: stationary states, omega-limits, squeezing, delta-continuation."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from .diagnostics import energy
from .potentials import Regularized
from .stepper import IMEXStepper, Recorder, SchemeConfig, State, scalar_solve

__all__ = [
    "stationary_residual",
    "SteadyState",
    "steady_state",
    "OmegaLimitReport",
    "omega_limit_check",
    "x_distance",
    "SqueezeReport",
    "squeezing_experiment",
    "uniform_squeezing_constant",
    "ContinuationReport",
    "delta_continuation",
]


def stationary_residual(model, chi, direct: bool = False) -> np.ndarray:
    """Pointwise ``J[chi] + f0(chi) - lambda chi``."""
    Jchi = model.op.apply_direct(chi) if direct else model.op.apply(chi)
    return Jchi + model.pot.f0(chi) - model.lam.values * chi


@dataclass
class SteadyState:
    chi: np.ndarray
    residual: float
    iterations: int
    converged: bool


def steady_state(model, init, tol: float = 1e-8, rho: float | None = None,
                 dt: float = 0.1, max_iter: int = 100_000) -> SteadyState:
    """Damped fixed-point iteration for ``J[chi] + f0(chi) - lambda chi = 0``.

    Each sweep solves ``rho chi' + f0(chi') - lambda chi' = rho chi - J[chi]``
    cellwise, i.e. one time step of the order-parameter equation with
    ``theta = 0``.  ``rho`` defaults to ``1/dt``.
    """
    rho = 1.0 / dt if rho is None else float(rho)
    if rho <= model.lam.sup:
        raise ValueError("damping rho must exceed sup(lambda)")
    chi = model.grid.check(init).copy()
    res = float(np.max(np.abs(stationary_residual(model, chi))))
    for k in range(max_iter):
        if res <= tol:
            return SteadyState(chi, res, k, True)
        chi = scalar_solve(model.pot, rho, model.lam.values, rho * chi - model.op.apply(chi),
                           x0=chi, tol=1e-14)
        res = float(np.max(np.abs(stationary_residual(model, chi))))
    return SteadyState(chi, res, max_iter, res <= tol)


@dataclass
class OmegaLimitReport:
    theta_norm: float
    chi_distance: float
    tol_theta: float
    tol_chi: float

    @property
    def passed(self) -> bool:
        return self.theta_norm <= self.tol_theta and self.chi_distance <= self.tol_chi


def omega_limit_check(grid, final: State, chi_inf, tol_theta: float, tol_chi: float) -> OmegaLimitReport:
    """Compare the end of a run with the stationary pair ``(0, chi_inf)`` in ``L^2``."""
    return OmegaLimitReport(grid.norm(final.theta), grid.norm(final.chi - chi_inf),
                            tol_theta, tol_chi)


def x_distance(grid, a: State, b: State) -> float:
    """``V x H`` distance: ``(||grad dtheta||^2 + ||dtheta||^2 + ||dchi||^2)^(1/2)``."""
    dth, dch = a.theta - b.theta, a.chi - b.chi
    return math.sqrt(grid.h1_seminorm_sq(dth) + grid.norm(dth) ** 2 + grid.norm(dch) ** 2)


@dataclass
class SqueezeReport:
    distance0: float
    distanceT: float
    d_T: float
    N: int
    T_star: float
    damping: float
    required_c: float
    times: np.ndarray = field(repr=False)
    theta_distance: np.ndarray = field(repr=False)
    chi_distance: np.ndarray = field(repr=False)

    def holds(self, c: float) -> bool:
        return self.distanceT <= 0.5 * self.distance0 + c * self.d_T + 1e-14

    def theta_monotone_after(self, t0: float, rtol: float = 1e-12) -> bool:
        d = self.theta_distance[self.times >= t0 - 1e-12]
        return bool(np.all(np.diff(d) <= rtol * (1 + d[:-1])))

    def summary(self) -> dict:
        d = asdict(self)
        for k in ("times", "theta_distance", "chi_distance"):
            d.pop(k)
        return d


def squeezing_experiment(model, init1: State, init2: State, N: int, T_star: float,
                         cfg: SchemeConfig, dec=None, stride: int = 1) -> SqueezeReport:
    """Evolve two states and evaluate ``dist(T*) <= dist(0)/2 + c d_T*``.

    ``d_T`` integrates ``||dtheta||^2 + ||Pi_N dchi||^2`` over ``[0, T*]`` by
    the trapezoid rule on the recorded snapshots; ``Pi_N`` projects on the
    ``N`` leading eigenvectors of ``J`` (``dec`` is computed when omitted).
    ``required_c`` is the smallest ``c`` making the inequality hold.

    Both states must share their time ``t0``; the pair is evolved over
    ``[t0, t0 + T*]`` and the reported times are measured from ``t0``.
    """
    g = model.grid
    if abs(init1.t - init2.t) > 1e-12:
        raise ValueError("the two initial states must share their time")
    if dec is None and N > 0:
        dec = model.op.eigendecompose(N)
    stepper = IMEXStepper(model, cfg)
    recs = []
    for init in (init1, init2):
        rec = Recorder(stride)
        stepper.run(init, init1.t + T_star, [rec])
        recs.append(rec)
    s1, s2 = recs[0].states, recs[1].states
    times = recs[0].times - init1.t
    dth = np.array([g.norm(a.theta - b.theta) for a, b in zip(s1, s2)])
    dch = np.array([g.norm(a.chi - b.chi) for a, b in zip(s1, s2)])
    if N > 0:
        pch = np.array([g.norm(dec.project(a.chi - b.chi, N)) for a, b in zip(s1, s2)])
    else:
        pch = np.zeros_like(dth)
    dT = math.sqrt(max(trapezoid(dth**2 + pch**2, times), 0.0)) if len(times) > 1 else 0.0
    d0 = x_distance(g, s1[0], s2[0])
    dTs = x_distance(g, s1[-1], s2[-1])
    excess = dTs - 0.5 * d0
    if excess <= 0:
        c = 0.0
    else:
        c = excess / dT if dT > 0 else math.inf
    return SqueezeReport(d0, dTs, dT, N, T_star, model.lam.damping, c, times, dth, dch)


def uniform_squeezing_constant(reports) -> tuple[float, bool]:
    """Smallest ``c`` valid for every pair, and whether it is finite."""
    c = max((r.required_c for r in reports), default=0.0)
    return c, math.isfinite(c) and all(r.holds(c) for r in reports)


@dataclass
class ContinuationReport:
    deltas: list
    window: tuple
    consecutive: list
    to_reference: list
    sup_theta: list
    sup_chi: list
    reference_sup_chi: float
    energy0: list
    reference_energy0: float

    @property
    def monotone(self) -> bool:
        d = self.to_reference
        return all(b <= a for a, b in zip(d, d[1:]))

    @property
    def cauchy(self) -> bool:
        d = self.consecutive
        return all(b <= a for a, b in zip(d, d[1:]))

    @property
    def energy_ordered(self) -> bool:
        return all(e <= self.reference_energy0 + 1e-12 for e in self.energy0)

    def uniform_bound(self, slack: float = 1.1) -> tuple[float, bool]:
        """Schedule-wide sup bound and whether every member respects it.

        The bound is ``slack`` times the larger of the coarsest member's and
        the singular reference's sup norms.
        """
        if not self.deltas:
            return math.nan, True
        ref = max(self.sup_theta[0], self.sup_chi[0], self.reference_sup_chi)
        bound = slack * ref
        ok = all(max(a, b) <= bound for a, b in zip(self.sup_theta, self.sup_chi))
        return bound, ok

    def to_json(self) -> str:
        d = asdict(self)
        d.update(monotone=self.monotone, cauchy=self.cauchy, energy_ordered=self.energy_ordered)
        return json.dumps(d, indent=2, sort_keys=True)


def _l2_time(grid, sa, sb, times, window) -> float:
    sel = (times >= window[0] - 1e-12) & (times <= window[1] + 1e-12)
    d2 = np.array([grid.norm(a.chi - b.chi) ** 2 for a, b in zip(sa, sb)])[sel]
    return math.sqrt(trapezoid(d2, times[sel])) if sel.sum() > 1 else 0.0


def delta_continuation(model, init: State, deltas, T: float, cfg: SchemeConfig,
                       window=(0.0, 1.0), sup_from: float = 1.0) -> ContinuationReport:
    """Run the regularized models for each delta against the singular run.

    Every run starts from the same ``init`` (initial data are not
    regularized).  Differences are ``L^2((window) x Omega)`` norms of ``chi``;
    sup norms are taken over ``t >= sup_from``.
    """
    deltas = [float(d) for d in deltas]
    if any(not 0 < d < 1 for d in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta schedule must be strictly decreasing in (0, 1)")
    g = model.grid

    def trajectory(m):
        rec = Recorder()
        IMEXStepper(m, cfg).run(init, T, [rec])
        return rec

    ref = trajectory(model)
    times = ref.times
    late = times >= sup_from - 1e-12
    runs, sup_th, sup_ch, e0 = [], [], [], []
    for d in deltas:
        m = model.with_potential(Regularized(model.pot, d))
        rec = trajectory(m)
        runs.append(rec.states)
        late_states = [s for s, keep in zip(rec.states, late) if keep]
        sup_th.append(max(float(np.max(np.abs(s.theta))) for s in late_states))
        sup_ch.append(max(float(np.max(np.abs(s.chi))) for s in late_states))
        e0.append(energy(m, init))
    to_ref = [_l2_time(g, r, ref.states, times, window) for r in runs]
    cons = [_l2_time(g, a, b, times, window) for a, b in zip(runs, runs[1:])]
    ref_sup = max(float(np.max(np.abs(s.chi))) for s, keep in zip(ref.states, late) if keep)
    return ContinuationReport(deltas, tuple(window), cons, to_ref, sup_th, sup_ch, ref_sup,
                              e0, energy(model, init))
