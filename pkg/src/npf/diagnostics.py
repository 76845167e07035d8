"""Runtime checks on trajectories: energy, dissipation, decay, absorption, separation.

A trajectory is a sequence of :class:`~npf.stepper.State` objects at
uniformly spaced times, as collected by :class:`~npf.stepper.Recorder`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .potentials import DomainViolation

__all__ = [
    "energy",
    "energy_tolerance",
    "EnergyRecord",
    "dissipation_ledger",
    "energy_increments",
    "DecayReport",
    "decay_check",
    "BoundsRecord",
    "bounds_series",
    "absorbing_monitor",
    "SeparationReport",
    "separation_monitor",
]


def energy(model, state, direct: bool = False) -> float:
    """``int 1/2 theta^2 + F0(chi) - lambda chi^2 / 2 + 1/2 J[chi] chi``."""
    g, pot = model.grid, model.pot
    chi = state.chi
    if pot.singular:
        lo, hi = pot.bounds
        if np.any((chi <= lo) | (chi >= hi)):
            raise DomainViolation("order parameter reached the singular endpoints")
    Jchi = model.op.apply_direct(chi) if direct else model.op.apply(chi)
    dens = (0.5 * state.theta**2 + pot.F0(chi) - 0.5 * model.lam.values * chi**2
            + 0.5 * Jchi * chi)
    return g.integrate(dens)


def energy_tolerance(dt: float, c: float = 1.0) -> float:
    """Allowed per-step energy increase ``c dt^2``."""
    return c * dt * dt


@dataclass(frozen=True)
class EnergyRecord:
    t: float
    E: float
    grad_theta_sq: float
    chi_t_sq: float
    residual: float

    FIELDS = ("t", "E", "grad_theta_sq", "chi_t_sq", "residual")

    def row(self) -> tuple:
        return tuple(getattr(self, k) for k in self.FIELDS)


def _dt(states) -> float:
    t = np.array([s.t for s in states])
    steps = np.diff(t)
    if steps.size and np.ptp(steps) > 1e-9 * max(1.0, abs(steps).max()):
        raise ValueError("trajectory is not uniformly spaced")
    return float(steps[0]) if steps.size else math.nan


def dissipation_ledger(states, model) -> list[EnergyRecord]:
    """One record per step ``n -> n+1``.

    ``residual = (E_{n+1} - E_n)/dt + ||grad theta_{n+1}||^2 + ||(chi_{n+1} - chi_n)/dt||^2``,
    the discrete defect of the continuous energy identity.
    """
    states = list(states)
    if len(states) < 2:
        return []
    dt = _dt(states)
    g = model.grid
    E = [energy(model, s) for s in states]
    out = []
    for n in range(len(states) - 1):
        a, b = states[n], states[n + 1]
        gt = g.h1_seminorm_sq(b.theta)
        ct = g.norm((b.chi - a.chi) / dt) ** 2
        out.append(EnergyRecord(b.t, E[n + 1], gt, ct, (E[n + 1] - E[n]) / dt + gt + ct))
    return out


def energy_increments(states, model) -> np.ndarray:
    """``E_{n+1} - E_n`` along the trajectory."""
    return np.diff([energy(model, s) for s in states])


@dataclass
class DecayReport:
    status: str
    kappa: float
    C: float
    E_inf: float
    fit_residual: float
    points: int
    kappa_guess: float | None = None

    @property
    def passed(self) -> bool:
        return self.status == "decaying"

    @property
    def relative_error(self) -> float:
        if not self.kappa_guess:
            return math.nan
        return abs(self.kappa - self.kappa_guess) / abs(self.kappa_guess)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def decay_check(t, E, kappa_guess: float | None = None, skip: float = 0.25,
                plateau_frac: float = 0.05) -> DecayReport:
    """Fit ``E(t) - E_inf ~ C exp(-kappa t)``.

    ``E_inf`` is the mean of the last quarter of the run.  The fit is a least
    squares line through ``log(E - E_inf)`` on the first three quarters,
    restricted to values well above the plateau noise, after dropping the
    leading ``skip`` fraction of those points (fast transients).

    Status is ``"at-equilibrium"`` for a flat record, ``"inconclusive"`` when
    the last quarter has not settled, ``"decaying"`` for a monotone envelope
    with positive rate and ``"not-decaying"`` otherwise.
    """
    t, E = np.asarray(t, dtype=float), np.asarray(E, dtype=float)
    scale = 1.0 + np.max(np.abs(E))
    nan = math.nan
    if np.ptp(E) <= 1e-12 * scale:
        return DecayReport("at-equilibrium", nan, 0.0, float(E[-1]), 0.0, 0, kappa_guess)
    q = max(1, len(E) // 4)
    tail = E[-q:]
    E_inf = float(np.mean(tail))
    drop = E[0] - E_inf
    noise = float(np.ptp(tail))
    if drop <= 0 or noise > plateau_frac * abs(drop):
        return DecayReport("inconclusive", nan, nan, E_inf, nan, 0, kappa_guess)
    head_t, excess = t[:-q], E[:-q] - E_inf
    thr = max(10 * noise, 1e-13 * scale)
    usable = np.flatnonzero(excess > thr)
    if usable.size:
        # keep the leading run of usable points only
        stop = np.flatnonzero(np.diff(usable) != 1)
        usable = usable[: stop[0] + 1] if stop.size else usable
    usable = usable[int(skip * usable.size):]
    if usable.size < 3:
        return DecayReport("inconclusive", nan, nan, E_inf, nan, int(usable.size), kappa_guess)
    y = np.log(excess[usable])
    A = np.vstack([np.ones(usable.size), head_t[usable]]).T
    (logC, slope), res, *_ = np.linalg.lstsq(A, y, rcond=None)
    fit_res = float(np.sqrt(res[0] / usable.size)) if res.size else 0.0
    kappa = -float(slope)
    monotone = bool(np.all(np.diff(E) <= 1e-12 * scale))
    status = "decaying" if (kappa > 0 and monotone) else "not-decaying"
    return DecayReport(status, kappa, float(np.exp(logC)), E_inf, fit_res,
                       int(usable.size), kappa_guess)


@dataclass(frozen=True)
class BoundsRecord:
    t: float
    sup_theta: float
    sup_chi: float
    sup_chi_t: float
    separation_gap: float
    inside: bool

    @property
    def total(self) -> float:
        return self.sup_theta + self.sup_chi + self.sup_chi_t


def bounds_series(states, C0: float = math.inf) -> list[BoundsRecord]:
    """Sup norms per state; ``chi_t`` is the backward difference (forward at the start)."""
    states = list(states)
    if not states:
        return []
    dt = _dt(states) if len(states) > 1 else math.nan
    out = []
    for n, s in enumerate(states):
        if len(states) == 1:
            ct = 0.0
        else:
            a, b = (states[0], states[1]) if n == 0 else (states[n - 1], s)
            ct = float(np.max(np.abs(b.chi - a.chi))) / dt
        st, sc = float(np.max(np.abs(s.theta))), float(np.max(np.abs(s.chi)))
        out.append(BoundsRecord(s.t, st, sc, ct, 1.0 - sc, st + sc + ct <= C0))
    return out


def absorbing_monitor(states, C0: float) -> float:
    """First time after which ``||theta||_inf + ||chi||_inf + ||chi_t||_inf <= C0``
    for the rest of the run; ``inf`` if the run ends outside the box."""
    recs = bounds_series(states, C0)
    T0 = math.inf
    for r in reversed(recs):
        if not r.inside:
            break
        T0 = r.t
    return T0


@dataclass
class SeparationReport:
    times: np.ndarray
    gaps: np.ndarray
    min_after: dict

    @property
    def positive(self) -> bool:
        return bool(np.all(self.gaps > 0))

    def gap_at(self, t: float) -> float:
        return float(self.gaps[int(np.argmin(np.abs(self.times - t)))])

    def to_json(self) -> str:
        return json.dumps({"positive": self.positive, "min_gap": float(self.gaps.min()),
                           "min_after": {repr(k): v for k, v in self.min_after.items()}},
                          indent=2, sort_keys=True)


def separation_monitor(states, taus=()) -> SeparationReport:
    """Gap ``1 - max|chi|`` over time and its minimum over ``[tau, T]``."""
    times = np.array([s.t for s in states])
    gaps = np.array([1.0 - float(np.max(np.abs(s.chi))) for s in states])
    min_after = {}
    for tau in taus:
        sel = times >= tau - 1e-12
        min_after[float(tau)] = float(gaps[sel].min()) if sel.any() else math.nan
    return SeparationReport(times, gaps, min_after)
