"""Configuration potentials and their certification.

A potential supplies the monotone part ``f0`` of ``f(x, r) = f0(r) - lambda(x) r``
together with its primitive ``F0``.  The linear destabilising part of the
physical ``W'`` is reported as ``linear_coefficient`` and folded into
``lambda`` by :func:`build_lambda`.

Three kinds are provided: smooth power-type potentials (double well and a
custom power law), the singular logarithmic potential on ``(-1, 1)``, and
the regularized family ``f_delta`` built from the Yosida approximation of a
singular ``f0`` plus a quadratic penalty outside ``[-(1-delta), 1-delta]``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import xlogy

from .solvers import monotone_root

__all__ = [
    "DomainViolation",
    "Potential",
    "SmoothPotential",
    "DoubleWell",
    "PowerLaw",
    "ZeroPotential",
    "Logarithmic",
    "Regularized",
    "yosida",
    "LambdaField",
    "build_lambda",
    "separation_constant",
    "comparison_threshold",
    "FamilyReport",
    "certify_family",
    "potential_from_config",
]


class DomainViolation(ValueError):
    """Argument outside the domain of a singular potential."""


class Potential:
    """Base class: ``f0`` monotone with ``f0(0) = 0``, ``F0`` its primitive.

    ``bounds`` is the open domain ``(r_minus, r_plus)`` of ``f0``.
    """

    bounds = (-np.inf, np.inf)
    linear_coefficient = 0.0
    singular = False

    def f0(self, r):
        raise NotImplementedError

    def df0(self, r):
        raise NotImplementedError

    def F0(self, r):
        raise NotImplementedError

    def check_domain(self, r, closed: bool = False):
        r = np.asarray(r, dtype=float)
        lo, hi = self.bounds
        bad = (r < lo) | (r > hi) if closed else (r <= lo) | (r >= hi)
        if np.any(bad):
            raise DomainViolation(f"value outside the domain {self.bounds} of f0")
        return r


class SmoothPotential(Potential):
    """Potential on all of R with ``kappa_f |r|^(1+eps) - c_f <= f0(r) sign r
    <= C_f (|r|^(1+eps) + 1)``."""

    epsilon: float
    kappa_f: float
    c_f: float
    C_f: float

    def growth_constants(self) -> dict:
        return dict(epsilon=self.epsilon, kappa_f=self.kappa_f, c_f=self.c_f, C_f=self.C_f)


class DoubleWell(SmoothPotential):
    """``W(r) = (r^2 - 1)^2 / 8``: ``f0 = r^3 / 2`` and linear part ``r / 2``."""

    linear_coefficient = 0.5
    epsilon, kappa_f, c_f, C_f = 2.0, 0.5, 0.0, 0.5

    def f0(self, r):
        return 0.5 * np.asarray(r, dtype=float) ** 3

    def df0(self, r):
        return 1.5 * np.asarray(r, dtype=float) ** 2

    def F0(self, r):
        return np.asarray(r, dtype=float) ** 4 / 8


class PowerLaw(SmoothPotential):
    """``f0(r) = kappa_f |r|^eps r`` with ``c_f = 0`` and ``C_f = kappa_f``."""

    def __init__(self, epsilon: float = 1.0, kappa_f: float = 1.0, linear_coefficient: float = 0.0):
        if epsilon <= 0 or kappa_f <= 0:
            raise ValueError("epsilon and kappa_f must be positive")
        self.epsilon, self.kappa_f = float(epsilon), float(kappa_f)
        self.c_f, self.C_f = 0.0, float(kappa_f)
        self.linear_coefficient = float(linear_coefficient)

    def f0(self, r):
        r = np.asarray(r, dtype=float)
        return self.kappa_f * np.abs(r) ** self.epsilon * r

    def df0(self, r):
        r = np.asarray(r, dtype=float)
        return self.kappa_f * (1 + self.epsilon) * np.abs(r) ** self.epsilon

    def F0(self, r):
        r = np.asarray(r, dtype=float)
        return self.kappa_f * np.abs(r) ** (2 + self.epsilon) / (2 + self.epsilon)


class ZeroPotential(Potential):
    """``f0 = 0``; leaves a linear model (used by linear decay checks)."""

    def f0(self, r):
        return np.zeros_like(np.asarray(r, dtype=float))

    df0 = f0
    F0 = f0


class Logarithmic(Potential):
    """``W(r) = (1+r) log(1+r) + (1-r) log(1-r) - gamma r^2`` on ``(-1, 1)``.

    ``f0(r) = log((1+r)/(1-r))`` and the linear part ``2 gamma r`` goes to
    ``lambda``.
    """

    bounds = (-1.0, 1.0)
    singular = True

    def __init__(self, gamma: float = 0.0):
        if gamma < 0:
            raise ValueError("gamma must be nonnegative")
        self.gamma = float(gamma)

    @property
    def linear_coefficient(self) -> float:
        return 2.0 * self.gamma

    def f0(self, r):
        r = self.check_domain(r)
        return np.log1p(r) - np.log1p(-r)

    def df0(self, r):
        r = self.check_domain(r)
        return 2.0 / ((1 - r) * (1 + r))

    def F0(self, r):
        r = self.check_domain(r, closed=True)
        return xlogy(1 + r, 1 + r) + xlogy(1 - r, 1 - r)

    def f0_inverse(self, s):
        return np.tanh(0.5 * np.asarray(s, dtype=float))

    def df0_at_inverse(self, u):
        """``f0'`` at ``u`` written to stay finite for ``|u| -> 1``."""
        return 2.0 / np.maximum((1 - u) * (1 + u), 1e-300)


def yosida(pot: Potential, delta: float, r, tol: float = 1e-13, maxiter: int = 200):
    """Yosida approximation ``g`` with ``g = f0(r - delta g)``.

    Solved for ``g`` through ``f0^{-1}(g) + delta g = r`` when the potential
    exposes an inverse, otherwise through the resolvent equation
    ``u + delta f0(u) = r``.  Returns ``(g, u)`` with ``u = r - delta g``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    r = np.asarray(r, dtype=float)
    if hasattr(pot, "f0_inverse"):
        inv = pot.f0_inverse

        def phi(s):
            u = inv(s)
            return u + delta * s - r, 1.0 / pot.df0_at_inverse(u) + delta

        # g has the sign of r and |g| <= |r| / delta
        lo = np.minimum(0.0, r / delta)
        hi = np.maximum(0.0, r / delta)
        g = monotone_root(phi, lo, hi, x0=np.zeros_like(r), tol=tol, maxiter=maxiter)
        return g, inv(g)

    lo_b, hi_b = pot.bounds

    def psi(u):
        return u + delta * pot.f0(u) - r, 1.0 + delta * pot.df0(u)

    lo = np.clip(np.minimum(0.0, r), np.nextafter(lo_b, 0), 0)
    hi = np.clip(np.maximum(0.0, r), 0, np.nextafter(hi_b, 0))
    u = monotone_root(psi, lo, hi, x0=np.zeros_like(r), tol=tol, maxiter=maxiter)
    return (r - u) / delta, u


class Regularized(Potential):
    """``f_delta = g_delta + delta^-1 ((|r| - (1-delta))^+)^2 sign r``.

    ``g_delta`` is the Yosida approximation of the singular base on
    ``(-1, 1)``.  ``f_delta`` is defined on all of R, nondecreasing, and
    obeys the smooth growth bounds with ``eps = 1``.
    """

    epsilon = 1.0

    def __init__(self, base: Potential, delta: float):
        if not base.singular or tuple(base.bounds) != (-1.0, 1.0):
            raise ValueError("regularization needs a singular base on (-1, 1)")
        if not 0 < delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        self.base = base
        self.delta = float(delta)
        self.linear_coefficient = base.linear_coefficient

    def g(self, r):
        return yosida(self.base, self.delta, r)[0]

    def _excess(self, r):
        r = np.asarray(r, dtype=float)
        return np.maximum(np.abs(r) - (1 - self.delta), 0.0)

    def penalty(self, r):
        return np.sign(r) * self._excess(r) ** 2 / self.delta

    def f0(self, r):
        return self.g(r) + self.penalty(r)

    def f0_and_df0(self, r):
        r = np.asarray(r, dtype=float)
        g, u = yosida(self.base, self.delta, r)
        if hasattr(self.base, "df0_at_inverse"):
            d = self.base.df0_at_inverse(u)
        else:
            d = self.base.df0(u)
        # g' = f0'(u) / (1 + delta f0'(u)), written to tolerate f0'(u) = inf
        dg = 1.0 / (1.0 / d + self.delta)
        ex = self._excess(r)
        return g + np.sign(r) * ex**2 / self.delta, dg + 2 * ex / self.delta

    def df0(self, r):
        return self.f0_and_df0(r)[1]

    def F0(self, r):
        # Moreau envelope of F0: F0(u) + delta g^2 / 2 with u = r - delta g
        g, u = yosida(self.base, self.delta, r)
        return self.base.F0(u) + 0.5 * self.delta * g**2 + self._excess(r) ** 3 / (3 * self.delta)


def separation_constant(epsilon: float, kappa_f: float) -> float:
    """``Lambda' = (8 / (kappa_f eps))^(1/eps)``: past it ``|chi|`` cannot stay."""
    return (8.0 / (kappa_f * epsilon)) ** (1.0 / epsilon)


def comparison_threshold(pot: SmoothPotential, lam_sup: float, theta_sup: float, J_sup: float) -> float:
    """Level ``Lambda`` above which ``chi_t <= -kappa_f chi^(1+eps) / 2``.

    It suffices that ``lambda^+ chi^-eps`` and ``(Theta + M + c_f) chi^-(1+eps)``
    each stay below ``kappa_f / 4``.
    """
    eps, k = pot.epsilon, pot.kappa_f
    a = (4 * max(lam_sup, 0.0) / k) ** (1 / eps)
    b = (4 * (theta_sup + J_sup + pot.c_f) / k) ** (1 / (1 + eps))
    return max(a, b)


@dataclass
class LambdaField:
    """Spatial coefficient ``lambda(x)`` of the linear term."""

    values: np.ndarray
    source: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("lambda must be bounded")

    @classmethod
    def constant(cls, grid, value: float) -> "LambdaField":
        return cls(grid.full(value), source=f"constant {value!r}")

    @property
    def sup(self) -> float:
        return float(np.max(self.values))

    @property
    def damping(self) -> float:
        """``-sup lambda``; positive exactly when the dissipativity condition holds."""
        return -self.sup

    @property
    def dissipative(self) -> bool:
        return self.sup < 0


def build_lambda(grid, op=None, pot: Potential | None = None, extra=0.0) -> LambdaField:
    """``lambda = linear part of W' - kappa(x) + extra``."""
    lin = pot.linear_coefficient if pot is not None else 0.0
    kappa = op.kappa if op is not None else grid.zeros()
    extra = np.broadcast_to(np.asarray(extra, dtype=float), grid.shape)
    return LambdaField(lin - kappa + extra, source="linear part - kappa + extra")


def potential_from_config(kind: str, gamma: float = 0.0, epsilon: float = 1.0,
                          kappa_f: float = 1.0, delta: float | None = None, **_) -> Potential:
    if kind == "double_well":
        pot = DoubleWell()
    elif kind == "logarithmic":
        pot = Logarithmic(gamma)
    elif kind == "custom_smooth":
        pot = PowerLaw(epsilon, kappa_f)
    else:
        raise ValueError(f"unknown potential kind {kind!r}")
    if delta is not None:
        pot = Regularized(pot, delta)
    return pot


@dataclass
class FamilyReport:
    deltas: list
    monotone_pass: bool
    lower_bound_pass: bool
    kappa0: float
    c0: float
    F_below_F0_pass: bool
    coercivity_pass: bool
    coercivity_kappa: float
    coercivity_c: float
    divergence_pass: bool
    C_delta: list
    lipschitz: list

    @property
    def passed(self) -> bool:
        return (self.monotone_pass and self.lower_bound_pass and self.F_below_F0_pass
                and self.coercivity_pass and self.divergence_pass)

    def to_json(self) -> str:
        d = asdict(self)
        d["pass"] = self.passed
        return json.dumps(d, indent=2, sort_keys=True)


def certify_family(base: Potential, deltas, r, lam_sup: float = 0.0,
                   kappa0: float = 1.0, kappa: float = 0.5, tol: float = 1e-10) -> FamilyReport:
    """Spot-check the regularized family on sample points.

    Clauses: (i) ``f_d1 sign r <= f_d2 sign r`` on ``(-1, 1)`` for ``d2 < d1``;
    (ii) ``kappa0 r^2 - c0 <= f_d(r) sign r`` with ``c0`` fixed by the largest
    delta and reused for all others; (iii) ``F_d <= F0`` on ``(-1, 1)``;
    (iv) ``f_d(r) r - lam_sup r^2 >= kappa F_d(r) - c`` with ``c`` likewise
    fixed by the largest delta; (v) outside ``(-1, 1)`` the values
    ``f_d(r) sign r`` grow as delta decreases.
    """
    deltas = [float(d) for d in deltas]
    if any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta grid must be strictly decreasing")
    r = np.asarray(r, dtype=float)
    inside = (r > -1) & (r < 1)
    sgn = np.sign(r)
    fam = [Regularized(base, d) for d in deltas]
    f = np.array([p.f0(r) for p in fam])
    F = np.array([p.F0(r) for p in fam])
    fs = f * sgn
    scale = 1.0 + np.abs(f)

    mono = all(np.all(b[inside] >= a[inside] - tol * s[inside])
               for a, b, s in zip(fs, fs[1:], scale[1:]))
    outside = ~inside
    diverge = all(np.all(b[outside] >= a[outside] - tol * s[outside])
                  for a, b, s in zip(fs, fs[1:], scale[1:]))

    need_c0 = np.max(kappa0 * r**2 - fs, axis=1)
    c0 = max(float(need_c0[0]), 0.0)
    lower = bool(np.all(need_c0 <= c0 + tol))

    F0 = base.F0(r[inside])
    below = bool(np.all(F[:, inside] <= F0 + tol * (1 + np.abs(F0))))

    need_c = np.max(kappa * F - (f * r - lam_sup * r**2), axis=1)
    c = max(float(need_c[0]), 0.0)
    coerc = bool(np.all(need_c <= c + tol * (1 + np.abs(F).max())))

    C_delta = [float(np.max(np.abs(fi) / (r**2 + 1))) for fi in f]
    lip = [float(np.max(p.df0(r))) for p in fam]
    return FamilyReport(deltas, bool(mono), lower, float(kappa0), c0, below, coerc,
                        float(kappa), c, bool(diverge), C_delta, lip)
