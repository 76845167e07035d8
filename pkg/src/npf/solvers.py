"""Small numerical kernels shared by the potentials and the time stepper."""

from __future__ import annotations

import numpy as np

__all__ = ["SolverFailure", "monotone_root", "Thomas", "conjugate_residual"]


class SolverFailure(RuntimeError):
    """An iterative solve did not converge; ``info`` carries diagnostics."""

    def __init__(self, msg, **info):
        super().__init__(msg)
        self.info = info


def monotone_root(fun, lo, hi, x0=None, tol=1e-14, scale=1.0, maxiter=200):
    """Elementwise root of a nondecreasing function by safeguarded Newton.

    Parameters
    ----------
    fun : callable
        ``fun(x) -> (value, derivative)``, vectorized and nondecreasing in
        each component.
    lo, hi : array_like
        Bracket with ``fun(lo) <= 0 <= fun(hi)``; verified on entry.
    x0 : array_like, optional
        Starting point, clipped into the bracket.  Defaults to the midpoint.
    tol, scale : float or array_like
        A component is done once ``|fun(x)| <= tol * scale`` or its bracket
        has shrunk to a few ulps.

    Raises
    ------
    SolverFailure
        If the bracket is invalid or ``maxiter`` is exhausted.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    shape = lo.shape
    lo, hi = lo.ravel(), hi.ravel()
    thr = np.broadcast_to(np.asarray(tol * np.asarray(scale), dtype=float), shape).ravel()

    flo, _ = fun(lo.reshape(shape))
    fhi, _ = fun(hi.reshape(shape))
    flo, fhi = np.ravel(flo), np.ravel(fhi)
    bad = (flo > thr) | (fhi < -thr)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise SolverFailure(f"no sign change in bracket at index {i}",
                            index=i, lo=lo[i], hi=hi[i], flo=flo[i], fhi=fhi[i])

    x = 0.5 * (lo + hi) if x0 is None else np.ravel(np.broadcast_to(x0, shape)).astype(float)
    x = np.clip(x, lo, hi)
    active = np.arange(x.size)
    for _ in range(maxiter):
        xa = x[active]
        full = np.array(x)
        v, dv = fun(full.reshape(shape))
        v, dv = np.ravel(v)[active], np.ravel(np.broadcast_to(dv, shape))[active]
        la, ha = lo[active], hi[active]
        la = np.where(v < 0, xa, la)
        ha = np.where(v > 0, xa, ha)
        done = (np.abs(v) <= thr[active]) | (ha - la <= 4 * np.spacing(np.maximum(np.abs(la), np.abs(ha))))
        with np.errstate(divide="ignore", invalid="ignore"):
            xn = xa - v / dv
        bisect = ~np.isfinite(xn) | (xn <= la) | (xn >= ha)
        xn = np.where(bisect, 0.5 * (la + ha), xn)
        lo[active], hi[active] = la, ha
        # components that are done keep their current iterate
        x[active] = np.where(done, xa, xn)
        active = active[~done]
        if active.size == 0:
            return x.reshape(shape)
    i = int(active[0])
    raise SolverFailure(f"no convergence after {maxiter} iterations at index {i}",
                        index=i, x=x[i], lo=lo[i], hi=hi[i])


class Thomas:
    """Prefactored tridiagonal solver (no pivoting; for diagonally dominant systems).

    Parameters
    ----------
    sub, diag, sup : ndarray
        Sub-diagonal (length n-1), diagonal (n), super-diagonal (n-1).
    """

    def __init__(self, sub, diag, sup):
        sub, diag, sup = (np.asarray(a, dtype=float) for a in (sub, diag, sup))
        n = diag.size
        self.n = n
        self.sub = sub
        cp = np.empty(max(n - 1, 0))
        den = np.empty(n)
        den[0] = diag[0]
        for k in range(n - 1):
            cp[k] = sup[k] / den[k]
            den[k + 1] = diag[k + 1] - sub[k] * cp[k]
        self.cp, self.den = cp, den

    def solve(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        n, sub, cp, den = self.n, self.sub, self.cp, self.den
        y = np.empty(n)
        y[0] = d[0] / den[0]
        for k in range(1, n):
            y[k] = (d[k] - sub[k - 1] * y[k - 1]) / den[k]
        for k in range(n - 2, -1, -1):
            y[k] -= cp[k] * y[k + 1]
        return y


def conjugate_residual(apply, b, x0=None, rtol=1e-10, maxiter=10000):
    """Conjugate-residual iteration for a symmetric operator.

    Returns ``(x, relative_residual, iterations)``.
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    r = b - apply(x)
    bn = np.linalg.norm(b)
    if bn == 0:
        return np.zeros_like(b), 0.0, 0
    p = r.copy()
    Ar = apply(r)
    Ap = Ar.copy()
    rAr = np.vdot(r, Ar)
    for it in range(1, maxiter + 1):
        rel = np.linalg.norm(r) / bn
        if rel <= rtol:
            return x, float(rel), it - 1
        alpha = rAr / np.vdot(Ap, Ap)
        x += alpha * p
        r -= alpha * Ap
        Ar = apply(r)
        rAr_new = np.vdot(r, Ar)
        beta = rAr_new / rAr
        rAr = rAr_new
        p = r + beta * p
        Ap = Ar + beta * Ap
    rel = np.linalg.norm(r) / bn
    if rel <= rtol:
        return x, float(rel), maxiter
    raise SolverFailure("conjugate residual did not converge", residual=float(rel))
