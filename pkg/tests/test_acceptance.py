"""Acceptance suite: twelve end-to-end checks at desk scale.

Each criterion is a function returning ``(passed, detail)``.  Under pytest
every criterion is one test and prints a ``PASS``/``FAIL`` line (visible with
``-s``); ``python3 tests/test_acceptance.py`` runs them all and prints the
same lines followed by a tally.
"""

import math
import sys
import time

import numpy as np
import pytest

from npf.diagnostics import (absorbing_monitor, bounds_series, dissipation_ledger, energy,
                             energy_increments, energy_tolerance, separation_monitor)
from npf.grid import Grid
from npf.longtime import (delta_continuation, omega_limit_check, squeezing_experiment,
                          stationary_residual, steady_state, uniform_squeezing_constant)
from npf.mms import spatial_study, temporal_study
from npf.nonlocal_op import KernelSpec, NonlocalOperator
from npf.potentials import (DoubleWell, LambdaField, Logarithmic, PowerLaw, build_lambda,
                            certify_family, comparison_threshold, separation_constant)
from npf.stepper import IMEXStepper, Model, Recorder, SchemeConfig, State

GAUSS = KernelSpec("gaussian", 0.1, 1.0)
BUMP = KernelSpec("bump", 0.15, 1.0)
ASYM = KernelSpec("table", offsets=(-0.3, -0.1, 0.0, 0.1, 0.3), values=(0.0, 0.2, 1.0, 3.0, 0.0))
DELTAS = (0.2, 0.1, 0.05, 0.025)


def _model(n, pot, lam=None, kernel=GAUSS):
    g = Grid((n,))
    op = NonlocalOperator(kernel, g)
    lam = build_lambda(g, op, pot) if lam is None else LambdaField.constant(g, lam)
    return Model(g, op, pot, lam)


def _trajectory(model, init, T, dt, stride=1):
    rec = Recorder(stride)
    IMEXStepper(model, SchemeConfig(dt)).run(init, T, [rec])
    return rec.states


def _sine(x, k=1):
    return np.sin(k * np.pi * x)


def _smooth_random(x, rng, amp):
    f = sum(rng.standard_normal() / k * _sine(x, k) for k in range(1, 6))
    return amp * f / np.max(np.abs(f))


# -- criteria ----------------------------------------------------------------

def c01_operator_oracle():
    rng = np.random.default_rng(1)
    worst = 0.0
    for grid in (Grid((256,)), Grid((64, 64))):
        op = NonlocalOperator(GAUSS, grid)
        for _ in range(50):
            u = rng.standard_normal(grid.shape)
            a, b = op.apply(u), op.apply_direct(u)
            worst = max(worst, float(np.max(np.abs(a - b)) / np.max(np.abs(b))))
    return worst <= 1e-11, f"max relative sup error {worst:.2e} (tol 1e-11)"


def c02_operator_assumptions():
    details, ok = [], True
    for name, kernel, grid in [("gaussian-1d", GAUSS, Grid((128,))), ("bump-1d", BUMP, Grid((128,))),
                               ("gaussian-2d", GAUSS, Grid((32, 32))), ("bump-2d", BUMP, Grid((32, 32)))]:
        rep = NonlocalOperator(kernel, grid).certify_bounds()
        ok &= rep.passed
        details.append(f"{name} {'ok' if rep.passed else 'FAILED'} (sa {rep.selfadjoint_residual:.1e})")
    asym = NonlocalOperator(ASYM, Grid((64,))).certify_bounds()
    caught = not asym.selfadjoint_pass
    details.append(f"asymmetric sa residual {asym.selfadjoint_residual:.2e} "
                   f"{'rejected' if caught else 'NOT rejected'}")
    return ok and caught, "; ".join(details)


def c03_family_certification():
    r = np.linspace(-1.5, 1.5, 1000)
    rep = certify_family(Logarithmic(0.0), DELTAS, r)
    clauses = dict(monotone=rep.monotone_pass, lower=rep.lower_bound_pass, below=rep.F_below_F0_pass,
                   coercive=rep.coercivity_pass, divergent=rep.divergence_pass)
    failed = [k for k, v in clauses.items() if not v]
    return rep.passed, f"kappa0={rep.kappa0} c0={rep.c0:.4f}; failed clauses: {failed or 'none'}"


def c04_energy_dissipation():
    details, ok = [], True
    for pot in (DoubleWell(), Logarithmic(0.0)):
        m = _model(128, pot)
        x = m.grid.coords()[0]
        init = State.from_arrays(_sine(x), 0.5 * _sine(x, 2))
        Rmax = []
        for dt in (1e-2, 5e-3):
            states = _trajectory(m, init, 10.0, dt)
            inc = energy_increments(states, m)
            ok &= bool(np.all(inc <= energy_tolerance(dt)))
            Rmax.append(max(abs(r.residual) for r in dissipation_ledger(states, m)))
            details.append(f"{type(pot).__name__} dt={dt:g} max dE={inc.max():.1e}")
        ratio = Rmax[0] / Rmax[1]
        ok &= ratio >= 1.5
        details.append(f"{type(pot).__name__} max|R| ratio {ratio:.3f}")
    return ok, "; ".join(details)


def c05_separation():
    m = _model(64, Logarithmic(0.0))
    g = m.grid
    states = _trajectory(m, State.from_arrays(g.zeros(), g.full(0.999)), 1.0, 0.01)
    rep = separation_monitor(states)
    g0, g1, g2 = rep.gap_at(0.0), rep.gap_at(0.01), rep.gap_at(1.0)
    ok = rep.positive and g2 > g1
    return ok, f"min gap {rep.gaps.min():.3e}; gap(0)={g0:.3e} gap(0.01)={g1:.3e} gap(1)={g2:.4f}"


def c06_absorbing():
    pot = DoubleWell()
    m = _model(128, pot)
    x = m.grid.coords()[0]
    chi0 = 0.5 * _sine(x, 2)
    E_chi = energy(m, State.from_arrays(m.grid.zeros(), chi0))
    E0 = energy(m, State.from_arrays(_sine(x), chi0))
    runs = []
    for k in (1, 2, 4):
        # theta part of the energy is A^2/4 for A sin(pi x)
        A = math.sqrt(4 * (k * E0 - E_chi))
        init = State.from_arrays(A * _sine(x), chi0)
        runs.append((k, energy(m, init), _trajectory(m, init, 10.0, 0.01)))
    plateau = max(b.total for b in bounds_series(runs[0][2])[-250:])
    C0 = 2 * plateau
    T0 = [absorbing_monitor(states, C0) for _, _, states in runs]
    ok = all(math.isfinite(t) and t < 10.0 for t in T0)
    ok &= all(abs(Ek - k * E0) <= 1e-10 * E0 for k, Ek, _ in runs)
    ok &= T0 == sorted(T0)
    return ok, f"C0={C0:.4f}; energies {[round(E, 4) for _, E, _ in runs]}; entry times {T0}"


def c07_mms():
    tmp, spc = temporal_study(), spatial_study()
    return (tmp.passed and spc.passed,
            f"temporal orders {[round(o, 3) for o in tmp.orders]} (>= 0.8); "
            f"spatial orders {[round(o, 3) for o in spc.orders]} (>= 1.8)")


def c08_delta_continuation():
    m = _model(64, Logarithmic(1.5))
    x = m.grid.coords()[0]
    init = State.from_arrays(_sine(x), 0.9 * _sine(x, 2))
    rep = delta_continuation(m, init, DELTAS, 3.0, SchemeConfig(0.01))
    d = rep.to_reference
    bound, bound_ok = rep.uniform_bound()
    ok = rep.monotone and d[-1] <= 0.25 * d[0] and bound_ok
    return ok, (f"distances {[round(v, 4) for v in d]} (ratio {d[-1] / d[0]:.3f}); "
                f"sup bound {bound:.4f} {'holds' if bound_ok else 'violated'}")


def c09_projector():
    op = NonlocalOperator(GAUSS, Grid((64,)))
    dec = op.eigendecompose()
    eta = dec.values[0] ** 2 / 10
    N, c, ok, worst = dec.projector_bound(eta, samples=500, seed=9)
    return ok, f"eta={eta:.4f} N={N} c={c:.4f} worst excess {worst:.2e}"


def c10_squeezing():
    m = _model(64, Logarithmic(0.0), lam=-1.0, kernel=KernelSpec("gaussian", 0.1, 1.0))
    x = m.grid.coords()[0]
    cfg = SchemeConfig(0.01)
    stepper = IMEXStepper(m, cfg)
    dec = m.op.eigendecompose()
    N, _, proj_ok, _ = dec.projector_bound(dec.values[0] ** 2 / 10, samples=100)
    rng = np.random.default_rng(10)

    def sample():
        s = State.from_arrays(_smooth_random(x, rng, 1.0), _smooth_random(x, rng, 0.9))
        # burn in so both members lie in the absorbing box
        s = stepper.run(s, 1.0)
        return State.from_arrays(s.theta, s.chi)

    reps = [squeezing_experiment(m, sample(), sample(), N, 0.5, cfg, dec=dec) for _ in range(10)]
    c, ok = uniform_squeezing_constant(reps)
    mono = [r.theta_monotone_after(0.1) for r in reps]
    return (ok and proj_ok and all(mono),
            f"N={N} uniform c={c:.4f}; theta distance monotone after 0.1 for {sum(mono)}/10 pairs")


def c11_omega_limit():
    m = _model(64, Logarithmic(0.0), lam=-1.0, kernel=KernelSpec("gaussian", 0.1, 2.0))
    g = m.grid
    x = g.coords()[0]
    ss = steady_state(m, g.full(0.5), tol=1e-8, dt=0.01)
    res = float(np.max(np.abs(stationary_residual(m, ss.chi))))
    init = State.from_arrays(_sine(x), 0.5 + 0.2 * _sine(x, 3))
    final = IMEXStepper(m, SchemeConfig(0.01)).run(init, 50.0)
    rep = omega_limit_check(g, final, ss.chi, 1e-4, 1e-3)
    ok = ss.converged and res <= 1e-8 and rep.passed
    return ok, (f"stationary residual {res:.1e}; ||theta(T)||={rep.theta_norm:.1e} "
                f"||chi(T)-chi_inf||={rep.chi_distance:.1e}")


def _comparison_run(pot, T=10.0):
    m = _model(128, pot)
    x = m.grid.coords()[0]
    states = _trajectory(m, State.from_arrays(_sine(x), 0.5 * _sine(x, 2)), T, 0.01, stride=10)
    late = [s for s in states if s.t >= T / 2]
    Theta = max(float(np.max(np.abs(s.theta))) for s in late)
    M = max(float(np.max(np.abs(m.op.apply(s.chi)))) for s in late)
    Lam = comparison_threshold(pot, m.lam.sup, Theta, M)
    Lam_p = separation_constant(pot.epsilon, pot.kappa_f)
    sup_chi = max(float(np.max(np.abs(s.chi))) for s in late)
    return sup_chi, Lam, Lam_p


def c12_lambda_prime():
    exact = separation_constant(1.0, 1.0) == 8.0
    ok, details = exact, [f"Lambda'(1, 1) = {separation_constant(1.0, 1.0)!r}"]
    for name, pot in (("double-well", DoubleWell()), ("power eps=1 kf=1", PowerLaw(1.0, 1.0))):
        sup_chi, Lam, Lam_p = _comparison_run(pot)
        ok &= sup_chi <= max(Lam, Lam_p)
        details.append(f"{name}: limsup|chi|={sup_chi:.4f} Lambda={Lam:.4f} Lambda'={Lam_p:.4f}")
    return ok, "; ".join(details)


CRITERIA = [c01_operator_oracle, c02_operator_assumptions, c03_family_certification,
            c04_energy_dissipation, c05_separation, c06_absorbing, c07_mms,
            c08_delta_continuation, c09_projector, c10_squeezing, c11_omega_limit,
            c12_lambda_prime]


def _run(fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    line = f"{fn.__name__}: {'PASS' if ok else 'FAIL'} [{time.perf_counter() - t0:.1f}s] {detail}"
    print(line)
    return bool(ok), line


@pytest.mark.parametrize("fn", CRITERIA, ids=[f.__name__ for f in CRITERIA])
def test_criterion(fn):
    ok, line = _run(fn)
    assert ok, line


if __name__ == "__main__":
    results = [_run(fn)[0] for fn in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria passed")
    sys.exit(0 if all(results) else 1)
