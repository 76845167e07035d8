import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from npf.grid import Grid
from npf.nonlocal_op import KernelSpec, NonlocalOperator
from npf.potentials import (DoubleWell, LambdaField, Logarithmic, Potential, Regularized,
                            ZeroPotential, build_lambda)
from npf.stepper import (SEPARATION_MARGIN, IMEXStepper, Model, Recorder, SchemeConfig, State,
                         StepFailure, run, scalar_solve, step)


class Linear(Potential):
    def f0(self, r):
        return np.asarray(r, dtype=float)

    def df0(self, r):
        return np.ones_like(np.asarray(r, dtype=float))

    def F0(self, r):
        return 0.5 * np.asarray(r, dtype=float) ** 2


def _model(n=64, pot=None, kernel=KernelSpec("gaussian", 0.1), lam=None):
    g = Grid((n,))
    op = NonlocalOperator(kernel, g)
    pot = DoubleWell() if pot is None else pot
    lam = build_lambda(g, op, pot) if lam is None else LambdaField.constant(g, lam)
    return Model(g, op, pot, lam)


def test_scalar_solve_closed_forms():
    assert float(scalar_solve(DoubleWell(), 1.0, 0.0, np.array(0.0))) == 0.0
    assert float(scalar_solve(Linear(), 1.0, 0.0, np.array(2.0))) == pytest.approx(1.0, abs=1e-14)
    with pytest.raises(ValueError):
        scalar_solve(Linear(), 1.0, 1.0, np.array(2.0))


def test_scalar_solve_log_against_bisection():
    log = Logarithmic()
    for b in (0.3, 5.0, 15.0, -12.0, 30.0):
        r = float(scalar_solve(log, 10.0, 0.0, np.array(b)))
        assert abs(r) < 1
        if abs(b) < 20:
            assert abs(10 * r + float(log.f0(np.array(r))) - b) <= 1e-10
        ref = brentq(lambda s: 10 * s + np.log1p(s) - np.log1p(-s) - b, -1 + 1e-15, 1 - 1e-15,
                     xtol=1e-16)
        assert r == pytest.approx(ref, abs=1e-14)


def test_scalar_solve_saturates_at_margin():
    # the root of 10 r + f0(r) = 100 sits about 1e-39 below 1: not a double
    log = Logarithmic()
    r = float(scalar_solve(log, 10.0, 0.0, np.array(100.0)))
    assert 0 < r < 1 and r == 1 - SEPARATION_MARGIN
    r = float(scalar_solve(log, 10.0, 0.0, np.array(-100.0)))
    assert r == -1 + SEPARATION_MARGIN


def test_scalar_solve_huge_rhs_stays_inside():
    log = Logarithmic()
    r = scalar_solve(log, 1.0, 0.5, np.array([1e6, -1e6, 1e3]))
    assert np.all(np.abs(r) <= 1 - SEPARATION_MARGIN)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(0.001, 0.5), st.floats(-5, 0.99))
def test_stage_one_solvable_for_any_rhs(seed, dt, lam_sup):
    rng = np.random.default_rng(seed)
    b = rng.standard_normal(50) * 10.0 ** rng.uniform(-3, 6, 50)
    lam = lam_sup - rng.uniform(0, 2, 50)
    for pot in (DoubleWell(), Logarithmic(), Regularized(Logarithmic(), 0.05)):
        r = scalar_solve(pot, 1 / dt, lam, b)
        if pot.singular:
            assert np.all(np.abs(r) < 1)
            keep = np.abs(r) < 1 - 1e-12
            r, b, lam = r[keep], b[keep], lam[keep]
        res = r / dt + pot.f0(r) - lam * r - b
        # converged, or bracketed to a few ulps (backward error)
        slope = 1 / dt - lam + pot.df0(r)
        assert np.all(np.abs(res) <= 1e-12 * (1 + np.abs(b)) + 8 * np.spacing(np.abs(r) + 1e-300) * slope
                      + 4 * np.spacing(np.abs(b)))


def test_zero_state_is_equilibrium():
    m = _model()
    s0 = State.from_arrays(m.grid.zeros(), m.grid.zeros())
    s = run(s0, m, SchemeConfig(0.01), 0.5)
    assert not np.any(s.theta) and not np.any(s.chi) and s.t == pytest.approx(0.5)


def test_heat_mode_decay_factor():
    g = Grid((50,))
    m = Model(g, NonlocalOperator.zero(g), ZeroPotential(), LambdaField.constant(g, 0.0))
    x = g.coords()[0]
    s0 = State.from_arrays(np.sin(np.pi * x), g.zeros())
    dt = 0.01
    s1 = step(s0, m, SchemeConfig(dt))
    # chi picks up dt * theta, which feeds back into the heat step
    np.testing.assert_allclose(s1.chi, dt * s0.theta, atol=1e-15)
    factor = (1 - dt) / (1 + dt * g.dirichlet_eigenvalue(1))
    np.testing.assert_allclose(s1.theta, factor * s0.theta, atol=1e-14)


def test_2d_heat_solver():
    g = Grid((12, 10), (1.2, 1 / 1.2))
    m = Model(g, NonlocalOperator.zero(g), ZeroPotential(), LambdaField.constant(g, 0.0))
    rng = np.random.default_rng(3)
    s0 = State.from_arrays(rng.standard_normal(g.shape), g.zeros())
    dt = 0.02
    s1 = IMEXStepper(m, SchemeConfig(dt)).step(s0)
    # dense oracle; chi moves by dt * theta0 in stage one
    n = g.size
    A = np.array([g.apply_A(e.reshape(g.shape)).ravel() for e in np.eye(n)]).T
    ref = np.linalg.solve(np.eye(n) / dt + A, (1 - dt) * s0.theta.ravel() / dt)
    np.testing.assert_allclose(s1.theta.ravel(), ref, rtol=1e-8, atol=1e-9)
    with pytest.raises(ValueError):
        IMEXStepper(m, SchemeConfig(dt, linear_solver="tridiagonal"))


def test_1d_solvers_agree():
    m = _model(40)
    x = m.grid.coords()[0]
    s0 = State.from_arrays(np.sin(np.pi * x), 0.3 * np.cos(3 * x))
    a = IMEXStepper(m, SchemeConfig(0.01, linear_solver="tridiagonal")).run(s0, 0.1)
    b = IMEXStepper(m, SchemeConfig(0.01, linear_solver="conjugate-residual")).run(s0, 0.1)
    np.testing.assert_allclose(a.theta, b.theta, atol=1e-9)
    np.testing.assert_allclose(a.chi, b.chi, atol=1e-9)


def test_run_contracts():
    m = _model(32)
    x = m.grid.coords()[0]
    s0 = State.from_arrays(np.sin(np.pi * x), 0.5 * np.sin(2 * np.pi * x), t=0.25)
    st_ = IMEXStepper(m, SchemeConfig(0.05))
    assert st_.run(s0, 0.25) is s0
    rec1, rec2 = Recorder(), Recorder(stride=2)
    a = st_.run(s0, 1.25, [rec1, rec2])
    b = st_.run(s0, 1.25)
    np.testing.assert_array_equal(a.theta, b.theta)
    np.testing.assert_array_equal(a.chi, b.chi)
    assert len(rec1.states) == 21 and len(rec2.states) == 11
    np.testing.assert_allclose(rec1.times, 0.25 + 0.05 * np.arange(21), atol=1e-15)
    with pytest.raises(ValueError):
        st_.run(s0, 0.33)
    with pytest.raises(ValueError):
        st_.run(s0, 0.0)
    with pytest.raises(ValueError):
        s0.theta[0] = 1.0


def test_cfl_guard():
    m = _model(16, lam=2.0)
    with pytest.raises(ValueError):
        IMEXStepper(m, SchemeConfig(0.5))
    IMEXStepper(m, SchemeConfig(0.4))
    with pytest.raises(ValueError):
        SchemeConfig(0.0)
    with pytest.raises(ValueError):
        SchemeConfig(0.1, linear_solver="gmres")


def test_model_validation():
    g, h = Grid((16,)), Grid((20,))
    with pytest.raises(ValueError):
        Model(g, NonlocalOperator.zero(h), DoubleWell(), LambdaField.constant(g, 0.0))
    m = Model(g, NonlocalOperator.zero(g), DoubleWell(), -1.0)
    assert m.lam.sup == -1.0


def test_separation_preserved_from_near_one():
    m = _model(64, pot=Logarithmic())
    s0 = State.from_arrays(m.grid.zeros(), m.grid.full(0.999))
    seen = []
    run(s0, m, SchemeConfig(0.01), 5.0, [lambda s: seen.append(np.max(np.abs(s.chi)))])
    assert len(seen) == 501 and max(seen) < 1.0


def test_step_failure_keeps_state():
    m = _model(32, pot=Logarithmic())
    x = m.grid.coords()[0]
    s0 = State.from_arrays(np.sin(np.pi * x), 0.9 * np.sin(2 * np.pi * x))
    cfg = SchemeConfig(0.01, newton_tol=1e-16, newton_max_iter=1)
    with pytest.raises(StepFailure) as info:
        IMEXStepper(m, cfg).run(s0, 1.0)
    assert info.value.state is s0
