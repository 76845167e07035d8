import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npf.grid import Grid
from npf.nonlocal_op import KernelSpec, NonlocalOperator, read_kernel_table

ASYM = KernelSpec("table", offsets=(-0.3, -0.1, 0.0, 0.1, 0.3), values=(0.0, 0.2, 1.0, 3.0, 0.0))


def _rel_sup(a, b):
    return np.max(np.abs(a - b)) / np.max(np.abs(b))


def test_kernel_validation():
    with pytest.raises(ValueError):
        KernelSpec("cauchy")
    with pytest.raises(ValueError):
        KernelSpec("gaussian", scale=0.0)
    with pytest.raises(ValueError):
        KernelSpec("table", offsets=(0.0, 0.1))
    with pytest.raises(ValueError):
        KernelSpec("table", offsets=(0.1, 0.0), values=(1.0, 0.0))


def test_kernels_are_even(rng):
    z = rng.uniform(-0.5, 0.5, 200)
    for k in (KernelSpec("gaussian", 0.1), KernelSpec("bump", 0.2, 3.0)):
        assert np.max(np.abs(k(z) - k(-z))) <= 1e-12
        assert np.all(k(z) >= 0)
    assert KernelSpec("bump", 0.2)(np.array([0.2, 0.25])).tolist() == [0.0, 0.0]
    assert ASYM.asymmetry(Grid((32,))) > 0.1


@pytest.mark.parametrize("grid,kernel", [
    (Grid((256,)), KernelSpec("gaussian", 0.1)),
    (Grid((97,)), KernelSpec("bump", 0.15, 2.0)),
    (Grid((24, 20), (1.25, 0.8)), KernelSpec("gaussian", 0.12)),
    (Grid((64,)), ASYM),
])
def test_fft_matches_direct(rng, grid, kernel):
    op = NonlocalOperator(kernel, grid)
    for _ in range(5):
        u = rng.standard_normal(grid.shape)
        assert _rel_sup(op.apply(u), op.apply_direct(u)) <= 1e-11
    np.testing.assert_array_equal(op.apply(grid.zeros()), 0.0)
    np.testing.assert_allclose(op.matrix() @ u.ravel(), op.apply_direct(u).ravel(), rtol=1e-12, atol=1e-12)


def test_J_of_one_is_minus_kappa(gauss1, grid1):
    np.testing.assert_allclose(gauss1.apply(grid1.full(1.0)), -gauss1.kappa, atol=1e-10)
    assert np.all(gauss1.kappa >= 0)
    # interior cells see (almost) the full mass sqrt(2 pi); corners about half
    assert gauss1.kappa[64] == pytest.approx(np.sqrt(2 * np.pi), rel=1e-6)
    assert gauss1.kappa[0] < 0.55 * np.sqrt(2 * np.pi)


def test_L_equals_gaussian_mass(gauss1):
    # discrete l1 mass of a well resolved gaussian equals its integral
    assert gauss1.L == pytest.approx(np.sqrt(2 * np.pi), rel=1e-12)
    assert gauss1.C_inf == pytest.approx(10.0, rel=1e-12)


def test_delta_like_input_gives_kernel_column(gauss1, grid1):
    x = grid1.coords()[0]
    u = grid1.zeros()
    u[40] = 1.0 / grid1.cell_volume
    np.testing.assert_allclose(gauss1.apply(u), -gauss1.kernel(x - x[40]), atol=1e-11)


def test_self_adjoint(rng, gauss1, grid1):
    for _ in range(20):
        u, v = rng.standard_normal((2,) + grid1.shape)
        lhs = grid1.inner(gauss1.apply_direct(u), v)
        rhs = grid1.inner(u, gauss1.apply_direct(v))
        assert abs(lhs - rhs) <= 1e-11 * grid1.norm(u) * grid1.norm(v)


def test_certify_bounds():
    g = Grid((128,))
    rep = NonlocalOperator(KernelSpec("gaussian", 0.1, 1.0), g).certify_bounds(200)
    assert rep.passed and rep.L == pytest.approx(np.sqrt(2 * np.pi))
    assert max(rep.ratios.values()) <= rep.L
    zero = NonlocalOperator.zero(g).certify_bounds(10)
    assert zero.passed and max(zero.ratios.values()) == 0.0 and zero.smoothing_ratio == 0.0
    bad = NonlocalOperator(ASYM, Grid((64,))).certify_bounds(30)
    assert not bad.selfadjoint_pass and bad.selfadjoint_residual > 1e-3
    assert '"pass": false' in bad.to_json()
    with pytest.raises(ValueError):
        NonlocalOperator.zero(g).certify_bounds(0)


def test_shape_mismatch(gauss1):
    with pytest.raises(ValueError):
        gauss1.apply(np.zeros(10))


def test_eigendecompose(rng):
    g = Grid((64,))
    op = NonlocalOperator(KernelSpec("gaussian", 0.1), g)
    dec = op.eigendecompose()
    assert dec.m == 64
    assert np.sum(dec.values) == pytest.approx(dec.trace, abs=1e-8)
    assert np.all(np.diff(np.abs(dec.values)) <= 1e-14)
    G = np.array([[g.inner(a, b) for b in dec.vectors] for a in dec.vectors])
    assert np.max(np.abs(G - np.eye(64))) <= 1e-10
    for mu, v in zip(dec.values[:8], dec.vectors[:8]):
        assert g.norm(op.apply_direct(v) - mu * v) <= 1e-8
    u = rng.standard_normal(g.shape)
    np.testing.assert_allclose(dec.apply(u), op.apply_direct(u), atol=1e-8)
    with pytest.raises(ValueError):
        op.eigendecompose(65)
    with pytest.raises(ValueError):
        NonlocalOperator(ASYM, g).eigendecompose()
    assert np.all(NonlocalOperator.zero(g).eigendecompose(5).values == 0)


def test_project(rng):
    g = Grid((48,))
    dec = NonlocalOperator(KernelSpec("gaussian", 0.1), g).eigendecompose(20)
    u = rng.standard_normal(g.shape)
    np.testing.assert_array_equal(dec.project(u, 0), 0.0)
    np.testing.assert_allclose(dec.project(dec.vectors[0], 3), dec.vectors[0], atol=1e-10)
    P = dec.project(u, 7)
    np.testing.assert_allclose(dec.project(P, 7), P, atol=1e-10)
    v = rng.standard_normal(g.shape)
    assert g.inner(dec.project(u, 7), v) == pytest.approx(g.inner(u, dec.project(v, 7)), abs=1e-10)
    with pytest.raises(ValueError):
        dec.project(u, 21)


def test_projector_bound():
    g = Grid((64,))
    op = NonlocalOperator(KernelSpec("gaussian", 0.1), g)
    dec = op.eigendecompose()
    eta = dec.values[0] ** 2 / 10
    N, c, ok, worst = dec.projector_bound(eta, 500)
    assert ok and 0 < N < 64 and c == pytest.approx(dec.values[0] ** 2)
    # discarded span: ||Jv||^2 <= eta ||v||^2
    v = dec.vectors[N] + 0.5 * dec.vectors[N + 3]
    assert g.norm(op.apply(v)) ** 2 <= eta * g.norm(v) ** 2
    N, c, ok, _ = dec.projector_bound(2 * dec.values[0] ** 2, 50)
    assert N == 0 and c == 0.0 and ok
    zdec = NonlocalOperator.zero(g).eigendecompose()
    assert zdec.projector_bound(1e-3, 20)[:3] == (0, 0.0, True)
    with pytest.raises(ValueError):
        dec.projector_bound(0.0)


def test_kernel_table(tmp_path):
    p = tmp_path / "k.csv"
    p.write_text("offset,value\n0,2\n0.1,1\n0.2,0\n")
    k = read_kernel_table(p)
    assert k.radial
    assert k(np.array([0.05, -0.05, 0.3])).tolist() == [1.5, 1.5, 0.0]
    g = Grid((32,))
    op = NonlocalOperator(k, g)
    assert op.selfadjoint_residual() <= 1e-12


def test_threads_env(monkeypatch, rng, gauss1, grid1):
    u = rng.standard_normal(grid1.shape)
    a = gauss1.apply(u)
    monkeypatch.setenv("NPF_THREADS", "2")
    np.testing.assert_allclose(gauss1.apply(u), a, rtol=0, atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(seed, a, b):
    g = Grid((40,))
    op = NonlocalOperator(KernelSpec("bump", 0.2), g)
    u, v = np.random.default_rng(seed).standard_normal((2, 40))
    lhs = op.apply(a * u + b * v)
    rhs = a * op.apply(u) + b * op.apply(v)
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + np.max(np.abs(rhs)))
