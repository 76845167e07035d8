"""Command-line entry point: ``python -m npf <mode> CONFIG [-o DIR]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 verification failure (1 for I/O errors on the output directory).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import MODES, ConfigError, RunConfig, emit, load
from .diagnostics import (EnergyRecord, absorbing_monitor, bounds_series, decay_check, energy,
                          energy_tolerance, separation_monitor)
from .grid import Grid, read_snapshot
from .longtime import (delta_continuation, omega_limit_check, squeezing_experiment,
                       stationary_residual, steady_state, uniform_squeezing_constant)
from .mms import spatial_study, temporal_study
from .nonlocal_op import KernelSpec, NonlocalOperator, read_kernel_table
from .outputs import OutputDir, OutputError, RunManifest
from .potentials import (DomainViolation, LambdaField, Regularized, SmoothPotential,
                         build_lambda, certify_family, comparison_threshold,
                         potential_from_config, separation_constant)
from .solvers import SolverFailure
from .stepper import IMEXStepper, Model, SchemeConfig, State, StepFailure

__all__ = ["EXIT_OK", "EXIT_CONFIG", "EXIT_NUMERICAL", "EXIT_VERIFICATION",
           "build_model", "build_state", "dispatch", "main"]

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_VERIFICATION = 0, 1, 2, 3, 4
NUMERICAL_ERRORS = (SolverFailure, DomainViolation, FloatingPointError, np.linalg.LinAlgError)


class VerificationFailure(Exception):
    pass


# -- construction -----------------------------------------------------------

def build_grid(cfg: RunConfig) -> Grid:
    d = cfg["domain"]
    return Grid(tuple(d["cells"]), d["side_lengths"])


def build_kernel(cfg: RunConfig) -> KernelSpec:
    k = cfg["kernel"]
    if k["family"] == "table":
        return read_kernel_table(k["table"], scale=k["scale"], amplitude=k["amplitude"])
    return KernelSpec(k["family"], k["scale"], k["amplitude"])


def build_model(cfg: RunConfig, grid: Grid | None = None) -> Model:
    grid = build_grid(cfg) if grid is None else grid
    op = NonlocalOperator(build_kernel(cfg), grid)
    p = cfg["potential"]
    pot = potential_from_config(p["kind"], p["gamma"], p["epsilon"], p["kappa_f"], p["delta"])
    lam_cfg = cfg["lambda"]
    if lam_cfg["mode"] == "constant":
        lam = LambdaField.constant(grid, lam_cfg["value"])
    else:
        base = pot.base if isinstance(pot, Regularized) else pot
        lam = build_lambda(grid, op, base, lam_cfg["value"])
    return Model(grid, op, pot, lam)


def build_scheme(cfg: RunConfig) -> SchemeConfig:
    s = cfg["scheme"]
    solver = None if s["linear_solver"] == "auto" else s["linear_solver"]
    return SchemeConfig(cfg["run"]["dt"], s["newton_tol"], s["newton_max_iter"], solver,
                        s["cfl_guard"])


def _profile(grid: Grid, run: dict, name: str, rng) -> np.ndarray:
    kind, amp = run[f"{name}_profile"], run[f"{name}_amplitude"]
    if kind == "zero":
        return grid.zeros()
    if kind == "constant":
        return grid.full(amp)
    if kind == "sine":
        k = run[f"{name}_mode"]
        out = np.ones(grid.shape)
        for x, L in zip(grid.coords(), grid.side_lengths):
            out = out * np.sin(k * np.pi * x / L)
        return amp * out
    if kind == "random":
        # smooth random field: a few sine modes with 1/k-decaying normal weights
        out = grid.zeros()
        modes = range(1, 6)
        if grid.dim == 1:
            (x,), (L,) = grid.coords(), grid.side_lengths
            for k in modes:
                out += rng.standard_normal() / k * np.sin(k * np.pi * x / L)
        else:
            (x, y), (Lx, Ly) = grid.coords(), grid.side_lengths
            for k in modes:
                for m in modes:
                    out += (rng.standard_normal() / (k * m) * np.sin(k * np.pi * x / Lx)
                            * np.sin(m * np.pi * y / Ly))
        peak = np.max(np.abs(out))
        return amp * out / peak if peak > 0 else out
    g2, f, _ = read_snapshot(run[f"{name}_file"])
    if g2.cells != grid.cells:
        raise ConfigError([f"run.{name}_file: snapshot grid {g2.cells} does not match {grid.cells}"])
    return f


def build_state(cfg: RunConfig, grid: Grid, seed_offset: int = 0) -> State:
    rng = np.random.default_rng(cfg["run"]["seed"] + seed_offset)
    run = cfg["run"]
    return State.from_arrays(_profile(grid, run, "theta", rng), _profile(grid, run, "chi", rng))


def _setup(cfg: RunConfig):
    """Model, scheme and initial state; construction errors are configuration errors."""
    try:
        model = build_model(cfg)
        scheme = build_scheme(cfg)
        IMEXStepper(model, scheme)
        init = build_state(cfg, model.grid)
        if model.pot.singular:
            model.pot.check_domain(init.chi)
    except ConfigError:
        raise
    except (ValueError, OSError) as exc:
        raise ConfigError([str(exc)]) from None
    return model, scheme, init


# -- modes -------------------------------------------------------------------

class _LedgerCallback:
    """Energy ledger and sup-norm monitor computed on the fly."""

    def __init__(self, model, dt, stride, out: OutputDir, snapshot_every: int):
        self.model, self.dt, self.stride = model, dt, stride
        self.out, self.snapshot_every = out, snapshot_every
        self.prev, self.E_prev = None, None
        self.records, self.bounds, self.increments, self.states = [], [], [], []
        self.n = 0

    def __call__(self, s: State):
        g, m = self.model.grid, self.model
        E = energy(m, s)
        if self.prev is not None:
            gt = g.h1_seminorm_sq(s.theta)
            ct = g.norm((s.chi - self.prev.chi) / self.dt) ** 2
            self.increments.append(E - self.E_prev)
            if self.n % self.stride == 0:
                self.records.append(EnergyRecord(s.t, E, gt, ct, (E - self.E_prev) / self.dt + gt + ct))
        if self.n % self.stride == 0:
            self.states.append(s)
        if self.snapshot_every and self.n % self.snapshot_every == 0:
            self.out.snapshot(f"theta_{self.n:08d}.bin", g, s.theta, s.t)
            self.out.snapshot(f"chi_{self.n:08d}.bin", g, s.chi, s.t)
        self.prev, self.E_prev = s, E
        self.n += 1


def _simulate(cfg, out: OutputDir):
    model, scheme, init = _setup(cfg)
    run = cfg["run"]
    cb = _LedgerCallback(model, scheme.dt, run["stride"], out, run["snapshot_every"])
    failure = None
    try:
        final = IMEXStepper(model, scheme).run(init, run["T"], [cb])
    except StepFailure as exc:
        failure, final = exc, exc.state
    out.csv("ledger.csv", EnergyRecord.FIELDS, [r.row() for r in cb.records])
    bs = bounds_series(cb.states)
    out.csv("bounds.csv", ("t", "sup_theta", "sup_chi", "sup_chi_t", "separation_gap"),
            [(b.t, b.sup_theta, b.sup_chi, b.sup_chi_t, b.separation_gap) for b in bs])
    if final is not None:
        out.snapshot("theta_final.bin", model.grid, final.theta, final.t)
        out.snapshot("chi_final.bin", model.grid, final.chi, final.t)
    inc = np.array(cb.increments)
    tol = energy_tolerance(scheme.dt)
    summary = {
        "steps": len(inc),
        "energy_initial": energy(model, init),
        "energy_final": cb.E_prev,
        "max_energy_increment": float(inc.max()) if inc.size else 0.0,
        "tol_E": tol,
        "energy_monotone": bool(np.all(inc <= tol)),
        "lambda_sup": model.lam.sup,
    }
    t = np.array([s.t for s in cb.states])
    E = np.array([energy(model, s) for s in cb.states])
    if E.size >= 4:
        summary["decay"] = decay_check(t, E).__dict__
    if model.pot.singular:
        rep = separation_monitor(cb.states, cfg["experiment"]["taus"])
        summary["separation"] = {"positive": rep.positive, "min_gap": float(rep.gaps.min()),
                                 "min_after": {repr(k): v for k, v in rep.min_after.items()}}
    c0 = cfg["experiment"]["c0"]
    if c0 is not None:
        summary["absorbing"] = {"C0": c0, "T0": absorbing_monitor(cb.states, c0)}
    if isinstance(model.pot, SmoothPotential) and cb.states:
        late = [s for s in cb.states if s.t >= 0.5 * run["T"]]
        Theta = max(float(np.max(np.abs(s.theta))) for s in late)
        M = max(float(np.max(np.abs(model.op.apply(s.chi)))) for s in late)
        summary["comparison"] = {
            "Lambda": comparison_threshold(model.pot, model.lam.sup, Theta, M),
            "Lambda_prime": separation_constant(model.pot.epsilon, model.pot.kappa_f),
            "late_sup_chi": max(float(np.max(np.abs(s.chi))) for s in late),
        }
    out.json("summary.json", summary)
    if failure is not None:
        raise failure


def _steady(cfg, out: OutputDir):
    model, scheme, init = _setup(cfg)
    ex = cfg["experiment"]
    ss = steady_state(model, init.chi, tol=ex["steady_tol"], dt=scheme.dt,
                      max_iter=ex["steady_max_iter"])
    out.snapshot("chi_inf.bin", model.grid, ss.chi, 0.0)
    rep = {"converged": ss.converged, "iterations": ss.iterations, "residual": ss.residual,
           "residual_direct": float(np.max(np.abs(stationary_residual(model, ss.chi, direct=True))))}
    if not ss.converged:
        out.json("steady.json", rep)
        raise SolverFailure(f"stationary iteration stopped at residual {ss.residual:.3e}")
    final = IMEXStepper(model, scheme).run(init, cfg["run"]["T"])
    om = omega_limit_check(model.grid, final, ss.chi, ex["tol_theta"], ex["tol_chi"])
    rep["omega_limit"] = dict(om.__dict__, passed=om.passed, T=final.t)
    out.json("steady.json", rep)
    if not om.passed:
        raise VerificationFailure("trajectory did not reach the stationary state")


def _squeeze(cfg, out: OutputDir):
    model, scheme, _ = _setup(cfg)
    ex, run = cfg["experiment"], cfg["run"]
    if not model.lam.dissipative:
        raise ConfigError(["squeeze: sup(lambda) must be negative (set [lambda] mode = constant, value < 0)"])
    dec = model.op.eigendecompose()
    eta = ex["eta_factor"] * float(dec.values[0]) ** 2
    N, c_proj, proj_ok, worst = dec.projector_bound(eta, ex["samples"], run["seed"])
    if ex["rank"] > 0:
        N = ex["rank"]
    stepper = IMEXStepper(model, scheme)

    def sample(k):
        s = build_state(cfg, model.grid, seed_offset=k)
        if ex["burn_in"] > 0:
            s = stepper.run(s, ex["burn_in"])
        return State.from_arrays(s.theta, s.chi)

    reports, rows = [], []
    for i in range(ex["pairs"]):
        r = squeezing_experiment(model, sample(2 * i + 1), sample(2 * i + 2), N, run["T"],
                                 scheme, dec=dec)
        reports.append(r)
        rows += [(i, t, a, b) for t, a, b in zip(r.times, r.theta_distance, r.chi_distance)]
    c, ok = uniform_squeezing_constant(reports)
    out.csv("squeeze_series.csv", ("pair", "t", "theta_distance", "chi_distance"), rows)
    out.json("squeeze.json", {
        "projector": {"eta": eta, "N": N, "c": c_proj, "passed": proj_ok, "worst": worst},
        "pairs": [dict(r.summary(), theta_monotone_after_0_1=r.theta_monotone_after(0.1))
                  for r in reports],
        "uniform_c": c, "passed": ok,
    })
    if not (ok and proj_ok):
        raise VerificationFailure("squeezing inequality has no finite uniform constant")


def _continuation(cfg, out: OutputDir):
    model, scheme, init = _setup(cfg)
    if not model.pot.singular:
        raise ConfigError(["continuation: needs potential.kind = logarithmic without delta"])
    ex = cfg["experiment"]
    rep = delta_continuation(model, init, ex["deltas"], cfg["run"]["T"], scheme,
                             tuple(ex["window"]), ex["sup_from"])
    bound, bound_ok = rep.uniform_bound()
    out.json("continuation.json", dict(rep.__dict__, monotone=rep.monotone, cauchy=rep.cauchy,
                                       energy_ordered=rep.energy_ordered, sup_bound=bound,
                                       sup_bound_pass=bound_ok))
    if not (rep.monotone and rep.energy_ordered and bound_ok):
        raise VerificationFailure("delta-continuation checks failed")


def _verify_operator(cfg, out: OutputDir):
    try:
        grid = build_grid(cfg)
        op = NonlocalOperator(build_kernel(cfg), grid)
    except (ValueError, OSError) as exc:
        raise ConfigError([str(exc)]) from None
    rep = op.certify_bounds(sample_count=cfg["experiment"]["samples"], seed=cfg["run"]["seed"])
    out.json("bound_report.json", dict(rep.__dict__, ratios={str(k): v for k, v in rep.ratios.items()},
                                       passed=rep.passed))
    if not rep.passed:
        raise VerificationFailure("operator bounds not certified")


def _verify_potential(cfg, out: OutputDir):
    p = cfg["potential"]
    try:
        base = potential_from_config(p["kind"], p["gamma"], p["epsilon"], p["kappa_f"])
    except ValueError as exc:
        raise ConfigError([str(exc)]) from None
    r = np.linspace(-1.5, 1.5, max(cfg["experiment"]["samples"], 3))
    rep = certify_family(base, cfg["experiment"]["deltas"], r)
    out.json("family_report.json", dict(rep.__dict__, passed=rep.passed))
    if not rep.passed:
        raise VerificationFailure("regularized family not certified")


def _mms(cfg, out: OutputDir):
    try:
        kernel = build_kernel(cfg)
        n = build_grid(cfg).cells
    except (ValueError, OSError) as exc:
        raise ConfigError([str(exc)]) from None
    if len(n) != 1 or n[0] % 4:
        raise ConfigError(["mms: needs a 1D grid with a cell count divisible by 4"])
    dt, T = cfg["run"]["dt"], cfg["run"]["T"]
    tmp = temporal_study((dt, dt / 2, dt / 4), n[0], T, kernel=kernel)
    spc = spatial_study((n[0] // 4, n[0] // 2, n[0]), T, kernel=kernel)
    rows = [(0, p, e) for p, e in zip(tmp.parameters, tmp.errors)]
    rows += [(1, p, e) for p, e in zip(spc.parameters, spc.errors)]
    out.csv("mms.csv", ("study", "parameter", "error"), rows)
    out.json("mms.json", {"temporal": dict(tmp.__dict__, passed=tmp.passed),
                          "spatial": dict(spc.__dict__, passed=spc.passed)})
    if not (tmp.passed and spc.passed):
        raise VerificationFailure("observed orders below threshold")


MODE_FUNCS = {
    "simulate": _simulate,
    "steady": _steady,
    "squeeze": _squeeze,
    "continuation": _continuation,
    "verify-operator": _verify_operator,
    "verify-potential": _verify_potential,
    "mms": _mms,
}
assert set(MODE_FUNCS) == set(MODES)


def dispatch(cfg: RunConfig, outdir) -> RunManifest:
    """Run ``cfg["run"]["mode"]``, write its outputs and ``manifest.json``.

    The manifest is written even when the run fails; its ``status`` is one of
    ``ok``, ``numerical-failure`` or ``verification-failure``.  Failures are
    re-raised after the manifest is on disk.
    """
    mode = cfg["run"]["mode"]
    out = OutputDir(outdir)
    man = RunManifest(config=emit(cfg), version=__version__, mode=mode)
    start = time.perf_counter()
    try:
        MODE_FUNCS[mode](cfg, out)
    except ConfigError:
        raise
    except VerificationFailure as exc:
        man.status, man.message = "verification-failure", str(exc)
        raise
    except NUMERICAL_ERRORS as exc:
        man.status, man.message = "numerical-failure", str(exc)
        raise
    finally:
        man.wall_clock = time.perf_counter() - start
        if man.status != "ok" or sys.exc_info()[0] is None:
            out.manifest(man)
    return man


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="npf", description="Nonlocal phase-field runs and checks.")
    ap.add_argument("mode", choices=MODES)
    ap.add_argument("config", type=Path)
    ap.add_argument("-o", "--output", type=Path, default=Path("npf_out"),
                    help="output directory (default: %(default)s)")
    args = ap.parse_args(argv)
    try:
        cfg = load(args.config)
        cfg = cfg.replace("run", mode=args.mode)
        dispatch(cfg, args.output)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except VerificationFailure as exc:
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFICATION
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OutputError as exc:
        print(f"output error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK
