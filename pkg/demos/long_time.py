"""
Long-time behaviour: absorbing box, stationary states and squeezing
====================================================================

Run with ``python3 demos/long_time.py``.
"""

# %%
import math

import numpy as np

from npf.diagnostics import absorbing_monitor, bounds_series, energy
from npf.grid import Grid
from npf.longtime import omega_limit_check, squeezing_experiment, steady_state, uniform_squeezing_constant
from npf.nonlocal_op import KernelSpec, NonlocalOperator
from npf.potentials import DoubleWell, LambdaField, Logarithmic, build_lambda
from npf.stepper import IMEXStepper, Model, Recorder, SchemeConfig, State

grid = Grid((128,))
x = grid.coords()[0]
op = NonlocalOperator(KernelSpec("gaussian", 0.1, 1.0), grid)

# %%
# Absorbing box.  Scale the heat amplitude so the initial energies are
# E0, 2 E0 and 4 E0; the box size comes from a reference plateau.
dw = Model(grid, op, DoubleWell(), build_lambda(grid, op, DoubleWell()))
chi0 = 0.5 * np.sin(2 * np.pi * x)
E_chi = energy(dw, State.from_arrays(grid.zeros(), chi0))
E0 = energy(dw, State.from_arrays(np.sin(np.pi * x), chi0))
runs = {}
for k in (1, 2, 4):
    A = math.sqrt(4 * (k * E0 - E_chi))
    rec = Recorder()
    IMEXStepper(dw, SchemeConfig(0.01)).run(State.from_arrays(A * np.sin(np.pi * x), chi0), 10.0, [rec])
    runs[k] = rec.states
C0 = 2 * max(b.total for b in bounds_series(runs[1])[-250:])
for k, states in runs.items():
    print(f"{k} E0: enters the C0={C0:.3f} box at t={absorbing_monitor(states, C0)}")

# %%
# A strongly attracting logarithmic model (kernel mass about 5, lambda = -1)
# has two stable stationary states, one of each sign.
g64 = Grid((64,))
x64 = g64.coords()[0]
m = Model(g64, NonlocalOperator(KernelSpec("gaussian", 0.1, 2.0), g64), Logarithmic(0.0),
          LambdaField.constant(g64, -1.0))
plus = steady_state(m, g64.full(0.5), dt=0.01)
print("stationary max chi:", plus.chi.max(), "residual:", plus.residual)
final = IMEXStepper(m, SchemeConfig(0.01)).run(
    State.from_arrays(np.sin(np.pi * x64), 0.5 + 0.2 * np.sin(3 * np.pi * x64)), 20.0)
print(omega_limit_check(g64, final, plus.chi, 1e-4, 1e-3))

# %%
# Squeezing: pairs of trajectories from the absorbing box.  The smallest
# constant c that works for every pair is finite.
m = Model(g64, NonlocalOperator(KernelSpec("gaussian", 0.1, 1.0), g64), Logarithmic(0.0),
          LambdaField.constant(g64, -1.0))
dec = m.op.eigendecompose()
N, c_proj, ok, _ = dec.projector_bound(dec.values[0] ** 2 / 10)
print("projector rank", N, "holds:", ok)
rng = np.random.default_rng(0)
stepper = IMEXStepper(m, SchemeConfig(0.01))


def sample():
    th = sum(rng.standard_normal() / k * np.sin(k * np.pi * x64) for k in range(1, 6))
    ch = sum(rng.standard_normal() / k * np.sin(k * np.pi * x64) for k in range(1, 6))
    s = State.from_arrays(th / abs(th).max(), 0.9 * ch / abs(ch).max())
    s = stepper.run(s, 1.0)
    return State.from_arrays(s.theta, s.chi)


reps = [squeezing_experiment(m, sample(), sample(), N, 0.5, SchemeConfig(0.01), dec=dec) for _ in range(5)]
for r in reps:
    print(f"d(0)={r.distance0:.4f}  d(T*)={r.distanceT:.4f}  d_T*={r.d_T:.4f}  c>={r.required_c:.4f}")
print("uniform c:", uniform_squeezing_constant(reps))
