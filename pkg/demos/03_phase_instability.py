"""How a tiny current change moves the phase across a low-density gap.

Adding eps to the current changes the phase drop over [-ell, ell] by
eps times the integral of 1/rho.  On a gap of density eps^N this is
2 ell / eps^(N-1), which blows up as eps shrinks.

Run with ``python demos/03_phase_instability.py [output_dir]``.
"""

# %%
import sys
from pathlib import Path

from qhlab import (
    InstabilityConfig, build_grid, epsilon_sweep, perturb_current, phase_difference,
    plateau_density, predicted_shift)
from qhlab.instability import SweepRow
from qhlab.io import write_table
from qhlab.plotting import PlotSpec, emit_plot

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_output") / "instability"
out.mkdir(parents=True, exist_ok=True)

# %% [markdown]
# One plateau density with eps = 0.1 and N = 2.

# %%
grid = build_grid(-16, 16, 4096)
h = plateau_density(0.1, 2, 1.0, grid).hydro
shift = phase_difference(perturb_current(h, 0.1), 1.0) - phase_difference(h, 1.0)
print(f"phase shift {float(shift):.6f}, plateau estimate {predicted_shift(1.0, 0.1, 2)}")

# %% [markdown]
# Sweeping eps: the log-log slope is -(N - 1) and the intercept log(2 ell).

# %%
for n_exp in (2, 3):
    res = epsilon_sweep(InstabilityConfig(1.0, [1e-1, 1e-2, 1e-3, 1e-4], n_exp))
    print(f"N = {n_exp}: slope {res.fit.slope:.6f}, intercept {res.fit.intercept:.6f}")

# %% [markdown]
# The same experiment on the Gaussian pair, with the separation chosen so
# that the midpoint density equals eps^2.  The gap is not flat, so the law
# holds only approximately.

# %%
cfg = InstabilityConfig(0.2, [1e-2, 1e-3, 1e-4, 1e-5], 2, profile="gaussian_pair", p0=2.0)
res = epsilon_sweep(cfg)
for r in res.rows:
    print(f"eps = {r.epsilon:.0e}  L = {r.separation:.4f}  dS = {r.delta_s_exact:.4e}  "
          f"estimate = {r.delta_s_predicted:.4e}")
print(f"fitted slope {res.fit.slope:.4f}")

path = write_table(out / "sweep.csv", SweepRow.COLUMNS, [r.as_row() for r in res.rows])
emit_plot(path, PlotSpec("epsilon", ["delta_s_exact", "delta_s_predicted"], loglog=True,
                         markers=True), out / "sweep.svg")
