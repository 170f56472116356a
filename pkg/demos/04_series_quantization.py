"""Energy levels from terminating power series.

For V = x^2 the amplitude is a power series times exp(-x^2/2).  The series
stops after finitely many terms only when E = 2j + 1; for any other energy
it grows like exp(x^2) and the state cannot be normalized.

Run with ``python demos/04_series_quantization.py``.
"""

# %%
import numpy as np

from qhlab import (
    Potential1D, bridge_residual, build_grid, discretized_spectrum, ee3_ratio, ee4_energy,
    hermite_ratio, hermite_spec, series_tail_diagnosis, terminating_energies)

# %%
levels = terminating_energies(7)
grid = build_grid(-12, 12, 4096)
oracle = discretized_spectrum(Potential1D.harmonic(grid), grid, len(levels))
for j, (e, o) in enumerate(zip(levels, oracle)):
    print(f"j = {j}  series {e:3d}  finite differences {o:.6f}")

# %% [markdown]
# The generic coefficient balance with the worked-example b_j/alpha_j = 4j + 2
# reproduces the same levels, and its ratio vanishes exactly there.

# %%
spec = hermite_spec()
print([ee4_energy(j, spec) for j in range(6)])
print([ee3_ratio(j, ee4_energy(j, spec), spec) for j in range(6)])
print("Hermite ratio at (j=0, E=0):", hermite_ratio(0, 0))

# %% [markdown]
# Tail behaviour at x = 6: terminating energies give tiny polynomial values,
# the others are many orders of magnitude larger.

# %%
for E in (1, 1.5, 3, 3.3, 5, 5.7):
    d = series_tail_diagnosis(E, 6.0, 200)
    state = f"terminates at j = {d.termination_index}" if d.terminates else "diverges"
    print(f"E = {E:4}  {state:22s} log10 |R(6)| = {d.log_partial_sum / np.log(10):7.2f}")

# %% [markdown]
# The same levels seen from the hydrodynamic side: V + Q is flat and equal to E_j.

# %%
g = build_grid(-10.24, 10.24, 1024)
inner = np.abs(g.x) <= 3
for j in range(3):
    r = bridge_residual(j, g)[inner]
    print(f"j = {j}: max |V + Q - E_j| on |x| <= 3 = {np.nanmax(np.abs(r)):.2e}")
