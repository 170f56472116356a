"""The same dynamics in the density/phase picture.

The Madelung integrator evolves log-density and phase.  Where the density
stays well above zero it tracks the split-step solution closely.  When two
packets interfere, nodes appear and the hydrodynamic picture breaks down.

Run with ``python demos/02_madelung_picture.py``.
"""

# %%
import numpy as np

from qhlab import (
    ComplexField, GaussianPairParams, MadelungState, Potential1D, build_grid, coherent_state,
    cross_validate, gaussian_pair, quantum_potential, stability_limit, subgrid)

grid = build_grid(-20.48, 20.48, 2048)
v = Potential1D.harmonic(grid)

# %% [markdown]
# Ground state of V = x^2: V + Q is constant, so nothing moves.

# %%
psi0 = coherent_state(0.0, 0.0, grid)
window = subgrid(grid, 0.0, 512)
i0 = round((window.x_min - grid.x_min) / grid.dx)
state = MadelungState.from_field(ComplexField(window, psi0.values[i0:i0 + window.n]))
q = quantum_potential(state.hydro)
print("spread of V + Q on the window:", np.ptp(window.x**2 + q))

rep = cross_validate(psi0, v, 0.5, 1e-4, window=window)
print(f"stationary state, largest density discrepancy up to t = 0.5: {rep.max_rho_diff:.2e}")

# %% [markdown]
# A displaced, broader Gaussian sloshes in the well.

# %%
x = grid.x
psi = ComplexField(grid, np.exp(-(x - 1.0) ** 2 / (4 * 3.5**2))).normalize()
rep = cross_validate(psi, v, 0.2, 1e-4, record_every=500)
for t, d, _ in rep.rows():
    print(f"t = {t:.2f}  sup |rho_madelung - rho_spectral| = {d:.2e}")
print("hydro time step limit on this grid:", stability_limit(grid))

# %% [markdown]
# Interfering packets: the density reaches zero between fringes and the
# log-density integrator reports the step where that happened.

# %%
g = build_grid(-40.0, 40.0, 4096)
pair = gaussian_pair(GaussianPairParams(10, 1, 2), g, -1)
rep = cross_validate(pair, Potential1D.free(g), 5.0, 5e-5, window=subgrid(g, 0.0, 1024))
print("completed:", rep.completed)
print("reason:", rep.error)
