"""Angular eigenvalues and the single-valuedness question.

The polar series in u = cos(theta) terminates when lambda = j(j+1); off
that lattice its coefficients decay like 1/j and the sum diverges at the
poles.  In the plane, a non-integer azimuthal number m still gives a
single-valued density and current even though the wavefunction is not.

Run with ``python demos/05_angular_momentum.py``.
"""

# %%
import numpy as np

from qhlab import (
    legendre_ratio, legendre_tail_diagnosis, nonquantized_m_witness, quantized_lambda,
    radial_solution)

# %%
for j in range(5):
    lam = quantized_lambda(j)
    print(f"j = {j}  lambda = {lam:2d}  ratio at j: {legendre_ratio(j, lam)}")

# %% [markdown]
# Off-lattice values: no termination, and the coefficients approach C/j.

# %%
for lam in (6, 6.5, 12, 12.5):
    d = legendre_tail_diagnosis(lam, 10**4)
    print(f"lambda = {lam:5}  terminates: {d.terminates!s:5}  "
          f"j a_j at cut (even, odd): {d.even.tail_constant:+.3f}, {d.odd.tail_constant:+.3f}")

# %% [markdown]
# Radial part R = c1 r^(lambda/2).

# %%
r = np.linspace(0.1, 3, 5)
sol = radial_solution(quantized_lambda(2), 1.0, r)
print("R(r):", sol.R)
print("largest residual:", np.max(np.abs(sol.residual_eq1)))

# %%
for m in (0, 0.5, 1, 1.5):
    w = nonquantized_m_witness(m)
    print(f"m = {m}: rho single-valued {w.rho_single_valued}, J single-valued "
          f"{w.current_single_valued}, psi single-valued {w.wavefunction_single_valued}")
