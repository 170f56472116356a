"""Schrodinger and Madelung pictures of a particle on a line.

Units: hbar = 1, m = 1/2, so ``H = -d^2/dx^2 + V``.
"""

from .errors import (
    CalibrationError, ConfigurationError, InstabilityError, NodeError,
    NodeFormationError, QHLabError, SpecError)
from .fields import (
    ComplexField, GaussianPairParams, Grid1D, HydroField, build_grid, from_hydro,
    gaussian_pair, norm, to_hydro)
from .hydro import (
    MadelungState, cross_validate, madelung_evolve, madelung_step, quantum_potential,
    stability_limit, subgrid)
from .instability import (
    InstabilityConfig, analytic_pair_phase, calibrate_separation, epsilon_sweep,
    general_perturbed_phase, perturb_current, perturbed_phase_shift, phase_difference,
    plateau_density, predicted_shift)
from .quantization import (
    RecurrenceSpec, bridge_residual, discretized_spectrum, ee3_ratio, ee4_energy,
    hermite_ratio, hermite_spec, legendre_ratio, legendre_tail_diagnosis,
    nonquantized_m_witness, quantized_lambda, radial_solution, series_tail_diagnosis,
    terminating_energies)
from .schrodinger import (
    EvolutionConfig, Potential1D, coherent_state, evolve_pair_to_interference,
    fringe_spacing, meeting_point, split_step_evolve)

__version__ = "0.1.0"

__all__ = [
    "CalibrationError", "ComplexField", "ConfigurationError", "EvolutionConfig",
    "GaussianPairParams", "Grid1D", "HydroField", "InstabilityConfig",
    "InstabilityError", "MadelungState", "NodeError", "NodeFormationError",
    "Potential1D", "QHLabError", "RecurrenceSpec", "SpecError", "analytic_pair_phase",
    "bridge_residual", "build_grid", "calibrate_separation", "coherent_state",
    "cross_validate", "discretized_spectrum", "ee3_ratio", "ee4_energy", "epsilon_sweep",
    "evolve_pair_to_interference", "fringe_spacing", "from_hydro", "gaussian_pair",
    "general_perturbed_phase", "hermite_ratio", "hermite_spec", "legendre_ratio",
    "legendre_tail_diagnosis", "madelung_evolve", "madelung_step", "meeting_point",
    "nonquantized_m_witness", "norm", "perturb_current", "perturbed_phase_shift",
    "phase_difference", "plateau_density", "predicted_shift", "quantized_lambda",
    "quantum_potential", "radial_solution", "series_tail_diagnosis", "split_step_evolve",
    "stability_limit", "subgrid", "terminating_energies", "to_hydro",
]
