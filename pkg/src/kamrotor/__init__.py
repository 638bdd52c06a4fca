"""kamrotor: phase-space analysis of the resonant quantum kicked rotor.

Builds the reduced one-kick operator at rational effective Planck constant,
tiles phase space with Wannier-like cell states, and classifies eigenstates
and long-time dynamics by occupied phase-space area, with the classical
standard map as the reference point.
"""

from .bessel import bessel_j, bessel_j_sequence
from .classical import (ClassicalAreaSpectrum, ClassicalParams, DiffusionEstimate,
                        backend_name, classical_area_spectrum, classical_demarcation,
                        coarse_area, diffusion_coefficient, occupancy_grid,
                        standard_map_step, trajectory)
from .errors import (ComputeError, ConfigError, ConvergenceError, DegeneracyWarning,
                     InsufficientData, KamrotorError, NoValidConvergent,
                     SymmetryViolation, TruncationError)
from .floquet import (EigenDecomposition, FloquetMatrix, ModelParams, apply_v,
                      build_v, check_translation_symmetry, diagonalize, u_element)
from .observables import (AreaSpectrum, CellLengthMap, DeffResult, area,
                          area_spectrum, cell_lengths, check_quasi_energy_differences,
                          default_orbit_times, demarcation_point, effective_dimension,
                          long_time_area_diagonal, long_time_area_direct,
                          orbit_areas_all_cells)
from .wannier import (MapImageReport, PhaseSpaceDistribution, WannierBasis,
                      build_basis, project, project_columns,
                      semiclassical_map_check, x_representation)

__version__ = "0.1.0"
