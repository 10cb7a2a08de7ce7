"""2D velocity-vorticity Navier-Stokes solver with observation nudging.

Solves the rotational-form momentum equation coupled to scalar vorticity
transport with Taylor-Hood (P2/P1) velocity-pressure elements and P2
vorticity, advanced by linearized backward-Euler or BDF2 steps, with
optional feedback nudging of velocity and vorticity toward coarse-cell
observations.
"""

from .assembly import (assemble_convection_skew, assemble_cross,
                       assemble_divergence, assemble_forcing, assemble_mass,
                       assemble_nudge_matrix, assemble_nudge_rhs,
                       assemble_stiffness, build_nudge, NudgeOperator)
from .diagnostics import (RateTable, Recorder, RunReport, fit_rates,
                          h1_seminorm_error, l2_error, read_csv, write_csv,
                          write_plot)
from .errors import (BlowUpError, GeometryError, InvalidArgument,
                     ObservationGapError, SolverError, StateError,
                     UnsupportedConfiguration, VVDAError)
from .femspace import (Field, FunctionSpace, build_space, eval_basis,
                       evaluate_field, interpolate)
from .linsolve import SaddleSystem, solve_saddle, solve_scalar
from .mesh import (CoarsePartition, Mesh, coarse_partition,
                   generate_structured, read_mesh_text, refine_uniform,
                   write_mesh_text)
from .quadrature import QuadratureRule, quadrature_rule
from .scheme import NudgeConfig, SchemeConfig, SchemeState, Stepper, run
from .truth import (ManufacturedCase, ObservationFrame, TwinTrajectory,
                    case_observer, eval_truth, experiment1_case, load_twin,
                    sample_observation, save_twin, stability_case,
                    steady_case, twin_forcing_case, twin_generate,
                    twin_observer)

__version__ = "0.1.0"
