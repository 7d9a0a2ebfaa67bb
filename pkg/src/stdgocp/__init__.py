"""Space-time discontinuous Galerkin solvers for control-constrained
convection-diffusion optimal control problems."""

from .assembly import SipgOperators, SipgParams, assemble_operators
from .bench import StudyConfig, compute_errors, convergence_rate, run_study
from .dg_space import DgSpace
from .manufactured import make_example1, make_example2
from .mesh import build_uniform_mesh
from .optimizer import DiscreteOcp, OcpProblem, OcpSolution, pdas_solve, project_control
from .timestepping import DGScheme, ThetaScheme, TimeGrid, Trajectory, make_scheme

__version__ = "0.1.0"
