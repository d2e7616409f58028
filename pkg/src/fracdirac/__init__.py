"""Conformable fractional Dirac-type integro-differential eigenproblems:
forward spectra and nodal points, large-n asymptotics, and reconstruction
of boundary angles and potentials from nodal data."""

from .asymptotics import (
    PotentialFunctionals,
    delta_estimate,
    eigenvalue_estimate,
    f_exact,
    g_exact,
    nodal_g_limit,
    node_estimate,
    phi_estimate,
    potential_functionals,
    spectral_constant,
)
from .config import ConfigError, ExperimentConfig, load_config
from .conformable import GridFn, SGrid, frac_derivative, frac_integral, moving_average, s_of_x, x_of_s
from .expr import Expression, ExpressionError, ParseError, UnknownIdentifierError, parse
from .forward import (
    NodalSet,
    SolverError,
    Spectrum,
    char_delta,
    compute_nodal_set,
    find_eigenvalues,
    find_nodes,
    picard_solve,
    solve_phi,
)
from .inverse import (
    InsufficientDataError,
    NodalDataset,
    ReconstructionResult,
    approximant_f,
    approximant_g,
    extract_limits,
    reconstruct,
    recover_L,
    recover_mu_derivative,
    recover_pr,
    recover_upsilon,
)
from .model import Model, ModelError

__version__ = "0.1.0"
