"""Synchronisation analysis and simulation of diffusively coupled networks."""
from .dynamics import (CouplingFunction, NetworkSystem, Trajectory, VectorField, constant_biases,
                       integrate, jordan_coupling, linear_coupling, linear_decay, linear_field,
                       lorenz, network_rhs, nonautonomous_linear, scalar_coupling, simulate,
                       tanh_coupling)
from .estimators import CriticalCouplingEstimator, SyncAnalyzer
from .exceptions import (ConsistencyError, DimensionError, DisconnectedError, DomainError,
                         NoThresholdError, NumericalError, RangeError, SingularMatrixError,
                         SpectralConsistencyError, SyncnetError, ValidationError)
from .experiments import (RunConfig, beta_sweep, classify_run, find_critical_coupling,
                          pairwise_spread, persistence_experiment, sync_error)
from .linalg import (condition_number, eigenvalues, jordan_perturbation_basis, kronecker,
                     operator_norm)
from .network import approx_diagonalizable, build_laplacian, connectivity, spectral_gap
from .stability import analyze, compute_gamma, coupling_spec, persistence_bound, rho_bound

__version__ = "0.1.0"
