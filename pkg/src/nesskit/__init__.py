"""Weak-coupling non-equilibrium steady states of an N-level system between two thermal reservoirs."""

__version__ = "0.1.0"

from .errors import (ConfigError, DegenerateBohrFrequencyError, DegenerateKernelError,
                     IntegrabilityError, NesskitError, NumericalError, OutsideDomainError,
                     PerronFrobeniusError, PhysicsError)
from .model import (AngularMomentFormFactor, ParticleSystem, PowerGaussianFormFactor, ReservoirSpec,
                    angular_moment, gibbs_populations, gibbs_vector, moment_matrix,
                    partition_function)
from .levelshift import (assemble_lambda_zero, build_level_shift_set, gamma_single_reservoir,
                         resonance_forecast, spectral_certificate)
from .ness import NessSolution, convert_beta_p, solve_ness, two_level_closed_form
from .thermo import entropy_production, eta_prime, linear_response, sweep, thermo_report
from .dynamics import (build_generator, convergence_rate, evolve, stationary_distribution,
                       stationary_flux)
from .thresholds import check_conditions, condition_b_norm, coupling_thresholds, fgr_constant
from .feshbach import Projection, feshbach_map, isospectrality_check, neumann_eigenvector

__all__ = [name for name in dir() if not name.startswith("_")]
