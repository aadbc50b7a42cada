"""Spectral simulator and verification harness for the sublinear
pseudoparabolic equation ``u_t - k Lap u_t = Lap u + V(x, t) u^p``."""
from ._backend import BACKEND
from .errors import ConfigError, PreconditionError, PseudoparaError, SolverOverflowError
from .kernel import (KernelBounds, KernelQuery, bessel_kernel, bessel_kernel_eval,
                     kernel_lower_bound_check, multiplier)
from .operators import (Field, GridSpec, WeightParams, apply_bessel, apply_green, in_jn,
                        in_jn_plus, verify_operator_bounds, verify_weight_sandwich,
                        weighted_norm)
from .oracles import (bihari_bound, classification_solution, lower_growup_bound, phi_lambda,
                      psi_counterexample, viscosity_rescale, viscosity_rescale_inverse)
from .potentials import (PotentialSpec, critical_exponents, epsilon_ab_check, eval_potential,
                         lambda_star_asymptotic, lambda_star_numeric)
from .solver import (RAW, RegularizedSource, SolverConfig, Trajectory, maximal_solution,
                     mild_residual, restart_check, s_mild_residual, solve, step)

__version__ = "0.1.0"
