"""rwlab: radial weights on the unit disc.

Weight tails and moments, doubling diagnostics, Muckenhoupt-type constants,
radial averaging operators and their norm estimates, and Bergman kernels and
projections through odd moments.
"""

from ._backend import BACKEND
from .bergman import (KernelSeries, PolarField, adjoint_monomial, block_norm_equivalence,
                      hardy_block_norms, i_omega, kernel_eval, project_grid, project_mode)
from .classes import DyadicDecomposition, block_of_index, dcheck_search, dhat_profile, rho_sequence
from .errors import (AccuracyError, ConfigError, DegeneracyError, DomainError, ParameterError,
                     RangeError, RwlabError)
from .grids import GradedGrid, grid_from_min, operator_grid
from .muckenhoupt import ap_duality_check, ap_profile, mp_profile
from .operators import (Profile, apply_calderon, apply_H, apply_Hstar, apply_Mmax, apply_S,
                        level_points, lp_norm, parse_profile, weak_type_check)
from .opnorm import opnorm_estimate, opnorm_lower
from .scenarios import (Report, Scenario, counterexample_report, emit, run_scenario,
                        verify_calderon, verify_forelli_rudin)
from .weights import (ExponentPair, RadialWeight, eval_weight, exponential, log_weight, moment,
                      parse_weight, power, power_tail_weight, product, sigma_weight, standard,
                      tabulated, tail, tail1)

__version__ = "0.1.0"
