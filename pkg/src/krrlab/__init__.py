"""krrlab: a numerical laboratory for kernel ridge regression over Hilbert
scales with general source conditions.

Subpackages follow the pipeline: index function algebra, synthetic Mercer
systems, the ridge solver and exact error functionals, schedule and bound
evaluators with Monte-Carlo rate experiments, radial Fourier capacity
machinery, rearrangement-invariant norms, and the minimax packing
construction, all orchestrated by a config-driven CLI.
"""

__version__ = "0.1.0"

from .index_functions import (Power, PowerLog, Table, check_delta2,  # noqa: F401
                              check_growth_assumptions, dilation,
                              extension_indices)
from .spectral import (SpectralModel, TargetSpec, build_model,  # noqa: F401
                       draw_dataset, make_target)
from .krr import (effective_dimension, fit, l2_error,  # noqa: F401
                  population_solution, sup_error)
from .rates import (bias_bound, exact_bias, fit_slope,  # noqa: F401
                    predicted_rate, run_experiment, schedule,
                    uniform_bias_bound, variance_bound)
from .fourier import (RadialKernel, check_opt_smoothness,  # noqa: F401
                      gram_min_eig_bound, infer_eigendecay)
from .rearrangement import (decreasing_rearrangement, lorentz_norm,  # noqa: F401
                            marcinkiewicz_norm, orlicz_lorentz_norm)
from .packing import build_packing, gilbert_varshamov, kl_radius, minimax_eval  # noqa: F401
