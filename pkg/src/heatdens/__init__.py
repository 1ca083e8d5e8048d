"""Probability densities of the heat equation solution with random diffusivity and random initial data.

The solution at a fixed point ``(x, t)`` is ``u = sum_n A_n exp(-n^2 pi^2
alpha^2 t) sin(n pi x)``. The package tabulates the densities of its
truncations by random variable transformation, with a Monte Carlo oracle and
hypothesis/convergence diagnostics.
"""

from .density import (DensityGrid, Model, QuadConfig, density_bb, density_fourier_indep,
                      density_fourier_joint_gaussian, density_grid, density_kl, mc_integrate_density)
from .diagnostics import (ConvergenceReport, HypothesisReport, convergence_report, density_moments,
                          exact_bb_moments, hypothesis_report, l1_distance)
from .errors import (ConfigError, DegeneracyError, DegenerateDistributionError, DomainError, HeatDensError,
                     HypothesisViolation, InvalidLawError, NonConvergenceError, SingularCovarianceError,
                     UnsupportedLawError, WrongModelError)
from .kernels import BACKEND
from .laws import ScalarDensity
from .mc import SampleSet, ecdf_distance, kde_density, sample_solution
from .models import (CoeffModel, DiffusionSpec, EigenPair, ProcessSpec, build_coeff_model,
                     fourier_coeff_cov, fourier_coeff_mean, gaussian_conditional_params,
                     make_brownian_bridge_process, make_brownian_motion_process, make_general_sine_process,
                     sigma_inv_11, uniform_diffusion)
from .series import EvalPoint, SineCoeffs, t_n_operator, truncated_solution, truncated_solution_kl

__version__ = "0.1.0"
