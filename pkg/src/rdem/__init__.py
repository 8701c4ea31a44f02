"""Bayesian parameter inference for ODE regression models.

The underlying ODE is discretised by fixed-step RK4 and relaxed into a
nonlinear dynamic model with additive state noise of variance u^2; an
extended Liu-West auxiliary particle filter then delivers the joint
posterior of the parameters, the observation precision and the states.
An exact grid posterior for Newton's cooling and a set of convergence
diagnostics serve as ground truth for validating the approximation.
"""

from .data import ObservationSeries, read_series_csv, write_series_csv
from .diagnostics import (PosteriorSummary, StabilityReport, stability_check,
                          summarize, theorem1_curve, theorem3_error_rate,
                          u2_ladder, wasserstein_1d)
from .errors import (AllMassZero, AllWeightsZero, ConfigError,
                     DataFormatError, DegenerateFit, EmptyProposal,
                     InvalidBox, NonFiniteDrift, NonUniformGrid, RdemError)
from .filtering import (FilterConfig, FilterResult, Particle, ParticleCloud,
                        PredictionBand, SufficientStat, filter_step,
                        init_cloud, liu_west_moments, lookahead_log_weight,
                        predict, propagate_state, propose_theta, refine,
                        resample, run_filter, sample_gamma, update_suffstat,
                        weighted_quantile)
from .models import (cooling_solution, cooling_system,
                     fitzhugh_nagumo_system, get_system,
                     lotka_volterra_system)
from .ode import OdeSystem, TimeGrid, composite_step, integrate, rk4_step
from .oracle import (GridSpec, cooling_log_marginal_theta,
                     cooling_quadratic_form, grid_sample_theta,
                     posterior_samples, sample_lambda_given_theta)
from .priors import (PriorSpec, UniformBoxPrior, sample_lambda, sample_x0,
                     uniform_box_prior)
from .rngstream import RngFamily

__version__ = "0.1.0"
