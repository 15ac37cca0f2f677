"""Kernel-based impulse-response identification with steady-state gain side-information."""
from .errors import (ArgumentError, ConvergenceError, InputFormatError, MetricError,
                     ParameterDomainError, RankDeficiencyError, SsgainError, TuningError,
                     UnsupportedInputError)
from .gram import GramSystem, build_gram, build_gram_ct, build_gram_dt, cross_gram, representer_eval
from .kernels import (Domain, Family, KernelParams, QuadratureConfig, kernel_eval, nu, nu_bar,
                      phi0_eval, phi0_norm_sq, psi)
from .model import (IdentifiedModel, fit, fit_metric, impulse_response, load_model, numeric_gain,
                    predict, save_model, step_response)
from .oracle import CustomKernel, kernel_oracle_integrals
from .signals import Dataset, DtInput, StepSignal, load_ct_csv, load_dt_csv
from .solver import (GainConstraint, Loss, Solution, kkt_residual, solve_closed_form,
                     solve_general, solve_ridge)
from .tuning import SearchSpace, Theta, split, tune, validation_score

__version__ = "0.1.0"
