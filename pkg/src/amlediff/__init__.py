"""Approximate maximum likelihood estimation for discretely observed diffusions."""
from .asymptotics import coverage, grad_g, mixed_normal_statistic, sample_mixed_normal, sigma_n
from .errors import InputError, NumericalError
from .estimate import EstimateResult, amle_linear, amle_newton, mle_proxy
from .experiment import CoverageTable, ExperimentConfig, load_config, parse_config, run_coverage_experiment
from .heston import HestonParams, heston_amle, heston_model
from .likelihood import PathContext, evaluate, grad_loglik_n, hess_loglik_n, loglik_n
from .model import ModelSpec, ParameterDomain
from .models import build_model, register
from .numerics import NoiseSource, chi2_quantile
from .simulate import Path, TimeGrid, euler_simulate, read_path, subsample, write_path

__version__ = "0.1.0"
