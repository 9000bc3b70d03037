# flake8: noqa

__version__ = "0.1.0"

from .conformal import Calibration, calibrate_classification, calibrate_regression, conformal_quantile
from .core import CalibrationInfeasibleError, ConfigError, NumericalBreakdownError
from .encoders import build_cmicl, build_micl, build_wmicl
from .harness import ExperimentConfig, ExperimentReport, Pipeline, run_experiment
from .mip import MipModel, write_lp
from .solver import SolveResult, branch_and_bound
