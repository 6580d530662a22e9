"""Physics-informed networks with residual-based adaptive refinement for
coupled generalized nonlinear Schrodinger systems."""

__version__ = "0.1.0"

from .errors import ConfigurationError, NumericError, RarPinnError, UsageError
from .inverse import (
    IdentificationReport,
    InverseExperiment,
    InverseLoss,
    add_noise,
    identification_error,
    train_inverse,
)
from .io import relative_l2
from .net import Jet2, NetworkShape, Point, forward_jet, forward_values, grad_params, init_params
from .optim import AdamConfig, LBFGSConfig, OptimizerConfig, adam_minimize, lbfgs_minimize
from .oracle import GridSpec, OneSolitonSpec, TwoSolitonSpec, one_soliton, pde_selfcheck, sample_grid, two_soliton
from .physics import CGNLSCoefficients, LambdaVector, forward_residual, inverse_residual, mean_residual
from .sampling import Domain, RARConfig, lhs_sample, rar_select
from .training import (
    ForwardExperiment,
    LossBreakdown,
    TrainingDataSets,
    TrainingHistory,
    compute_loss,
    export_residual_field,
    train_forward,
)

__all__ = [
    "AdamConfig", "CGNLSCoefficients", "ConfigurationError", "Domain", "ForwardExperiment", "GridSpec",
    "IdentificationReport", "InverseExperiment", "InverseLoss", "Jet2", "LBFGSConfig", "LambdaVector",
    "LossBreakdown", "NetworkShape", "NumericError", "OneSolitonSpec", "OptimizerConfig", "Point",
    "RARConfig", "RarPinnError", "TrainingDataSets", "TrainingHistory", "TwoSolitonSpec", "UsageError",
    "adam_minimize", "add_noise", "compute_loss", "export_residual_field", "forward_jet",
    "forward_residual", "forward_values", "grad_params", "identification_error", "init_params",
    "inverse_residual", "lbfgs_minimize", "lhs_sample", "mean_residual", "one_soliton", "pde_selfcheck",
    "rar_select", "relative_l2", "sample_grid", "train_forward", "train_inverse", "two_soliton",
]
