"""Ruin probabilities of the compound Poisson risk model and their diffusion limit."""

from .claims import ClaimDistribution, DiscreteEmpirical, Exponential, GammaTwo, from_dict
from .cramer_lundberg import (
    ModelParams,
    adjustment_coefficient,
    f_operator,
    lundberg_bound,
    psi_closed_form,
    psi_pk_oracle,
    solve_volterra,
)
from .errors import (
    CapExceeded,
    ClruinError,
    ConditionUnreachable,
    ConfigError,
    DomainError,
    NoRoot,
    ScalingTooSmall,
    StepTooLarge,
    TruncationTooSmall,
    UnsupportedDistribution,
)
from .kernels import BACKEND
from .montecarlo import SimConfig, SimEstimate, simulate_ruin
from .scaling import DiffusionApprox, ScaledModel, gamma_of, psi_d, psi_n, rn_scaled

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CapExceeded",
    "ClaimDistribution",
    "ClruinError",
    "ConditionUnreachable",
    "ConfigError",
    "DiffusionApprox",
    "DiscreteEmpirical",
    "DomainError",
    "Exponential",
    "GammaTwo",
    "ModelParams",
    "NoRoot",
    "ScaledModel",
    "ScalingTooSmall",
    "SimConfig",
    "SimEstimate",
    "StepTooLarge",
    "TruncationTooSmall",
    "UnsupportedDistribution",
    "adjustment_coefficient",
    "f_operator",
    "from_dict",
    "gamma_of",
    "lundberg_bound",
    "psi_closed_form",
    "psi_d",
    "psi_n",
    "psi_pk_oracle",
    "rn_scaled",
    "simulate_ruin",
    "solve_volterra",
]
