"""Safe Bayesian optimization of feedback controllers for thermoacoustic rigs.

Submodules
----------
gp          Gaussian-process surrogate with incremental Cholesky updates
safe_bo     safe set, expanders, minimizers and the campaign driver
network     wave-digital network model of a burner with a gain-delay loop
benchmarks  analytic demo plants, plant adapters and hyperparameter presets
cli         the ``thermosafe`` command
"""

__version__ = "0.1.0"

from .errors import CampaignError, ConfigError, PlantError, ThermosafeError
from .gp import GPModel, KernelSpec, Observation
from .safe_bo import (ALGORITHMS, AlgoConfig, CampaignResult, CampaignState, ParameterGrid,
                      continue_campaign, run_campaign, transfer_context)

__all__ = [
    "__version__", "ThermosafeError", "ConfigError", "PlantError", "CampaignError",
    "GPModel", "KernelSpec", "Observation", "ALGORITHMS", "AlgoConfig", "CampaignResult",
    "CampaignState", "ParameterGrid", "continue_campaign", "run_campaign", "transfer_context",
]
