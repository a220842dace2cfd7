"""Random planar chains with stochastic bending: discrete fields, their
diffusion limit, closed-form expectations and Monte Carlo estimators."""

__version__ = "0.1.0"

from .config import (ConfigError, DomainError, FunctionSpec1D, FunctionSpec2D, ModelConfig,  # noqa: E402
                     NumericalError, RngPolicy, default_config, load_config, make_config)

__all__ = [
    "__version__", "ConfigError", "DomainError", "NumericalError", "FunctionSpec1D",
    "FunctionSpec2D", "ModelConfig", "RngPolicy", "default_config", "load_config", "make_config",
]
