"""Coverage analysis of multi-antenna heterogeneous cellular networks.

Analytic coverage probabilities for OSTBC transmission with MRC or selection
combining in Poisson multi-tier networks, and a Monte Carlo simulator to
check them.
"""

from .errors import (ConfigError, DomainError, HetdivError, NumericalError,
                     UnsupportedConfigurationError)
from .hetnet import NetworkConfig, OstbcCode, TierConfig, table2_network
from .analytic import CoverageQuery, CoverageCurve, Scheme, evaluate_curve

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DomainError", "HetdivError", "NumericalError",
    "UnsupportedConfigurationError", "NetworkConfig", "OstbcCode", "TierConfig",
    "table2_network", "CoverageQuery", "CoverageCurve", "Scheme", "evaluate_curve",
    "__version__",
]
