"""Equilibrium thresholds, cascades, and simulation for sequential fundraising games."""

from cascadefund.beliefs import (
    ConfigError,
    DomainError,
    OutOfSupportWarning,
    QualitySpec,
    TypeDistribution,
    private_likelihood,
    update_on_decline,
    update_on_invest,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "OutOfSupportWarning",
    "QualitySpec",
    "TypeDistribution",
    "private_likelihood",
    "update_on_decline",
    "update_on_invest",
    "__version__",
]
