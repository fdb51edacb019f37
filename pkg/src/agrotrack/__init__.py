"""
agrotrack: a deterministic simulator for LoRa livestock monitoring.

Analytic models for the radio link, collar energy and medium access, a
discrete-event engine for whole deployments, and the alerting and analytics
that run on what reaches the cloud.

Example:
    >>> from agrotrack import energy
    >>> round(energy.lifetime_hours(energy.BatterySpec(), 4.464))
    672
"""

from agrotrack import analytics, channel, energy, reliability
from agrotrack.errors import AgroTrackError

__version__ = "0.1.0"

__all__ = [
    "AgroTrackError",
    "__version__",
    "analytics",
    "channel",
    "energy",
    "reliability",
]
