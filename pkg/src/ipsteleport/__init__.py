"""Teleportation with photon-subtracted twin beams: Fock-space simulation,
closed-form oracles, parameter sweeps and decision thresholds."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    AmbiguousRootError,
    ConditioningError,
    DomainError,
    InvariantError,
    IpsTeleportError,
    QuadratureError,
    TruncationError,
)
from .ips import IpsParams, ips_state_direct, ips_state_simulated, p11_closed, p11_effective  # noqa: E402
from .optics import twb_state  # noqa: E402
from .teleport import average_fidelity_closed, quadrature_report, twb_average_fidelity  # noqa: E402
from .thresholds import secure_window, x_threshold, x_two_thirds  # noqa: E402

__all__ = [
    "AmbiguousRootError",
    "ConditioningError",
    "DomainError",
    "InvariantError",
    "IpsTeleportError",
    "QuadratureError",
    "TruncationError",
    "IpsParams",
    "ips_state_direct",
    "ips_state_simulated",
    "p11_closed",
    "p11_effective",
    "twb_state",
    "average_fidelity_closed",
    "quadrature_report",
    "twb_average_fidelity",
    "secure_window",
    "x_threshold",
    "x_two_thirds",
]
