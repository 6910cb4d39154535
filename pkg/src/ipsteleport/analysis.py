"""Scalar diagnostics: twin-beam entanglement, photon numbers and
difference-number squeezing. Natural logarithms throughout."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvariantError
from .fock import DensityOperator, PureState, partial_trace

ENTROPY_EIG_FLOOR = 1e-15


def _check_x(x: float, allow_zero: bool = False) -> None:
    lo_ok = x >= 0.0 if allow_zero else x > 0.0
    if not (lo_ok and x < 1.0):
        raise DomainError(f"twin-beam parameter out of range: {x}")


def twb_mean_photons(x: float) -> float:
    """Total photon number ``N = 2 x^2 / (1 - x^2)`` of the twin beam."""
    _check_x(x, allow_zero=True)
    return 2.0 * x * x / (1.0 - x * x)


def twb_entanglement(x: float) -> float:
    """Twin-beam entanglement ``-log(1-x^2) - x^2 log(x^2) / (1-x^2)``.

    This is the entropy of either reduced mode, ``S[rho_a] = S[rho_b]``;
    the sum ``S[rho_a] + S[rho_b] - S[rho]`` computed by
    :func:`excess_entropy` is twice it for the pure twin beam.
    """
    _check_x(x, allow_zero=True)
    x2 = x * x
    if x2 == 0.0:
        return 0.0
    return -math.log1p(-x2) - x2 * math.log(x2) / (1.0 - x2)


def twb_entanglement_from_photons(n_total: float) -> float:
    """Same quantity in terms of the total photon number ``N``."""
    if n_total < 0.0:
        raise DomainError(f"photon number must be nonnegative, got {n_total}")
    if n_total == 0.0:
        return 0.0
    half = 0.5 * n_total
    return math.log1p(half) + half * math.log1p(2.0 / n_total)


def von_neumann_entropy(rho: DensityOperator) -> float:
    vals = np.linalg.eigvalsh(rho.elems)
    vals = np.clip(vals, ENTROPY_EIG_FLOOR, None)
    return float(-np.sum(vals * np.log(vals)))


def excess_entropy(state) -> float:
    """``S[rho_a] + S[rho_b] - S[rho]`` for a two-mode state."""
    if isinstance(state, PureState):
        rho = state.to_density()
    else:
        rho = state
    return (
        von_neumann_entropy(partial_trace(state, [0]))
        + von_neumann_entropy(partial_trace(state, [1]))
        - von_neumann_entropy(rho)
    )


def mean_photons_numerical(rho: DensityOperator) -> tuple[float, float]:
    """``(<n_a>, <n_b>)`` of a two-mode density operator."""
    if rho.trunc.n_modes != 2:
        raise DomainError("mean_photons_numerical needs a two-mode state")
    pops = rho.populations()
    na = np.arange(rho.trunc.dims[0])
    nb = np.arange(rho.trunc.dims[1])
    return float(pops.sum(axis=1) @ na), float(pops.sum(axis=0) @ nb)


def ips_mean_photons_closed(x: float, tau_eff: float) -> float:
    """Photon number per mode of the double-click state with ideal detectors.

    Derived by inclusion-exclusion over the probe vacua
    (``Pi_11 = 1 - P0_c - P0_d + P0_c P0_d``), each term a geometric series
    in ``y = x^2``; the common ``(1 - tau_eff)^2`` of numerator and click
    probability is cancelled analytically, which keeps the expression
    well conditioned up to ``tau_eff = 1`` (one photon taken from each arm,
    ``2y(2+y)/(1-y^2)``).
    """
    _check_x(x)
    t = tau_eff
    if not 0.0 < t <= 1.0:
        raise DomainError(f"tau_eff must lie in (0, 1], got {t}")
    y = x * x
    num = t * y * (1.0 + t) * (2.0 - y * (1.0 + t + t * t) + t**3 * y**3)
    den = (1.0 - y) * (1.0 - t * y) * (1.0 + t * y) * (1.0 - t * t * y)
    return num / den


def difference_squeezing_closed(x: float, tau_eff: float) -> float:
    """Normalized variance of ``n_a - n_b`` for the double-click state."""
    _check_x(x)
    t = tau_eff
    if not 0.0 < t <= 1.0:
        raise DomainError(f"tau_eff must lie in (0, 1], got {t}")
    if t == 1.0:
        return 0.0
    x2 = x * x
    num = (1.0 - t) * (1.0 - x2 * t * t) ** 2 * (2.0 - x2 - x2 * x2 * t)
    den = (1.0 + t) * (1.0 - x2 * t) * (2.0 - x2 * (1.0 + t + t * t) + x2**3 * t**3)
    return num / den


@dataclass(frozen=True)
class CorrelationReport:
    mean_a: float
    mean_b: float
    var_diff: float
    delta_ab: float


def correlation_report(rho: DensityOperator) -> CorrelationReport:
    """Photon-number moments and the difference-squeezing ratio of ``rho``."""
    if rho.trunc.n_modes != 2:
        raise DomainError("correlation_report needs a two-mode state")
    pops = rho.populations()
    na = np.arange(rho.trunc.dims[0])[:, None]
    nb = np.arange(rho.trunc.dims[1])[None, :]
    mean_a = float((pops * na).sum())
    mean_b = float((pops * nb).sum())
    diff = na - nb
    mean_d = float((pops * diff).sum())
    var_diff = max(float((pops * diff**2).sum()) - mean_d**2, 0.0)
    total = mean_a + mean_b
    if total <= 0.0:
        raise InvariantError("difference squeezing is undefined for a state with no photons")
    return CorrelationReport(mean_a, mean_b, var_diff, var_diff / total)
