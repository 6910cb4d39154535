"""Decision curves in the twin-beam parameter.

``x_th(tau_eff)`` is where the subtracted resource stops beating the bare
twin beam; ``x_23(tau_eff)`` is where its average fidelity reaches 2/3.
Roots are located by a uniform scan for sign changes followed by bisection.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import bisect

from .analysis import ips_mean_photons_closed, twb_mean_photons
from .errors import AmbiguousRootError, DomainError
from .teleport import average_fidelity_closed, twb_average_fidelity

X_LO = 1e-6
X_HI = 1.0 - 1e-6
SCAN_POINTS = 512
ROOT_XTOL = 1e-10
TWO_THIRDS = 2.0 / 3.0
TWB_SECURE_X = 1.0 / 3.0


def improvement_gap(x: float, tau_eff: float) -> float:
    """``F_ips(x, tau_eff) - F_twb(x)``; positive where subtraction helps."""
    return average_fidelity_closed(x, tau_eff) - twb_average_fidelity(x)


def security_gap(x: float, tau_eff: float) -> float:
    return average_fidelity_closed(x, tau_eff) - TWO_THIRDS


def energy_gap(x: float, tau_eff: float) -> float:
    """Total photon number of the subtracted state minus that of the twin beam."""
    return 2.0 * ips_mean_photons_closed(x, tau_eff) - twb_mean_photons(x)


def sign_change_brackets(func: Callable[[float], float], lo: float = X_LO, hi: float = X_HI, n: int = SCAN_POINTS):
    xs = np.linspace(lo, hi, n)
    vals = np.array([func(x) for x in xs])
    brackets = []
    for i in range(n - 1):
        if vals[i] == 0.0:
            brackets.append((xs[i], xs[i]))
        elif vals[i] * vals[i + 1] < 0.0:
            brackets.append((xs[i], xs[i + 1]))
    if vals[-1] == 0.0:
        brackets.append((xs[-1], xs[-1]))
    return brackets


def _single_root(func: Callable[[float], float], what: str) -> Optional[float]:
    brackets = sign_change_brackets(func)
    if not brackets:
        return None
    if len(brackets) > 1:
        raise AmbiguousRootError(f"{what}: {len(brackets)} sign changes found", brackets)
    lo, hi = brackets[0]
    if lo == hi:
        return float(lo)
    return float(bisect(func, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=200))


def _check_tau_eff(tau_eff: float) -> None:
    if not 0.0 < tau_eff <= 1.0:
        raise DomainError(f"tau_eff must lie in (0, 1], got {tau_eff}")


def x_threshold(tau_eff: float) -> Optional[float]:
    """Twin-beam parameter below which subtraction improves the fidelity.

    ``None`` when the gap keeps one sign over ``(1e-6, 1 - 1e-6)``.
    """
    _check_tau_eff(tau_eff)
    return _single_root(lambda x: improvement_gap(x, tau_eff), f"x_th(tau_eff={tau_eff})")


def x_two_thirds(tau_eff: float) -> Optional[float]:
    """Twin-beam parameter at which the subtracted fidelity equals 2/3."""
    _check_tau_eff(tau_eff)
    return _single_root(lambda x: security_gap(x, tau_eff), f"x_23(tau_eff={tau_eff})")


def energy_crossing(tau_eff: float) -> Optional[float]:
    """Twin-beam parameter above which subtraction lowers the total energy."""
    _check_tau_eff(tau_eff)
    return _single_root(lambda x: energy_gap(x, tau_eff), f"energy crossing(tau_eff={tau_eff})")


def secure_window(tau_eff: float) -> Optional[tuple[float, float]]:
    """Interval ``(x_23, x_th)`` where fidelity is both improved and above 2/3."""
    lo = x_two_thirds(tau_eff)
    hi = x_threshold(tau_eff)
    if lo is None or hi is None or not lo < hi:
        return None
    return lo, hi


@dataclass(frozen=True)
class ThresholdCurve:
    tau_eff_grid: tuple[float, ...]
    x_th: tuple[Optional[float], ...]
    x_23: tuple[Optional[float], ...]
    window: tuple[Optional[tuple[float, float]], ...]

    def __post_init__(self):
        n = len(self.tau_eff_grid)
        if not (len(self.x_th) == len(self.x_23) == len(self.window) == n):
            raise DomainError("threshold curve columns must share the grid length")
        for w in self.window:
            if w is not None and not (0.0 < w[0] < w[1] < 1.0 and w[0] < TWB_SECURE_X):
                raise DomainError(f"secure window {w} violates 0 < x_23 < x_th < 1, x_23 < 1/3")


def _curve_point(tau_eff: float):
    x_th = x_threshold(tau_eff)
    x_23 = x_two_thirds(tau_eff)
    window = (x_23, x_th) if x_23 is not None and x_th is not None and x_23 < x_th else None
    return x_th, x_23, window


def threshold_curve(tau_eff_grid: Sequence[float], jobs: int = 1) -> ThresholdCurve:
    grid = tuple(float(t) for t in tau_eff_grid)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_curve_point, grid))
    else:
        points = [_curve_point(t) for t in grid]
    return ThresholdCurve(
        grid,
        tuple(p[0] for p in points),
        tuple(p[1] for p in points),
        tuple(p[2] for p in points),
    )
