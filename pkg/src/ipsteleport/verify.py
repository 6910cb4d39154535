"""End-to-end oracle checks: every numerical route against its closed form."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from .analysis import correlation_report, difference_squeezing_closed, ips_mean_photons_closed, mean_photons_numerical
from .fock import validate_density
from .ips import (
    IpsParams,
    ips_state_direct,
    ips_state_simulated,
    p11_closed,
    p11_effective,
    p11_numerical,
    product_povm,
)
from .optics import post_bs_state, post_bs_state_explicit, twb_state
from .teleport import average_fidelity_closed, quadrature_report, twb_average_fidelity


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    reference: float
    tolerance: float

    @property
    def deviation(self) -> float:
        return abs(self.value - self.reference)

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.tolerance)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status}  {self.name}: value={self.value:.12g} reference={self.reference:.12g} "
            f"dev={self.deviation:.3e} tol={self.tolerance:.1e}"
        )


GRIDS = {
    "small": dict(x=(0.1, 0.3, 0.5), tau=(0.7, 0.9), eta=(0.5, 1.0), tau_eff=(0.5, 0.8, 0.9, 0.99), twb_x=(0.2, 0.4)),
    "dense": dict(
        x=(0.1, 0.2, 0.3, 0.4, 0.5, 0.6),
        tau=(0.6, 0.7, 0.8, 0.9, 0.95),
        eta=(0.3, 0.5, 0.8, 1.0),
        tau_eff=(0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99),
        twb_x=(0.1, 0.2, 0.4, 0.6),
    ),
}


def _checks(grid: dict) -> Iterator[tuple[str, Callable[[], tuple[float, float]], float]]:
    for x, tau, eta in itertools.product(grid["x"], grid["tau"], grid["eta"]):
        p = IpsParams(x, tau, eta)
        tag = f"x={x},tau={tau},eta={eta}"

        def states(p=p):
            direct = ips_state_direct(p)
            sim = ips_state_simulated(p)
            validate_density(direct)
            validate_density(sim)
            return float(np.abs(direct.elems - sim.elems).max()), 0.0

        yield f"ips_state direct~simulated [{tag}]", states, 1e-10
        yield f"p11 numerical~closed [{tag}]", (lambda p=p: (p11_numerical(p), p11_closed(p))), 1e-8
        yield f"p11 closed~effective [{tag}]", (lambda p=p: (p11_closed(p), p11_effective(p.x, p.tau_eff))), 1e-14

    for x, tau in itertools.product(grid["x"], (0.5, 0.8, 0.9, 0.99)):

        def routes(x=x, tau=tau):
            return float(np.abs(post_bs_state(x, tau).amps - post_bs_state_explicit(x, tau).amps).max()), 0.0

        yield f"post_bs unitary~explicit [x={x},tau={tau}]", routes, 1e-10

    for x, t in itertools.product(grid["x"], grid["tau_eff"]):
        p = IpsParams.effective(x, t)
        tag = f"x={x},tau_eff={t}"
        yield (
            f"delta_ab moments~closed [{tag}]",
            (lambda p=p: (correlation_report(ips_state_direct(p)).delta_ab, difference_squeezing_closed(p.x, p.tau))),
            1e-8,
        )
        yield (
            f"mean_photons numeric~closed [{tag}]",
            (lambda p=p: (mean_photons_numerical(ips_state_direct(p))[0], ips_mean_photons_closed(p.x, p.tau))),
            1e-8,
        )
        yield (
            f"avg_fidelity quadrature~closed [{tag}]",
            (lambda p=p: (quadrature_report(ips_state_simulated(p)).avg_fidelity, average_fidelity_closed(p.x, p.tau))),
            1e-4,
        )

    for x in grid["twb_x"]:
        yield (
            f"twb avg_fidelity quadrature~closed [x={x}]",
            (lambda x=x: (quadrature_report(twb_state(x).to_density()).avg_fidelity, twb_average_fidelity(x))),
            1e-4,
        )

    def completeness():
        total = sum(product_povm(0.37, 12, (i, j)).elems.real for i in (0, 1) for j in (0, 1))
        return float(np.abs(total - 1.0).max()), 0.0

    yield "povm completeness [eta=0.37,d=12]", completeness, 1e-15


def run_checks(grid: str = "small", tolerance_override: Optional[float] = None) -> list[CheckResult]:
    if grid not in GRIDS:
        raise ValueError(f"unknown grid {grid!r}; choose from {', '.join(GRIDS)}")
    results = []
    for name, fn, tol in _checks(GRIDS[grid]):
        value, ref = fn()
        results.append(CheckResult(name, value, ref, tol if tolerance_override is None else tolerance_override))
    return results
