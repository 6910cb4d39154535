"""Parameter sweeps and their CSV/JSON emission.

A sweep evaluates one quantity over a grid of ``(x, tau_eff)`` or
``(x, tau, eta)`` points. Closed forms are always evaluated at
``tau_eff``; optional numerical columns are computed from the conditional
state at the actual ``(tau, eta)`` and compared against the closed form.
"""

from __future__ import annotations

import io
import json
import math
from decimal import ROUND_HALF_UP, Decimal
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional, Sequence

from . import __version__
from .analysis import (
    correlation_report,
    difference_squeezing_closed,
    ips_mean_photons_closed,
    mean_photons_numerical,
    twb_mean_photons,
)
from .errors import DomainError
from .fock import DEFAULT_TAIL_TOL
from .ips import IpsParams, effective_transmissivity, ips_state_direct, ips_truncation, p11_effective, p11_numerical
from .teleport import QuadratureGrid, average_fidelity_closed, quadrature_report, twb_average_fidelity
from .thresholds import TWB_SECURE_X, secure_window, x_threshold, x_two_thirds

QUANTITIES = ("p11", "avg_fidelity", "mean_photons", "delta_ab", "x_th", "x_23", "secure_window")
THRESHOLD_QUANTITIES = ("x_th", "x_23", "secure_window")

TOLERANCES = {
    "p11": 1e-8,
    "avg_fidelity": 1e-4,
    "mean_photons": 1e-8,
    "delta_ab": 1e-8,
}

FIGURE_TAU_EFF = (1.0, 0.9, 0.8, 0.5)


def x_grid_default() -> list[float]:
    return [round(0.01 * k, 10) for k in range(1, 100)]


def tau_eff_grid_fig5() -> list[float]:
    grid = [round(0.5 + 0.005 * k, 10) for k in range(100)]
    return grid + [0.995, 0.999]


@dataclass(frozen=True)
class SweepSpec:
    quantity: str
    x: tuple[float, ...] = ()
    tau_eff: tuple[float, ...] = ()
    tau: tuple[float, ...] = ()
    eta: tuple[float, ...] = ()
    numerical: bool = False
    max_dim: int = 40
    tail_tol: float = DEFAULT_TAIL_TOL
    quad_radial: int = 40
    quad_angular: int = 64
    alpha: complex = 0j
    name: str = "custom"

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise DomainError(f"unknown quantity {self.quantity!r}; choose from {', '.join(QUANTITIES)}")
        has_eff = bool(self.tau_eff)
        has_pair = bool(self.tau) or bool(self.eta)
        if has_eff == has_pair:
            raise DomainError("give either a tau_eff grid or a (tau, eta) grid, not both or neither")
        if has_pair and not (self.tau and self.eta):
            raise DomainError("a (tau, eta) grid needs both tau and eta values")
        if self.quantity not in THRESHOLD_QUANTITIES:
            if not self.x:
                raise DomainError("this quantity needs a nonempty x grid")
            bad = [v for v in self.x if not 0.0 < v < 1.0]
            if bad:
                raise DomainError(f"x values must lie in (0, 1): {bad}")
        for t in self.tau_eff + self.tau:
            if not 0.0 < t <= 1.0:
                raise DomainError(f"transmissivities must lie in (0, 1]: {t}")
        for e in self.eta:
            if not 0.0 < e <= 1.0:
                raise DomainError(f"efficiencies must lie in (0, 1]: {e}")

    def points(self) -> list[tuple[Optional[float], float, float, float]]:
        """Grid points ``(x, tau, eta, tau_eff)`` in emission order."""
        if self.tau_eff:
            pairs = [(t, 1.0, t) for t in self.tau_eff]
        else:
            pairs = [(t, e, effective_transmissivity(t, e)) for t in self.tau for e in self.eta]
        xs: Sequence[Optional[float]] = (None,) if self.quantity in THRESHOLD_QUANTITIES else self.x
        return [(x, t, e, te) for (t, e, te) in pairs for x in xs]

    def metadata(self) -> dict[str, Any]:
        meta = {
            "program": "ipsteleport",
            "version": __version__,
            "sweep": self.name,
            "quantity": self.quantity,
            "numerical": self.numerical,
            "tail_tol": self.tail_tol,
            "max_dim": self.max_dim,
        }
        if self.quantity == "avg_fidelity" and self.numerical:
            meta["quadrature"] = f"{self.quad_radial}x{self.quad_angular}"
            meta["alpha"] = f"{self.alpha.real:g}{self.alpha.imag:+g}i"
        if self.numerical:
            meta["tolerance"] = TOLERANCES.get(self.quantity)
        return meta


@dataclass
class SweepResult:
    metadata: dict[str, Any]
    columns: list[str]
    rows: list[dict[str, Any]] = field(default_factory=list)
    pairs: list[tuple[str, str]] = field(default_factory=list)

    def max_deviations(self) -> dict[str, Optional[float]]:
        out = {}
        for closed, numeric in self.pairs:
            devs = [
                abs(r[numeric] - r[closed])
                for r in self.rows
                if r.get(numeric) is not None and r.get(closed) is not None
            ]
            out[numeric] = max(devs) if devs else None
        return out

    def to_csv(self, precision: int = 12) -> str:
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key}: {value}\n")
        buf.write("# columns: " + ", ".join(self.columns) + "\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(format_value(row.get(c), precision) for c in self.columns) + "\n")
        for name, dev in self.max_deviations().items():
            buf.write(f"# max_abs_dev {name}: {format_value(dev, precision)}\n")
        return buf.getvalue()

    def to_json(self, precision: int = 12) -> str:
        def conv(v):
            if isinstance(v, float):
                return float(format_value(v, precision)) if math.isfinite(v) else None
            return v

        doc = {
            "metadata": self.metadata,
            "columns": self.columns,
            "rows": [{c: conv(r.get(c)) for c in self.columns} for r in self.rows],
            "max_abs_dev": {k: conv(v) for k, v in self.max_deviations().items()},
        }
        return json.dumps(doc, indent=2) + "\n"


def format_value(value: Any, precision: int = 12) -> str:
    """Plain decimal for ``1e-6 <= |v| < 1e6``, scientific otherwise.

    Rounding is half-up on the shortest decimal representation of ``v``, so
    a decimal tie such as ``0.6666666666665`` prints as ``0.666666666667``.
    """
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, bool):
        return "true" if value else "false"
    v = float(value)
    if v == 0.0:
        return "0"
    if not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    d = Decimal(repr(v))
    exp = d.adjusted()
    d = d.quantize(Decimal(1).scaleb(exp - precision + 1), rounding=ROUND_HALF_UP)
    mag = abs(v)
    if mag < 1e-6 or mag >= 1e6:
        return f"{d:.{precision - 1}e}"
    text = f"{d:f}"
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def _columns(spec: SweepSpec) -> tuple[list[str], list[tuple[str, str]]]:
    base = ["x", "tau_eff"] if not spec.tau else ["x", "tau", "eta", "tau_eff"]
    q = spec.quantity
    if q in THRESHOLD_QUANTITIES:
        base = [c for c in base if c != "x"]
        cols = base + ["x_th", "x_23", "window_lo", "window_hi", "x_twb_secure"]
        return cols, []
    if q == "p11":
        cols = base + ["p11"]
    elif q == "avg_fidelity":
        cols = base + ["avg_fidelity", "twb_fidelity"]
    elif q == "mean_photons":
        cols = base + ["mean_photons", "twb_mean_photons"]
    else:
        cols = base + ["delta_ab"]
    pairs = []
    if spec.numerical:
        cols += [f"{q}_numerical", f"{q}_ok"]
        pairs.append((q, f"{q}_numerical"))
    return cols, pairs


def _numerical_value(spec: SweepSpec, params: IpsParams) -> Optional[float]:
    if not params.can_condition:
        return None
    if ips_truncation(params, tail_tol=spec.tail_tol).dims[0] > spec.max_dim:
        return None
    trunc = ips_truncation(params, tail_tol=spec.tail_tol)
    q = spec.quantity
    if q == "p11":
        return p11_numerical(params, ips_truncation(params, 4, spec.tail_tol))
    rho = ips_state_direct(params, trunc)
    if q == "mean_photons":
        return sum(mean_photons_numerical(rho))
    if q == "delta_ab":
        return correlation_report(rho).delta_ab
    grid = QuadratureGrid(spec.quad_radial, spec.quad_angular)
    return quadrature_report(rho, spec.alpha, grid).avg_fidelity


def evaluate_point(args: tuple[SweepSpec, tuple]) -> dict[str, Any]:
    spec, (x, tau, eta, tau_eff) = args
    row: dict[str, Any] = {"tau_eff": tau_eff}
    if spec.tau:
        row.update(tau=tau, eta=eta)
    q = spec.quantity
    if q in THRESHOLD_QUANTITIES:
        x_th = x_threshold(tau_eff) if tau_eff < 1.0 else None
        x_23 = x_two_thirds(tau_eff)
        window = secure_window(tau_eff) if tau_eff < 1.0 else None
        row.update(
            x_th=x_th,
            x_23=x_23,
            window_lo=window[0] if window else None,
            window_hi=window[1] if window else None,
            x_twb_secure=TWB_SECURE_X,
        )
        return row
    row["x"] = x
    if q == "p11":
        row["p11"] = p11_effective(x, tau_eff)
    elif q == "avg_fidelity":
        row["avg_fidelity"] = average_fidelity_closed(x, tau_eff)
        row["twb_fidelity"] = twb_average_fidelity(x)
    elif q == "mean_photons":
        row["mean_photons"] = 2.0 * ips_mean_photons_closed(x, tau_eff)
        row["twb_mean_photons"] = twb_mean_photons(x)
    else:
        row["delta_ab"] = difference_squeezing_closed(x, tau_eff) if tau_eff < 1.0 else 0.0
    if spec.numerical:
        value = _numerical_value(spec, IpsParams(x, tau, eta))
        row[f"{q}_numerical"] = value
        if value is not None:
            ok = abs(value - row[q]) <= TOLERANCES[q]
            row[f"{q}_ok"] = "pass" if ok else "fail"
    return row


def run_sweep(spec: SweepSpec, jobs: int = 1) -> SweepResult:
    """Evaluate every grid point; rows come back in grid order whatever ``jobs`` is."""
    columns, pairs = _columns(spec)
    tasks = [(spec, p) for p in spec.points()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(evaluate_point, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        rows = [evaluate_point(t) for t in tasks]
    return SweepResult(spec.metadata(), columns, rows, pairs)


def preset(name: str, **overrides) -> SweepSpec:
    """Sweeps matching the four published figures."""
    xs = tuple(x_grid_default())
    if name == "fig2":
        base = dict(quantity="p11", x=xs, tau_eff=FIGURE_TAU_EFF[::-1])
    elif name == "fig3":
        base = dict(quantity="mean_photons", x=xs, tau_eff=FIGURE_TAU_EFF)
    elif name == "fig4":
        base = dict(quantity="avg_fidelity", x=xs, tau_eff=FIGURE_TAU_EFF)
    elif name == "fig5":
        base = dict(quantity="x_th", tau_eff=tuple(tau_eff_grid_fig5()))
    else:
        raise DomainError(f"unknown preset {name!r}; choose fig2, fig3, fig4 or fig5")
    base.update(overrides)
    base["name"] = name
    return SweepSpec(**base)


def default_jobs() -> int:
    return os.cpu_count() or 1
