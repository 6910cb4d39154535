"""Command-line front end: ``eval``, ``sweep`` and ``verify``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .analysis import (
    correlation_report,
    difference_squeezing_closed,
    ips_mean_photons_closed,
    mean_photons_numerical,
    twb_entanglement,
    twb_mean_photons,
)
from .errors import IpsTeleportError
from .fock import DEFAULT_TAIL_TOL
from .ips import IpsParams, effective_transmissivity, ips_state_direct, ips_truncation, p11_effective, p11_numerical
from .sweep import QUANTITIES, SweepSpec, default_jobs, format_value, preset, run_sweep
from .teleport import (
    QuadratureGrid,
    average_fidelity_closed,
    quadrature_report,
    twb_average_fidelity,
)
from .thresholds import secure_window, x_threshold, x_two_thirds
from .verify import run_checks

EVAL_QUANTITIES = (
    "p11",
    "avg-fidelity",
    "twb-fidelity",
    "mean-photons",
    "delta-ab",
    "entanglement",
    "tau-eff",
    "x-th",
    "x-23",
    "secure-window",
)


def parse_grid(text: str) -> tuple[float, ...]:
    """``"0.1,0.2"`` or ``"start:stop:step"`` (stop inclusive)."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0.0:
            raise argparse.ArgumentTypeError(f"range must be start:stop:step with step > 0, got {text!r}")
        start, stop, step = parts
        n = int(round((stop - start) / step))
        return tuple(round(start + k * step, 12) for k in range(n + 1) if start + k * step <= stop + 1e-12)
    try:
        return tuple(float(p) for p in text.split(",") if p)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tail-tol", type=float, default=DEFAULT_TAIL_TOL, help="neglected Fock mass per cutoff")
    p.add_argument("--dim", type=int, default=None, help="override the per-mode cutoff")
    p.add_argument("--alpha-re", type=float, default=0.0)
    p.add_argument("--alpha-im", type=float, default=0.0)
    p.add_argument("--quad-radial", type=int, default=40)
    p.add_argument("--quad-angular", type=int, default=64)
    p.add_argument("--precision", type=int, default=12, help="significant digits in output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ipsteleport", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("eval", help="evaluate one quantity at one parameter point")
    ev.add_argument("quantity", choices=EVAL_QUANTITIES)
    ev.add_argument("--x", type=float)
    ev.add_argument("--tau", type=float)
    ev.add_argument("--eta", type=float)
    ev.add_argument("--tau-eff", type=float)
    ev.add_argument("--numerical", action="store_true", help="also print the Fock-space value")
    _add_common(ev)

    sw = sub.add_parser("sweep", help="tabulate a quantity over a grid")
    sw.add_argument("target", help="fig2, fig3, fig4, fig5 or one of: " + ", ".join(QUANTITIES))
    sw.add_argument("--x", type=parse_grid)
    sw.add_argument("--tau", type=parse_grid)
    sw.add_argument("--eta", type=parse_grid)
    sw.add_argument("--tau-eff", type=parse_grid)
    sw.add_argument("--numerical", action="store_true")
    sw.add_argument("--max-dim", type=int, default=40, help="skip numerical columns above this cutoff")
    sw.add_argument("--format", choices=("csv", "json"), default="csv")
    sw.add_argument("--out", default="-", help="output path, '-' for stdout")
    sw.add_argument("--jobs", type=int, default=None, help="worker processes (default: all cores)")
    _add_common(sw)

    ve = sub.add_parser("verify", help="run the oracle-equivalence checks")
    ve.add_argument("--grid", choices=("small", "dense"), default="small")
    ve.add_argument("--override-tol", type=float, default=None, help="use this tolerance for every check")
    return parser


def _require(args, *names):
    missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
    if missing:
        raise IpsTeleportError("missing required option(s): " + ", ".join("--" + n for n in missing))


def _resolve_params(args) -> tuple[float, float, float]:
    """Return ``(tau, eta, tau_eff)`` from either ``--tau-eff`` or ``--tau/--eta``."""
    if args.tau_eff is not None:
        if args.tau is not None or args.eta is not None:
            raise IpsTeleportError("give either --tau-eff or --tau/--eta, not both")
        return args.tau_eff, 1.0, args.tau_eff
    _require(args, "tau")
    eta = 1.0 if args.eta is None else args.eta
    return args.tau, eta, effective_transmissivity(args.tau, eta)


def cmd_eval(args) -> int:
    fmt = lambda v: format_value(v, args.precision)  # noqa: E731
    q = args.quantity
    out: list[tuple[str, object]] = []
    if q == "twb-fidelity":
        _require(args, "x")
        out.append(("twb_fidelity", twb_average_fidelity(args.x)))
    elif q == "entanglement":
        _require(args, "x")
        out.append(("entanglement", twb_entanglement(args.x)))
        out.append(("twb_mean_photons", twb_mean_photons(args.x)))
    elif q in ("x-th", "x-23", "secure-window", "tau-eff"):
        tau, eta, tau_eff = _resolve_params(args)
        if q == "tau-eff":
            out.append(("tau_eff", tau_eff))
        elif q == "x-th":
            out.append(("x_th", x_threshold(tau_eff)))
        elif q == "x-23":
            out.append(("x_23", x_two_thirds(tau_eff)))
        else:
            w = secure_window(tau_eff)
            out += [("window_lo", w[0] if w else None), ("window_hi", w[1] if w else None)]
    else:
        _require(args, "x")
        tau, eta, tau_eff = _resolve_params(args)
        x = args.x
        if q == "avg-fidelity":
            out.append(("avg_fidelity", average_fidelity_closed(x, tau_eff)))
        elif q == "p11":
            out.append(("p11", p11_effective(x, tau_eff)))
        elif q == "mean-photons":
            out.append(("mean_photons", 2.0 * ips_mean_photons_closed(x, tau_eff)))
            out.append(("twb_mean_photons", twb_mean_photons(x)))
        elif q == "delta-ab":
            out.append(("delta_ab", difference_squeezing_closed(x, tau_eff)))
        if args.numerical and x > 0.0:
            params = IpsParams(x, tau, eta)
            trunc = ips_truncation(params, 2, args.tail_tol)
            if args.dim is not None:
                trunc = type(trunc).uniform(args.dim, 2, args.tail_tol)
            if q == "p11":
                out.append(("p11_numerical", p11_numerical(params, type(trunc).uniform(trunc.dims[0], 4, args.tail_tol))))
            else:
                rho = ips_state_direct(params, trunc)
                if q == "avg-fidelity":
                    grid = QuadratureGrid(args.quad_radial, args.quad_angular)
                    alpha = complex(args.alpha_re, args.alpha_im)
                    out.append(("avg_fidelity_numerical", quadrature_report(rho, alpha, grid).avg_fidelity))
                elif q == "mean-photons":
                    out.append(("mean_photons_numerical", sum(mean_photons_numerical(rho))))
                else:
                    out.append(("delta_ab_numerical", correlation_report(rho).delta_ab))
    if len(out) == 1:
        print(fmt(out[0][1]) if out[0][1] is not None else "none")
    else:
        for name, value in out:
            print(f"{name} {fmt(value) if value is not None else 'none'}")
    return 0


def cmd_sweep(args) -> int:
    overrides = {}
    for key in ("x", "tau", "eta", "tau_eff"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    if "tau" in overrides or "eta" in overrides:
        overrides.setdefault("tau_eff", ())
        overrides.setdefault("eta", (1.0,))
    common = dict(
        numerical=args.numerical,
        max_dim=args.dim or args.max_dim,
        tail_tol=args.tail_tol,
        quad_radial=args.quad_radial,
        quad_angular=args.quad_angular,
        alpha=complex(args.alpha_re, args.alpha_im),
    )
    if args.target.startswith("fig"):
        spec = preset(args.target, **overrides, **common)
    else:
        spec = SweepSpec(quantity=args.target, **overrides, **common)
    result = run_sweep(spec, jobs=args.jobs or default_jobs())
    text = result.to_csv(args.precision) if args.format == "csv" else result.to_json(args.precision)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(args.out, "w", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise IpsTeleportError(f"cannot write {args.out}: {exc}") from exc
    return 0


def cmd_verify(args) -> int:
    results = run_checks(args.grid, args.override_tol)
    failed = [r for r in results if not r.passed]
    for r in results:
        print(r.line())
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return 1 if failed else 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"eval": cmd_eval, "sweep": cmd_sweep, "verify": cmd_verify}
    try:
        return handlers[args.command](args)
    except IpsTeleportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
