"""Inconclusive photon subtraction: ON/OFF conditioning of both twin-beam arms.

Each arm of the twin beam passes a beam splitter of transmissivity ``tau``;
the reflected probes ``c`` and ``d`` hit ON/OFF detectors of efficiency
``eta``. The state of ``a, b`` conditioned on a double click is built two
ways: by full four-mode simulation (:func:`ips_state_simulated`) and from
the closed double-sum matrix elements (:func:`ips_state_direct`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConditioningError, DomainError
from .fock import (
    DEFAULT_TAIL_TOL,
    DensityOperator,
    FockOperator,
    PureState,
    TruncationConfig,
    partial_trace,
    twb_cutoff,
)
from .optics import MODE_A, MODE_B, MODE_C, MODE_D, log_binomial, post_bs_state


@dataclass(frozen=True)
class IpsParams:
    x: float
    tau: float
    eta: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.x < 1.0:
            raise DomainError(f"twin-beam parameter must satisfy 0 < x < 1, got {self.x}")
        if not 0.0 < self.tau <= 1.0:
            raise DomainError(f"transmissivity must satisfy 0 < tau <= 1, got {self.tau}")
        if not 0.0 < self.eta <= 1.0:
            raise DomainError(f"quantum efficiency must satisfy 0 < eta <= 1, got {self.eta}")

    @classmethod
    def effective(cls, x: float, tau_eff: float) -> "IpsParams":
        """Ideal detectors behind a beam splitter of transmissivity ``tau_eff``."""
        return cls(x, tau_eff, 1.0)

    @property
    def tau_eff(self) -> float:
        return effective_transmissivity(self.tau, self.eta)

    @property
    def can_condition(self) -> bool:
        return self.eta * (1.0 - self.tau) > 0.0


def effective_transmissivity(tau: float, eta: float) -> float:
    """``1 - eta (1 - tau)``."""
    if not 0.0 <= tau <= 1.0:
        raise DomainError(f"transmissivity must satisfy 0 <= tau <= 1, got {tau}")
    _check_eta(eta)
    return 1.0 - eta * (1.0 - tau)


def _single_mode_trunc(trunc) -> TruncationConfig:
    if isinstance(trunc, int):
        return TruncationConfig((trunc,))
    if trunc.n_modes != 1:
        raise DomainError(f"expected a single-mode truncation, got {trunc.dims}")
    return trunc


def _check_eta(eta: float) -> None:
    if not 0.0 < eta <= 1.0:
        raise DomainError(f"quantum efficiency must satisfy 0 < eta <= 1, got {eta}")


def no_click_weights(eta: float, dim: int) -> np.ndarray:
    """Diagonal of the no-click element: ``(1 - eta)^j``."""
    return (1.0 - eta) ** np.arange(dim, dtype=float)


def on_off_povm(eta: float, trunc) -> tuple[FockOperator, FockOperator]:
    """``(Pi_0, Pi_1)`` of an ON/OFF detector in compact diagonal form."""
    _check_eta(eta)
    trunc = _single_mode_trunc(trunc)
    off = no_click_weights(eta, trunc.dims[0])
    return FockOperator(trunc, off), FockOperator(trunc, 1.0 - off)


def product_povm(eta: float, trunc, outcome: tuple[int, int]) -> FockOperator:
    """Joint element ``Pi_i (x) Pi_j`` for the two probe detectors."""
    _check_eta(eta)
    if isinstance(trunc, int):
        trunc = TruncationConfig.uniform(trunc, 2)
    if trunc.n_modes != 2:
        raise DomainError(f"expected a two-mode truncation, got {trunc.dims}")
    factors = []
    for mode, result in enumerate(outcome):
        if result not in (0, 1):
            raise DomainError(f"detector outcomes are 0 or 1, got {outcome}")
        off = no_click_weights(eta, trunc.dims[mode])
        factors.append(off if result == 0 else 1.0 - off)
    return FockOperator(trunc, np.kron(factors[0], factors[1]))


def product_povm_11(eta: float, trunc) -> FockOperator:
    return product_povm(eta, trunc, (1, 1))


def p11_closed(params: IpsParams) -> float:
    """Double-click probability as a function of ``x, tau, eta``."""
    x2 = params.x**2
    loss = params.eta * (1.0 - params.tau)
    t = 1.0 - loss
    num = x2 * loss**2 * (1.0 + x2 * t)
    return num / ((1.0 - x2 * t) * (1.0 - x2 * t * t))


def p11_effective(x: float, tau_eff: float) -> float:
    """Double-click probability written in terms of ``tau_eff`` only."""
    if not 0.0 <= x < 1.0:
        raise DomainError(f"twin-beam parameter must satisfy 0 <= x < 1, got {x}")
    if not 0.0 < tau_eff <= 1.0:
        raise DomainError(f"tau_eff must lie in (0, 1], got {tau_eff}")
    x2 = x * x
    return x2 * (1.0 - tau_eff) ** 2 * (1.0 + x2 * tau_eff) / ((1.0 - x2 * tau_eff) * (1.0 - x2 * tau_eff**2))


def click_weight(h, k, tau: float, eta: float):
    """``f_hk = [1-(1-eta)^h][1-(1-eta)^k] ((1-tau)/tau)^(h+k)``."""
    h = np.asarray(h)
    k = np.asarray(k)
    return (1.0 - (1.0 - eta) ** h) * (1.0 - (1.0 - eta) ** k) * ((1.0 - tau) / tau) ** (h + k)


def truncation_residual(params: IpsParams, dim: int) -> float:
    """Bound ``(x tau)^(2 dim)`` on the weight dropped from the double sums."""
    return (params.x * params.tau) ** (2 * dim)


def ips_truncation(params: IpsParams, n_modes: int = 2, tail_tol: float = DEFAULT_TAIL_TOL) -> TruncationConfig:
    """Cutoff whose dropped twin-beam mass is below ``tail_tol * p11``.

    Conditioning divides by the click probability, so the absolute twin-beam
    bound is tightened by ``p11`` to keep the conditional state accurate to
    ``tail_tol`` in relative terms.
    """
    p11 = p11_closed(params)
    scaled = tail_tol * p11 if p11 > 0.0 else tail_tol
    return TruncationConfig.uniform(twb_cutoff(params.x, max(scaled, 1e-300)), n_modes, tail_tol)


def _probe_click_filter(eta: float, trunc: TruncationConfig) -> np.ndarray:
    # sqrt of the double-click element, broadcast over modes (a, b, c, d)
    pi11 = product_povm_11(eta, trunc.select([MODE_C, MODE_D])).elems.real
    return np.sqrt(pi11).reshape(1, 1, trunc.dims[MODE_C], trunc.dims[MODE_D])


def p11_numerical(params: IpsParams, trunc: Optional[TruncationConfig] = None) -> float:
    """``Tr{rho_BS 1 (x) 1 (x) Pi_11}`` from the simulated four-mode state."""
    psi = post_bs_state(params.x, params.tau, trunc or ips_truncation(params, 4))
    pi11 = product_povm_11(params.eta, psi.trunc.select([MODE_C, MODE_D])).elems.real
    probs = np.abs(psi.amps) ** 2
    return float(np.einsum("abcd,cd->", probs, pi11.reshape(psi.trunc.dims[MODE_C], psi.trunc.dims[MODE_D])))


def _require_click(params: IpsParams) -> None:
    if not params.can_condition:
        raise ConditioningError(
            f"no photon can reach the detectors (eta (1 - tau) = {params.eta * (1 - params.tau):g}); "
            "the double-click state is undefined"
        )


def ips_state_simulated(params: IpsParams, trunc: Optional[TruncationConfig] = None) -> DensityOperator:
    """Conditional state of ``a, b`` from the full four-mode simulation.

    Since ``Pi_11`` acts only on the traced probes,
    ``Tr_cd{rho_BS Pi_11} = Tr_cd{sqrt(Pi_11) rho_BS sqrt(Pi_11)}``; the
    filtered vector is traced directly instead of forming ``rho_BS``.
    """
    _require_click(params)
    psi = post_bs_state(params.x, params.tau, trunc or ips_truncation(params, 4))
    filtered = PureState(psi.trunc, psi.amps * _probe_click_filter(params.eta, psi.trunc))
    rho = partial_trace(filtered, [MODE_A, MODE_B])
    if rho.trace() <= 0.0:
        raise ConditioningError("double-click probability vanished numerically")
    return rho.normalized()


def ips_state_direct(params: IpsParams, trunc: Optional[TruncationConfig] = None) -> DensityOperator:
    """Conditional state from the closed matrix elements.

    ``<n-k, n-h| rho |m-k, m-h>`` is proportional to
    ``(x tau)^(n+m) f_hk sqrt(C(n,h) C(n,k) C(m,h) C(m,k))``, with ``k``
    photons taken from ``a`` and ``h`` from ``b``. Sums run over the retained
    twin-beam levels; the result is normalized by its trace.
    """
    _require_click(params)
    x, tau, eta = params.x, params.tau, params.eta
    if trunc is None:
        trunc = ips_truncation(params)
    if trunc.n_modes == 4:
        trunc = trunc.select([MODE_A, MODE_B])
    if trunc.n_modes != 2:
        raise DomainError(f"expected a two- or four-mode truncation, got {trunc.dims}")
    da, db = trunc.dims
    n_max = min(da, db)
    rho = np.zeros((da * db, da * db))
    log_xt = math.log(x * tau)
    for k in range(1, n_max):
        for h in range(1, n_max):
            f = float(click_weight(h, k, tau, eta))
            if f == 0.0:
                continue
            n = np.arange(max(h, k), n_max)
            v = np.exp(n * log_xt + 0.5 * (log_binomial(n, h) + log_binomial(n, k)))
            idx = (n - k) * db + (n - h)
            rho[np.ix_(idx, idx)] += f * np.outer(v, v)
    tr = np.trace(rho)
    if tr <= 0.0:
        raise ConditioningError("double-click probability vanished numerically")
    return DensityOperator(trunc, rho / tr)


def swap_modes(rho: DensityOperator) -> DensityOperator:
    """Exchange the two modes of a two-mode density operator."""
    if rho.trunc.n_modes != 2:
        raise DomainError("swap_modes needs a two-mode operator")
    t = rho.tensor.transpose(1, 0, 3, 2)
    trunc = TruncationConfig(rho.trunc.dims[::-1], rho.trunc.tail_tol)
    return DensityOperator(trunc, t.reshape(trunc.size, trunc.size))
