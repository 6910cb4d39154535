"""Optical states and elements: twin beam, coherent states, beam splitter,
displacement, and the four-mode state after the subtraction beam splitters.

Mode layout for the four-mode state is fixed as ``(a, b, c, d)``: ``a`` and
``b`` carry the twin beam, ``c`` and ``d`` are the reflected probe modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Union

import numpy as np
from scipy.linalg import expm
from scipy.special import gammainc, gammaln

from .errors import DomainError, TruncationError
from .fock import (
    DEFAULT_TAIL_TOL,
    FockOperator,
    PureState,
    TruncationConfig,
    apply_two_mode_unitary,
    coherent_cutoff,
    tensor_product,
)

MODE_A, MODE_B, MODE_C, MODE_D = 0, 1, 2, 3


@dataclass(frozen=True)
class BeamSplitterSpec:
    tau: float

    def __post_init__(self):
        if not 0.0 <= self.tau <= 1.0:
            raise DomainError(f"transmissivity must lie in [0, 1], got {self.tau}")

    @property
    def mixing_angle(self) -> float:
        """``arctan(sqrt((1 - tau)/tau))``; equals ``arccos(sqrt(tau))``."""
        if self.tau == 0.0:
            return math.pi / 2
        return math.atan(math.sqrt((1.0 - self.tau) / self.tau))


@dataclass(frozen=True)
class TwbSpec:
    x: float

    def __post_init__(self):
        if not 0.0 < self.x < 1.0:
            raise DomainError(f"twin-beam parameter must satisfy 0 < x < 1, got {self.x}")

    @property
    def gain(self) -> float:
        """Amplifier gain ``G`` with ``x = tanh G``."""
        return math.atanh(self.x)

    @property
    def mean_photons(self) -> float:
        """Total photon number ``2 x^2 / (1 - x^2)`` of both beams."""
        return 2.0 * self.x**2 / (1.0 - self.x**2)


def _as_trunc(trunc: Union[TruncationConfig, int, None], n_modes: int, default: Optional[TruncationConfig] = None):
    if trunc is None:
        if default is None:
            raise DomainError("a truncation must be given")
        return default
    if isinstance(trunc, int):
        return TruncationConfig.uniform(trunc, n_modes)
    if trunc.n_modes != n_modes:
        raise DomainError(f"expected a {n_modes}-mode truncation, got {trunc.dims}")
    return trunc


def twb_state(spec: Union[TwbSpec, float], trunc=None, normalize: bool = True) -> PureState:
    """Twin beam ``sqrt(1-x^2) sum_n x^n |n, n>`` on two modes.

    With ``normalize=False`` the truncated amplitudes are returned as they
    are, so the squared norm is ``1 - x^(2d)``.
    """
    if not isinstance(spec, TwbSpec):
        spec = TwbSpec(float(spec))
    x = spec.x
    trunc = _as_trunc(trunc, 2, TruncationConfig.for_twb(x))
    d = min(trunc.dims)
    amps = np.zeros(trunc.dims, dtype=complex)
    n = np.arange(d)
    amps[n, n] = math.sqrt(1.0 - x * x) * x**n
    psi = PureState(trunc, amps)
    return psi.normalized() if normalize else psi


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Exact Fock amplitudes ``exp(-|alpha|^2/2) alpha^n / sqrt(n!)`` for ``n < dim``.

    No renormalization; the recurrence avoids factorial overflow.
    """
    out = np.empty(dim, dtype=complex)
    out[0] = math.exp(-0.5 * abs(alpha) ** 2)
    for k in range(1, dim):
        out[k] = out[k - 1] * alpha / math.sqrt(k)
    return out


def coherent_state(alpha: complex, trunc=None) -> PureState:
    """Single-mode coherent state, renormalized on the truncated space."""
    alpha = complex(alpha)
    trunc = _as_trunc(trunc, 1, TruncationConfig((coherent_cutoff(abs(alpha)),)))
    d = trunc.dims[0]
    tail = gammainc(d, abs(alpha) ** 2) if alpha != 0 else 0.0
    if tail > trunc.tail_tol:
        raise TruncationError(
            f"coherent state |alpha|={abs(alpha):.4g} leaves {tail:.3e} beyond cutoff {d} "
            f"(tolerance {trunc.tail_tol:g})"
        )
    return PureState(trunc, coherent_amplitudes(alpha, d)).normalized()


def beam_splitter_generator_block(total: int, lam: float, levels: range) -> np.ndarray:
    """Generator ``lam (a c^dag - a^dag c)`` restricted to the sector
    ``n_a + n_c = total``, in the basis ``|total - k, k>`` for ``k`` in ``levels``."""
    ks = list(levels)
    g = np.zeros((len(ks), len(ks)))
    for idx in range(len(ks) - 1):
        k = ks[idx]
        # a c^dag |total-k, k> = sqrt(total-k) sqrt(k+1) |total-k-1, k+1>
        amp = lam * math.sqrt((total - k) * (k + 1))
        g[idx + 1, idx] = amp
        g[idx, idx + 1] = -amp
    return g


@lru_cache(maxsize=64)
def _bs_matrix(tau: float, da: int, dc: int) -> np.ndarray:
    lam = BeamSplitterSpec(tau).mixing_angle
    u = np.zeros((da * dc, da * dc))
    for total in range(da + dc - 1):
        levels = range(max(0, total - da + 1), min(total, dc - 1) + 1)
        block = expm(beam_splitter_generator_block(total, lam, levels))
        idx = [(total - k) * dc + k for k in levels]
        u[np.ix_(idx, idx)] = block
    u.setflags(write=False)
    return u


def beam_splitter_unitary(spec: Union[BeamSplitterSpec, float], trunc=None) -> FockOperator:
    """Beam splitter ``exp[lam (a c^dag - a^dag c)]`` on two modes.

    Exponentiated sector by sector in total photon number, so the result has
    no entries between sectors. Sectors that do not fit entirely inside the
    cutoffs are exponentiated on their retained levels only; those are exact
    for no physical input and are guarded by the leakage check in
    :func:`~ipsteleport.fock.apply_two_mode_unitary`.
    """
    if not isinstance(spec, BeamSplitterSpec):
        spec = BeamSplitterSpec(float(spec))
    if spec.tau == 0.0:
        raise DomainError("transmissivity 0 (total reflection) is not supported")
    if trunc is None:
        raise DomainError("a two-mode truncation must be given")
    trunc = _as_trunc(trunc, 2)
    return FockOperator(trunc, _bs_matrix(spec.tau, *trunc.dims).astype(complex))


def displacement_matrix(beta: complex, rows: int, cols: int) -> np.ndarray:
    """Exact matrix elements ``<m|D(beta)|n>`` for ``m < rows``, ``n < cols``.

    Uses ``D|n> = (a^dag - beta*) D|n-1> / sqrt(n)`` starting from the
    coherent column ``D|0> = |beta>``; every entry equals the corresponding
    entry of the untruncated operator.
    """
    beta = complex(beta)
    out = np.zeros((rows, cols), dtype=complex)
    out[:, 0] = coherent_amplitudes(beta, rows)
    sq = np.sqrt(np.arange(rows, dtype=float))
    for n in range(1, cols):
        prev = out[:, n - 1]
        col = -np.conj(beta) * prev
        col[1:] += sq[1:] * prev[:-1]
        out[:, n] = col / math.sqrt(n)
    return out


def displacement_matrix_batch(betas: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """:func:`displacement_matrix` for many amplitudes at once, shape ``(len(betas), rows, cols)``."""
    betas = np.asarray(betas, dtype=complex).reshape(-1)
    out = np.zeros((betas.size, rows, cols), dtype=complex)
    col = np.empty((betas.size, rows), dtype=complex)
    col[:, 0] = np.exp(-0.5 * np.abs(betas) ** 2)
    for k in range(1, rows):
        col[:, k] = col[:, k - 1] * betas / math.sqrt(k)
    out[:, :, 0] = col
    sq = np.sqrt(np.arange(rows, dtype=float))
    bc = np.conj(betas)[:, None]
    for n in range(1, cols):
        prev = out[:, :, n - 1]
        nxt = -bc * prev
        nxt[:, 1:] += sq[1:] * prev[:, :-1]
        out[:, :, n] = nxt / math.sqrt(n)
    return out


def displacement_operator(beta: complex, trunc) -> FockOperator:
    """``D(beta) = exp(beta a^dag - beta* a)`` restricted to the truncated mode.

    The cutoff must hold the displaced vacuum to within ``tail_tol``; the
    matrix is the exact upper-left block of the infinite operator, hence
    unitary on the low-lying columns whose images fit below the cutoff.
    """
    trunc = _as_trunc(trunc, 1)
    d = trunc.dims[0]
    beta = complex(beta)
    tail = gammainc(d, abs(beta) ** 2) if beta != 0 else 0.0
    if tail > trunc.tail_tol:
        raise TruncationError(f"displacement |beta|={abs(beta):.4g} leaves {tail:.3e} beyond cutoff {d}")
    return FockOperator(trunc, displacement_matrix(beta, d, d))


def post_bs_state(x: float, tau: float, trunc: Optional[TruncationConfig] = None) -> PureState:
    """``U_ac(tau) U_bd(tau) |twb>_ab |0>_c |0>_d`` built by applying the unitaries."""
    spec = TwbSpec(x)
    bs = BeamSplitterSpec(tau)
    trunc = _as_trunc(trunc, 4, TruncationConfig.for_twb(x, 4))
    twb = twb_state(spec, trunc.select([MODE_A, MODE_B]))
    vac_c = PureState.basis([0], trunc.select([MODE_C]))
    vac_d = PureState.basis([0], trunc.select([MODE_D]))
    psi = tensor_product([twb, vac_c, vac_d])
    if bs.tau == 1.0:
        return psi
    u_ac = beam_splitter_unitary(bs, trunc.select([MODE_A, MODE_C]))
    u_bd = beam_splitter_unitary(bs, trunc.select([MODE_B, MODE_D]))
    psi = apply_two_mode_unitary(psi, u_ac, (MODE_A, MODE_C))
    return apply_two_mode_unitary(psi, u_bd, (MODE_B, MODE_D))


def log_binomial(n, k):
    return gammaln(np.asarray(n) + 1.0) - gammaln(np.asarray(k) + 1.0) - gammaln(np.asarray(n) - np.asarray(k) + 1.0)


def post_bs_state_explicit(x: float, tau: float, trunc: Optional[TruncationConfig] = None) -> PureState:
    """Same state from the closed double sum over reflected photons ``p, q``:
    amplitude ``sqrt(1-x^2) (x tau)^n ((1-tau)/tau)^((p+q)/2) sqrt(C(n,p) C(n,q))``
    at ``|n-p, n-q, p, q>``. Renormalized over the retained twin-beam levels."""
    TwbSpec(x)
    bs = BeamSplitterSpec(tau)
    trunc = _as_trunc(trunc, 4, TruncationConfig.for_twb(x, 4))
    da, db, dc, dd = trunc.dims
    amps = np.zeros(trunc.dims, dtype=complex)
    n_max = min(da, db)
    if bs.tau == 1.0:
        n = np.arange(n_max)
        amps[n, n, 0, 0] = x**n
    else:
        log_r = 0.5 * math.log((1.0 - tau) / tau)
        for n in range(n_max):
            p = np.arange(min(n, dc - 1) + 1)
            q = np.arange(min(n, dd - 1) + 1)
            logc = n * math.log(x * tau) + (p[:, None] + q[None, :]) * log_r
            logc = logc + 0.5 * (log_binomial(n, p)[:, None] + log_binomial(n, q)[None, :])
            amps[n - p[:, None], n - q[None, :], p[:, None], q[None, :]] = np.exp(logc)
    return PureState(trunc, amps).normalized()
