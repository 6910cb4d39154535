"""Dense linear algebra on truncated multimode Fock spaces.

States and operators are stored as plain numpy arrays. A joint basis index
is the row-major flattening of the multi-index ``(n_1, ..., n_k)``, so mode
0 is the slowest-varying axis. All containers are immutable after
construction.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.special import gammainc

from .errors import DomainError, InvariantError, TruncationError

DEFAULT_TAIL_TOL = 1e-12

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_FLOOR = -1e-10


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


def twb_cutoff(x: float, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Smallest cutoff ``d`` with ``x**(2d) <= tail_tol``.

    The twin-beam weight beyond level ``d - 1`` is exactly ``x**(2d)``, so this
    is the minimal per-mode dimension that keeps the neglected mass below
    ``tail_tol``.
    """
    if not 0.0 < x < 1.0:
        raise DomainError(f"twin-beam parameter must satisfy 0 < x < 1, got {x}")
    d = max(1, math.ceil(math.log(tail_tol) / (2.0 * math.log(x))))
    # guard against rounding in the logarithm ratio
    while d > 1 and x ** (2 * (d - 1)) <= tail_tol:
        d -= 1
    while x ** (2 * d) > tail_tol:
        d += 1
    return d


def coherent_cutoff(amplitude: float, tail_tol: float = DEFAULT_TAIL_TOL) -> int:
    """Smallest cutoff ``d`` such that a coherent state of the given modulus
    has Poisson mass ``P(n >= d) <= tail_tol``."""
    lam = float(amplitude) ** 2
    if lam == 0.0:
        return 1
    d = max(1, int(lam))
    # P(n >= d) for Poisson(lam) is the regularized lower incomplete gamma P(d, lam)
    while gammainc(d, lam) > tail_tol:
        d += 1
    return d


@dataclass(frozen=True)
class TruncationConfig:
    """Per-mode Fock cutoffs; mode ``m`` holds levels ``0 .. dims[m]-1``."""

    dims: tuple[int, ...]
    tail_tol: float = DEFAULT_TAIL_TOL

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if not dims:
            raise DomainError("truncation needs at least one mode")
        if any(d < 1 for d in dims):
            raise DomainError(f"every cutoff dimension must be >= 1, got {dims}")
        if not 0.0 < self.tail_tol < 1.0:
            raise DomainError(f"tail_tol must lie in (0, 1), got {self.tail_tol}")

    @classmethod
    def uniform(cls, dim: int, n_modes: int, tail_tol: float = DEFAULT_TAIL_TOL) -> "TruncationConfig":
        return cls((dim,) * n_modes, tail_tol)

    @classmethod
    def for_twb(cls, x: float, n_modes: int = 2, tail_tol: float = DEFAULT_TAIL_TOL) -> "TruncationConfig":
        return cls.uniform(twb_cutoff(x, tail_tol), n_modes, tail_tol)

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)

    def select(self, modes: Sequence[int]) -> "TruncationConfig":
        return TruncationConfig(tuple(self.dims[m] for m in modes), self.tail_tol)

    def concat(self, other: "TruncationConfig") -> "TruncationConfig":
        return TruncationConfig(self.dims + other.dims, min(self.tail_tol, other.tail_tol))


@dataclass(frozen=True)
class PureState:
    """Amplitude tensor of shape ``trunc.dims``."""

    trunc: TruncationConfig
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amps)
        if amps.shape != self.trunc.dims:
            amps = amps.reshape(self.trunc.dims)
        object.__setattr__(self, "amps", _frozen(amps))

    @classmethod
    def basis(cls, levels: Sequence[int], trunc: TruncationConfig) -> "PureState":
        if len(levels) != trunc.n_modes:
            raise DomainError("one Fock level per mode is required")
        amps = np.zeros(trunc.dims, dtype=complex)
        try:
            amps[tuple(levels)] = 1.0
        except IndexError as exc:
            raise TruncationError(f"levels {tuple(levels)} exceed cutoffs {trunc.dims}") from exc
        return cls(trunc, amps)

    @property
    def vector(self) -> np.ndarray:
        return self.amps.reshape(-1)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def normalized(self) -> "PureState":
        n = self.norm()
        if n == 0.0:
            raise InvariantError("cannot normalize the zero vector")
        return PureState(self.trunc, self.amps / n)

    def to_density(self) -> "DensityOperator":
        v = self.vector
        return DensityOperator(self.trunc, np.outer(v, v.conj()))


@dataclass(frozen=True)
class DensityOperator:
    """Matrix over the flattened joint basis, shape ``(size, size)``."""

    trunc: TruncationConfig
    elems: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.trunc.size
        elems = np.asarray(self.elems)
        if elems.shape != (n, n):
            elems = elems.reshape(n, n)
        object.__setattr__(self, "elems", _frozen(elems))

    @property
    def tensor(self) -> np.ndarray:
        """View with shape ``dims + dims`` (ket indices first)."""
        return self.elems.reshape(self.trunc.dims + self.trunc.dims)

    def trace(self) -> float:
        return float(np.trace(self.elems).real)

    def normalized(self) -> "DensityOperator":
        tr = np.trace(self.elems).real
        if tr <= 0.0:
            raise InvariantError(f"trace must be positive to normalize, got {tr}")
        return DensityOperator(self.trunc, self.elems / tr)

    def populations(self) -> np.ndarray:
        """Diagonal reshaped to ``dims``: the joint photon-number distribution."""
        return np.diagonal(self.elems).real.reshape(self.trunc.dims)


@dataclass(frozen=True)
class FockOperator:
    """General operator on a truncated space.

    ``elems`` is either a dense ``(size, size)`` matrix or, for operators
    diagonal in the Fock basis, the 1-D diagonal.
    """

    trunc: TruncationConfig
    elems: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.trunc.size
        elems = np.asarray(self.elems)
        if elems.ndim == 1:
            if elems.shape != (n,):
                raise DomainError(f"diagonal operator needs {n} entries, got {elems.shape}")
        elif elems.shape != (n, n):
            raise DomainError(f"operator needs shape {(n, n)}, got {elems.shape}")
        object.__setattr__(self, "elems", _frozen(elems))

    @property
    def is_diagonal(self) -> bool:
        return self.elems.ndim == 1

    def dense(self) -> np.ndarray:
        return np.diag(self.elems) if self.is_diagonal else np.array(self.elems)

    def diagonal(self) -> np.ndarray:
        return np.array(self.elems) if self.is_diagonal else np.diagonal(self.elems).copy()

    def adjoint(self) -> "FockOperator":
        return FockOperator(self.trunc, self.elems.conj() if self.is_diagonal else self.elems.conj().T)


# --- constructors for common operators ---------------------------------------

def identity(trunc: TruncationConfig) -> FockOperator:
    return FockOperator(trunc, np.ones(trunc.size))


def local_diagonal(values: np.ndarray, trunc: TruncationConfig, mode: int) -> FockOperator:
    """Lift a single-mode diagonal (indexed by Fock level) to the joint space."""
    values = np.asarray(values)
    if values.shape != (trunc.dims[mode],):
        raise DomainError(f"mode {mode} needs {trunc.dims[mode]} diagonal entries")
    shape = [1] * trunc.n_modes
    shape[mode] = trunc.dims[mode]
    return FockOperator(trunc, np.broadcast_to(values.reshape(shape), trunc.dims).reshape(-1))


def number_operator(trunc: TruncationConfig, mode: int = 0) -> FockOperator:
    return local_diagonal(np.arange(trunc.dims[mode], dtype=float), trunc, mode)


def annihilation_matrix(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


def operator_product(parts: Sequence[FockOperator]) -> FockOperator:
    """Kronecker product of operators in mode-concatenation order."""
    if not parts:
        raise DomainError("operator_product needs at least one factor")
    trunc = parts[0].trunc
    elems = parts[0].elems
    diagonal = parts[0].is_diagonal
    for op in parts[1:]:
        trunc = trunc.concat(op.trunc)
        if diagonal and op.is_diagonal:
            elems = np.kron(elems, op.elems)
        else:
            left = np.diag(elems) if diagonal else elems
            elems = np.kron(left, op.dense())
            diagonal = False
    return FockOperator(trunc, elems)


# --- state operations ---------------------------------------------------------

def tensor_product(parts: Sequence[PureState]) -> PureState:
    """Joint state whose amplitudes are products of the component amplitudes."""
    if not parts:
        raise DomainError("tensor_product needs at least one factor")
    trunc = parts[0].trunc
    amps = parts[0].amps
    for psi in parts[1:]:
        trunc = trunc.concat(psi.trunc)
        amps = np.multiply.outer(amps, psi.amps)
    return PureState(trunc, amps)


def _check_keep(keep: Iterable[int], n_modes: int) -> list[int]:
    keep = sorted(set(int(m) for m in keep))
    if not keep:
        raise DomainError("partial trace needs a nonempty set of kept modes")
    if keep[0] < 0 or keep[-1] >= n_modes:
        raise DomainError(f"kept modes {keep} out of range for {n_modes} modes")
    return keep


def partial_trace(state: Union[DensityOperator, PureState], keep: Iterable[int]) -> DensityOperator:
    """Reduced density operator on the ``keep`` modes (kept in ascending order).

    A :class:`PureState` is traced directly from its amplitudes, which avoids
    forming the full projector.
    """
    trunc = state.trunc
    keep = _check_keep(keep, trunc.n_modes)
    traced = [m for m in range(trunc.n_modes) if m not in keep]
    sub = trunc.select(keep)
    if isinstance(state, PureState):
        mat = np.transpose(state.amps, keep + traced).reshape(sub.size, -1)
        return DensityOperator(sub, mat @ mat.conj().T)
    k = trunc.n_modes
    letters = string.ascii_letters
    ket = list(letters[:k])
    bra = list(letters[k : 2 * k])
    for m in traced:
        bra[m] = ket[m]
    out = "".join(ket[m] for m in keep) + "".join(bra[m] for m in keep)
    red = np.einsum("".join(ket) + "".join(bra) + "->" + out, state.tensor)
    return DensityOperator(sub, red.reshape(sub.size, sub.size))


def sector_leakage(state: PureState, modes: tuple[int, int]) -> float:
    """Mass of ``state`` in photon-number sectors ``n_i + n_j`` that the
    truncated pair space cannot represent completely."""
    i, j = modes
    di, dj = state.trunc.dims[i], state.trunc.dims[j]
    limit = min(di, dj)
    probs = np.abs(np.moveaxis(state.amps, (i, j), (-2, -1))) ** 2
    total = np.add.outer(np.arange(di), np.arange(dj))
    return float(probs[..., total >= limit].sum())


def _check_block_unitary(u: np.ndarray, di: int, dj: int, tol: float = 1e-10) -> None:
    total = np.add.outer(np.arange(di), np.arange(dj)).reshape(-1)
    cols = np.flatnonzero(total < min(di, dj))
    sub = u[:, cols]
    err = np.abs(sub.conj().T @ sub - np.eye(len(cols))).max(initial=0.0)
    if err > tol:
        raise InvariantError(f"two-mode operator is not unitary on complete sectors (error {err:.3e})")


def apply_two_mode_unitary(state: PureState, u: FockOperator, modes: tuple[int, int]) -> PureState:
    """Apply ``u`` (acting on the ordered mode pair ``modes``) to ``state``.

    Raises :class:`TruncationError` when the input carries more than
    ``tail_tol`` of its mass in photon-number sectors that do not fit the
    pair's cutoffs, since their image is not represented faithfully.
    """
    i, j = modes
    if i == j:
        raise DomainError("a two-mode unitary needs two distinct modes")
    di, dj = state.trunc.dims[i], state.trunc.dims[j]
    if u.trunc.dims != (di, dj):
        raise DomainError(f"unitary dims {u.trunc.dims} do not match modes {modes} dims {(di, dj)}")
    mat = u.dense()
    _check_block_unitary(mat, di, dj)
    leak = sector_leakage(state, modes)
    if leak > state.trunc.tail_tol:
        raise TruncationError(
            f"modes ({i}, {j}): {leak:.3e} of the mass lies in photon-number sectors beyond the cutoff"
        )
    moved = np.moveaxis(state.amps, (i, j), (-2, -1))
    shape = moved.shape
    out = (moved.reshape(-1, di * dj) @ mat.T).reshape(shape)
    return PureState(state.trunc, np.moveaxis(out, (-2, -1), (i, j)))


# --- scalar functionals ---------------------------------------------------------

def _match(a: TruncationConfig, b: TruncationConfig) -> None:
    if a.dims != b.dims:
        raise DomainError(f"dimension mismatch: {a.dims} vs {b.dims}")


def expectation(rho: DensityOperator, op: FockOperator) -> complex:
    """``Tr{rho op}``."""
    _match(rho.trunc, op.trunc)
    if op.is_diagonal:
        return complex(np.dot(np.diagonal(rho.elems), op.elems))
    return complex(np.sum(rho.elems * op.elems.T))


def fidelity_with_pure(rho: DensityOperator, psi: PureState) -> float:
    """Overlap ``<psi|rho|psi>``."""
    _match(rho.trunc, psi.trunc)
    v = psi.vector
    return float(np.vdot(v, rho.elems @ v).real)


def purity(rho: DensityOperator) -> float:
    # Tr{rho^2} = sum |rho_ij|^2 for Hermitian rho
    return float(np.vdot(rho.elems, rho.elems).real)


def validate_density(
    rho: DensityOperator,
    herm_tol: float = HERMITIAN_TOL,
    trace_tol: float = TRACE_TOL,
    psd_floor: float = PSD_FLOOR,
) -> None:
    """Raise :class:`InvariantError` unless ``rho`` is Hermitian, unit-trace and PSD."""
    m = rho.elems
    herm = np.abs(m - m.conj().T).max()
    if herm > herm_tol:
        raise InvariantError(f"density operator not Hermitian: max |rho - rho^dag| = {herm:.3e}")
    tr = np.trace(m)
    if abs(tr - 1.0) > trace_tol:
        raise InvariantError(f"density operator trace {tr.real:.15g} differs from 1")
    low = np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()
    if low < psd_floor:
        raise InvariantError(f"density operator has eigenvalue {low:.3e} below {psd_floor:g}")


def validate_povm_element(op: FockOperator, tol: float = 1e-12) -> None:
    """Raise unless ``op`` is Hermitian with spectrum inside ``[0, 1]``."""
    if op.is_diagonal:
        vals = op.elems
        if np.abs(vals.imag).max() > tol:
            raise InvariantError("POVM element has complex diagonal entries")
        vals = vals.real
    else:
        m = op.elems
        if np.abs(m - m.conj().T).max() > tol:
            raise InvariantError("POVM element is not Hermitian")
        vals = np.linalg.eigvalsh(m)
    if vals.min() < -tol or vals.max() > 1.0 + tol:
        raise InvariantError(f"POVM element spectrum [{vals.min():.3e}, {vals.max():.3e}] outside [0, 1]")
