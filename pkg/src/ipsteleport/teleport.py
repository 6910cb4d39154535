"""Coherent-state teleportation through a two-mode resource (IPS or twin beam).

Alice's joint quadrature measurement on mode ``a`` is a heterodyne POVM
``(1/pi) D(beta) sigma^T D^dag(beta)``; for a coherent input ``|alpha>`` it is
the rank-1 element ``(1/pi)|alpha* + beta><alpha* + beta|``. Bob then shifts
mode ``b`` back by the outcome.

Phase frame of mode ``b``: the resource ``sum_n c_n |n>|n>`` steers ``b``
into ``|x gamma*>`` when ``a`` is projected on ``|gamma>``, so in ``b``'s
frame the outcome reads ``beta*``. Bob's correction is therefore
``rho_out = D^dag(beta*) rho_b D(beta*)``. With this frame the unit-gain
twin-beam fidelity is ``(1 + x)/2`` for every input amplitude.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import gammainc, gammaincc

from .errors import ConditioningError, DomainError, QuadratureError, TruncationError
from .fock import (
    DensityOperator,
    FockOperator,
    TruncationConfig,
    coherent_cutoff,
    partial_trace,
)
from .optics import coherent_amplitudes, displacement_matrix, displacement_matrix_batch

TAIL_MASS_TOL = 1e-8
ZERO_PROBABILITY = 1e-300


def heterodyne_center(alpha: complex) -> complex:
    """Outcome around which the heterodyne distribution is centred: ``-alpha*``."""
    return -np.conj(complex(alpha))


def bob_amplitude(beta: complex) -> complex:
    """Displacement amplitude Bob undoes on mode ``b`` for Alice's outcome ``beta``."""
    return np.conj(complex(beta))


def _coherent_rows(gammas: np.ndarray, dim: int) -> np.ndarray:
    # rows <n|gamma> are conj of the amplitudes; returned as amplitudes, shape (J, dim)
    gammas = np.asarray(gammas, dtype=complex).reshape(-1)
    out = np.empty((gammas.size, dim), dtype=complex)
    out[:, 0] = np.exp(-0.5 * np.abs(gammas) ** 2)
    for k in range(1, dim):
        out[:, k] = out[:, k - 1] * gammas / math.sqrt(k)
    return out


def heterodyne_povm(alpha: complex, beta: complex, trunc) -> FockOperator:
    """``(1/pi)|alpha* + beta><alpha* + beta|`` on the truncated mode."""
    if isinstance(trunc, int):
        trunc = TruncationConfig((trunc,))
    d = trunc.dims[0]
    gamma = np.conj(complex(alpha)) + complex(beta)
    tail = 0.0 if gamma == 0 else float(gammainc(d, abs(gamma) ** 2))
    if tail > trunc.tail_tol:
        raise TruncationError(
            f"heterodyne element |alpha* + beta| = {abs(gamma):.4g} leaves {tail:.3e} beyond cutoff {d}"
        )
    v = coherent_amplitudes(gamma, d)
    return FockOperator(trunc, np.outer(v, v.conj()) / math.pi)


def _resource_tensor(rho: DensityOperator) -> np.ndarray:
    if rho.trunc.n_modes != 2:
        raise DomainError(f"the teleportation resource must be a two-mode state, got dims {rho.trunc.dims}")
    return rho.tensor


def outcome_probability(rho: DensityOperator, alpha: complex, beta: complex) -> float:
    """Density of Alice's outcome ``beta``: ``Tr{rho Pi_a(beta) (x) 1_b}``."""
    rho_a = partial_trace(rho, [0]).elems
    g = coherent_amplitudes(np.conj(complex(alpha)) + complex(beta), rho.trunc.dims[0])
    return float(np.vdot(g, rho_a @ g).real / math.pi)


def _project_a(tensor: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Unnormalized ``Tr_a{rho Pi_a (x) 1}`` for rows ``g`` of heterodyne amplitudes.

    Returns shape ``(J, d_b, d_b)``.
    """
    da, db = tensor.shape[0], tensor.shape[1]
    x = (g.conj() @ tensor.reshape(da, -1)).reshape(g.shape[0], db, da, db)
    return np.einsum("jbac,ja->jbc", x, g) / math.pi


def conditional_state_b(rho: DensityOperator, alpha: complex, beta: complex) -> DensityOperator:
    """Bob's normalized state after Alice obtains ``beta``, before his correction."""
    tensor = _resource_tensor(rho)
    g = coherent_amplitudes(np.conj(complex(alpha)) + complex(beta), rho.trunc.dims[0])
    rho_b = _project_a(tensor, g[None, :])[0]
    p = float(np.trace(rho_b).real)
    if p < ZERO_PROBABILITY:
        raise ConditioningError(f"outcome beta={complex(beta)} has vanishing probability {p:.3e}")
    trunc = TruncationConfig((rho.trunc.dims[1],), rho.trunc.tail_tol)
    return DensityOperator(trunc, rho_b / p)


def output_dim(shift: float, dim: int, tail_tol: float) -> int:
    """Cutoff large enough to hold a state of cutoff ``dim`` displaced by ``|shift|``."""
    return max(dim, coherent_cutoff(abs(shift) + math.sqrt(dim), tail_tol) + 1)


def teleported_state(
    rho: DensityOperator,
    alpha: complex,
    beta: complex,
    out_dim: Optional[int] = None,
) -> DensityOperator:
    """Bob's corrected state ``D^dag(beta*) rho_b D(beta*)``.

    The displacement is applied with exact matrix elements into an output
    space of ``out_dim`` levels, enlarged until the dropped mass is below the
    resource's ``tail_tol``.
    """
    cond = conditional_state_b(rho, alpha, beta)
    db = cond.trunc.dims[0]
    tol = rho.trunc.tail_tol
    shift = bob_amplitude(beta)
    dim = out_dim or output_dim(abs(shift), db, tol)
    while True:
        m = displacement_matrix(-shift, dim, db)
        out = m @ cond.elems @ m.conj().T
        leak = 1.0 - float(np.trace(out).real)
        if leak <= tol or out_dim is not None:
            break
        dim *= 2
    if leak > max(tol, 1e-10):
        raise TruncationError(f"output cutoff {dim} drops {leak:.3e} of the teleported state")
    return DensityOperator(TruncationConfig((dim,), tol), out)


def conditional_fidelity(rho: DensityOperator, alpha: complex, beta: complex) -> float:
    """``<alpha| rho_out |alpha>`` for the outcome ``beta``."""
    out = teleported_state(rho, alpha, beta)
    a = coherent_amplitudes(complex(alpha), out.trunc.dims[0])
    return float(np.vdot(a, out.elems @ a).real)


@dataclass(frozen=True)
class TeleportOutcome:
    beta: complex
    prob_density: float
    rho_out: DensityOperator
    fidelity: float


def teleport(rho: DensityOperator, alpha: complex, beta: complex) -> TeleportOutcome:
    out = teleported_state(rho, alpha, beta)
    a = coherent_amplitudes(complex(alpha), out.trunc.dims[0])
    fid = float(np.vdot(a, out.elems @ a).real)
    return TeleportOutcome(complex(beta), outcome_probability(rho, alpha, beta), out, fid)


@dataclass(frozen=True)
class QuadratureGrid:
    """Polar product rule around the heterodyne centre.

    Gauss-Legendre in the radius on ``[0, radius]`` times the trapezoid rule
    in angle. ``radius=None`` means ``max(6, |alpha| + 6)``.
    """

    n_radial: int = 40
    n_angular: int = 64
    radius: Optional[float] = None

    def __post_init__(self):
        if self.n_radial < 1 or self.n_angular < 1:
            raise DomainError("quadrature needs at least one node per direction")
        if self.radius is not None and self.radius <= 0.0:
            raise DomainError(f"quadrature radius must be positive, got {self.radius}")

    def resolved_radius(self, alpha: complex) -> float:
        return self.radius if self.radius is not None else max(6.0, abs(complex(alpha)) + 6.0)

    def nodes(self, alpha: complex) -> tuple[np.ndarray, np.ndarray]:
        """Outcomes ``beta`` and weights for ``int d^2 beta``."""
        r_max = self.resolved_radius(alpha)
        x, w = np.polynomial.legendre.leggauss(self.n_radial)
        r = 0.5 * r_max * (x + 1.0)
        wr = 0.5 * r_max * w * r
        theta = 2.0 * math.pi * np.arange(self.n_angular) / self.n_angular
        wt = 2.0 * math.pi / self.n_angular
        offsets = (r[:, None] * np.exp(1j * theta[None, :])).reshape(-1)
        weights = np.repeat(wr * wt, self.n_angular)
        return heterodyne_center(alpha) + offsets, weights


def neglected_mass(rho: DensityOperator, radius: float) -> float:
    """Outcome probability falling outside ``|alpha* + beta| <= radius``.

    The angular integral of ``<gamma|rho_a|gamma>`` keeps only the diagonal,
    and each level contributes its upper regularized incomplete gamma.
    """
    pops = np.diagonal(partial_trace(rho, [0]).elems).real
    n = np.arange(pops.size)
    return float(np.dot(pops, gammaincc(n + 1, radius**2)))


@dataclass(frozen=True)
class QuadratureReport:
    avg_fidelity: float
    normalization: float
    min_density: float
    neglected_mass: float
    n_nodes: int


def _node_chunk(tensor, alpha, betas, weights, out_rows):
    da, db = tensor.shape[0], tensor.shape[1]
    gammas = np.conj(complex(alpha)) + betas
    g = _coherent_rows(gammas, da)
    rho_b = _project_a(tensor, g)
    p = np.einsum("jbb->j", rho_b).real
    # Bob: D^dag(beta*) = D(-beta*); fidelity = (M^dag a)^dag rho_b (M^dag a) / p
    m = displacement_matrix_batch(-np.conj(betas), out_rows, db)
    a = coherent_amplitudes(complex(alpha), out_rows)
    v = np.einsum("jmn,m->jn", m.conj(), a)
    fp = np.einsum("jb,jbc,jc->j", v.conj(), rho_b, v).real
    return p * weights, fp * weights, p


def quadrature_report(
    rho: DensityOperator,
    alpha: complex = 0.0,
    grid: Optional[QuadratureGrid] = None,
    jobs: int = 1,
    chunk: int = 256,
) -> QuadratureReport:
    """Average fidelity ``int d^2 beta p(beta) F(beta)`` by polar quadrature.

    Each node runs the full conditional pipeline: project ``a`` on the
    heterodyne element, trace it out, apply Bob's displacement, overlap with
    ``|alpha>``. Node contributions are summed in node order with
    ``math.fsum``, so the result does not depend on ``jobs``.
    """
    grid = grid or QuadratureGrid()
    tensor = _resource_tensor(rho)
    radius = grid.resolved_radius(alpha)
    tail = neglected_mass(rho, radius)
    if tail > TAIL_MASS_TOL:
        raise QuadratureError(
            f"quadrature radius {radius:g} leaves outcome mass {tail:.3e} > {TAIL_MASS_TOL:g}; use a larger radius"
        )
    betas, weights = grid.nodes(alpha)
    db = rho.trunc.dims[1]
    shift_max = float(np.abs(betas).max(initial=0.0))
    out_rows = output_dim(shift_max + abs(complex(alpha)), db, rho.trunc.tail_tol)
    pieces = [(betas[i : i + chunk], weights[i : i + chunk]) for i in range(0, betas.size, chunk)]

    def run(piece):
        return _node_chunk(tensor, alpha, piece[0], piece[1], out_rows)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, pieces))
    else:
        results = [run(piece) for piece in pieces]
    norm_terms = np.concatenate([r[0] for r in results])
    fid_terms = np.concatenate([r[1] for r in results])
    dens = np.concatenate([r[2] for r in results])
    return QuadratureReport(
        avg_fidelity=math.fsum(fid_terms),
        normalization=math.fsum(norm_terms),
        min_density=float(dens.min()),
        neglected_mass=tail,
        n_nodes=int(betas.size),
    )


def average_fidelity_quadrature(
    rho: DensityOperator,
    alpha: complex = 0.0,
    grid: Optional[QuadratureGrid] = None,
    jobs: int = 1,
) -> float:
    return quadrature_report(rho, alpha, grid, jobs).avg_fidelity


def average_fidelity_closed(x: float, tau_eff: float) -> float:
    """Summed average fidelity of the double-click resource at ``(x, tau_eff)``."""
    if not 0.0 <= x < 1.0:
        raise DomainError(f"twin-beam parameter must satisfy 0 <= x < 1, got {x}")
    if not 0.0 < tau_eff <= 1.0:
        raise DomainError(f"tau_eff must lie in (0, 1], got {tau_eff}")
    t = tau_eff
    first = (1.0 + x) * (1.0 + x * t) * (1.0 - x * x * t) / ((1.0 + x * x * t) * (1.0 + (1.0 - t) * x))
    second = (2.0 - 2.0 * x * t + x * x * t) / (2.0 - (2.0 + (1.0 - t) * x) * x * t)
    return 0.5 * first * second


def twb_average_fidelity(x: float) -> float:
    """Unit-gain fidelity with a bare twin beam, ``(1 + x)/2``."""
    if not 0.0 <= x < 1.0:
        raise DomainError(f"twin-beam parameter must satisfy 0 <= x < 1, got {x}")
    return 0.5 * (1.0 + x)
