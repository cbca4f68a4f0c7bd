"""Dense operator algebra on the 2^N spin space.

Basis convention: site 1 is the most significant bit of the basis index and
bit value 0 is spin up, i.e. the sigma^z = +1 eigenstate (1, 0). Operators are
plain complex ``numpy`` arrays.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import DimMismatch, DuplicateSite, NotHermitian, SiteOutOfRange, SpecMismatch
from .physics import CouplingMatrix

MAX_SITES = 14
HERMITIAN_RTOL = 1e-12

PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def _check_n(N: int) -> None:
    if not 1 <= N <= MAX_SITES:
        raise SiteOutOfRange(f"N must be in [1, {MAX_SITES}], got {N}")


def bits(N: int) -> np.ndarray:
    """(N, 2^N) array of basis-state bits; row s-1 belongs to site s."""
    _check_n(N)
    idx = np.arange(2**N)
    shifts = np.arange(N - 1, -1, -1)
    return (idx[None, :] >> shifts[:, None]) & 1


def z_values(N: int) -> np.ndarray:
    """(N, 2^N) array of sigma^z eigenvalues, +1 for spin up."""
    return 1 - 2 * bits(N)


def site_mask(N: int, sites: Iterable[int]) -> int:
    mask = 0
    for s in sites:
        mask |= 1 << (N - s)
    return mask


def _normalize_factors(N: int, factors) -> list[tuple[int, str]]:
    out = []
    seen = set()
    for site, axis in factors:
        axis = str(axis).lower()
        if axis not in ("x", "y", "z"):
            raise SpecMismatch(f"unknown Pauli axis {axis!r}")
        if not 1 <= site <= N:
            raise SiteOutOfRange(f"site {site} outside 1..{N}")
        if site in seen:
            raise DuplicateSite(f"site {site} listed twice")
        seen.add(site)
        out.append((int(site), axis))
    return out


def pauli_action(N: int, factors) -> tuple[np.ndarray, np.ndarray]:
    """Index map and phases of a Pauli string.

    Returns ``(rows, phases)`` such that the string maps basis state ``b`` to
    ``phases[b] * |rows[b]>``.
    """
    _check_n(N)
    factors = _normalize_factors(N, factors)
    b = bits(N)
    idx = np.arange(2**N)
    phase = np.ones(2**N, dtype=complex)
    flip = 0
    for site, axis in factors:
        bit = b[site - 1]
        if axis == "z":
            phase *= 1 - 2 * bit
        elif axis == "x":
            flip |= 1 << (N - site)
        else:
            flip |= 1 << (N - site)
            phase *= 1j * (1 - 2 * bit)
    return idx ^ flip, phase


def pauli_string(N: int, factors: Sequence[tuple[int, str]]) -> np.ndarray:
    """Tensor product of Pauli matrices on the listed (1-based) sites.

    >>> pauli_string(2, [(1, "z"), (2, "z")]).diagonal().real
    array([ 1., -1., -1.,  1.])
    """
    rows, phase = pauli_action(N, factors)
    op = np.zeros((2**N, 2**N), dtype=complex)
    op[rows, np.arange(2**N)] = phase
    return op


def _pair_weights(J: np.ndarray, weights: Sequence[float] | None) -> np.ndarray:
    """Upper-triangular pair coefficients J_ij * w_{j-i}."""
    N = J.shape[0]
    iu = np.triu(np.ones((N, N), dtype=bool), 1)
    out = np.where(iu, J, 0.0).astype(float)
    if weights is not None:
        sep = np.subtract.outer(np.arange(N), np.arange(N)).T
        w = np.zeros(N)
        w[1 : 1 + min(len(weights), N - 1)] = list(weights)[: N - 1]
        out = out * w[np.clip(sep, 0, N - 1)]
        out[~iu] = 0.0
    return out


def zz_diagonal(J: np.ndarray, weights: Sequence[float] | None = None) -> np.ndarray:
    """Diagonal of sum_{i<j} w_{j-i} J_ij sigma^z_i sigma^z_j as a real vector.

    ``weights[n-1]`` multiplies band n (pairs n sites apart); bands beyond the
    end of ``weights`` are dropped. ``None`` keeps every band with weight 1.
    """
    J = np.asarray(J, dtype=float)
    N = J.shape[0]
    z = z_values(N).astype(float)
    P = _pair_weights(J, weights)
    # sum_ij P_ij z_i z_j, computed as sum_i z_i (P z)_i
    return np.einsum("ib,ib->b", z, P @ z)


def coupling_operator(J: np.ndarray, axis: str = "z", weights: Sequence[float] | None = None) -> np.ndarray:
    """sum_{i<j} w_{j-i} J_ij sigma^a_i sigma^a_j as a dense matrix."""
    J = np.asarray(J, dtype=float)
    N = J.shape[0]
    if axis == "z":
        return np.diag(zz_diagonal(J, weights)).astype(complex)
    P = _pair_weights(J, weights)
    op = np.zeros((2**N, 2**N), dtype=complex)
    cols = np.arange(2**N)
    for i, j in zip(*np.nonzero(P)):
        rows, phase = pauli_action(N, [(i + 1, axis), (j + 1, axis)])
        op[rows, cols] += P[i, j] * phase
    return op


def field_operator(N: int, coeffs, axis: str = "x") -> np.ndarray:
    """sum_i c_i sigma^a_i; ``coeffs`` may be a scalar."""
    c = np.broadcast_to(np.asarray(coeffs, dtype=float), (N,))
    if axis == "z":
        return np.diag(np.einsum("i,ib->b", c, z_values(N).astype(float))).astype(complex)
    op = np.zeros((2**N, 2**N), dtype=complex)
    cols = np.arange(2**N)
    for i in range(N):
        if c[i]:
            rows, phase = pauli_action(N, [(i + 1, axis)])
            op[rows, cols] += c[i] * phase
    return op


def band_operator(J: np.ndarray, n: int) -> np.ndarray:
    """H^z_n = sum_i J_{i,i+n} sigma^z_i sigma^z_{i+n}."""
    w = [0.0] * n
    w[n - 1] = 1.0
    return coupling_operator(J, "z", w)


class HamiltonianKind(str, enum.Enum):
    FULL_SPIN = "FullSpin"
    ISING_Z = "IsingZ"
    TRANSVERSE_DRIVE = "TransverseDrive"
    MIXED_XYZ = "MixedXYZ"
    NEIGHBOR_BAND = "NeighborBand"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class HamiltonianSpec:
    """Recipe for one of the standard spin Hamiltonians.

    ``weights`` optionally rescales the bands of an ``IsingZ`` sum; ``terms``
    holds ``(coefficient, factors)`` pairs for ``Custom``.
    """

    kind: HamiltonianKind
    tau: tuple[float, float, float] = (1.0, 0.0, 0.0)
    eta: float = 0.0
    band: int | None = None
    weights: tuple[float, ...] | None = None
    terms: tuple = field(default=())
    N: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", HamiltonianKind(self.kind))
        if any(t < 0 for t in self.tau):
            raise SpecMismatch("tau weights must be nonnegative")
        if self.kind is HamiltonianKind.MIXED_XYZ and sum(self.tau) > 1 + 1e-12:
            raise SpecMismatch("tau weights must sum to at most 1")


def build_hamiltonian(spec: HamiltonianSpec, c: CouplingMatrix) -> np.ndarray:
    """Dense Hermitian matrix for ``spec`` using the couplings in ``c``."""
    N = c.N
    _check_n(N)
    if spec.N is not None and spec.N != N:
        raise SpecMismatch(f"spec is for N={spec.N} but couplings have N={N}")
    kind = spec.kind
    if kind is HamiltonianKind.FULL_SPIN:
        H = field_operator(N, c.omega_s / 2, "z")
        H += coupling_operator(c.Jz, "z")
        H -= 0.5 * coupling_operator(c.Jxy, "x")
        H -= 0.5 * coupling_operator(c.Jxy, "y")
        return H
    if kind is HamiltonianKind.ISING_Z:
        return coupling_operator(c.Jz, "z", spec.weights)
    if kind is HamiltonianKind.TRANSVERSE_DRIVE:
        return field_operator(N, spec.eta, "x")
    if kind is HamiltonianKind.MIXED_XYZ:
        t1, t2, t3 = spec.tau
        H = t1 * (field_operator(N, spec.eta, "x") + coupling_operator(c.Jz, "z"))
        if t2:
            H += t2 * coupling_operator(c.Jz, "x")
        if t3:
            H += t3 * coupling_operator(c.Jz, "y")
        return H
    if kind is HamiltonianKind.NEIGHBOR_BAND:
        if spec.band is None or not 1 <= spec.band <= N - 1:
            raise SpecMismatch(f"band index must be in 1..{N - 1}")
        return band_operator(c.Jz, spec.band)
    if kind is HamiltonianKind.CUSTOM:
        H = np.zeros((2**N, 2**N), dtype=complex)
        for coef, factors in spec.terms:
            H += coef * pauli_string(N, factors)
        if not is_hermitian(H):
            raise NotHermitian("custom Pauli sum with complex coefficients is not Hermitian")
        return H
    raise SpecMismatch(f"unhandled kind {kind}")  # pragma: no cover


def is_hermitian(H: np.ndarray, rtol: float = HERMITIAN_RTOL) -> bool:
    scale = np.max(np.abs(H)) if H.size else 0.0
    return bool(np.max(np.abs(H - H.conj().T), initial=0.0) <= rtol * max(scale, 1e-300))


def _is_diagonal(H: np.ndarray) -> bool:
    return not np.any(H - np.diag(np.diagonal(H)))


class Propagator:
    """exp(-i H t) for many t from a single eigendecomposition of H."""

    def __init__(self, H: np.ndarray, check: bool = True):
        H = np.asarray(H)
        if H.ndim != 2 or H.shape[0] != H.shape[1]:
            raise DimMismatch(f"Hamiltonian must be square, got {H.shape}")
        if check and not is_hermitian(H):
            raise NotHermitian("exp(-iHt) requires a Hermitian H")
        self.dim = H.shape[0]
        if _is_diagonal(H):
            self.evals = np.real(np.diagonal(H)).copy()
            self.evecs = None
        else:
            self.evals, self.evecs = np.linalg.eigh(H)

    def phases(self, t: float) -> np.ndarray:
        return np.exp(-1j * self.evals * t)

    def __call__(self, t: float) -> np.ndarray:
        if t == 0:
            return np.eye(self.dim, dtype=complex)
        ph = self.phases(t)
        if self.evecs is None:
            return np.diag(ph)
        return (self.evecs * ph) @ self.evecs.conj().T

    def apply(self, t: float, M: np.ndarray) -> np.ndarray:
        """exp(-i H t) @ M without forming the propagator."""
        if t == 0:
            return np.array(M, dtype=complex)
        ph = self.phases(t)
        if self.evecs is None:
            return ph[:, None] * M
        return self.evecs @ (ph[:, None] * (self.evecs.conj().T @ M))


def expm(H: np.ndarray, t: float) -> np.ndarray:
    """Unitary exp(-i H t) via Hermitian eigendecomposition."""
    return Propagator(H)(t)


def distances(U: np.ndarray, V: np.ndarray) -> tuple[float, float]:
    """Raw and global-phase-optimised spectral-norm distances ||U - V||.

    The phase is fixed in closed form at arg tr(V^dagger U), the optimum of the
    Frobenius distance, and the spectral norm re-evaluated there; the smaller
    of the two candidates (phase 0 or the closed-form phase) is returned.
    """
    U = np.asarray(U)
    V = np.asarray(V)
    if U.shape != V.shape:
        raise DimMismatch(f"shapes differ: {U.shape} vs {V.shape}")
    raw = _spectral_norm(U - V)
    ov = np.vdot(V, U)  # tr(V^dagger U)
    if abs(ov) == 0.0:
        return raw, raw
    phase = _spectral_norm(U - (ov / abs(ov)) * V)
    return raw, min(raw, phase)


def spectral_distance(U: np.ndarray, V: np.ndarray, phase_optimized: bool = False) -> float:
    raw, opt = distances(U, V)
    return opt if phase_optimized else raw


def _spectral_norm(A: np.ndarray) -> float:
    if A.size == 0:
        return 0.0
    return float(scipy.linalg.svdvals(A, check_finite=False)[0])


def unitarity_defect(U: np.ndarray) -> float:
    """||U^dagger U - 1|| in the spectral norm."""
    return _spectral_norm(U.conj().T @ U - np.eye(U.shape[0]))
