"""Trap parameters, motional/spin frequencies and spin-spin couplings.

All frequencies are angular (rad/s). Site indices in the public API are
1-based, array storage is 0-based.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .constants import load_constants
from .errors import HierarchyViolation, NonPositiveInput, ZeroSpacing

HIERARCHY_LIMIT = 1e-2
EPSILON_WARN = 0.1
_FIXED_POINT_RTOL = 1e-12
_FIXED_POINT_MAXITER = 50


@dataclass(frozen=True)
class TrapParams:
    """Physical inputs of an N-trap linear array.

    ``d`` is either a uniform nearest-neighbour spacing (metres, sites on a
    regular line) or a full N x N matrix of pairwise distances.
    ``overrides`` may hold ``omega_z`` (scalar), ``omega_c`` and/or
    ``omega_s`` (scalar or per-site), all in rad/s; they take precedence over
    ``V0``/``ell``/``B0``.
    """

    N: int
    b: float
    d: float | Sequence[Sequence[float]]
    B0: Sequence[float] | float | None = None
    V0: float | None = None
    ell: float | None = None
    g: float = 2.002
    overrides: Mapping[str, float | Sequence[float]] = field(default_factory=dict)

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 2:
            raise NonPositiveInput(f"N must be an integer >= 2, got {self.N}")
        if self.b < 0:
            raise NonPositiveInput(f"gradient b must be >= 0, got {self.b}")
        if self.g <= 0:
            raise NonPositiveInput("g must be positive")
        unknown = set(self.overrides) - {"omega_z", "omega_c", "omega_s"}
        if unknown:
            raise NonPositiveInput(f"unknown overrides {sorted(unknown)}")
        for key, val in self.overrides.items():
            if np.any(np.asarray(val, dtype=float) <= 0):
                raise NonPositiveInput(f"override {key} must be positive")
        if "omega_z" not in self.overrides:
            for name in ("V0", "ell"):
                val = getattr(self, name)
                if val is None or val <= 0:
                    raise NonPositiveInput(f"{name} must be positive when omega_z is not overridden")
        if not {"omega_c", "omega_s"} & set(self.overrides):
            if self.B0 is None or np.any(np.asarray(self.B0, dtype=float) <= 0):
                raise NonPositiveInput("B0 must be positive when omega_c/omega_s are not overridden")
        self.distances()  # validates geometry

    @classmethod
    def uniform(cls, N: int, B0: float, b: float, V0: float, ell: float, d: float, g: float = 2.002):
        return cls(N=N, b=b, d=d, B0=[B0] * N, V0=V0, ell=ell, g=g)

    def distances(self) -> np.ndarray:
        """N x N matrix of inter-trap distances (zero diagonal)."""
        if np.ndim(self.d) == 0:
            d = float(self.d)
            if d <= 0:
                raise ZeroSpacing(f"spacing must be positive, got {d}")
            idx = np.arange(self.N)
            return np.abs(idx[:, None] - idx[None, :]) * d
        dist = np.array(self.d, dtype=float)
        if dist.shape != (self.N, self.N):
            raise NonPositiveInput(f"distance matrix must be {self.N}x{self.N}, got {dist.shape}")
        if not np.allclose(dist, dist.T):
            raise NonPositiveInput("distance matrix must be symmetric")
        off = dist[~np.eye(self.N, dtype=bool)]
        if np.any(off <= 0):
            raise ZeroSpacing("all inter-trap distances must be strictly positive")
        return dist


@dataclass(frozen=True, eq=False)
class FrequencySet:
    omega_z: float
    omega_c: np.ndarray
    omega_m: np.ndarray
    omega_s: np.ndarray
    omega_a: np.ndarray
    epsilon: float


@dataclass(frozen=True, eq=False)
class CouplingMatrix:
    """Pairwise couplings J^z, J^xy (rad/s) and per-site spin frequencies."""

    Jz: np.ndarray
    Jxy: np.ndarray
    omega_s: np.ndarray

    @property
    def N(self) -> int:
        return self.Jz.shape[0]

    @property
    def jz_nn(self) -> float:
        """Nearest-neighbour coupling J^z_{1,2}."""
        return float(self.Jz[0, 1])

    @classmethod
    def dipole_chain(cls, N: int, jz_nn: float = 1.0, jxy_ratio: float = 0.0, omega_s: float = 0.0):
        """Uniform chain with J^z_{i,j} = jz_nn / |i-j|^3."""
        idx = np.arange(N)
        sep = np.abs(idx[:, None] - idx[None, :]).astype(float)
        with np.errstate(divide="ignore"):
            jz = np.where(sep > 0, jz_nn / sep**3, 0.0)
        return cls(Jz=jz, Jxy=jz * jxy_ratio, omega_s=np.full(N, float(omega_s)))

    def truncated(self, n: int) -> "CouplingMatrix":
        """Couplings of the first ``n`` sites."""
        if not 2 <= n <= self.N:
            raise NonPositiveInput(f"cannot truncate {self.N} sites to {n}")
        return CouplingMatrix(self.Jz[:n, :n].copy(), self.Jxy[:n, :n].copy(), self.omega_s[:n].copy())

    def scaled_to(self, jz_nn: float) -> "CouplingMatrix":
        """Rescale both coupling matrices so that J^z_{1,2} equals ``jz_nn``."""
        k = jz_nn / self.jz_nn
        return CouplingMatrix(self.Jz * k, self.Jxy * k, self.omega_s.copy())

    def rwa_ratio(self) -> float:
        """Largest J^xy divided by the smallest nonzero spin-frequency splitting.

        Returns ``inf`` for degenerate spin frequencies. No cutoff is enforced.
        """
        w = np.sort(self.omega_s)
        gaps = np.diff(w)
        gaps = gaps[gaps > 0]
        if len(gaps) < self.N - 1:
            return math.inf
        return float(np.max(np.abs(self.Jxy)) / np.min(gaps))


def _per_site(value, N: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        return np.full(N, float(arr))
    if arr.shape != (N,):
        raise NonPositiveInput(f"expected {N} per-site values, got shape {arr.shape}")
    return arr.copy()


def derive_frequencies(p: TrapParams, consts: Mapping[str, float] | None = None) -> FrequencySet:
    """Axial, cyclotron, magnetron, spin and anomaly frequencies plus epsilon.

    The cyclotron/magnetron pair is solved self-consistently
    (``omega_c = eB/m - omega_m``, ``omega_m = omega_z**2 / (2 omega_c)``)
    by fixed-point iteration started from the free cyclotron frequency.
    """
    k = load_constants() if consts is None else consts
    e, m, hbar = k["e"], k["m_e"], k["hbar"]
    ov = p.overrides

    if "omega_z" in ov:
        omega_z = float(ov["omega_z"])
    else:
        omega_z = math.sqrt(2 * e * p.V0 / (m * p.ell**2))

    if "omega_c" in ov:
        omega_c = _per_site(ov["omega_c"], p.N)
        omega_m = omega_z**2 / (2 * omega_c)
        B0 = m * (omega_c + omega_m) / e
    else:
        if "omega_s" in ov:
            B0 = 2 * m * _per_site(ov["omega_s"], p.N) / (p.g * e)
        else:
            B0 = _per_site(p.B0, p.N)
        free = e * B0 / m
        omega_c = free.copy()
        for _ in range(_FIXED_POINT_MAXITER):
            omega_m = omega_z**2 / (2 * omega_c)
            nxt = free - omega_m
            done = np.max(np.abs(nxt - omega_c) / nxt) < _FIXED_POINT_RTOL
            omega_c = nxt
            if done:
                break
        omega_m = omega_z**2 / (2 * omega_c)
        if np.any(omega_c <= 0):
            raise HierarchyViolation("magnetic field too weak: no bound cyclotron motion")

    if "omega_s" in ov:
        omega_s = _per_site(ov["omega_s"], p.N)
    else:
        omega_s = p.g * e * B0 / (2 * m)

    r_mz = float(np.max(omega_m / omega_z))
    r_zc = float(np.max(omega_z / omega_c))
    if r_mz >= HIERARCHY_LIMIT or r_zc >= HIERARCHY_LIMIT:
        raise HierarchyViolation(
            f"frequency hierarchy violated: omega_m/omega_z={r_mz:.3g}, omega_z/omega_c={r_zc:.3g}"
        )

    epsilon = e * p.b / (m * omega_z) * math.sqrt(hbar / (2 * m * omega_z))
    if epsilon > EPSILON_WARN:
        warnings.warn(f"gradient coupling epsilon={epsilon:.3g} is not small", RuntimeWarning, stacklevel=2)

    return FrequencySet(
        omega_z=omega_z,
        omega_c=omega_c,
        omega_m=omega_m,
        omega_s=omega_s,
        omega_a=omega_s - omega_c,
        epsilon=epsilon,
    )


def coupling_constants(
    f: FrequencySet, p: TrapParams, consts: Mapping[str, float] | None = None
) -> CouplingMatrix:
    """Dipolar couplings J^z_{i,j} and J^xy_{i,j} for every pair.

    J^z = (g/2)^2 hbar e^4 b^2 / (16 pi eps0 m^4 omega_z^4 d^3) and
    J^xy = J^z omega_z^4 / (4 omega_a^2 omega_c^2), where the per-site
    frequencies are those of the higher-index site of the pair.
    """
    k = load_constants() if consts is None else consts
    e, m, hbar, eps0 = k["e"], k["m_e"], k["hbar"], k["epsilon_0"]
    dist = p.distances()
    N = p.N
    off = ~np.eye(N, dtype=bool)
    if np.any(dist[off] == 0):
        raise ZeroSpacing("coincident traps")

    pref = (p.g / 2) ** 2 * hbar * e**4 / (16 * math.pi * eps0 * m**4) * p.b**2 / f.omega_z**4
    jz = np.zeros((N, N))
    jz[off] = pref / dist[off] ** 3

    hi = np.maximum.outer(np.arange(N), np.arange(N))
    ratio = f.omega_z**4 / (4 * f.omega_a[hi] ** 2 * f.omega_c[hi] ** 2)
    jxy = np.where(off, jz * ratio, 0.0)
    return CouplingMatrix(Jz=jz, Jxy=jxy, omega_s=f.omega_s.copy())


def canonical_error_bound(N: int, kbar: float, eps: float) -> float:
    """Error budget N (kbar + 1/2) eps^2 of the spin-motion decoupling."""
    if N < 1:
        raise NonPositiveInput("N must be >= 1")
    if kbar < 0:
        raise NonPositiveInput("kbar must be >= 0")
    return N * (kbar + 0.5) * eps**2
