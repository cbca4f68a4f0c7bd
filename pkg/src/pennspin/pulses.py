"""Ideal pulse unitaries, spin-subset generators and a Rabi integrator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .constants import load_constants
from .errors import BadSubset, NonPositiveInput, StepFailure
from .operators import PAULI, bits, coupling_operator, field_operator, pauli_action, pauli_string
from .physics import CouplingMatrix

PULSE_KINDS = ("F", "Finv", "Gx", "GxDag", "Gy", "GyDag", "X", "R")
INVERSE_KIND = {"F": "Finv", "Finv": "F", "Gx": "GxDag", "GxDag": "Gx", "Gy": "GyDag", "GyDag": "Gy"}

_SQ2 = 1 / math.sqrt(2)
_LOCAL = {
    "Finv": 1j * PAULI["x"],
    "Gx": _SQ2 * (PAULI["i"] - 1j * PAULI["x"]),
    "GxDag": _SQ2 * (PAULI["i"] + 1j * PAULI["x"]),
    "Gy": _SQ2 * (PAULI["i"] - 1j * PAULI["y"]),
    "GyDag": _SQ2 * (PAULI["i"] + 1j * PAULI["y"]),
}


# -- spin subsets -----------------------------------------------------------


def _blocks(N: int, start: int, width: int, period: int) -> tuple[int, ...]:
    sites = []
    for i in range(start, N + 1, period):
        sites.extend(s for s in range(i, i + width) if s <= N)
    return tuple(sites)


def odd_sites(N: int) -> tuple[int, ...]:
    return tuple(range(1, N + 1, 2))


def pair_class(N: int, k: int) -> tuple[int, ...]:
    """Sites of the couples {i, i+1}, i in {k, k+4, k+8, ...}."""
    if k not in (1, 2):
        raise BadSubset(f"pair class index must be 1 or 2, got {k}")
    return _blocks(N, k, 2, 4)


def triple_class(N: int, k: int) -> tuple[int, ...]:
    """Sites of the triples {i, i+1, i+2}, i in {k, k+6, ...}."""
    if k not in (1, 2, 3):
        raise BadSubset(f"triple class index must be 1, 2 or 3, got {k}")
    return _blocks(N, k, 3, 6)


def quad_class(N: int, k: int) -> tuple[int, ...]:
    """Sites of the quadruples {i, ..., i+3}, i in {k, k+8, ...}."""
    if k not in (1, 2, 3, 4):
        raise BadSubset(f"quadruple class index must be 1..4, got {k}")
    return _blocks(N, k, 4, 8)


def resolve_subset(subset, N: int) -> tuple[int, ...]:
    """Sorted site tuple for a named class (``"o"``, ``"c1"``, ``"T3"``,
    ``"Q2"``, ``"all"``) or an explicit iterable of 1-based sites."""
    if subset is None or subset == "all":
        return tuple(range(1, N + 1))
    if isinstance(subset, str):
        name = subset.strip()
        if name == "o":
            return odd_sites(N)
        gens = {"c": pair_class, "T": triple_class, "Q": quad_class}
        if len(name) == 2 and name[0] in gens and name[1].isdigit():
            return gens[name[0]](N, int(name[1]))
        raise BadSubset(f"unknown subset name {subset!r}")
    sites = tuple(sorted(int(s) for s in subset))
    if len(set(sites)) != len(sites):
        raise BadSubset(f"repeated site in {subset!r}")
    if sites and (sites[0] < 1 or sites[-1] > N):
        raise BadSubset(f"subset {sites} outside 1..{N}")
    return sites


# -- pulses ------------------------------------------------------------------


@dataclass(frozen=True)
class PulseSpec:
    """One instantaneous pulse.

    ``kind`` ``X`` is the subset spin flip (bare sigma^x on every listed site,
    or -i sigma^x with ``physical_phase``); ``R`` is a raw rotation by
    ``fraction * pi`` about the in-plane axis at angle ``theta``. ``frame`` is
    ``"ip"`` (interaction picture) or ``"lab"``; only F/Finv differ between
    frames.
    """

    kind: str
    subset: object = None
    frame: str = "ip"
    physical_phase: bool = False
    theta: float = 0.0
    fraction: float = 1.0

    def __post_init__(self):
        if self.kind not in PULSE_KINDS:
            raise BadSubset(f"unknown pulse kind {self.kind!r}")
        if self.frame not in ("ip", "lab"):
            raise BadSubset(f"frame must be 'ip' or 'lab', got {self.frame!r}")


def rotation(theta: float, fraction: float) -> np.ndarray:
    """exp(-i (pi fraction / 2)(cos theta sigma^x + sin theta sigma^y))."""
    a = math.pi * fraction / 2
    n = math.cos(theta) * PAULI["x"] + math.sin(theta) * PAULI["y"]
    return math.cos(a) * PAULI["i"] - 1j * math.sin(a) * n


def local_matrix(spec: PulseSpec, site: int, omega_s=None, chi: float | None = None) -> np.ndarray:
    """The 2x2 factor ``spec`` applies to ``site`` (1-based)."""
    k = spec.kind
    if k == "X":
        return -1j * PAULI["x"] if spec.physical_phase else PAULI["x"].copy()
    if k == "R":
        return rotation(spec.theta, spec.fraction)
    if k in ("F", "Finv"):
        phi = 0.0
        if spec.frame == "lab" and omega_s is not None and chi:
            phi = float(np.asarray(omega_s)[site - 1]) * (math.pi / chi) / 2
        # sigma+ e^{-i phi} + sigma- e^{i phi} = cos(phi) sigma^x + sin(phi) sigma^y
        flip = -1j * (math.cos(phi) * PAULI["x"] + math.sin(phi) * PAULI["y"])
        return flip if k == "F" else flip.conj().T
    return _LOCAL[k].copy()


def pulse_unitary(spec: PulseSpec, N: int, omega_s=None, chi: float | None = None) -> np.ndarray:
    """Dense 2^N unitary of ``spec`` (identity on sites outside its subset)."""
    sites = resolve_subset(spec.subset, N)
    U = np.eye(2**N, dtype=complex)
    return apply_pulse(spec, U, N, omega_s=omega_s, chi=chi, sites=sites)


def apply_local(M: np.ndarray, N: int, ops: Mapping[int, np.ndarray]) -> np.ndarray:
    """Left-multiply ``M`` (2^N x K) by a tensor product of 2x2 site factors."""
    K = M.shape[1]
    T = M.reshape((2,) * N + (K,))
    for site, op in ops.items():
        T = np.moveaxis(np.tensordot(op, T, axes=([1], [site - 1])), 0, site - 1)
    return T.reshape(2**N, K)


def apply_pulse(spec: PulseSpec, M: np.ndarray, N: int, omega_s=None, chi=None, sites=None) -> np.ndarray:
    if sites is None:
        sites = resolve_subset(spec.subset, N)
    if spec.kind == "X":
        rows, _ = pauli_action(N, [(s, "x") for s in sites])
        out = M[rows]  # sigma^x strings are self-inverse permutations
        if spec.physical_phase:
            out = out * (-1j) ** len(sites)
        return out
    ops = {s: local_matrix(spec, s, omega_s, chi) for s in sites}
    return apply_local(M, N, ops)


def flip_state(N: int, sites: Iterable[int], state: int) -> int:
    """Basis index reached by flipping ``sites`` of basis state ``state``."""
    mask = 0
    for s in sites:
        mask |= 1 << (N - s)
    return state ^ mask


def basis_label(N: int, index: int) -> str:
    b = bits(N)[:, index]
    return "".join("d" if v else "u" for v in b)


# -- drive fields ------------------------------------------------------------


@dataclass(frozen=True)
class DriveField:
    """Pulse and transverse-drive amplitudes (tesla) and the induced rates.

    chi = g|e| b_p / (2 m_e) is the Rabi rate of a pulse, eta = g|e| b_s /
    (4 m_e) the strength of the effective transverse field eta * sum sigma^x.
    """

    b_p: float = 0.0
    b_s: float = 0.0
    g: float = 2.002
    chi: float = field(init=False)
    eta: float = field(init=False)

    def __post_init__(self):
        if self.b_p < 0 or self.b_s < 0:
            raise NonPositiveInput("drive amplitudes must be nonnegative")
        k = load_constants()
        object.__setattr__(self, "chi", self.g * k["e"] * self.b_p / (2 * k["m_e"]))
        object.__setattr__(self, "eta", self.g * k["e"] * self.b_s / (4 * k["m_e"]))

    @classmethod
    def from_rates(cls, chi: float = 0.0, eta: float = 0.0, g: float = 2.002) -> "DriveField":
        k = load_constants()
        return cls(b_p=2 * k["m_e"] * chi / (g * k["e"]), b_s=4 * k["m_e"] * eta / (g * k["e"]), g=g)

    @property
    def flip_time(self) -> float:
        """Duration pi / chi of a spin-flip pulse."""
        return math.pi / self.chi if self.chi else math.inf


# -- Rabi integrator -----------------------------------------------------------


def rabi_evolve(
    state: np.ndarray,
    d: DriveField,
    omega: float,
    theta: float,
    duration: float,
    omega_s: Sequence[float],
    *,
    frame: str = "lab",
    couplings: CouplingMatrix | None = None,
    rtol: float = 1e-10,
    atol: float = 1e-12,
) -> np.ndarray:
    """Integrate the Schroedinger equation under a rotating pulse field.

    The lab-frame Hamiltonian is
    sum_j (omega_s_j / 2) sigma^z_j
    + (chi/2) sum_j [sigma+_j e^{-i(omega t + theta)} + h.c.],
    optionally plus sum_{i<j} J^z_ij sigma^z_i sigma^z_j from ``couplings``.
    With ``frame="ip"`` the integration runs in the interaction picture with
    respect to the Zeeman term, so resonant spins see a static drive.
    """
    if duration < 0:
        raise NonPositiveInput("duration must be >= 0")
    psi0 = np.asarray(state, dtype=complex)
    N = int(round(math.log2(psi0.size)))
    if 2**N != psi0.size:
        raise NonPositiveInput("state length must be a power of two")
    if duration == 0:
        return psi0.copy()
    ws = np.broadcast_to(np.asarray(omega_s, dtype=float), (N,))

    static = np.zeros((2**N, 2**N), dtype=complex)
    if frame == "lab":
        static += field_operator(N, ws / 2, "z")
        detune = np.full(N, -omega)
    elif frame == "ip":
        detune = ws - omega
    else:
        raise NonPositiveInput(f"frame must be 'lab' or 'ip', got {frame!r}")
    if couplings is not None:
        static += coupling_operator(couplings.Jz, "z")

    sig_plus = np.array(
        [0.5 * (pauli_string(N, [(j, "x")]) + 1j * pauli_string(N, [(j, "y")])) for j in range(1, N + 1)]
    )
    half_chi = d.chi / 2

    def rhs(t, psi):
        c = half_chi * np.exp(1j * (detune * t - theta))
        A = np.tensordot(c, sig_plus, axes=1)
        H = static + A + A.conj().T
        return -1j * (H @ psi)

    sol = solve_ivp(rhs, (0.0, duration), psi0, method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise StepFailure(sol.message)
    return sol.y[:, -1]

