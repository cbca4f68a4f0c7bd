"""Compilation of target spin Hamiltonians into pulse schedules."""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import NonDiagonalSchedule, SpanTooLong, SpecMismatch, UnsupportedVariant
from .operators import (
    HamiltonianKind,
    HamiltonianSpec,
    Propagator,
    build_hamiltonian,
    coupling_operator,
    field_operator,
)
from .physics import CouplingMatrix
from .pulses import DriveField, apply_pulse, odd_sites, pair_class, quad_class, triple_class
from .schedule import Free, Pulse, PulseSchedule, fuse

SPAN_WARN = 1.0

# Fourth-order product S = Sb1 S1 Sb1 S-2 Sb1 Sb1 Sb1 Sb1 S1 Sb1 S1 S1 S1 S1 Sb-2 S1 Sb1 S1,
# written as an operator product (rightmost factor acts first). Entries are
# (reversed_order, k) for S_k / Sbar_k with step fraction k/12.
FOURTH_ORDER = (
    (True, 1), (False, 1), (True, 1), (False, -2), (True, 1), (True, 1),
    (True, 1), (True, 1), (False, 1), (True, 1), (False, 1), (False, 1),
    (False, 1), (False, 1), (True, -2), (False, 1), (True, 1), (False, 1),
)  # fmt: skip


class Variant(str, enum.Enum):
    FIELD_SCALED = "FieldScaled"
    MIXED_XYZ = "MixedXYZ"
    ISING_DIPOLE = "IsingDipole"
    XY_ROTATED = "XYRotated"
    NN_ISING = "NNIsing"
    EQUAL_FIRST_SECOND = "EqualFirstSecond"
    SIGN_INVERTED = "SignInverted"
    SUPPRESS_2 = "Suppress2"
    SUPPRESS_23 = "Suppress23"
    SUPPRESS_2TO6 = "Suppress2to6"
    # single refocusing identities the composite sequences are built from
    ODD_INVERTED = "OddInverted"
    EVEN_ALTERNATING = "EvenAlternating"
    TRIPLE_AVERAGED = "TripleAveraged"
    QUAD_AVERAGED = "QuadAveraged"


TROTTER_VARIANTS = frozenset({Variant.MIXED_XYZ, Variant.XY_ROTATED, Variant.NN_ISING})


def _tri(n: int, L: int) -> float:
    """Shift-averaged sign correlation of a flip pattern of L on / L off."""
    r = n % (2 * L)
    return 1.0 - 2.0 * min(r, 2 * L - r) / L


# Band weights w_n of the exact effective Hamiltonian sum_n w_n H^z_n, per unit
# of the nominal span t.
_EXACT_WEIGHTS = {
    Variant.ODD_INVERTED: lambda n: _tri(n, 1),
    Variant.EVEN_ALTERNATING: lambda n: _tri(n, 2),
    Variant.TRIPLE_AVERAGED: lambda n: _tri(n, 3),
    Variant.QUAD_AVERAGED: lambda n: 2 * _tri(n, 4),
    Variant.EQUAL_FIRST_SECOND: lambda n: 1 + 7 / 9 * _tri(n, 1),
    Variant.SIGN_INVERTED: lambda n: _tri(n, 1) + 2 * _tri(n, 2),
    Variant.SUPPRESS_2: lambda n: 1 + _tri(n, 2),
    Variant.SUPPRESS_23: lambda n: 1 + _tri(n, 3) + 2 / 3 * _tri(n, 2),
    Variant.SUPPRESS_2TO6: lambda n: 1 + 2 * _tri(n, 4) + _tri(n, 2),
}

# Leading terms as usually quoted for each sequence; higher bands are dropped.
STATED_WEIGHTS = {
    Variant.ODD_INVERTED: None,
    Variant.EVEN_ALTERNATING: None,
    Variant.EQUAL_FIRST_SECOND: (2 / 9, 16 / 9),
    Variant.SIGN_INVERTED: (-1.0, -1.0, -1.0),
    Variant.SUPPRESS_2: (1.0, 0.0, 1.0),
    Variant.SUPPRESS_23: (4 / 3, 0.0, 0.0, 4 / 3),
    Variant.SUPPRESS_2TO6: (2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0),
}

EXACT_VARIANTS = frozenset(_EXACT_WEIGHTS)


@dataclass(frozen=True)
class TargetSpec:
    """What to simulate and how.

    ``span`` is the nominal evolution time t of one iteration, ``iterations``
    the repetition count m. ``eta`` is the transverse-field strength of the
    target Hamiltonian; for XYRotated and NNIsing the drive contributes
    eta/2 to each Trotter block, as in the block definitions used there.
    """

    variant: Variant
    span: float = 0.0
    iterations: int = 1
    order: int = 1
    ratio: float = 0.0
    tau: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    eta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "tau", tuple(float(x) for x in self.tau))
        if self.order not in (1, 4):
            raise UnsupportedVariant(f"trotter order must be 1 or 4, got {self.order}")
        if not -1.0 <= self.ratio <= 1.0:
            raise SpecMismatch(f"field ratio must lie in [-1, 1], got {self.ratio}")
        if len(self.tau) != 3 or any(x < 0 for x in self.tau):
            raise SpecMismatch("tau must be three nonnegative weights")
        if self.variant is Variant.MIXED_XYZ and not math.isclose(sum(self.tau), 1.0, abs_tol=1e-12):
            raise SpecMismatch("MixedXYZ weights must sum to 1")
        if self.span < 0 or self.iterations < 1 or self.eta < 0:
            raise SpecMismatch("span and eta must be >= 0 and iterations >= 1")

    @property
    def drive_eta(self) -> float:
        """Strength the b_s drive must produce for this target."""
        if self.variant in (Variant.XY_ROTATED, Variant.NN_ISING):
            return self.eta / 2
        return self.eta

    @property
    def native(self) -> str:
        return "lab" if self.variant is Variant.FIELD_SCALED else "ip"

    def drive_field(self) -> DriveField:
        return DriveField.from_rates(eta=self.drive_eta)


def exact_band_weights(variant: Variant, N: int) -> tuple[float, ...]:
    """Band weights w_1..w_{N-1} of an exact refocusing sequence."""
    fn = _EXACT_WEIGHTS.get(Variant(variant))
    if fn is None:
        raise UnsupportedVariant(f"{variant} has no exact band expansion")
    return tuple(fn(n) for n in range(1, N))


# -- building blocks ----------------------------------------------------------


def _flip(sites) -> Pulse:
    return Pulse("X", tuple(sites))


def _conjugated(flip_sites, duration: float) -> list:
    return [_flip(flip_sites), Free(duration), _flip(flip_sites)]


def _refocusing_steps(variant: Variant, t: float, N: int) -> list:
    """One iteration of an exact flip sequence, in time order."""
    o = odd_sites(N)
    c1, c2 = pair_class(N, 1), pair_class(N, 2)

    def even(half):  # c2 e^{-iH half} o e^{-iH half} c1
        return [_flip(c1), Free(half), _flip(o), Free(half), _flip(c2)]

    def triples(dt):
        return [s for k in (1, 2, 3) for s in _conjugated(triple_class(N, k), dt)]

    def quads(dt):
        return [s for k in (1, 2, 3, 4) for s in _conjugated(quad_class(N, k), dt)]

    v = variant
    if v is Variant.ODD_INVERTED:
        return _conjugated(o, t)
    if v is Variant.EVEN_ALTERNATING:
        return even(t / 2)
    if v is Variant.TRIPLE_AVERAGED:
        return triples(t / 3)
    if v is Variant.QUAD_AVERAGED:
        return quads(t / 2)
    if v is Variant.EQUAL_FIRST_SECOND:
        return [Free(t), _flip(o), Free(7 * t / 9), _flip(o)]
    if v is Variant.SIGN_INVERTED:
        return _conjugated(o, t) + even(t)
    if v is Variant.SUPPRESS_2:
        return [Free(t)] + even(t / 2)
    if v is Variant.SUPPRESS_23:
        return [Free(t)] + triples(t / 3) + even(t / 3)
    if v is Variant.SUPPRESS_2TO6:
        return [Free(t)] + quads(t / 2) + even(t / 2)
    raise UnsupportedVariant(str(v))


@dataclass(frozen=True)
class _Block:
    """e^{-i s A} realised as pre-pulses, one Free interval, post-pulses."""

    free: Free
    pre: tuple = ()
    post: tuple = ()

    def steps(self, duration: float, reverse: bool) -> list:
        return [*self.pre, replace(self.free, duration=duration, reverse=reverse), *self.post]


def trotter_blocks(target: TargetSpec) -> list[tuple[float, _Block]]:
    """(tau_j, block_j) pairs whose weighted sum is the target Hamiltonian."""
    v = target.variant
    drive = 1 if target.drive_eta > 0 else 0
    a1 = _Block(Free(0.0, drive))
    if v is Variant.MIXED_XYZ:
        xx = _Block(Free(0.0), (Pulse("GyDag"),), (Pulse("Gy"),))
        yy = _Block(Free(0.0), (Pulse("GxDag"),), (Pulse("Gx"),))
        pairs = list(zip(target.tau, (a1, xx, yy)))
        return [(tau, b) for tau, b in pairs if tau > 0]
    if v is Variant.XY_ROTATED:
        return [(0.5, a1), (0.5, _Block(Free(0.0, drive), (Pulse("GxDag"),), (Pulse("Gx"),)))]
    if v is Variant.NN_ISING:
        return [(0.5, a1), (0.5, _Block(Free(0.0, drive, bands=(0.0, -1.0))))]
    raise UnsupportedVariant(f"{v} is not a Trotter target")


def product_formula(n_blocks: int, order: int) -> list[tuple[int, float]]:
    """Time-ordered (block index, signed fraction of tau_j t) factors."""
    if order == 1:
        ops = [(j, 1.0) for j in range(n_blocks)]
    elif order == 4:
        ops = []
        for bar, k in FOURTH_ORDER:
            idx = range(n_blocks - 1, -1, -1) if bar else range(n_blocks)
            ops.extend((j, k / 12) for j in idx)
    else:
        raise UnsupportedVariant(f"order {order}")
    timeline = ops[::-1]
    merged: list[list] = []
    for j, frac in timeline:
        if merged and merged[-1][0] == j and (merged[-1][1] > 0) == (frac > 0):
            merged[-1][1] += frac
        else:
            merged.append([j, frac])
    return [(j, f) for j, f in merged]


def _trotter_steps(target: TargetSpec) -> list:
    blocks = trotter_blocks(target)
    steps = []
    for j, frac in product_formula(len(blocks), target.order):
        tau, block = blocks[j]
        steps.extend(block.steps(abs(frac) * tau * target.span, frac < 0))
    return steps


def compile(target: TargetSpec, c: CouplingMatrix) -> PulseSchedule:  # noqa: A001
    """Pulse schedule realising ``target`` on the chain described by ``c``."""
    N = c.N
    t = target.span
    v = target.variant
    if v in TROTTER_VARIANTS and c.jz_nn * t > SPAN_WARN:
        warnings.warn(
            f"J^z t = {c.jz_nn * t:.3g} exceeds {SPAN_WARN}: short-time expansions may fail",
            SpanTooLong,
            stacklevel=2,
        )
    if v is Variant.FIELD_SCALED:
        t1 = t * (1 + target.ratio) / 2
        t2 = t * (1 - target.ratio) / 2
        steps = [Free(t1), Pulse("F"), Free(t2), Pulse("Finv")]
    elif v is Variant.ISING_DIPOLE:
        steps = [Free(t, 1 if target.eta > 0 else 0)]
    elif v in TROTTER_VARIANTS:
        steps = _trotter_steps(target)
    elif v in EXACT_VARIANTS:
        steps = _refocusing_steps(v, t, N)
    else:  # pragma: no cover - enum is closed
        raise UnsupportedVariant(str(v))
    one = PulseSchedule(
        N=N,
        steps=fuse(steps, N),
        native=target.native,
        target=v.value,
        span=t,
        iterations=1,
        jz=c.jz_nn,
    )
    return one.repeat(target.iterations) if target.iterations > 1 else one


# -- target Hamiltonians ---------------------------------------------------------


def effective_hamiltonian(target: TargetSpec, c: CouplingMatrix) -> np.ndarray:
    """H_eff such that one iteration should equal exp(-i H_eff span)."""
    N = c.N
    v = target.variant
    if v is Variant.FIELD_SCALED:
        H0 = field_operator(N, c.omega_s / 2, "z")
        Hs = build_hamiltonian(HamiltonianSpec(HamiltonianKind.FULL_SPIN), c)
        return Hs + (target.ratio - 1) * H0
    if v is Variant.ISING_DIPOLE:
        return coupling_operator(c.Jz, "z") + field_operator(N, target.eta, "x")
    if v is Variant.MIXED_XYZ:
        spec = HamiltonianSpec(HamiltonianKind.MIXED_XYZ, tau=target.tau, eta=target.eta)
        return build_hamiltonian(spec, c)
    if v in TROTTER_VARIANTS:
        return sum(tau * block_hamiltonian(b.free, c, target.drive_eta, b) for tau, b in trotter_blocks(target))
    if v in EXACT_VARIANTS:
        return coupling_operator(c.Jz, "z", exact_band_weights(v, N))
    raise UnsupportedVariant(str(v))  # pragma: no cover


def free_generator(st: Free, c: CouplingMatrix, eta: float) -> np.ndarray:
    """Hamiltonian of a Free step in the interaction picture, sign of ``reverse`` excluded."""
    N = c.N
    H = coupling_operator(c.Jz, "z", st.bands)
    if st.drive and eta:
        H = H + field_operator(N, st.drive * eta, "x")
    return H


def block_hamiltonian(free: Free, c: CouplingMatrix, eta: float, block: _Block) -> np.ndarray:
    H = free_generator(free, c, eta)
    if not block.pre:
        return H
    # G H^z G^dagger maps sigma^z sigma^z onto sigma^y sigma^y (Gx) or
    # sigma^x sigma^x (Gy); the drive term commutes with both
    axis = {"Gx": "y", "Gy": "x"}[block.post[0].kind]
    H = coupling_operator(c.Jz, axis, free.bands)
    if free.drive and eta:
        H = H + field_operator(c.N, free.drive * eta, "x")
    return H


# -- evaluation -------------------------------------------------------------------


def schedule_unitary(
    s: PulseSchedule,
    c: CouplingMatrix,
    drive: DriveField | None = None,
    realization: str = "ideal",
) -> np.ndarray:
    """Time-ordered product of all step unitaries.

    ``realization="physical"`` first replaces shaped Free steps by their flip
    sequences (see :meth:`PulseSchedule.expanded`).
    """
    if s.N != c.N:
        raise SpecMismatch(f"schedule has N={s.N}, couplings N={c.N}")
    if realization == "physical":
        s = s.expanded()
    elif realization != "ideal":
        raise ValueError(f"unknown realization {realization!r}")
    N = c.N
    eta = drive.eta if drive is not None else 0.0
    chi = drive.chi if drive is not None else None
    frame = s.native
    props: dict = {}
    U = np.eye(2**N, dtype=complex)
    for st in s.steps:
        if isinstance(st, Pulse):
            U = apply_pulse(st.spec(frame), U, N, omega_s=c.omega_s, chi=chi)
            continue
        if frame == "lab":
            if st.shaped or st.drive:
                raise SpecMismatch("lab-frame schedules support plain free evolution only")
            key = "lab"
            if key not in props:
                props[key] = Propagator(build_hamiltonian(HamiltonianSpec(HamiltonianKind.FULL_SPIN), c))
        else:
            key = (st.drive, st.bands)
            if key not in props:
                props[key] = Propagator(free_generator(st, c, eta))
        U = props[key].apply(-st.duration if st.reverse else st.duration, U)
    return U


def effective_neighbor_strengths(s: PulseSchedule, c: CouplingMatrix) -> np.ndarray:
    """Effective coupling of each neighbour band n = 1..N-1 (rad/s).

    Phases are only defined modulo 2 pi, so the result is unambiguous while
    every accumulated pair phase |K_ij| * span * iterations stays below pi/4.

    The pair coefficient K_ij of exp(-i sum K_ij z_i z_j) is read off the
    diagonal phases, arg(U_{++} U_{--} / (U_{+-} U_{-+})) = -4 K_ij, with all
    other spins up; it is divided by the nominal evolution time
    span * iterations and averaged over the pairs of each band.
    """
    U = schedule_unitary(s, c)
    off = U - np.diag(np.diagonal(U))
    if np.max(np.abs(off)) > 1e-10:
        raise NonDiagonalSchedule("composed unitary is not diagonal in the computational basis")
    diag = np.diagonal(U)
    N = c.N
    elapsed = s.span * s.iterations
    if elapsed <= 0:
        raise SpecMismatch("schedule has zero nominal span")
    K = np.zeros((N, N))
    for i in range(N):
        for j in range(i + 1, N):
            bi, bj = 1 << (N - 1 - i), 1 << (N - 1 - j)
            ratio = diag[0] * diag[bi | bj] / (diag[bi] * diag[bj])
            K[i, j] = -np.angle(ratio) / 4
    return np.array([np.mean(np.diagonal(K, n)) / elapsed for n in range(1, N)])
