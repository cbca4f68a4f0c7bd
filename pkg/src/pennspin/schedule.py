"""Pulse-schedule intermediate representation.

A schedule is a time-ordered list of instantaneous :class:`Pulse` steps and
:class:`Free` evolution intervals. Free steps evolve under the native
Hamiltonian of the schedule: ``"ip"`` means H^z (+ eta sum sigma^x when the
transverse drive is on), ``"lab"`` means the full uniform-field spin
Hamiltonian H_0 + H_c.

Two kinds of Free step are *shaped*: ``reverse`` (evolution under minus the
generator) and ``bands`` (only selected neighbour bands of H^z, with weights).
They stand for refocusing sub-sequences built from subset spin flips.
:meth:`PulseSchedule.expanded` substitutes those sub-sequences, which is also
what :attr:`PulseSchedule.pulse_count` counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import ParseError, UnsupportedVariant
from .pulses import INVERSE_KIND, PULSE_KINDS, PulseSpec, odd_sites, pair_class

FORMAT_TAG = "# pennspin schedule v1"


@dataclass(frozen=True)
class Pulse:
    kind: str
    sites: tuple[int, ...] | None = None  # None: every site

    def __post_init__(self):
        if self.kind not in PULSE_KINDS or self.kind == "R":
            raise ValueError(f"unsupported schedule pulse kind {self.kind!r}")
        if self.sites is not None:
            object.__setattr__(self, "sites", tuple(sorted(int(s) for s in self.sites)))
            if not self.sites:
                raise ValueError("pulse on an empty subset")

    def spec(self, frame: str = "ip") -> PulseSpec:
        return PulseSpec(self.kind, self.sites, frame=frame)


@dataclass(frozen=True)
class Free:
    """Free evolution for ``duration`` seconds.

    ``drive`` is 0 (transverse drive off), 1 (on) or -1 (on with its phase
    shifted by pi, i.e. -eta sum sigma^x).
    """

    duration: float
    drive: int = 0
    reverse: bool = False
    bands: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "duration", float(self.duration))
        if not self.duration >= 0 or math.isinf(self.duration):
            raise ValueError(f"free duration must be finite and >= 0, got {self.duration}")
        if self.drive not in (-1, 0, 1):
            raise ValueError(f"drive must be -1, 0 or 1, got {self.drive}")
        if self.bands is not None:
            object.__setattr__(self, "bands", tuple(float(w) for w in self.bands))

    @property
    def shaped(self) -> bool:
        return self.reverse or self.bands is not None

    @property
    def generator(self) -> tuple:
        return (self.drive, self.reverse, self.bands)


Step = Pulse | Free


@dataclass(frozen=True)
class PulseSchedule:
    N: int
    steps: tuple = ()
    native: str = "ip"
    target: str = ""
    span: float = 0.0
    iterations: int = 1
    jz: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "span", float(self.span))
        object.__setattr__(self, "jz", float(self.jz))
        if self.native not in ("ip", "lab"):
            raise ValueError(f"native must be 'ip' or 'lab', got {self.native!r}")
        for st in self.steps:
            if isinstance(st, Pulse) and st.sites is not None and st.sites[-1] > self.N:
                raise ValueError(f"pulse {st} addresses a site beyond N={self.N}")

    # -- inspection --------------------------------------------------------

    @property
    def total_time(self) -> float:
        return math.fsum(st.duration for st in self.steps if isinstance(st, Free))

    @property
    def pulses(self) -> list[Pulse]:
        return [st for st in self.steps if isinstance(st, Pulse)]

    @property
    def pulse_count(self) -> int:
        """Pulses of the physically realised (expanded, fused) schedule."""
        return len(self.expanded().pulses)

    @property
    def has_shaped_steps(self) -> bool:
        return any(isinstance(st, Free) and st.shaped for st in self.steps)

    # -- transformations ---------------------------------------------------

    def with_steps(self, steps: Iterable) -> "PulseSchedule":
        return replace(self, steps=tuple(steps))

    def repeat(self, m: int) -> "PulseSchedule":
        if m < 1:
            raise ValueError("iteration count must be >= 1")
        return replace(self, steps=self.steps * m, iterations=self.iterations * m).fused()

    def __add__(self, other: "PulseSchedule") -> "PulseSchedule":
        if other.N != self.N or other.native != self.native:
            raise ValueError("schedules act on different systems")
        return replace(self, steps=self.steps + other.steps, iterations=self.iterations + other.iterations)

    def fused(self) -> "PulseSchedule":
        return self.with_steps(fuse(self.steps, self.N))

    def expanded(self) -> "PulseSchedule":
        """Schedule with every shaped Free step replaced by its flip sequence."""
        out = []
        for st in self.steps:
            if isinstance(st, Free) and st.shaped:
                out.extend(expand_shaped(st, self.N))
            else:
                out.append(st)
        return self.with_steps(fuse(out, self.N))

    # -- text format -------------------------------------------------------

    def export(self) -> str:
        lines = [
            FORMAT_TAG,
            f"N {self.N}",
            f"NATIVE {self.native}",
            f"JZ {self.jz!r}",
            f"TARGET {self.target or '-'}",
            f"SPAN {self.span!r}",
            f"ITERATIONS {self.iterations}",
            f"STEPS {len(self.steps)}",
        ]
        for st in self.steps:
            if isinstance(st, Pulse):
                sub = "all" if st.sites is None else ",".join(map(str, st.sites))
                lines.append(f"PULSE {st.kind} {sub}")
            else:
                line = f"FREE {st.duration!r} {st.drive}"
                if st.reverse:
                    line += " REV"
                if st.bands is not None:
                    line += " BANDS " + ",".join(repr(w) for w in st.bands)
                lines.append(line)
        lines.append("END")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "PulseSchedule":
        return parse_schedule(text)


# -- fusion ------------------------------------------------------------------


def _sites(p: Pulse, N: int) -> frozenset:
    return frozenset(range(1, N + 1)) if p.sites is None else frozenset(p.sites)


def _make_pulse(kind: str, sites: frozenset, N: int) -> Pulse:
    return Pulse(kind, None if len(sites) == N else tuple(sorted(sites)))


def fuse(steps: Sequence, N: int) -> list:
    """Drop empty intervals, merge equal-generator intervals and fuse pulses.

    Consecutive subset flips combine into one flip on the symmetric
    difference of their subsets (sigma^x squares to one); a pulse directly
    followed by its inverse on the same subset cancels.
    """
    out: list = []
    for st in steps:
        if isinstance(st, Free):
            if st.duration == 0.0:
                continue
            if out and isinstance(out[-1], Free) and out[-1].generator == st.generator:
                out[-1] = replace(out[-1], duration=out[-1].duration + st.duration)
            else:
                out.append(st)
            continue
        if out and isinstance(out[-1], Pulse):
            prev = out[-1]
            if prev.kind == "X" and st.kind == "X":
                merged = _sites(prev, N) ^ _sites(st, N)
                out.pop()
                if merged:
                    out.append(_make_pulse("X", merged, N))
                continue
            if INVERSE_KIND.get(prev.kind) == st.kind and _sites(prev, N) == _sites(st, N):
                out.pop()
                continue
        out.append(st)
    return out


# -- shaped-step realisation -------------------------------------------------


def _flip(sites) -> Pulse:
    return Pulse("X", tuple(sites))


def sign_inversion_steps(duration: float, drive: int, N: int) -> list:
    """Flip sequence evolving under about minus H^z for ``duration``.

    Three native intervals of ``duration`` each, conjugated by the odd-site
    and pair-class flips, give -(H^z_1 + H^z_2 + H^z_3) + 3 H^z_4 - ... .
    The drive is kept on only in the first interval so that its net action
    is ``drive * eta * duration``.
    """
    o, c1, c2 = odd_sites(N), pair_class(N, 1), pair_class(N, 2)
    return [
        _flip(o), Free(duration, drive), _flip(o),
        _flip(c1), Free(duration, 0), _flip(o), Free(duration, 0), _flip(c2),
    ]  # fmt: skip


def even_band_steps(duration: float, drive: int, N: int) -> list:
    """Three-pulse flip sequence giving sum_k (-1)^k H^z_{2k} for ``duration``."""
    o, c1, c2 = odd_sites(N), pair_class(N, 1), pair_class(N, 2)
    half = duration / 2
    return [_flip(c1), Free(half, drive), _flip(o), Free(half, drive), _flip(c2)]


def expand_shaped(st: Free, N: int) -> list:
    if st.bands is None:
        inner = [Free(st.duration, st.drive)]
    elif tuple(st.bands[:2]) == (0.0, -1.0) and not any(st.bands[2:]):
        inner = even_band_steps(st.duration, st.drive, N)
    else:
        raise UnsupportedVariant(f"no flip sequence realises band weights {st.bands}")
    if not st.reverse:
        return inner
    out = []
    for piece in inner:
        if isinstance(piece, Free):
            out.extend(sign_inversion_steps(piece.duration, -piece.drive, N))
        else:
            out.append(piece)
    return out


# -- parsing -----------------------------------------------------------------

_HEADER = ("N", "NATIVE", "JZ", "TARGET", "SPAN", "ITERATIONS", "STEPS")


def parse_schedule(text: str) -> PulseSchedule:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != FORMAT_TAG:
        raise ParseError("missing format tag", 1)
    head = {}
    for k, key in enumerate(_HEADER):
        lineno = k + 2
        if lineno > len(lines):
            raise ParseError(f"file ends before header field {key}", lineno)
        parts = lines[lineno - 1].split(" ", 1)
        if len(parts) != 2 or parts[0] != key:
            raise ParseError(f"expected header field {key}", lineno)
        head[key] = parts[1]
    try:
        N = int(head["N"])
        jz = float(head["JZ"])
        span = float(head["SPAN"])
        iterations = int(head["ITERATIONS"])
        nsteps = int(head["STEPS"])
    except ValueError as exc:
        raise ParseError(f"bad header value: {exc}") from None

    steps = []
    first = len(_HEADER) + 2
    for k in range(nsteps):
        lineno = first + k
        if lineno > len(lines):
            raise ParseError(f"file truncated: step {k + 1} of {nsteps} missing", lineno)
        steps.append(_parse_step(lines[lineno - 1], k + 1, lineno, N))
    end = first + nsteps
    if end > len(lines):
        raise ParseError("file truncated: missing END", end)
    if lines[end - 1] != "END":
        raise ParseError(f"expected END, got {lines[end - 1]!r}", end)
    if len(lines) > end:
        raise ParseError("trailing content after END", end + 1)
    try:
        return PulseSchedule(
            N=N,
            steps=steps,
            native=head["NATIVE"],
            target="" if head["TARGET"] == "-" else head["TARGET"],
            span=span,
            iterations=iterations,
            jz=jz,
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def _parse_step(line: str, index: int, lineno: int, N: int):
    tok = line.split(" ")
    try:
        if tok[0] == "PULSE" and len(tok) == 3:
            sites = None if tok[2] == "all" else tuple(int(s) for s in tok[2].split(","))
            if sites is not None and (min(sites) < 1 or max(sites) > N):
                raise ValueError(f"site outside 1..{N}")
            return Pulse(tok[1], sites)
        if tok[0] == "FREE" and len(tok) >= 3:
            duration = float(tok[1])
            if duration < 0:
                raise ValueError(f"negative FREE duration {tok[1]}")
            drive = int(tok[2])
            rest = tok[3:]
            reverse = False
            bands = None
            if rest[:1] == ["REV"]:
                reverse = True
                rest = rest[1:]
            if rest[:1] == ["BANDS"] and len(rest) == 2:
                bands = tuple(float(w) for w in rest[1].split(","))
                rest = []
            if rest:
                raise ValueError(f"unexpected tokens {rest}")
            return Free(duration, drive, reverse, bands)
    except ValueError as exc:
        raise ParseError(f"step {index}: {exc}", lineno) from None
    raise ParseError(f"step {index}: cannot parse {line!r}", lineno)
