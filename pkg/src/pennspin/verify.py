"""Error measurement, scaling fits and iteration bounds for compiled schedules."""

from __future__ import annotations

import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from .compiler import EXACT_VARIANTS, TargetSpec, compile, effective_hamiltonian, schedule_unitary
from .errors import InsufficientPoints, NonPositiveInput, RuntimeGuard
from .operators import distances, expm
from .physics import CouplingMatrix

ORDER4_MAX_SITES = 12
CSV_HEADER = ("N", "t", "Jz", "raw_err", "phase_err", "exponent", "f_slope", "f_intercept", "m", "pulses")


def f_xy_published(N: float) -> float:
    """Published linear fit of the XY-model error prefactor."""
    return 0.25 * N - 0.85


def f_nn_published(N: float) -> float:
    """Published linear fit of the NN-Ising error prefactor."""
    return 0.015 * N - 0.035


@dataclass(frozen=True)
class ErrorPoint:
    N: int
    t: float
    jz: float
    raw: float
    phase: float


def _check_size(target: TargetSpec, N: int, max_n: int | None = None) -> None:
    if target.order == 4 and N > ORDER4_MAX_SITES:
        raise RuntimeGuard(f"order-4 sweeps are capped at N={ORDER4_MAX_SITES}, got N={N}")
    if max_n is not None and N > max_n:
        raise RuntimeGuard(f"N={N} exceeds the cap of {max_n}")


def sequence_error(
    target: TargetSpec,
    c: CouplingMatrix,
    t: float | None = None,
    realization: str = "ideal",
) -> ErrorPoint:
    """Distance between one compiled iteration and exp(-i H_eff t).

    ``t`` overrides the span stored in ``target``.
    """
    _check_size(target, c.N)
    if t is not None:
        target = TargetSpec(**{**asdict(target), "span": t, "iterations": 1})
    else:
        target = TargetSpec(**{**asdict(target), "iterations": 1})
    span = target.span
    U = schedule_unitary(compile(target, c), c, target.drive_field(), realization=realization)
    V = expm(effective_hamiltonian(target, c), span)
    raw, phase = distances(U, V)
    return ErrorPoint(c.N, span, c.jz_nn, raw, phase)


def fit_exponent(ts: Sequence[float], errs: Sequence[float]) -> tuple[float, float]:
    """Slope of log(err) against log(t) and its standard error."""
    ts = np.asarray(ts, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if len(ts) < 3:
        raise InsufficientPoints(f"need at least 3 points for a scaling fit, got {len(ts)}")
    if np.any(errs <= 0) or np.any(ts <= 0):
        raise NonPositiveInput("log-log fit needs strictly positive spans and errors")
    res = stats.linregress(np.log(ts), np.log(errs))
    return float(res.slope), float(res.stderr)


def trotter_sweep(target: TargetSpec, c: CouplingMatrix, spans: Iterable[float]) -> tuple[list[ErrorPoint], float, float]:
    """Error points over ``spans`` and the fitted exponent of the phase-optimised error."""
    pts = [sequence_error(target, c, t) for t in spans]
    slope, width = fit_exponent([p.t for p in pts], [p.phase for p in pts])
    return pts, slope, width


def fit_linear(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    if len(x) < 3:
        raise InsufficientPoints(f"need at least 3 points for a linear fit, got {len(x)}")
    res = stats.linregress(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    return float(res.slope), float(res.intercept)


def fN_points(
    target: TargetSpec,
    N_range: Sequence[int],
    t: float,
    couplings: CouplingMatrix | None = None,
    jz: float = 1.0,
) -> list[tuple[int, float]]:
    """(N, E_S / (J^z t)^5) for every N in ``N_range``.

    Couplings are the first N sites of ``couplings`` when given, otherwise a
    uniform dipolar chain with nearest-neighbour coupling ``jz``.
    """
    out = []
    for N in N_range:
        if not 2 <= N <= ORDER4_MAX_SITES:
            raise RuntimeGuard(f"f(N) sweeps support 2 <= N <= {ORDER4_MAX_SITES}, got {N}")
        c = couplings.truncated(N) if couplings is not None else CouplingMatrix.dipole_chain(N, jz)
        e = sequence_error(target, c, t).phase
        out.append((N, e / (c.jz_nn * t) ** 5))
    return out


def fit_fN(
    target: TargetSpec,
    N_range: Sequence[int],
    t: float,
    couplings: CouplingMatrix | None = None,
    jz: float = 1.0,
) -> tuple[float, float]:
    """Least-squares line through E_S / (J^z t)^5 against N."""
    if len(N_range) < 3:
        raise InsufficientPoints(f"need at least 3 chain lengths, got {len(N_range)}")
    pts = fN_points(target, N_range, t, couplings, jz)
    return fit_linear([p[0] for p in pts], [p[1] for p in pts])


def iterations_bound(jz: float, T: float, err_target: float, f_value: float) -> int:
    """Smallest m with (J^z T)^5 f / m^4 <= err_target (at least 1)."""
    if jz <= 0 or T <= 0 or err_target <= 0:
        raise NonPositiveInput("J^z, T and the error target must be positive")
    if f_value <= 0:
        return 1
    return max(1, math.ceil(((jz * T) ** 5 * f_value / err_target) ** 0.25))


def accumulation_check(target: TargetSpec, c: CouplingMatrix, t: float, m: int) -> tuple[float, list[float]]:
    """Error of the m-fold schedule and the per-iteration errors it is bounded by."""
    if m < 1:
        raise NonPositiveInput("m must be >= 1")
    _check_size(target, c.N)
    if target.order == 4 and m * 2 ** (c.N - 6) > 64:
        raise RuntimeGuard(f"m={m} at N={c.N} exceeds the accumulation runtime cap")
    single = TargetSpec(**{**asdict(target), "span": t, "iterations": 1})
    multi = TargetSpec(**{**asdict(target), "span": t, "iterations": m})
    drive = single.drive_field()
    H = effective_hamiltonian(single, c)
    U = schedule_unitary(compile(multi, c), c, drive)
    total = distances(U, expm(H, m * t))[1]
    # every iteration runs the same schedule, so each contributes the same E_S
    one = distances(schedule_unitary(compile(single, c), c, drive), expm(H, t))[1]
    return total, [one] * m


# -- report -------------------------------------------------------------------------


@dataclass
class VerificationReport:
    """Collected measurements of one verification run."""

    target: str
    points: list[ErrorPoint] = field(default_factory=list)
    exponent: float | None = None
    exponent_width: float | None = None
    f_points: list[tuple[int, float]] = field(default_factory=list)
    f_slope: float | None = None
    f_intercept: float | None = None
    f_range: tuple[int, ...] = ()
    m: int | None = None
    pulses: int | None = None
    canonical_error: float | None = None
    metadata: dict = field(default_factory=dict)
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        self.checks.append((name, bool(ok), detail))
        return bool(ok)

    @property
    def passed(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def to_csv(self) -> str:
        def fmt(x):
            return "" if x is None else repr(x)

        buf = io.StringIO()
        buf.write(",".join(CSV_HEADER) + "\n")
        tail = [self.exponent, self.f_slope, self.f_intercept, self.m, self.pulses]
        rows = self.points or [None]
        for p in rows:
            head = [None] * 5 if p is None else [p.N, p.t, p.jz, p.raw, p.phase]
            buf.write(",".join(fmt(x) for x in head + tail) + "\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "target": self.target,
            "metadata": self.metadata,
            "exponent": self.exponent,
            "exponent_width": self.exponent_width,
            "f_fit": {
                "slope": self.f_slope,
                "intercept": self.f_intercept,
                "N_range": list(self.f_range),
                "points": [[n, v] for n, v in self.f_points],
            },
            "iterations": self.m,
            "pulses": self.pulses,
            "budget": {"canonical_error": self.canonical_error},
            "checks": [{"name": n, "passed": ok, "detail": d} for n, ok, d in self.checks],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"

    def plot_data(self) -> str:
        """Columnar text: error against t, then the f(N) points and fit line."""
        lines = ["# error_vs_t", "# t phase_err raw_err"]
        lines += [f"{p.t!r} {p.phase!r} {p.raw!r}" for p in self.points]
        lines += ["", "# f_of_N", "# N f fit"]
        for n, v in self.f_points:
            fit = "nan" if self.f_slope is None else repr(self.f_slope * n + self.f_intercept)
            lines.append(f"{n} {v!r} {fit}")
        return "\n".join(lines) + "\n"


def exact_identity_error(variant, c: CouplingMatrix, t: float) -> float:
    """Phase-optimised error of an exact refocusing sequence (roundoff only)."""
    if variant not in EXACT_VARIANTS:
        raise NonPositiveInput(f"{variant} is not an exact refocusing sequence")
    return sequence_error(TargetSpec(variant, span=t), c).phase
