"""Scenario configuration files with explicit physical units.

A scenario is an INI-style file with ``[trap]``, ``[target]``, ``[verify]``
and ``[output]`` sections. Every physical quantity carries a unit suffix;
cyclic units (Hz, kHz, MHz, GHz) are converted to angular frequency.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

from .compiler import TargetSpec, Variant
from .errors import ConfigError, PennspinError

TWO_PI = 2 * math.pi

UNITS = {
    "frequency": {
        "rad/s": 1.0, "1/s": 1.0, "s^-1": 1.0,
        "Hz": TWO_PI, "kHz": TWO_PI * 1e3, "MHz": TWO_PI * 1e6, "GHz": TWO_PI * 1e9,
    },
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9},
    "gradient": {"T/m": 1.0},
    "field": {"T": 1.0, "mT": 1e-3},
    "voltage": {"V": 1.0, "mV": 1e-3},
}  # fmt: skip

_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(\S*)\s*$")


def parse_quantity(text: str, kind: str, name: str = "value") -> float:
    """Parse ``"160 MHz"``-style text into SI (angular for frequencies)."""
    m = _QUANTITY.match(text)
    if not m:
        raise ConfigError(f"{name}: cannot parse {text!r} as a number with a unit")
    value, unit = float(m.group(1)), m.group(2)
    if kind == "dimensionless":
        if unit:
            raise ConfigError(f"{name}: expected a plain number, got unit {unit!r}")
        return value
    table = UNITS[kind]
    if not unit:
        raise ConfigError(f"{name}: missing unit (one of {', '.join(table)})")
    if unit not in table:
        raise ConfigError(f"{name}: unit {unit!r} is not a {kind} unit (one of {', '.join(table)})")
    return value * table[unit]


def _number_list(text: str, name: str, cast=float) -> tuple:
    try:
        vals = tuple(cast(x) for x in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{name}: expected a list of numbers, got {text!r}") from None
    if not vals:
        raise ConfigError(f"{name}: list must not be empty")
    return vals


@dataclass(frozen=True)
class TrapSection:
    N: int
    omega_s: float
    omega_z: float
    b: float
    d: float
    g: float = 2.002
    kbar: float = 0.0
    jz_nn: float | None = None


@dataclass(frozen=True)
class VerifySection:
    n: int = 6
    jzt: tuple[float, ...] = (0.05, 0.1, 0.2, 0.3, 0.4)
    m: int | None = None
    error_target: float = 0.01
    f_n: tuple[int, ...] = ()
    f_jzt: float = 0.25


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    trap: TrapSection
    variant: Variant
    order: int
    T: float
    eta_over_jz: float = 0.0
    eta: float | None = None
    tau: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    ratio: float = 0.0
    verify: VerifySection = field(default_factory=VerifySection)
    outputs: dict = field(default_factory=dict)

    def eta_for(self, jz: float) -> float:
        return self.eta if self.eta is not None else self.eta_over_jz * jz

    def target(self, jz: float, span: float, iterations: int = 1) -> TargetSpec:
        return TargetSpec(
            self.variant,
            span=span,
            iterations=iterations,
            order=self.order,
            ratio=self.ratio,
            tau=self.tau,
            eta=self.eta_for(jz),
        )


DEFAULT_OUTPUTS = {
    "schedule": "schedule.txt",
    "report": "report.csv",
    "summary": "summary.json",
    "plot": "plot.dat",
}

_KNOWN = {
    "trap": {"n", "omega_s", "omega_z", "b", "d", "g", "kbar", "jz_nn"},
    "target": {"variant", "order", "eta", "eta_over_jz", "tau", "ratio", "t"},
    "verify": {"n", "jzt", "m", "error_target", "f_n", "f_jzt"},
    "output": set(DEFAULT_OUTPUTS),
}


def _get(sec, key: str, section: str, required: bool = True):
    if key not in sec:
        if required:
            raise ConfigError(f"[{section}] {key}: required field is missing")
        return None
    return sec[key]


def load_config(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario file."""
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return _from_parser(cp, path.stem)


def parse_config(text: str, name: str = "scenario") -> ScenarioConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return _from_parser(cp, name)


def _from_parser(cp: configparser.ConfigParser, name: str) -> ScenarioConfig:
    for section in ("trap", "target"):
        if not cp.has_section(section):
            raise ConfigError(f"[{section}]: section is missing")
    for section in cp.sections():
        if section not in _KNOWN:
            raise ConfigError(f"[{section}]: unknown section")
        extra = set(cp[section]) - _KNOWN[section]
        if extra:
            raise ConfigError(f"[{section}] {sorted(extra)[0]}: unknown field")

    try:
        trap = _trap(cp["trap"])
        scenario = _target(cp["target"], trap, name)
        verify = _verify(cp["verify"]) if cp.has_section("verify") else VerifySection()
    except ConfigError:
        raise
    except (PennspinError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    outputs = dict(DEFAULT_OUTPUTS)
    if cp.has_section("output"):
        outputs.update(cp["output"])
    return ScenarioConfig(**{**scenario, "verify": verify, "outputs": outputs})


def _int(text: str, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{name}: expected an integer, got {text!r}") from None


def _trap(sec) -> TrapSection:
    q = parse_quantity
    N = _int(_get(sec, "n", "trap"), "[trap] N")
    if N < 2:
        raise ConfigError("[trap] N: must be >= 2")
    jz = sec.get("jz_nn")
    out = TrapSection(
        N=N,
        omega_s=q(_get(sec, "omega_s", "trap"), "frequency", "[trap] omega_s"),
        omega_z=q(_get(sec, "omega_z", "trap"), "frequency", "[trap] omega_z"),
        b=q(_get(sec, "b", "trap"), "gradient", "[trap] b"),
        d=q(_get(sec, "d", "trap"), "length", "[trap] d"),
        g=q(sec.get("g", "2.002"), "dimensionless", "[trap] g"),
        kbar=q(sec.get("kbar", "0"), "dimensionless", "[trap] kbar"),
        jz_nn=None if jz is None else q(jz, "frequency", "[trap] jz_nn"),
    )
    for key in ("omega_s", "omega_z", "d"):
        if getattr(out, key) <= 0:
            raise ConfigError(f"[trap] {key}: must be positive")
    if out.b < 0 or out.kbar < 0:
        raise ConfigError("[trap] b and kbar must be >= 0")
    if out.jz_nn is not None and out.jz_nn <= 0:
        raise ConfigError("[trap] jz_nn: must be positive")
    return out


def _target(sec, trap: TrapSection, name: str) -> dict:
    raw = _get(sec, "variant", "target")
    try:
        variant = Variant(raw)
    except ValueError:
        raise ConfigError(f"[target] variant: unknown variant {raw!r}") from None
    order = _int(sec.get("order", "1"), "[target] order")
    if order not in (1, 4):
        raise ConfigError("[target] order: must be 1 or 4")
    T = parse_quantity(_get(sec, "t", "target"), "time", "[target] T")
    if T <= 0:
        raise ConfigError("[target] T: must be positive")
    if "eta" in sec and "eta_over_jz" in sec:
        raise ConfigError("[target] eta: give either eta or eta_over_jz, not both")
    eta = parse_quantity(sec["eta"], "frequency", "[target] eta") if "eta" in sec else None
    eta_over = parse_quantity(sec.get("eta_over_jz", "0"), "dimensionless", "[target] eta_over_jz")
    tau = _number_list(sec.get("tau", "0.3333333333333333 0.3333333333333333 0.3333333333333334"), "[target] tau")
    if len(tau) != 3:
        raise ConfigError("[target] tau: expected three weights")
    ratio = parse_quantity(sec.get("ratio", "0"), "dimensionless", "[target] ratio")
    if not -1 <= ratio <= 1:
        raise ConfigError("[target] ratio: must lie in [-1, 1]")
    if (eta is not None and eta < 0) or eta_over < 0:
        raise ConfigError("[target] eta: must be >= 0")
    return dict(name=name, trap=trap, variant=variant, order=order, T=T, eta=eta,
                eta_over_jz=eta_over, tau=tau, ratio=ratio)  # fmt: skip


def _verify(sec) -> VerifySection:
    kw = {}
    if "n" in sec:
        kw["n"] = _int(sec["n"], "[verify] n")
    if "jzt" in sec:
        kw["jzt"] = _number_list(sec["jzt"], "[verify] jzt")
        if any(x <= 0 for x in kw["jzt"]):
            raise ConfigError("[verify] jzt: values must be positive")
    if "m" in sec and sec["m"].strip() != "auto":
        kw["m"] = _int(sec["m"], "[verify] m")
        if kw["m"] < 1:
            raise ConfigError("[verify] m: must be >= 1")
    if "error_target" in sec:
        kw["error_target"] = parse_quantity(sec["error_target"], "dimensionless", "[verify] error_target")
        if kw["error_target"] <= 0:
            raise ConfigError("[verify] error_target: must be positive")
    if "f_n" in sec:
        kw["f_n"] = _number_list(sec["f_n"], "[verify] f_n", int)
    if "f_jzt" in sec:
        kw["f_jzt"] = parse_quantity(sec["f_jzt"], "dimensionless", "[verify] f_jzt")
    return VerifySection(**kw)
