"""Command-line front end: ``pennspin compile|verify|report|roundtrip``."""

from __future__ import annotations

import argparse
import contextlib
import math
import random
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .compiler import EXACT_VARIANTS, TROTTER_VARIANTS, Variant, compile
from .config import ScenarioConfig, load_config
from .errors import PennspinError, RuntimeGuard
from .operators import MAX_SITES
from .physics import TrapParams, canonical_error_bound, coupling_constants, derive_frequencies
from .schedule import PulseSchedule
from .verify import (
    VerificationReport,
    f_nn_published,
    f_xy_published,
    fit_exponent,
    fN_points,
    fit_linear,
    iterations_bound,
    sequence_error,
)

DEFAULT_MAX_N = 12
MAX_ITERATIONS = 100_000
EXACT_TOL = 1e-10
EXPONENT_TOL = 0.3
F_FACTOR = 3.0
PULSE_BANDS = {Variant.XY_ROTATED: (2000, 6000), Variant.NN_ISING: (1000, 4000)}


# -- RNG guard -----------------------------------------------------------------------


class RandomnessUsed(PennspinError):
    pass


_NP_RNG_NAMES = ("default_rng", "seed", "rand", "randn", "random", "randint", "normal", "uniform", "choice", "RandomState")
_PY_RNG_NAMES = ("random", "seed", "randint", "uniform", "choice", "gauss", "shuffle")


@contextlib.contextmanager
def forbid_rng():
    """Make every common RNG entry point raise for the duration of the block."""

    def trap(*_, **__):
        raise RandomnessUsed("random number generator called in a --seedless run")

    saved = []
    for mod, names in ((np.random, _NP_RNG_NAMES), (random, _PY_RNG_NAMES)):
        for name in names:
            saved.append((mod, name, getattr(mod, name)))
            setattr(mod, name, trap)
    try:
        yield
    finally:
        for mod, name, fn in saved:
            setattr(mod, name, fn)


# -- scenario pipeline ------------------------------------------------------------------


def physical_couplings(cfg: ScenarioConfig):
    tr = cfg.trap
    params = TrapParams(N=tr.N, b=tr.b, d=tr.d, g=tr.g, overrides={"omega_z": tr.omega_z, "omega_s": tr.omega_s})
    freqs = derive_frequencies(params)
    c = coupling_constants(freqs, params)
    if tr.jz_nn is not None:
        c = c.scaled_to(tr.jz_nn)
    return freqs, c


def check_caps(cfg: ScenarioConfig, max_n: int) -> None:
    """Raise RuntimeGuard before any work if a simulated size exceeds the caps."""
    if max_n > MAX_SITES:
        raise RuntimeGuard(f"--max-n {max_n} exceeds the hard limit of {MAX_SITES} sites")
    sizes = {"[verify] n": cfg.verify.n}
    sizes.update({"[verify] f_n": n for n in cfg.verify.f_n})
    for name, n in sizes.items():
        if n > max_n:
            raise RuntimeGuard(f"{name} = {n} exceeds the simulation cap of {max_n} sites")
        if n > cfg.trap.N:
            raise RuntimeGuard(f"{name} = {n} exceeds the chain length N = {cfg.trap.N}")
        if n < 2:
            raise RuntimeGuard(f"{name} = {n} is below 2 sites")
    if cfg.verify.m is not None and cfg.verify.m > MAX_ITERATIONS:
        raise RuntimeGuard(f"[verify] m = {cfg.verify.m} exceeds the cap of {MAX_ITERATIONS}")


def published_f(variant: Variant):
    if variant in (Variant.XY_ROTATED, Variant.MIXED_XYZ):
        return f_xy_published
    if variant is Variant.NN_ISING:
        return f_nn_published
    return None


def iteration_count(cfg: ScenarioConfig, jz: float) -> int:
    if cfg.verify.m is not None:
        return cfg.verify.m
    f = published_f(cfg.variant)
    if f is None:
        return 1
    m = iterations_bound(jz, cfg.T, cfg.verify.error_target, f(cfg.trap.N))
    if m > MAX_ITERATIONS:
        raise RuntimeGuard(f"iteration bound m = {m} exceeds the cap of {MAX_ITERATIONS}")
    return m


def build_schedule(cfg: ScenarioConfig) -> tuple[PulseSchedule, int]:
    _, c = physical_couplings(cfg)
    m = iteration_count(cfg, c.jz_nn)
    return compile(cfg.target(c.jz_nn, cfg.T / m, m), c), m


def verify_scenario(cfg: ScenarioConfig) -> VerificationReport:
    freqs, c = physical_couplings(cfg)
    jz = c.jz_nn
    v = cfg.variant
    schedule, m = build_schedule(cfg)
    eta = cfg.eta_for(jz)
    rep = VerificationReport(target=v.value)
    rep.m = m
    rep.pulses = schedule.pulse_count
    rep.canonical_error = canonical_error_bound(cfg.trap.N, cfg.trap.kbar, freqs.epsilon)
    sim_target = cfg.target(jz, 0.0)
    rep.metadata = {
        "scenario": cfg.name,
        "config": _plain(asdict(cfg)),
        "jz_nn_rad_per_s": jz,
        "jz_nn_over_2pi_hz": jz / (2 * math.pi),
        "epsilon": freqs.epsilon,
        "rwa_ratio": c.rwa_ratio(),
        "eta_target": eta,
        "eta_drive": sim_target.drive_eta,
        "span": cfg.T / m,
        "simulated_N": cfg.verify.n,
    }

    c_sim = c.truncated(cfg.verify.n)
    rep.points = [sequence_error(sim_target, c_sim, x / jz) for x in cfg.verify.jzt]
    worst = max(p.phase for p in rep.points)
    if v in EXACT_VARIANTS or v is Variant.ISING_DIPOLE:
        rep.check("exact", worst <= EXACT_TOL, f"max phase-optimised error {worst:.3e}")
    elif v in TROTTER_VARIANTS and len(rep.points) >= 3:
        rep.exponent, rep.exponent_width = fit_exponent([p.t for p in rep.points], [p.phase for p in rep.points])
        want = 5.0 if cfg.order == 4 else 2.0
        rep.check("exponent", abs(rep.exponent - want) <= EXPONENT_TOL, f"{rep.exponent:.3f} vs {want}")

    if cfg.verify.f_n and v in TROTTER_VARIANTS and cfg.order == 4:
        t_f = cfg.verify.f_jzt / jz
        rep.f_range = tuple(cfg.verify.f_n)
        rep.f_points = fN_points(sim_target, cfg.verify.f_n, t_f, couplings=c)
        rep.f_slope, rep.f_intercept = fit_linear(*zip(*rep.f_points))
        rep.check("f_slope_positive", rep.f_slope > 0, f"slope {rep.f_slope:.4g}")
        ref = published_f(v)
        if ref is not None:
            ref_slope = ref(1.0) - ref(0.0)
            ok = rep.f_slope > 0 and 1 / F_FACTOR <= rep.f_slope / ref_slope <= F_FACTOR
            rep.check("f_coefficient", ok, f"slope {rep.f_slope:.4g} vs published {ref_slope}")

    band = PULSE_BANDS.get(v)
    if band is not None and cfg.order == 4:
        rep.check("pulse_count", band[0] <= rep.pulses <= band[1], f"{rep.pulses} pulses for m = {m}")
    return rep


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, Variant):
        return obj.value
    return obj


def _write(out: Path, files: dict[str, str]) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        p = out / name
        with open(p, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        written.append(p)
    return written


def run_scenario(path, command: str = "report", out_dir=None, strict: bool = False, max_n: int = DEFAULT_MAX_N) -> int:
    """Run one scenario file; returns the process exit status."""
    cfg = load_config(path)
    check_caps(cfg, max_n)
    out = Path(out_dir) if out_dir is not None else Path(path).resolve().parent / f"{cfg.name}_out"
    files: dict[str, str] = {}
    rep = None
    if command in ("compile", "report"):
        schedule, _ = build_schedule(cfg)
        files[cfg.outputs["schedule"]] = schedule.export()
    if command in ("verify", "report"):
        rep = verify_scenario(cfg)
        files[cfg.outputs["report"]] = rep.to_csv()
        files[cfg.outputs["summary"]] = rep.to_json()
        files[cfg.outputs["plot"]] = rep.plot_data()
    for p in _write(out, files):
        print(f"wrote {p}")
    if rep is not None:
        _print_summary(rep)
        if strict and not rep.passed:
            failed = ", ".join(n for n, ok, _ in rep.checks if not ok)
            print(f"strict: failed checks: {failed}", file=sys.stderr)
            return 1
    return 0


def _print_summary(rep: VerificationReport) -> None:
    print(f"target {rep.target}: m = {rep.m}, pulses = {rep.pulses}, E_c = {rep.canonical_error:.3e}")
    if rep.exponent is not None:
        print(f"fitted exponent {rep.exponent:.3f} +/- {rep.exponent_width:.3f}")
    if rep.f_slope is not None:
        print(f"f(N) fit: slope {rep.f_slope:.4g}, intercept {rep.f_intercept:.4g}")
    for name, ok, detail in rep.checks:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")


def validate_roundtrip(path) -> int:
    data = Path(path).read_bytes()
    text = data.decode("utf-8")
    again = PulseSchedule.parse(text).export().encode("utf-8")
    if again != data:
        print(f"{path}: export differs from the input", file=sys.stderr)
        return 1
    print(f"{path}: round-trip identical ({len(data)} bytes)")
    return 0


# -- entry point -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pennspin", description=__doc__)
    ap.add_argument("--strict", action="store_true", help="exit nonzero if any acceptance check fails")
    ap.add_argument("--out", metavar="DIR", help="output directory (default: <config>_out next to the config)")
    ap.add_argument("--max-n", type=int, default=DEFAULT_MAX_N, help="largest simulated chain (default 12)")
    ap.add_argument("--seedless", action="store_true", help="abort if any random number generator is used")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("compile", "verify", "report"):
        sub.add_parser(name).add_argument("config")
    sub.add_parser("roundtrip").add_argument("schedule")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    guard = forbid_rng() if args.seedless else contextlib.nullcontext()
    try:
        with guard:
            if args.command == "roundtrip":
                return validate_roundtrip(args.schedule)
            return run_scenario(args.config, args.command, args.out, args.strict, args.max_n)
    except RuntimeGuard as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (PennspinError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
