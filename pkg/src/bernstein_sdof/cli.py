"""Command-line driver.

Subcommands: ``simulate``, ``study-angles``, ``study-legendre``, ``verify-p3``
and ``project-error``. Runs are described by a JSON config whose fields can be
overridden by flags. Exit status is 0 on success, 1 for invalid input and 2
for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .closed_form import (
    exact_forced_response,
    exact_free_response,
    mechanical_energy,
    modified_mechanical_energy,
    taylor_checks,
)
from .errors import ConfigError, NumericalError
from .legendre import coefficient_exponent_study
from .spectral_analysis import integrated_heaviside, projection_error_study, run_study
from .weakform import (
    Constant,
    Harmonic,
    PiecewiseConstant,
    PiecewiseExponential,
    SdofSystem,
    Tabulated,
    Zero,
    simulate,
)

log = logging.getLogger("bernstein_sdof")

EXCITATION_TYPES = ("zero", "constant", "piecewise_constant", "piecewise_exponential", "harmonic", "tabulated")


@dataclass
class RunConfig:
    c: float = 0.0
    k: float = 1.0
    p: int = 3
    h: float | None = None
    h_over_T: float | None = None
    steps: int = 1
    x0: float = 1.0
    v0: float = 0.0
    excitation: dict = field(default_factory=lambda: {"type": "zero"})
    csv_path: str | None = None
    json_path: str | None = None
    seed: int | None = None
    samples: int = 10000
    n_per_step: int = 16

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(d) - names)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(unknown)}")
        cfg = cls(**d)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @property
    def system(self) -> SdofSystem:
        return SdofSystem(float(self.c), float(self.k))

    @property
    def step_length(self) -> float:
        if self.h is not None:
            return float(self.h)
        return float(self.h_over_T) * self.system.period

    def validate(self) -> None:
        for name in ("c", "k", "x0", "v0"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ConfigError(f"field '{name}': expected a finite number, got {v!r}")
        self.system  # noqa: B018  validates c and k
        for name, lo in (("p", 3), ("steps", 1), ("samples", 1), ("n_per_step", 1)):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool) or v < lo:
                raise ConfigError(f"field '{name}': expected an integer >= {lo}, got {v!r}")
        if (self.h is None) == (self.h_over_T is None):
            raise ConfigError("exactly one of 'h' and 'h_over_T' must be given")
        hv = self.h if self.h is not None else self.h_over_T
        if not isinstance(hv, (int, float)) or not hv > 0:
            raise ConfigError(f"field '{'h' if self.h is not None else 'h_over_T'}': must be > 0, got {hv!r}")
        if self.seed is not None and (not isinstance(self.seed, int) or self.seed < 0):
            raise ConfigError(f"field 'seed': expected a non-negative integer, got {self.seed!r}")
        if not isinstance(self.excitation, dict) or self.excitation.get("type") not in EXCITATION_TYPES:
            raise ConfigError(f"field 'excitation.type': expected one of {EXCITATION_TYPES}")
        if self.p > 25:
            log.warning("p=%d exceeds 25; the transforms are close to their stability limit", self.p)


def parse_excitation(desc: dict, system: SdofSystem, h: float):
    """Build an excitation from its JSON description."""
    kind = desc.get("type")
    try:
        if kind == "zero":
            return Zero()
        if kind == "constant":
            return Constant(float(desc.get("value", 1.0)))
        if kind == "piecewise_constant":
            return PiecewiseConstant(tuple(float(v) for v in desc["values"]), h)
        if kind == "piecewise_exponential":
            return PiecewiseExponential(tuple(float(v) for v in desc["values"]), h, system.c)
        if kind == "harmonic":
            return Harmonic(float(desc.get("amplitude", 1.0)), float(desc.get("frequency", 1.0)),
                            float(desc.get("phase", 0.0)))
        if kind == "tabulated":
            return Tabulated(tuple(float(v) for v in desc["times"]), tuple(float(v) for v in desc["values"]))
    except KeyError as exc:
        raise ConfigError(f"field 'excitation.{exc.args[0]}' is required for type {kind!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"field 'excitation': {exc}") from None
    raise ConfigError(f"field 'excitation.type': unsupported {kind!r}")


def exact_oracle(excitation, system: SdofSystem, x0: float, v0: float):
    """Exact (x, v)(t) when one is available, by superposing the closed forms."""
    if not system.underdamped:
        return None
    if isinstance(excitation, Zero):
        scale, kind = 0.0, None
    elif isinstance(excitation, Constant):
        scale, kind = excitation.value, "constant"
    elif isinstance(excitation, PiecewiseExponential) and len(set(excitation.values)) == 1:
        scale, kind = excitation.values[0], "exponential"
    else:
        return None

    def oracle(t):
        x, v = exact_free_response(system, x0, v0, t)
        if kind is not None and scale != 0.0:
            xf, vf = exact_forced_response(system, kind, t)
            x, v = x + scale * xf, v + scale * vf
        return x, v

    return oracle


def _fmt(v) -> str:
    # shortest round-trip decimal
    return repr(float(v))


def cmd_simulate(cfg: RunConfig, out=None) -> dict:
    system = cfg.system
    h = cfg.step_length
    exc = parse_excitation(cfg.excitation, system, h)
    traj = simulate(system, exc, cfg.x0, cfg.v0, cfg.p, h, cfg.steps)
    t, x, v = traj.sample(cfg.n_per_step)
    step = np.minimum((t / h + 1e-9).astype(int), cfg.steps)
    oracle = exact_oracle(exc, system, cfg.x0, cfg.v0)
    header = ["step", "t", "x", "v", "ME", "ME_c"]
    if oracle is not None:
        xe, ve = oracle(t)
        header += ["x_err", "v_err"]
    buf = io.StringIO()
    buf.write("# " + json.dumps({"config": cfg.to_dict()}, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    me = mechanical_energy(x, v, system.k)
    mec = modified_mechanical_energy(x, v, system.k, system.c, t)
    for n in range(t.size):
        row = [str(int(step[n])), _fmt(t[n]), _fmt(x[n]), _fmt(v[n]), _fmt(me[n]), _fmt(mec[n])]
        if oracle is not None:
            row += [_fmt(abs(x[n] - xe[n])), _fmt(abs(v[n] - ve[n]))]
        w.writerow(row)
    _emit(buf.getvalue(), cfg.csv_path, out)
    final = traj.states[-1]
    summary = {
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "final": {"step": final.j, "t": cfg.steps * h, "x": final.x, "v": final.v},
        "gluing_defect": dict(zip(("c0", "c1"), traj.gluing_defect())),
    }
    if oracle is not None:
        xT, vT = (float(z) for z in oracle(cfg.steps * h))
        xs, vs = traj.x, traj.v
        xe_n, ve_n = oracle(traj.times)
        summary["errors"] = {
            "x_err_final": abs(final.x - xT),
            "v_err_final": abs(final.v - vT),
            "x_err_max_nodes": float(np.max(np.abs(xs - xe_n))),
            "v_err_max_nodes": float(np.max(np.abs(vs - ve_n))),
        }
    if cfg.json_path:
        _emit(json.dumps(summary, indent=2, sort_keys=True) + "\n", cfg.json_path, out)
    return summary


def cmd_study_angles(p_values, c_values, h_values, samples: int, seed: int, out=None,
                     path: str | None = None) -> dict:
    cells = run_study(p_values, c_values, h_values, samples, seed)
    doc = {
        "config": {"p": list(p_values), "c": list(c_values), "h_over_T": list(h_values),
                   "samples": samples, "seed": seed, "k": 1.0},
        "seed": seed,
        "cells": cells,
    }
    _emit(json.dumps(doc, indent=2) + "\n", path, out)
    return doc


def cmd_study_legendre(p_values, out=None, path: str | None = None) -> list:
    rows = coefficient_exponent_study(p_values)
    buf = io.StringIO()
    buf.write("# " + json.dumps({"config": {"p": list(p_values)}}) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "m", "which", "s"])
    for r in rows:
        w.writerow([r["p"], r["m"], r["which"], _fmt(r["s"])])
    _emit(buf.getvalue(), path, out)
    return rows


def cmd_verify_p3(out=None) -> bool:
    out = out or sys.stdout
    checks = taylor_checks()
    for ch in checks:
        status = "PASS" if ch.passed else "FAIL"
        out.write(f"{status}  {ch.name:<22} measured {ch.measured:+.6e}  expected {ch.expected:+.6e}"
                  f"  (rel tol {ch.rel_tol:g})\n")
    return all(ch.passed for ch in checks)


def cmd_project_error(p_values, h_values, t0_fraction: float, out=None, path: str | None = None):
    func, brk = integrated_heaviside(t0_fraction)
    res = projection_error_study(func, p_values, h_values, brk)
    buf = io.StringIO()
    buf.write("# " + json.dumps({"config": {"p": list(p_values), "h": list(h_values), "t0_fraction": t0_fraction},
                                 "slope_p": _finite_or_none(res.slope_p),
                                 "slope_h": _finite_or_none(res.slope_h)}) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "h", "error"])
    for p, h, e in res.rows:
        w.writerow([p, _fmt(h), _fmt(e)])
    _emit(buf.getvalue(), path, out)
    return res


def _finite_or_none(v: float):
    return v if math.isfinite(v) else None


def _emit(text: str, path: str | None, out) -> None:
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        (out or sys.stdout).write(text)


def _int_list(s: str) -> list[int]:
    """'3-8' or '3,5,7'."""
    out = []
    for part in s.split(","):
        if "-" in part.strip()[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def _float_list(s: str) -> list[float]:
    return [float(x) for x in s.split(",")]


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return doc


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bernstein-sdof", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="step a damped oscillator and write a trajectory CSV")
    s.add_argument("--config")
    for name, typ in (("c", float), ("k", float), ("p", int), ("h", float), ("h-over-T", float),
                      ("steps", int), ("x0", float), ("v0", float), ("seed", int), ("n-per-step", int)):
        s.add_argument(f"--{name}", type=typ, dest=name.replace("-", "_"))
    s.add_argument("--excitation", help="JSON excitation object")
    s.add_argument("--csv", dest="csv_path")
    s.add_argument("--json", dest="json_path")

    a = sub.add_parser("study-angles", help="sampled projection exponents over a (p, c, h/T) grid")
    a.add_argument("--config")
    a.add_argument("--p", type=_int_list)
    a.add_argument("--c", type=_float_list)
    a.add_argument("--h-over-T", type=_float_list, dest="h_over_T")
    a.add_argument("--samples", type=int)
    a.add_argument("--seed", type=int)
    a.add_argument("--out")

    lg = sub.add_parser("study-legendre", help="coefficient-decay exponents s(p, m)")
    lg.add_argument("--p", type=_int_list, default=list(range(3, 26)))
    lg.add_argument("--out")

    sub.add_parser("verify-p3", help="leading error coefficients of the p = 3 scheme")

    pe = sub.add_parser("project-error", help="Legendre tail of an integrated Heaviside function")
    pe.add_argument("--p", type=_int_list, default=list(range(3, 26)))
    pe.add_argument("--h", type=_float_list, default=[1.0, 0.5, 0.25, 0.125])
    pe.add_argument("--t0-fraction", type=float, default=1.0 / 3.0)
    pe.add_argument("--out")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.command == "simulate":
            d = load_config(args.config)
            for name in ("c", "k", "p", "h", "h_over_T", "steps", "x0", "v0", "seed", "n_per_step",
                         "csv_path", "json_path"):
                val = getattr(args, name)
                if val is not None:
                    d[name] = val
            if args.h is not None:
                d.pop("h_over_T", None)
            if args.h_over_T is not None:
                d.pop("h", None)
            if args.excitation is not None:
                try:
                    d["excitation"] = json.loads(args.excitation)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"--excitation: column {exc.colno}: {exc.msg}") from None
            cmd_simulate(RunConfig.from_dict(d))
        elif args.command == "study-angles":
            d = load_config(args.config)
            for name in ("p", "c", "h_over_T", "samples", "seed"):
                val = getattr(args, name)
                if val is not None:
                    d[name] = val
            if d.get("seed") is None:
                raise ConfigError("study-angles requires an explicit --seed")
            p_values = d.get("p", [3])
            p_values = p_values if isinstance(p_values, list) else [p_values]
            c_values = d.get("c", [0.0])
            c_values = c_values if isinstance(c_values, list) else [c_values]
            h_values = d.get("h_over_T", [1.0])
            h_values = h_values if isinstance(h_values, list) else [h_values]
            if any((not isinstance(p, int)) or p < 3 for p in p_values):
                raise ConfigError(f"field 'p': integers >= 3 required, got {p_values}")
            if any(p > 25 for p in p_values):
                log.warning("p > 25 requested; results beyond 25 are numerically unreliable")
            cmd_study_angles(p_values, [float(c) for c in c_values], [float(h) for h in h_values],
                             int(d.get("samples", 10000)), int(d["seed"]), path=args.out)
        elif args.command == "study-legendre":
            try:
                cmd_study_legendre(args.p, path=args.out)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        elif args.command == "verify-p3":
            cmd_verify_p3()
        elif args.command == "project-error":
            cmd_project_error(args.p, args.h, args.t0_fraction, path=args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
