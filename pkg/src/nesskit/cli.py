"""Command line front end: config parsing, dispatch and report serialization.

The canonical config syntax is JSON (UTF-8).  Every float written by this
module uses 17 significant digits, complex numbers are ``[re, im]`` pairs and
non-finite values are written as the strings ``"inf"``, ``"-inf"`` and ``"nan"``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Mapping, Sequence

import numpy as np

from . import __version__
from .dynamics import build_generator, evolve, spectral_gap, stationary_distribution, stationary_flux
from .errors import ConfigError, NesskitError, NumericalError, PhysicsError
from .levelshift import ZERO_EIG_TOL, build_level_shift_set, resonance_forecast
from .model import ParticleSystem, PowerGaussianFormFactor, ReservoirSpec, form_factor_from_dict
from .ness import SIGN_TOL, solve_ness
from .thermo import sweep, thermo_report, write_sweep_csv
from .thresholds import check_conditions

COMMANDS = ("check", "lso", "ness", "thermo", "dynamics")
TOLERANCES = {"zero_eig": ZERO_EIG_TOL, "sign": SIGN_TOL}
FLOAT_FMT = ".17g"
DEFAULT_TIME_POINTS = 201


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class Options:
    sweep: tuple | None = None          # (start, stop, step), inclusive
    times: tuple | None = None          # (t0, t1, n)
    out: str | None = None
    tolerances: dict = field(default_factory=dict)
    delta0: float = math.pi / 4
    sweep_anchor: str = "beta1"
    initial_populations: tuple | None = None
    tau_prime: float | None = None

    def tol(self, name: str) -> float:
        return float(self.tolerances.get(name, TOLERANCES[name]))


@dataclass(frozen=True)
class RunConfig:
    particle: ParticleSystem
    reservoirs: tuple
    g: float
    mu: float = 1.5
    options: Options = field(default_factory=Options)

    @property
    def n(self) -> int:
        return self.particle.n

    def to_dict(self) -> dict:
        o = self.options
        return {
            "particle": {"energies": list(self.particle.energies), "beta_p": self.particle.beta_p},
            "reservoirs": [{"beta": r.beta, "form_factor": r.form_factor.to_dict()}
                           for r in self.reservoirs],
            "g": self.g,
            "mu": self.mu,
            "options": {
                "sweep": None if o.sweep is None else list(o.sweep),
                "times": None if o.times is None else list(o.times),
                "out": o.out,
                "tolerances": dict(sorted(o.tolerances.items())),
                "delta0": o.delta0,
                "sweep_anchor": o.sweep_anchor,
                "initial_populations": None if o.initial_populations is None
                else list(o.initial_populations),
                "tau_prime": o.tau_prime,
            },
        }


def _is_real(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def parse_grid(text, name: str, integer_last: bool = False) -> tuple:
    """``"a:b:c"`` or a three-element list into a validated triple."""
    parts = text.split(":") if isinstance(text, str) else text
    if not isinstance(parts, (list, tuple)) or len(parts) != 3:
        raise ConfigError(f"{name}: expected three fields a:b:c")
    try:
        vals = [float(x) for x in parts]
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: fields must be numbers") from None
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError(f"{name}: fields must be finite")
    if integer_last:
        if vals[2] != int(vals[2]) or vals[2] < 1:
            raise ConfigError(f"{name}: point count must be a positive integer")
        vals[2] = int(vals[2])
    return tuple(vals)


def sweep_grid(spec: tuple) -> np.ndarray:
    """Inclusive grid start, start + step, ..., stop."""
    a, b, step = spec
    if a == b:
        return np.array([a])
    if step == 0 or (b - a) / step < 0:
        raise ConfigError("sweep: step must be nonzero and point from start to stop")
    n = int(math.floor((b - a) / step + 1e-9)) + 1
    return a + step * np.arange(n)


def time_grid(spec: tuple) -> np.ndarray:
    t0, t1, n = spec
    if t0 < 0 or (n > 1 and not t1 > t0):
        raise ConfigError("times: need 0 <= t0 < t1")
    return np.linspace(t0, t1, int(n))


_TOP_KEYS = {"particle", "reservoirs", "g", "mu", "options"}
_OPTION_KEYS = set(Options.__dataclass_fields__)


def _parse_options(d, errors) -> Options:
    if d is None:
        return Options()
    if not isinstance(d, Mapping):
        errors.append("options: expected an object")
        return Options()
    kw = {}
    for k in sorted(set(d) - _OPTION_KEYS):
        errors.append(f"options: unknown key '{k}'")
    for key, integer_last in (("sweep", False), ("times", True)):
        if d.get(key) is not None:
            try:
                kw[key] = parse_grid(d[key], key, integer_last)
            except ConfigError as exc:
                errors.extend(exc.errors)
    if d.get("out") is not None:
        if isinstance(d["out"], str):
            kw["out"] = d["out"]
        else:
            errors.append("options.out: expected a path string")
    tols = d.get("tolerances") or {}
    if isinstance(tols, Mapping):
        clean = {}
        for k, v in tols.items():
            if k not in TOLERANCES:
                errors.append(f"tolerance '{k}' unknown (known: {', '.join(sorted(TOLERANCES))})")
            elif not (_is_real(v) and v > 0):
                errors.append(f"tolerance '{k}' must be a positive number")
            else:
                clean[k] = float(v)
        kw["tolerances"] = clean
    else:
        errors.append("options.tolerances: expected an object")
    if "delta0" in d:
        v = d["delta0"]
        if _is_real(v) and 0 < v < math.pi / 2:
            kw["delta0"] = float(v)
        else:
            errors.append("options.delta0 must lie in (0, pi/2)")
    if "sweep_anchor" in d:
        if d["sweep_anchor"] in ("beta1", "midpoint"):
            kw["sweep_anchor"] = d["sweep_anchor"]
        else:
            errors.append("options.sweep_anchor must be 'beta1' or 'midpoint'")
    if d.get("initial_populations") is not None:
        v = d["initial_populations"]
        if isinstance(v, list) and all(_is_real(x) and x >= 0 for x in v) and \
                abs(sum(v) - 1) <= 1e-12:
            kw["initial_populations"] = tuple(float(x) for x in v)
        else:
            errors.append("options.initial_populations must be a probability vector")
    if d.get("tau_prime") is not None:
        v = d["tau_prime"]
        if _is_real(v) and v > 0:
            kw["tau_prime"] = float(v)
        else:
            errors.append("options.tau_prime must be positive")
    return Options(**kw)


def _check_sizes(ff, n: int, where: str, errors) -> None:
    if isinstance(ff, PowerGaussianFormFactor):
        if ff.n != n:
            errors.append(f"{where}: coupling matrix is {ff.n}x{ff.n} but there are {n} energies")
        return
    missing = [(m, k) for m in range(n) for k in range(m) if (m, k) not in ff.moments]
    if ff.n > n:
        errors.append(f"{where}: moments refer to level {ff.n - 1} but there are {n} energies")
    if missing:
        errors.append(f"{where}: angular moments missing for pairs {missing}")


def parse_config(document) -> RunConfig:
    """Validate a JSON document (text, bytes or an already-decoded mapping).

    All problems found are collected and raised together as one ConfigError.
    """
    if isinstance(document, (bytes, bytearray)):
        document = document.decode("utf-8")
    if isinstance(document, str):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
    if not isinstance(document, Mapping):
        raise ConfigError("config must be a JSON object")
    errors: list = []
    for k in sorted(set(document) - _TOP_KEYS):
        errors.append(f"unknown top-level key '{k}'")

    particle = None
    pd = document.get("particle")
    if not isinstance(pd, Mapping) or "energies" not in pd:
        errors.append("missing key 'particle.energies'")
    else:
        try:
            particle = ParticleSystem(tuple(pd["energies"]) if isinstance(pd["energies"], list)
                                      else pd["energies"], pd.get("beta_p", 0.0))
        except (ConfigError, TypeError, ValueError) as exc:
            errors.extend(getattr(exc, "errors", [str(exc)]))

    reservoirs = []
    rd = document.get("reservoirs")
    if not isinstance(rd, list):
        errors.append("missing key 'reservoirs' (a list of two reservoir objects)")
        rd = []
    elif len(rd) != 2:
        errors.append(f"exactly two reservoirs supported (got {len(rd)})")
    for i, r in enumerate(rd):
        where = f"reservoirs[{i}]"
        if not isinstance(r, Mapping):
            errors.append(f"{where}: expected an object")
            continue
        if "beta" not in r or "form_factor" not in r:
            errors.extend(f"{where}: missing key '{k}'" for k in ("beta", "form_factor") if k not in r)
            continue
        try:
            if not _is_real(r["beta"]):
                raise ConfigError("beta must be a finite number")
            ff = form_factor_from_dict(r["form_factor"]) if isinstance(r["form_factor"], Mapping) \
                else form_factor_from_dict({})
            res = ReservoirSpec(float(r["beta"]), ff)
        except ConfigError as exc:
            errors.extend(f"{where}: {e}" for e in exc.errors)
            continue
        if particle is not None:
            _check_sizes(ff, particle.n, where, errors)
        reservoirs.append(res)

    g = document.get("g")
    if g is None:
        errors.append("missing key 'g'")
    elif not _is_real(g):
        errors.append("g must be a finite real number")
    mu = document.get("mu", 1.5)
    if not (_is_real(mu) and mu > 0.5):
        errors.append("mu must be a real number > 1/2")

    options = _parse_options(document.get("options"), errors)
    if errors:
        raise ConfigError(errors)
    return RunConfig(particle=particle, reservoirs=tuple(reservoirs), g=float(g), mu=float(mu),
                     options=options)


# ---------------------------------------------------------------- serialization

def _fmt(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        return "0"
    return format(x, FLOAT_FMT)


def to_jsonable(obj):
    """Reduce numpy arrays, complex numbers and tuples to plain containers."""
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Mapping):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    return _dump(to_jsonable(obj), 0, indent) + "\n"


def _dump(obj, level: int, indent: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, (int, str)):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(v, level + 1, indent)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        # numbers and [re, im] pairs stay on one line
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dump(v, level + 1, indent) for v in obj) + "]"
        items = [pad + _dump(v, level + 1, indent) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def complex_matrix(A) -> list:
    A = np.asarray(A, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in A]


def csv_text(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format(float(v) + 0.0, FLOAT_FMT) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------- commands

@dataclass
class Outcome:
    """Files produced by a command; ``primary`` is printed when no --out is given."""

    files: dict
    primary: str
    exit_code: int = 0
    error: NesskitError | None = None


def _run_check(cfg: RunConfig) -> Outcome:
    rep = check_conditions(cfg.particle, cfg.reservoirs, cfg.g, cfg.mu, cfg.options.delta0)
    body = {
        "command": "check",
        "fgr_gamma0": rep.fgr_gamma0,
        "sa_integral": rep.sa_integral,
        "condB_norms": rep.condB_norms,
        "g": cfg.g,
        "g0": rep.g0,
        "g1": rep.g1,
        "g_below_g1": rep.g_below_g1,
        "alpha_exponent": rep.alpha_exponent,
        "cone_a": rep.cone_a,
        "epsilon_g_rho": rep.epsilon_g_rho,
        "beta_difference": rep.beta_difference,
        "min_beta": rep.min_beta,
        "flags": dict(sorted(rep.flags.items())),
        "passed": rep.passed,
        "notes": rep.notes,
    }
    out = Outcome({"check.json": dumps(body)}, "check.json")
    if not rep.passed:
        failed = sorted(k for k, v in rep.flags.items() if v is False)
        out.exit_code = PhysicsError.exit_code
        out.error = PhysicsError(f"conditions failed: {', '.join(failed)}")
    return out


def _run_lso(cfg: RunConfig) -> Outcome:
    p, rs = cfg.particle, cfg.reservoirs
    ls = build_level_shift_set(p, rs)
    cert = ls.certificate
    fc = resonance_forecast(p, rs, cfg.g, tau_prime=cfg.options.tau_prime)
    body = {
        "command": "lso",
        "beta_p": ls.beta_p,
        "gamma_j0": [complex_matrix(G) for G in ls.gamma_j0],
        "lambda_zero": complex_matrix(ls.lambda_zero),
        "certificate": {
            "eigenvalues": list(cert.eigenvalues),
            "n_zero": cert.n_zero,
            "gap": cert.gap,
            "upper_half_plane": cert.upper_half_plane,
            "zero_tol": cert.zero_tol,
            "passed": cert.passed,
        },
        "lambda_nonzero": [{"e": s.e, "m": s.m, "n": s.n, "width": s.width, "real_part": s.real_part}
                           for _, s in sorted(ls.lambda_nonzero.items())],
        "skipped_sectors": [list(x) for x in ls.skipped_sectors],
        "resonances": [{"e": r.e, "value": r.value} for r in fc.resonances],
        "zero_sector_gap": fc.zero_sector_gap,
        "gap_lower_bound": fc.gap_lower_bound,
    }
    out = Outcome({"lso.json": dumps(body)}, "lso.json")
    if not cert.passed:
        try:
            cert.require()
        except PhysicsError as exc:
            out.exit_code, out.error = exc.exit_code, exc
    return out


def _run_ness(cfg: RunConfig) -> Outcome:
    o = cfg.options
    sol = solve_ness(cfg.particle, cfg.reservoirs, zero_tol=o.tol("zero_eig"), sign_tol=o.tol("sign"))
    n = cfg.n
    body = {
        "command": "ness",
        "beta_p": sol.beta_p,
        "gamma": sol.gamma,
        "populations": sol.populations,
        "zeta": sol.zeta,
        "zeta_star": sol.zeta_star,
        "residuals": sol.residuals,
        "overlap": sol.overlap,
    }
    header = [f"gamma_{i}" for i in range(n)] + [f"p_{i}" for i in range(n)]
    table = csv_text(header, [list(sol.gamma) + list(sol.populations)])
    return Outcome({"ness.json": dumps(body), "ness.csv": table}, "ness.json")


def _run_thermo(cfg: RunConfig) -> Outcome:
    rep = thermo_report(cfg.particle, cfg.reservoirs, cfg.g)
    body = {
        "command": "thermo",
        "g": rep.g,
        "beta1": cfg.reservoirs[0].beta,
        "beta2": cfg.reservoirs[1].beta,
        "eta_prime_1": rep.eta_prime_1,
        "eta_prime_2": rep.eta_prime_2,
        "flux_sum": rep.flux_sum,
        "flux_into_particle": rep.flux_into_particle,
        "ep_leading": rep.ep_leading,
        "linear_coefficient": rep.linear_coefficient,
    }
    files = {"thermo.json": dumps(body)}
    primary = "thermo.json"
    if cfg.options.sweep is not None:
        rows = sweep(cfg.particle, cfg.reservoirs, sweep_grid(cfg.options.sweep), cfg.g,
                     anchor=cfg.options.sweep_anchor)
        buf = io.StringIO()
        write_sweep_csv(rows, buf, FLOAT_FMT)
        files["thermo_sweep.csv"] = buf.getvalue()
        primary = "thermo_sweep.csv"
    return Outcome(files, primary)


def _run_dynamics(cfg: RunConfig) -> Outcome:
    p, n, g = cfg.particle, cfg.n, cfg.g
    if g == 0:
        raise PhysicsError("dynamics needs a nonzero coupling g")
    rm = build_generator(p, cfg.reservoirs)
    stationary_distribution(rm)  # refuses reducible rate graphs
    if cfg.options.times is not None:
        t = time_grid(cfg.options.times)
    else:
        gap = spectral_gap(rm.M)
        if not math.isfinite(gap) or gap <= 0:
            raise PhysicsError("generator has no relaxation gap")
        t = np.linspace(0.0, 10.0 / (g * g * gap), DEFAULT_TIME_POINTS)
    p0 = cfg.options.initial_populations
    if p0 is None:
        p0 = np.zeros(n)
        p0[-1] = 1.0
    elif len(p0) != n:
        raise ConfigError(f"initial_populations has {len(p0)} entries, expected {n}")
    traj = evolve(rm, np.asarray(p0, dtype=float), g, t)
    drift = np.abs(traj.sum(axis=1) - 1).max()
    if drift > 1e-10:
        raise NumericalError(f"trajectory lost normalization ({drift:.3g})")
    rows = [[ti, *pi, g * g * stationary_flux(rm, pi, 1), g * g * stationary_flux(rm, pi, 2)]
            for ti, pi in zip(t, traj)]
    header = ["t"] + [f"p_{i}" for i in range(n)] + ["flux_1", "flux_2"]
    return Outcome({"dynamics.csv": csv_text(header, rows)}, "dynamics.csv")


RUNNERS = {"check": _run_check, "lso": _run_lso, "ness": _run_ness,
           "thermo": _run_thermo, "dynamics": _run_dynamics}


def run(command: str, cfg: RunConfig) -> Outcome:
    if command not in RUNNERS:
        raise ConfigError(f"unknown command {command!r}")
    return RUNNERS[command](cfg)


# ---------------------------------------------------------------- entry point

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="JSON run configuration")
    common.add_argument("--out", metavar="DIR", help="write reports and a metadata sidecar here")
    common.add_argument("--sweep", metavar="a:b:step", help="inclusive delta_beta grid (thermo)")
    common.add_argument("--times", metavar="t0:t1:n", help="time grid (dynamics)")
    common.add_argument("--g", type=float, metavar="VALUE", help="override the coupling constant")
    common.add_argument("--tol", action="append", default=[], metavar="NAME=VALUE",
                        help=f"tolerance override; names: {', '.join(sorted(TOLERANCES))}")
    parser = _Parser(prog="nesskit", description="Weak-coupling NESS toolkit")
    parser.add_argument("--version", action="version", version=f"nesskit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def _apply_overrides(doc: dict, args) -> dict:
    doc = dict(doc)
    opts = dict(doc.get("options") or {})
    if args.sweep is not None:
        opts["sweep"] = args.sweep
    if args.times is not None:
        opts["times"] = args.times
    if args.out is not None:
        opts["out"] = args.out
    if args.tol:
        tols = dict(opts.get("tolerances") or {})
        bad = []
        for item in args.tol:
            name, sep, value = item.partition("=")
            try:
                tols[name.strip()] = float(value)
            except ValueError:
                bad.append(f"--tol {item!r}: expected NAME=VALUE with a numeric value")
            if not sep:
                bad.append(f"--tol {item!r}: expected NAME=VALUE")
        if bad:
            raise ConfigError(bad)
        opts["tolerances"] = tols
    doc["options"] = opts
    if args.g is not None:
        doc["g"] = args.g
    return doc


def _metadata(command: str, argv, cfg: RunConfig) -> str:
    meta = {
        "nesskit_version": __version__,
        "command": command,
        "argv": list(argv),
        "created_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "config": cfg.to_dict(),
    }
    return dumps(meta)


def _emit_error(exc: NesskitError, stream) -> int:
    stream.write(json.dumps(exc.to_dict(), default=str) + "\n")
    return exc.exit_code


def main(argv=None, stdout=None, stderr=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
        try:
            with open(args.config, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        cfg = parse_config(_apply_overrides(doc, args))
        outcome = run(args.command, cfg)
    except NesskitError as exc:
        return _emit_error(exc, stderr)
    except np.linalg.LinAlgError as exc:
        return _emit_error(NumericalError(f"linear algebra failure: {exc}"), stderr)

    out_dir = cfg.options.out
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        for name, text in outcome.files.items():
            with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        with open(os.path.join(out_dir, f"{args.command}.meta.json"), "w", encoding="utf-8") as fh:
            fh.write(_metadata(args.command, argv, cfg))
    else:
        stdout.write(outcome.files[outcome.primary])
    if outcome.error is not None:
        return _emit_error(outcome.error, stderr)
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
