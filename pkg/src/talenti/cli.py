"""Command line driver: one JSON config in, CSV and JSON reports out.

    talenti solve-radial --config cfg.json --out DIR
    talenti compare      --config cfg.json --out DIR
    talenti sweep        --config cfg.json --out DIR
    talenti check-space  --config cfg.json --out DIR

Exit codes: 0 success (PASS), 1 verdict FAIL, 2 config error, 3 numerical
failure, 4 inadmissible space.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from talenti import fem, weighted_space
from talenti.comparison import compare_fem, compare_half_line
from talenti.radial_solver import Datum, RadialSolverError, constant, solve_radial_poisson
from talenti.rigidity_lab import InadmissibleSpace, SweepSpec, run_family_sweep

log = logging.getLogger("talenti")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_INADMISSIBLE = 0, 1, 2, 3, 4
COMMANDS = ("solve-radial", "compare", "sweep", "check-space")


class ConfigError(ValueError):
    pass


class Inadmissible(RuntimeError):
    def __init__(self, report):
        super().__init__("space fails the CD(0,N) check")
        self.report = report


@dataclass
class RunConfig:
    command: str
    params: dict
    out: Path
    source: Path | None = None
    verbose: bool = False
    extras: dict = field(default_factory=dict)


def load_schema(command: str) -> dict:
    name = command.replace("-", "_") + ".schema.json"
    return json.loads(resources.files("talenti").joinpath("schemas", name).read_text())


def validate(command: str, params: dict) -> None:
    try:
        jsonschema.validate(params, load_schema(command))
    except jsonschema.ValidationError as exc:
        where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
        raise ConfigError(f"{where}: {exc.message}") from None


def load_config(command: str, path, out=None, verbose=False) -> RunConfig:
    path = Path(path)
    try:
        params = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(params, dict):
        raise ConfigError("config must be a JSON object")
    validate(command, params)
    out_dir = Path(out) if out is not None else Path(params.get("out", "talenti-out"))
    return RunConfig(command, params, out_dir, path, verbose)


def _resolve(cfg: RunConfig, p: str) -> Path:
    q = Path(p)
    if not q.is_absolute() and cfg.source is not None:
        q = cfg.source.parent / q
    return q


def _space(spec: dict):
    try:
        return weighted_space.from_config(spec)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"space: {exc}") from None


def _fmt(x) -> str:
    return format(float(x) + 0.0, ".17g")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n")


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


# ------------------------------------------------------------------ commands


def cmd_solve_radial(cfg: RunConfig) -> int:
    c = cfg.params
    space = _space(c["space"])
    f = c.get("f", 1.0)
    if isinstance(f, dict):
        try:
            datum = Datum.from_csv(_resolve(cfg, f["csv"]))
        except (OSError, ValueError, KeyError) as exc:
            raise ConfigError(f"f: {exc}") from None
    else:
        datum = constant(float(f))
    try:
        sol = solve_radial_poisson(space, c["R"], datum, c["p"], nodes=c.get("nodes", 64))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.out.mkdir(parents=True, exist_ok=True)
    rho = None
    if "output_points" in c:
        rho = np.linspace(0.0, c["R"], c["output_points"])
    sol.to_csv(cfg.out / "solution.csv", rho)
    stats = {
        "command": "solve-radial",
        "space": space.describe(),
        "R": c["R"],
        "p": c["p"],
        "nodes": int(sol.rho.size),
        "v0": float(sol.v_nodes[0]),
        "max_abs_dv": float(np.max(np.abs(sol.dv_nodes))),
        "status": "ok",
    }
    _write_json(cfg.out / "stats.json", stats)
    log.info("v(0) = %.17g", stats["v0"])
    return EXIT_OK


def _domain(cfg: RunConfig, d: dict):
    kind = d["type"]
    if kind == "disk":
        return fem.Disk(d["R"]), None
    if kind == "sector":
        return fem.Sector(d["R"], d["theta"]), None
    if kind == "square":
        return fem.Square(d["L"]), None
    if kind == "annulus":
        if not d["r"] < d["R"]:
            raise ConfigError("annulus: need r < R")
        return fem.Annulus(d["r"], d["R"]), None
    try:
        return None, fem.read_off(_resolve(cfg, d["path"]))
    except (OSError, ValueError, IndexError) as exc:
        raise ConfigError(f"mesh file: {exc}") from None


def _fem_datum(f):
    if isinstance(f, dict):
        b = f["bump"]
        x0, y0 = b["offset"]
        w = b["width"]
        amp = b.get("amplitude", 1.0)
        return lambda x, y: amp * np.exp(-((x - x0) ** 2 + (y - y0) ** 2) / (2 * w**2))
    return float(f)


def cmd_compare(cfg: RunConfig) -> int:
    c = cfg.params
    inst = c["instance"]
    p = c["p"]
    eq = c.get("tolerances", {}).get("equality")
    kw = {"levels": c.get("levels", 10), "eq_tol": eq, "name": c.get("name", "")}
    if "grid" in c:
        kw["grid"] = c["grid"]
    if inst["kind"] == "fem":
        domain, mesh = _domain(cfg, inst["domain"])
        newton = c.get("newton", {})
        try:
            solver = fem.SolverConfig(p=p, **newton)
            if domain is not None:
                fem.generate_mesh(domain, inst["h"])  # feasibility check before the solve
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        report = compare_fem(domain, _fem_datum(c.get("f", 1.0)), p, inst["h"], mesh=mesh,
                             avr=inst.get("avr"), solver=solver, **kw)
    else:
        if isinstance(c.get("f", 1.0), dict):
            raise ConfigError("half-line instances take a constant datum")
        space = _space(inst["space"])
        cd = weighted_space.check_cd0n(space)
        if not cd.admissible:
            raise Inadmissible(cd)
        if inst["R"] > space.t_max:
            raise ConfigError("R exceeds the range of the space")
        report = compare_half_line(space, inst["R"], float(c.get("f", 1.0)), p, **kw)
    cfg.out.mkdir(parents=True, exist_ok=True)
    report.to_json(cfg.out / "report.json")
    report.to_csv(cfg.out / "summary.csv")
    log.info("margin %.3e deficit %.3e equality %s -> %s", report.talenti_margin, report.talenti_deficit,
             report.equality_detected, "PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_sweep(cfg: RunConfig) -> int:
    c = dict(cfg.params)
    c.pop("out", None)
    c.pop("comment", None)
    try:
        spec = SweepSpec(**{**c, "params": tuple(c["params"])})
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None
    result = run_family_sweep(spec)
    cfg.out.mkdir(parents=True, exist_ok=True)
    result.to_csv(cfg.out / "sweep.csv")
    result.verdict_json(cfg.out / "verdict.json")
    log.info("sweep %s: %s", spec.family, "PASS" if result.passed else "FAIL")
    return EXIT_OK if result.passed else EXIT_FAIL


def cmd_check_space(cfg: RunConfig) -> int:
    c = cfg.params
    space = _space(c["space"])
    try:
        report = weighted_space.check_cd0n(space, c.get("grid_step", 0.01), c.get("horizon", 20.0))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg.out.mkdir(parents=True, exist_ok=True)
    _write_json(cfg.out / "cd_check.json", {"space": space.describe(), **report.to_dict()})
    log.info("admissible: %s", report.admissible)
    return EXIT_OK if report.admissible else EXIT_INADMISSIBLE


HANDLERS = {
    "solve-radial": cmd_solve_radial,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "check-space": cmd_check_space,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="talenti", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="JSON config file")
        sp.add_argument("--out", default=None, help="output directory (overrides the config)")
        sp.add_argument("--verbose", action="store_true")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.command, args.config, args.out, args.verbose)
        return HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Inadmissible, InadmissibleSpace) as exc:
        if isinstance(exc, Inadmissible) and args.out is not None:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            _write_json(out / "cd_check.json", exc.report.to_dict())
        print(f"inadmissible space: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except (RadialSolverError, fem.SolverDivergence, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
