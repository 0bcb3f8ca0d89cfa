"""``tsl``: run transport, dynamics and verification scenarios from the command line.

Each subcommand accepts ``--config file.yaml`` or builtin shortcut flags
that build the same scenario.  Results go to stdout as delimited lines and,
with an output directory, to ``trajectory.csv``, ``bounds.json``,
``summary.txt`` and PNG figures.

Exit codes: 0 success, 2 config or input error, 3 invariant violation,
4 numeric failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import __version__
from .config import load, normalize
from .errors import ConfigError, InvariantViolation, NumericFailure, ScenarioError, ToposlError
from .report import emit_report
from .scenarios import run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT, EXIT_NUMERIC = 0, 2, 3, 4
DEFAULT_OUT = "tsl-out"
QUICK_STEPS = 1000

log = logging.getLogger("toposl")


def exit_code(exc: BaseException) -> int:
    cause = exc.__cause__ if isinstance(exc, ScenarioError) and exc.__cause__ else exc
    if isinstance(cause, NumericFailure):
        return EXIT_NUMERIC
    if isinstance(cause, InvariantViolation):
        return EXIT_INVARIANT
    return EXIT_CONFIG


# ---- argument parsing ----

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="YAML scenario file (shortcut flags are then ignored)")
    p.add_argument("--seed", type=int, help="random seed")
    p.add_argument("--out", metavar="DIR", help="output directory for artifacts")
    p.add_argument("--quick", action="store_true", help="smaller problem sizes for smoke runs")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    p.add_argument("--workers", type=int, help="scenarios run concurrently")


def _grid(p: argparse.ArgumentParser, tau=True, lambdas=True) -> None:
    if tau:
        p.add_argument("--tau-max", type=float, help="duration (largest duration for sweeps)")
        p.add_argument("--steps", type=int, help="RK4 steps up to tau-max")
    if lambdas:
        p.add_argument("--lam", action="append", metavar="LAMBDA",
                       help="creation/annihilation cost; repeat for several, 'inf' for balanced")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tsl", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"tsl {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="kind", required=True)

    p = sub.add_parser("run", help="run every scenario in a config file, whatever its kind")
    _common(p)

    p = sub.add_parser("transport", help="W1 / W1,lambda distance between two measures")
    _common(p)
    _grid(p, tau=False)
    p.add_argument("--graph", help="graph file or chain:N, cycle:N, star:N, complete:N")
    p.add_argument("--a", help="source measure: delta:k, uniform or csv:path")
    p.add_argument("--b", help="target measure")
    p.add_argument("--dual", action="store_true", help="also solve the Kantorovich dual")

    p = sub.add_parser("crn", help="reaction network speed limits over a duration sweep")
    _common(p)
    _grid(p)
    p.add_argument("--builtin", choices=["cascade"])
    p.add_argument("--network", metavar="PATH", help="reaction file")
    p.add_argument("--N", type=int, help="cascade length")
    p.add_argument("--kf", type=float)
    p.add_argument("--kb", type=float)
    p.add_argument("--x0", help="comma-separated initial concentrations")
    p.add_argument("--tau-min", type=float)
    p.add_argument("--points", type=int)

    p = sub.add_parser("boson", help="open Bose-Hubbard lattice")
    _common(p)
    _grid(p)
    p.add_argument("--graph")
    p.add_argument("--gamma", type=float)
    p.add_argument("--U", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--rate-in", type=float)
    p.add_argument("--rate-out", type=float)
    p.add_argument("--n-max", type=int)
    p.add_argument("--occupations", help="comma-separated initial occupations")

    p = sub.add_parser("spin", help="Heisenberg chain excitation transfer")
    _common(p)
    _grid(p)
    p.add_argument("--N", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--random-pieces", type=int, help="random piecewise-constant field with this many pieces")
    p.add_argument("--field-scale", type=float)

    p = sub.add_parser("qwalk", help="quantum walk with periodic position measurements")
    _common(p)
    p.add_argument("--N", type=int)
    p.add_argument("--coupling", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--K", type=int)
    p.add_argument("--start", type=int)

    p = sub.add_parser("open", help="random driven open system on energy levels")
    _common(p)
    _grid(p)
    p.add_argument("--d", type=int)
    p.add_argument("--pairs", type=int)
    p.add_argument("--drive-scale", type=float)

    p = sub.add_parser("verify", help="run the property suites")
    _common(p)
    p.add_argument("--suite", action="append", help="suite name; repeat for several (default all)")
    return ap


def _csv_floats(text: str, what: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",")]
    except ValueError:
        raise ConfigError(f"--{what} must be comma-separated numbers") from None


SHORTCUTS = {
    "transport": {"graph": "graph", "a": "a", "b": "b", "dual": "dual"},
    "crn": {"builtin": "builtin", "network": "network", "N": "N", "kf": "kf", "kb": "kb", "x0": "x0"},
    "boson": {"graph": "graph", "gamma": "gamma", "U": "U", "mu": "mu", "rate_in": "rate_in",
              "rate_out": "rate_out", "n_max": "n_max", "occupations": "occupations"},
    "spin": {"N": "N", "gamma": "gamma", "random_pieces": "random_pieces", "field_scale": "field_scale"},
    "qwalk": {"N": "N", "coupling": "couplings", "dt": "dt", "K": "K", "start": "start"},
    "open": {"d": "d", "pairs": "pairs", "drive_scale": "drive_scale"},
    "verify": {},
}


def scenario_from_flags(args) -> dict:
    kind = args.kind
    block = {}
    for flag, key in SHORTCUTS[kind].items():
        v = getattr(args, flag, None)
        if v is None or v is False:
            continue
        if flag == "x0":
            v = _csv_floats(v, "x0")
        elif flag == "occupations":
            v = [int(x) for x in _csv_floats(v, "occupations")]
        block[key] = v
    if kind == "verify":
        block = {"quick": bool(args.quick)}
        if args.suite:
            block["suites"] = args.suite
    grid = {}
    for flag, key in (("tau_max", "tau_max"), ("steps", "steps"), ("tau_min", "tau_min"), ("points", "points")):
        v = getattr(args, flag, None)
        if v is not None:
            grid[key] = v
    if getattr(args, "lam", None):
        grid["lambdas"] = args.lam
    raw = {"kind": kind, kind: block}
    if grid:
        raw["grid"] = grid
    return raw


def build_config(args) -> tuple[dict, Path | None]:
    if args.config:
        cfg = load(args.config)
        base = Path(args.config).resolve().parent
        if cfg["out"] is not None and not Path(cfg["out"]).is_absolute():
            cfg["out"] = str(base / cfg["out"])
        for sc in cfg["scenarios"]:
            if args.kind != "run" and sc["kind"] != args.kind:
                raise ConfigError(f"key 'kind' is '{sc['kind']}' but the subcommand is '{args.kind}'")
    elif args.kind == "run":
        raise ConfigError("'tsl run' needs --config")
    else:
        cfg = normalize(scenario_from_flags(args))
        base = None
    for sc in cfg["scenarios"]:
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("--seed must be non-negative")
            sc["seed"] = args.seed
        if args.no_plots:
            sc["plots"] = False
        if args.quick:
            if sc["kind"] == "verify":
                sc["params"]["quick"] = True
            elif sc["grid"].get("steps") and sc["grid"]["steps"] > QUICK_STEPS and sc["kind"] != "crn":
                sc["grid"]["steps"] = QUICK_STEPS
    if args.out:
        cfg["out"] = args.out
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be positive")
        cfg["workers"] = args.workers
    if cfg["out"] is None and any(sc["kind"] not in ("transport", "verify") for sc in cfg["scenarios"]):
        cfg["out"] = DEFAULT_OUT
    return cfg, base


def _run_one(sc: dict, base):
    try:
        return run_scenario(sc, base)
    except ConfigError:
        raise
    except ToposlError as exc:
        raise ScenarioError(f"scenario '{sc['name']}': {exc}") from exc
    except ValueError as exc:
        raise ScenarioError(f"scenario '{sc['name']}': {exc}") from exc


def run(args) -> int:
    cfg, base = build_config(args)
    scenarios = cfg["scenarios"]
    with ThreadPoolExecutor(max_workers=min(cfg["workers"], len(scenarios))) as pool:
        results = list(pool.map(lambda sc: _run_one(sc, base), scenarios))
    for sc, res in zip(scenarios, results):
        if sc["kind"] == "transport" and len(res.reports) == 1 and len(scenarios) == 1:
            print(f"{res.reports[0]['distance']:.12g}")
        else:
            for ln in res.lines:
                print(f"{res.name}\t{ln}")
    for sc, res in zip(scenarios, results):
        if not sc["plots"]:
            res.figures = []
    if cfg["out"] is not None:
        for path in emit_report(results, cfg["out"]):
            log.info("wrote %s", path)
    return EXIT_OK if all(r.ok for r in results) else EXIT_INVARIANT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except ToposlError as exc:
        code = exit_code(exc)
        print(f"tsl: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
