"""Runners that turn a normalized scenario into a :class:`ScenarioResult`."""

from __future__ import annotations

import math
import warnings
from pathlib import Path

import numpy as np

from . import crn, plotting
from .config import parse_graph, parse_measure
from .dynamics import speed_limit_report, velocity
from .errors import ConfigError, InvariantViolation
from .graph import max_degree, shortest_path_matrix
from .quantum import (
    boson_lattice_model,
    boson_velocity_bound,
    excitation_state,
    exchange_current_bound,
    fock_state,
    measured_walk_simulate,
    piecewise_constant_field,
    random_density,
    random_open_system,
    simulate_boson,
    simulate_open,
    simulate_spin,
    spin_chain_model,
    spin_velocity_bound,
    transfer_time_bound,
)
from .quantum.open_system import open_velocity_bound
from .report import ScenarioResult
from .transport import distance, kantorovich_dual, total_variation
from .verify import run_suites

MAX_ROWS = 1000
SLACK = 1e-9
TRANSFER_RADIUS = 0.05


def _g(x) -> str:
    return "inf" if isinstance(x, float) and math.isinf(x) else f"{x:.12g}"


def _stride(n_samples: int) -> int:
    return max(1, math.ceil((n_samples - 1) / MAX_ROWS))


def _series(res: ScenarioResult, times, cols: dict) -> None:
    s = _stride(len(times))
    res.times = np.asarray(times)[::s]
    res.columns = {k: np.asarray(v)[::s] for k, v in cols.items()}


def _figure(fn, fname, *args, **kwargs):
    return fname, lambda path: fn(*args, path, **kwargs)


def _lambdas_for(traj, lambdas, res: ScenarioResult) -> list[float]:
    keep = []
    for lam in lambdas:
        if math.isinf(lam) and traj.has_external_flows():
            res.lines.append("lambda=inf skipped: external flows present")
            continue
        keep.append(lam)
    return keep


def _report_lines(res: ScenarioResult, reports) -> None:
    for r in reports:
        res.lines.append(f"lambda={_g(r.lam)} tau={_g(r.tau)} distance={_g(r.distance)} "
                         f"avg_velocity={_g(r.avg_velocity)} tau_bound={_g(r.tau_bound)} "
                         f"saturation={_g(r.saturation_ratio)}")


def _pointwise(res: ScenarioResult, label: str, excess) -> None:
    worst = float(np.max(excess)) if len(excess) else -math.inf
    res.scalars[f"{label}_worst_excess"] = worst
    res.lines.append(f"{label}: worst excess {worst:.3e} over {len(excess)} samples")
    if worst > SLACK:
        raise InvariantViolation(f"{label} violated by {worst:.3e}")


# ---- transport ----

def run_transport(sc: dict, base: Path | None = None) -> ScenarioResult:
    p = sc["params"]
    for key in ("graph", "a", "b"):
        if p[key] is None:
            raise ConfigError(f"key 'transport.{key}' is required")
    g = parse_graph(p["graph"], base)
    a = parse_measure(p["a"], g.n, base)
    b = parse_measure(p["b"], g.n, base)
    res = ScenarioResult(sc["name"], "transport")
    res.scalars.update({"vertices": g.n, "edges": len(g.edges), "mass_a": float(a.sum()),
                        "mass_b": float(b.sum()), "total_variation": total_variation(a, b)})
    for lam in sc["grid"]["lambdas"]:
        w = distance(g, a, b, lam)
        rep = {"lambda": lam, "distance": w}
        line = f"lambda={_g(lam)} distance={_g(w)}"
        if p["dual"] and math.isinf(lam):
            dual, _ = kantorovich_dual(g, a, b)
            rep["dual"] = dual
            rep["duality_gap"] = abs(w - dual)
            line += f" dual={_g(dual)}"
        res.reports.append(rep)
        res.lines.append(line)
    return res


# ---- reaction networks ----

def _network(p: dict, base: Path | None):
    if p["network"] is not None and p["builtin"] is not None:
        raise ConfigError("keys 'crn.network' and 'crn.builtin' are exclusive")
    if p["network"] is not None:
        path = Path(p["network"])
        if base is not None and not path.is_absolute():
            path = base / path
        try:
            return crn.ReactionNetwork.parse(path.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read network file {p['network']}: {exc}") from None
    builtin = p["builtin"] or "cascade"
    if builtin != "cascade":
        raise ConfigError(f"key 'crn.builtin' must be 'cascade' (got {builtin!r})")
    if p["N"] < 2:
        raise ConfigError("key 'crn.N' must be at least 2")
    return crn.cascade_network(p["N"], p["kf"], p["kb"])


def _taus(grid: dict) -> list[float]:
    if grid["taus"]:
        return grid["taus"]
    lo = grid["tau_min"] or grid["tau_max"] / grid["points"]
    if lo > grid["tau_max"]:
        raise ConfigError("key 'grid.tau_min' exceeds 'grid.tau_max'")
    return list(np.linspace(lo, grid["tau_max"], grid["points"]))


def run_crn(sc: dict, base: Path | None = None) -> ScenarioResult:
    p, grid = sc["params"], sc["grid"]
    net = _network(p, base)
    if p["x0"] is not None:
        x0 = np.array(p["x0"])
    elif p["network"] is None:
        x0 = np.linspace(1.0, 0.1, net.n_species)
    else:
        raise ConfigError("key 'crn.x0' is required for a network file")
    if x0.size != net.n_species:
        raise ConfigError(f"key 'crn.x0' has {x0.size} entries, network has {net.n_species} species")
    taus = _taus(grid)
    t_max = max(taus)
    steps = grid["steps"]
    h = t_max / steps
    off = [t for t in taus if abs(round(t / h) * h - t) > 1e-9 * max(t, 1.0)]
    if off:
        raise ConfigError(f"grid.taus value {off[0]} is not a multiple of tau_max/steps = {h}")
    tgd = crn.build_transport_graph(net)
    res = ScenarioResult(sc["name"], "crn")
    res.scalars.update({"species": net.n_species, "channels": net.n_channels,
                        "transport_edges": len(tgd.graph.edges),
                        "conservative": bool(tgd.all_conservative)})
    for lam in grid["lambdas"]:
        if math.isinf(lam) and not tgd.all_conservative:
            res.lines.append("lambda=inf skipped: network is not conservative")
            continue
        bounds = crn.crn_bounds_sweep(net, x0, taus, lam, steps, tgd)
        dicts = [b.to_dict() for b in bounds]
        res.reports += dicts
        tag = _g(lam)
        res.scalars[f"min_tau1_ratio_lambda_{tag}"] = min(b.tau1 / b.tau for b in bounds)
        res.scalars[f"hierarchy_holds_lambda_{tag}"] = all(b.hierarchy_holds() for b in bounds)
        for b in bounds:
            res.lines.append(f"lambda={tag} tau={_g(b.tau)} tau1={_g(b.tau1)} tau2={_g(b.tau2)} "
                             f"tau3={_g(b.tau3)} tau1/tau={_g(b.tau1 / b.tau)}")
        res.figures.append(_figure(plotting.plot_crn_bounds, f"bounds_lambda_{tag}.png", dicts))
    times, xs = crn.simulate(net, crn.prepare_initial_state(x0), t_max, steps)
    _series(res, times, {s: xs[:, k] for k, s in enumerate(net.species)})
    res.figures.append(_figure(plotting.plot_measures, "concentrations.png", times, xs,
                               list(net.species), ylabel="concentration"))
    return res


# ---- bosons ----

def run_boson(sc: dict, base: Path | None = None) -> ScenarioResult:
    p, grid = sc["params"], sc["grid"]
    g = parse_graph(p["graph"], base)
    model = boson_lattice_model(g, p["gamma"], p["U"], p["mu"], p["rate_in"], p["rate_out"], p["n_max"])
    occ = p["occupations"] or [1] + [0] * (g.n - 1)
    if len(occ) != g.n:
        raise ConfigError(f"key 'boson.occupations' needs {g.n} entries")
    try:
        rho0 = fock_state(model, occ)
    except ValueError as exc:
        raise ConfigError(f"key 'boson.occupations': {exc}") from None
    res = ScenarioResult(sc["name"], "boson")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        run = simulate_boson(model, rho0, grid["tau_max"], grid["steps"])
    for w in caught:
        res.lines.append(f"warning: {w.message}")
    res.scalars["truncation_warning"] = bool(run.warnings)
    traj = run.trajectory
    lams = _lambdas_for(traj, grid["lambdas"], res)
    reports = [speed_limit_report(traj, lam) for lam in lams]
    res.reports += [r.to_dict() for r in reports]
    _report_lines(res, reports)
    d_G = max_degree(g)
    for lam in lams:
        w = 0.0 if math.isinf(lam) else lam
        excess = [velocity(s.flow, w) - boson_velocity_bound(s, p["gamma"], d_G, lam) for s in run.snapshots]
        _pointwise(res, f"velocity_bound_lambda_{_g(lam)}", excess)
    ex = [a - b for a, b in (exchange_current_bound(s) for s in run.snapshots)]
    _pointwise(res, "exchange_current_bound", ex)
    res.scalars.update({"dimension": model.dim, "max_trace_error": run.max_trace_error,
                        "min_eigenvalue": run.min_eigenvalue})
    cols = {f"x{k + 1}": traj.measures[:, k] for k in range(g.n)}
    cols["total"] = traj.measures.sum(axis=1)
    lam0 = lams[0] if lams else math.inf
    w0 = 0.0 if math.isinf(lam0) else lam0
    v = traj.velocities(w0)
    bound = np.array([boson_velocity_bound(s, p["gamma"], d_G, lam0) for s in run.snapshots])
    cols["velocity"], cols["velocity_bound"] = v, bound
    _series(res, traj.times, cols)
    res.figures.append(_figure(plotting.plot_measures, "occupations.png", traj.times, traj.measures,
                               [f"x{k + 1}" for k in range(g.n)], ylabel="occupation"))
    res.figures.append(_figure(plotting.plot_velocity, "velocity.png", traj.times, v, bound))
    return res


# ---- spin chain ----

def run_spin(sc: dict, base: Path | None = None) -> ScenarioResult:
    p, grid = sc["params"], sc["grid"]
    N, tau = p["N"], grid["tau_max"]
    if N < 2:
        raise ConfigError("key 'spin.N' must be at least 2")
    if p["field"] is not None and p["random_pieces"] is not None:
        raise ConfigError("keys 'spin.field' and 'spin.random_pieces' are exclusive")
    field = None
    if p["field"] is not None:
        vals = np.array(p["field"])
        if vals.ndim != 2 or vals.shape[1] != N:
            raise ConfigError(f"key 'spin.field' must be a list of rows with {N} values")
        field = piecewise_constant_field(vals, tau)
    elif p["random_pieces"] is not None:
        rng = np.random.default_rng(sc["seed"])
        field = piecewise_constant_field(rng.uniform(-p["field_scale"], p["field_scale"],
                                                     (p["random_pieces"], N)), tau)
    model = spin_chain_model(N, p["gamma"], field)
    run = simulate_spin(model, excitation_state(N, 0), tau, grid["steps"])
    traj = run.trajectory
    res = ScenarioResult(sc["name"], "spin")
    reports = [speed_limit_report(traj, lam) for lam in _lambdas_for(traj, grid["lambdas"], res)]
    res.reports += [r.to_dict() for r in reports]
    _report_lines(res, reports)
    bound = np.array([spin_velocity_bound(model, s) for s in run.snapshots])
    v = traj.velocities(0.0)
    _pointwise(res, "velocity_bound", v - bound)
    # a point mass target admits a single plan, so W1 is linear in x
    to_end = traj.measures @ shortest_path_matrix(model.graph)[:, N - 1].astype(float)
    t_min = transfer_time_bound(N, p["gamma"])
    early = traj.times < t_min
    res.scalars.update({"transfer_time_bound": t_min,
                        "min_distance_to_target": float(to_end.min()),
                        "min_distance_before_bound": float(to_end[early].min()) if early.any() else math.nan,
                        "max_trace_error": run.max_trace_error})
    hit = np.nonzero(to_end <= TRANSFER_RADIUS)[0]
    res.scalars["first_time_within_radius"] = float(traj.times[hit[0]]) if hit.size else math.nan
    if hit.size and traj.times[hit[0]] < t_min:
        raise InvariantViolation(f"excitation reached the far end at t={traj.times[hit[0]]:.6g} < {t_min:.6g}")
    res.lines.append(f"transfer time bound {_g(t_min)}; closest approach to target {_g(float(to_end.min()))}")
    cols = {f"x{k + 1}": traj.measures[:, k] for k in range(N)}
    cols.update({"velocity": v, "velocity_bound": bound, "distance_to_target": to_end})
    _series(res, traj.times, cols)
    res.figures.append(_figure(plotting.plot_measures, "populations.png", traj.times, traj.measures,
                               [f"x{k + 1}" for k in range(N)], ylabel="population"))
    res.figures.append(_figure(plotting.plot_velocity, "velocity.png", traj.times, v, bound))
    return res


# ---- measured quantum walk ----

def run_qwalk(sc: dict, base: Path | None = None) -> ScenarioResult:
    p = sc["params"]
    N = p["N"]
    if N < 2:
        raise ConfigError("key 'qwalk.N' must be at least 2")
    c = p["couplings"]
    if isinstance(c, list) and len(c) != N - 1:
        raise ConfigError(f"key 'qwalk.couplings' needs {N - 1} entries")
    if not 1 <= p["start"] <= N:
        raise ConfigError(f"key 'qwalk.start' outside 1..{N}")
    if p["substeps"] % 2:
        raise ConfigError("key 'qwalk.substeps' must be even")
    traj, rep = measured_walk_simulate(N, c, p["dt"], p["K"], p["start"] - 1, p["substeps"])
    res = ScenarioResult(sc["name"], "qwalk")
    d = rep.to_dict()
    d["holds"] = rep.holds()
    res.reports.append(d)
    res.lines.append(f"tau={_g(rep.tau)} distance={_g(rep.distance)} "
                     f"tau_bound_velocity={_g(rep.tau_bound_velocity)} "
                     f"tau_bound_fluctuation={_g(rep.tau_bound_fluctuation)} holds={rep.holds()}")
    cols = {f"x{k + 1}": traj.measures[:, k] for k in range(N)}
    cols["velocity"] = traj.velocities(0.0)
    _series(res, traj.times, cols)
    res.figures.append(_figure(plotting.plot_measures, "populations.png", traj.times, traj.measures,
                               [f"x{k + 1}" for k in range(N)], ylabel="population"))
    return res


# ---- driven open system ----

def run_open(sc: dict, base: Path | None = None) -> ScenarioResult:
    p, grid = sc["params"], sc["grid"]
    d = p["d"]
    if d < 2:
        raise ConfigError("key 'open.d' must be at least 2")
    rng = np.random.default_rng(sc["seed"])
    model = random_open_system(d, rng, p["pairs"], p["drive_scale"])
    if p["start"] is None:
        rho0 = random_density(d, rng)
    else:
        if not 1 <= p["start"] <= d:
            raise ConfigError(f"key 'open.start' outside 1..{d}")
        e = model.data["basis"][:, p["start"] - 1]
        rho0 = np.outer(e, e.conj())
    run = simulate_open(model, rho0, grid["tau_max"], grid["steps"])
    traj = run.trajectory
    res = ScenarioResult(sc["name"], "open")
    lams = _lambdas_for(traj, grid["lambdas"], res)
    reports = [speed_limit_report(traj, lam) for lam in lams]
    res.reports += [r.to_dict() for r in reports]
    _report_lines(res, reports)
    for lam in lams:
        if math.isinf(lam):
            continue
        excess = [velocity(s.flow, lam) - open_velocity_bound(s, lam) for s in run.snapshots]
        _pointwise(res, f"velocity_bound_lambda_{_g(lam)}", excess)
    res.scalars.update({"levels": d, "transition_edges": len(model.graph.edges),
                        "max_trace_error": run.max_trace_error, "min_eigenvalue": run.min_eigenvalue})
    cols = {f"x{k + 1}": traj.measures[:, k] for k in range(d)}
    _series(res, traj.times, cols)
    res.figures.append(_figure(plotting.plot_measures, "populations.png", traj.times, traj.measures,
                               [f"x{k + 1}" for k in range(d)], ylabel="population"))
    return res


# ---- verification suites ----

def run_verify(sc: dict, base: Path | None = None) -> ScenarioResult:
    p = sc["params"]
    try:
        results = run_suites(p["suites"], quick=p["quick"])
    except KeyError as exc:
        raise ConfigError(f"key 'verify.suites': {exc.args[0]}") from None
    res = ScenarioResult(sc["name"], "verify")
    for r in results:
        # elapsed time is left out to keep the artifacts reproducible
        res.reports.append({"name": r.name, "passed": r.passed, "cases": r.cases,
                            "violations": r.violations, "worst": r.worst, "informational": r.informational})
        tag = " (informational)" if r.informational else ""
        res.lines.append(f"{'PASS' if r.passed else 'FAIL'} {r.name}{tag}: cases={r.cases} "
                         f"violations={r.violations} worst={r.worst:.3e}")
    res.ok = all(r.passed for r in results if not r.informational)
    res.scalars["suites_failed"] = sum(1 for r in results if not r.passed and not r.informational)
    return res


RUNNERS = {
    "transport": run_transport,
    "crn": run_crn,
    "boson": run_boson,
    "spin": run_spin,
    "qwalk": run_qwalk,
    "open": run_open,
    "verify": run_verify,
}


def run_scenario(sc: dict, base: Path | None = None) -> ScenarioResult:
    return RUNNERS[sc["kind"]](sc, base)
