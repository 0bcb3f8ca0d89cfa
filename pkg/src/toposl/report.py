"""Scenario results and the three artifact files written for every run.

``trajectory.csv``
    ``t,<col>,...`` for a single scenario; with several scenarios a leading
    ``scenario`` column is added and the value columns are the union.
``bounds.json``
    ``{"scenarios": [{"name", "kind", "reports": [...], "scalars": {...}}]}``
``summary.txt``
    a header line followed by one block per scenario.

Non-finite floats are written as the strings ``"inf"``, ``"-inf"`` and
``"nan"`` so the JSON stays standard.  Every report is checked against its
invariants before anything is written.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvariantViolation, IoError

BOUND_KEYS = frozenset({"tau", "lambda", "distance", "avg_velocity", "tau_bound", "saturation_ratio"})
CRN_KEYS = frozenset({"tau", "lambda", "tau1", "tau2", "tau3", "distance", "avg_weighted_current",
                      "avg_sqrt_sigma_ell", "avg_sigma", "avg_ell", "avg_diffusion", "tv_distance"})
REL_TOL = 1e-6


@dataclass
class ScenarioResult:
    name: str
    kind: str
    reports: list[dict] = field(default_factory=list)
    scalars: dict = field(default_factory=dict)
    times: np.ndarray | None = None
    columns: dict[str, np.ndarray] = field(default_factory=dict)
    lines: list[str] = field(default_factory=list)
    figures: list = field(default_factory=list)  # (file name, draw(path) -> Path)
    ok: bool = True


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for ``json.dumps``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def validate_report(rep: dict) -> None:
    """Re-check the inequality carried by a bound report."""
    keys = set(rep)
    if keys == BOUND_KEYS:
        tau, bound = float(rep["tau"]), float(rep["tau_bound"])
        if not bound <= tau * (1 + REL_TOL) + 1e-15:
            raise InvariantViolation(f"tau_bound {bound!r} exceeds tau {tau!r}")
    elif keys == CRN_KEYS:
        vals = [float(rep[k]) for k in ("tau", "tau1", "tau2", "tau3")]
        scale = max(vals[0], 1e-300)
        for a, b in zip(vals, vals[1:]):
            if a - b < -1e-9 * scale:
                raise InvariantViolation(f"hierarchy broken: {vals}")
    elif "holds" in rep and rep["holds"] is False:
        raise InvariantViolation(f"report flags a violated bound: {rep}")


def _trajectory_csv(results: list[ScenarioResult]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    with_series = [r for r in results if r.times is not None]
    if len(results) == 1 and with_series:
        r = with_series[0]
        w.writerow(["t", *r.columns])
        cols = [np.asarray(v, dtype=float) for v in r.columns.values()]
        for k, t in enumerate(r.times):
            w.writerow([repr(float(t)), *(repr(float(c[k])) for c in cols)])
        return buf.getvalue()
    names: list[str] = []
    for r in with_series:
        names += [c for c in r.columns if c not in names]
    w.writerow(["scenario", "t", *names])
    for r in with_series:
        cols = {c: np.asarray(v, dtype=float) for c, v in r.columns.items()}
        for k, t in enumerate(r.times):
            w.writerow([r.name, repr(float(t)),
                        *(repr(float(cols[c][k])) if c in cols else "" for c in names)])
    return buf.getvalue()


def _bounds_json(results: list[ScenarioResult]) -> str:
    doc = {"scenarios": [{"name": r.name, "kind": r.kind, "reports": r.reports, "scalars": r.scalars}
                         for r in results]}
    return json.dumps(jsonable(doc), sort_keys=True, indent=2) + "\n"


def _summary(results: list[ScenarioResult]) -> str:
    n = len(results)
    out = [f"toposl report: {n} scenario{'' if n == 1 else 's'}"]
    for r in results:
        out.append("")
        out.append(f"[{r.name}] kind={r.kind} status={'ok' if r.ok else 'FAILED'}")
        out += [f"  {ln}" for ln in r.lines]
    return "\n".join(out) + "\n"


def emit_report(results: list[ScenarioResult], out_dir, plots: bool = True) -> list[Path]:
    """Validate every report, then write the artifacts (and figures) into ``out_dir``."""
    for r in results:
        for rep in r.reports:
            validate_report(jsonable(rep))
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in (("trajectory.csv", _trajectory_csv(results)),
                           ("bounds.json", _bounds_json(results)),
                           ("summary.txt", _summary(results))):
            p = out / name
            p.write_text(text)
            written.append(p)
        if plots:
            for r in results:
                for fname, draw in r.figures:
                    written.append(draw(out / f"{r.name}_{fname}"))
    except OSError as exc:
        raise IoError(f"cannot write report to {out}: {exc}") from exc
    return written
