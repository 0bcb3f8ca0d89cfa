"""Scenario configuration: YAML files, schema checks and defaults.

A config holds one scenario, or a ``scenarios:`` list of them sharing
``out`` and ``workers``.  Every mapping is checked against a fixed table of
allowed keys; anything else is rejected with a :class:`ConfigError` that
names the key.  The full schema is documented in ``docs/config.md``.
"""

from __future__ import annotations

import copy
import math
from pathlib import Path

import numpy as np
import yaml

from .errors import ConfigError
from .graph import Graph, chain, complete, cycle, star

KINDS = ("transport", "crn", "boson", "spin", "qwalk", "open", "verify")


def _lambda(v):
    if isinstance(v, str) and v.strip().lower() in ("inf", "infinity"):
        return math.inf
    x = float(v)
    if not x > 0:
        raise ValueError("lambda must be positive")
    return x


def _pos_int(v):
    if isinstance(v, bool) or int(v) != v or int(v) < 1:
        raise ValueError("expected a positive integer")
    return int(v)


def _pos_float(v):
    x = float(v)
    if not x > 0:
        raise ValueError("expected a positive number")
    return x


def _nonneg_float(v):
    x = float(v)
    if not x >= 0:
        raise ValueError("expected a non-negative number")
    return x


def _float_list(v):
    if isinstance(v, (int, float)):
        return [float(v)]
    return [float(x) for x in v]


def _scalar_or_list(v):
    return float(v) if isinstance(v, (int, float)) else [float(x) for x in v]


def _bool(v):
    if not isinstance(v, bool):
        raise ValueError("expected true or false")
    return v


def _str(v):
    if not isinstance(v, str):
        raise ValueError("expected a string")
    return v


def _opt(conv):
    return lambda v: None if v is None else conv(v)


def _measure(v):
    if isinstance(v, str):
        return v
    return [float(x) for x in v]


# key -> (converter, default)
GRID = {
    "steps": (_pos_int, None),
    "tau_max": (_pos_float, None),
    "tau_min": (_opt(_pos_float), None),
    "points": (_pos_int, None),
    "taus": (_opt(lambda v: sorted(_pos_float(x) for x in v)), None),
    "lambdas": (lambda v: [_lambda(x) for x in (v if isinstance(v, list) else [v])], None),
}

BLOCKS = {
    "transport": {
        "graph": (_str, None),
        "a": (_measure, None),
        "b": (_measure, None),
        "dual": (_bool, False),
    },
    "crn": {
        "builtin": (_opt(_str), None),
        "network": (_opt(_str), None),
        "N": (_pos_int, 10),
        "kf": (_pos_float, 2.0),
        "kb": (_pos_float, 1.0),
        "x0": (_opt(_float_list), None),
    },
    "boson": {
        "graph": (_str, "chain:2"),
        "gamma": (_pos_float, 1.0),
        "U": (float, 0.0),
        "mu": (float, 0.0),
        "rate_in": (_scalar_or_list, 0.0),
        "rate_out": (_scalar_or_list, 0.0),
        "n_max": (_pos_int, 2),
        "occupations": (_opt(lambda v: [int(x) for x in v]), None),
    },
    "spin": {
        "N": (_pos_int, 4),
        "gamma": (_pos_float, 1.0),
        "field": (_opt(lambda v: [[float(x) for x in row] for row in v]), None),
        "random_pieces": (_opt(_pos_int), None),
        "field_scale": (_nonneg_float, 1.0),
    },
    "qwalk": {
        "N": (_pos_int, 8),
        "couplings": (_scalar_or_list, 1.0),
        "dt": (_pos_float, 0.1),
        "K": (_pos_int, 20),
        "substeps": (_pos_int, 64),
        "start": (_pos_int, 1),
    },
    "open": {
        "d": (_pos_int, 3),
        "pairs": (_opt(_pos_int), None),
        "drive_scale": (_nonneg_float, 1.0),
        "start": (_opt(_pos_int), None),
    },
    "verify": {
        "suites": (_opt(lambda v: [_str(x) for x in v]), None),
        "quick": (_bool, False),
    },
}

GRID_DEFAULTS = {
    "transport": {"lambdas": [math.inf]},
    "crn": {"steps": 10_000, "tau_max": 1.0, "tau_min": 0.05, "points": 20, "lambdas": [math.inf]},
    "boson": {"steps": 2000, "tau_max": 2.0, "lambdas": [0.5, 1.0, 2.0]},
    "spin": {"steps": 4000, "tau_max": 1.0, "lambdas": [math.inf]},
    "qwalk": {},
    "open": {"steps": 2000, "tau_max": 2.0, "lambdas": [0.5, 1.0, 2.0]},
    "verify": {},
}

SCENARIO_KEYS = {"kind", "name", "seed", "plots", "grid", *KINDS}
TOP_KEYS = {"out", "workers", "scenarios"} | SCENARIO_KEYS


def _check_keys(d, allowed, where: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a mapping")
    for k in d:
        if k not in allowed:
            raise ConfigError(f"unknown key '{where}.{k}'" if where else f"unknown key '{k}'")


def _convert(d: dict, table: dict, where: str, defaults: dict | None = None) -> dict:
    _check_keys(d, table, where)
    out = {}
    for key, (conv, default) in table.items():
        if key in d:
            try:
                out[key] = conv(d[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for '{where}.{key}': {exc}") from None
        else:
            out[key] = copy.deepcopy((defaults or {}).get(key, default))
    return out


def normalize_scenario(raw: dict, index: int = 0) -> dict:
    """Validate one scenario mapping and fill in defaults."""
    _check_keys(raw, SCENARIO_KEYS, "")
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"key 'kind' must be one of {', '.join(KINDS)} (got {kind!r})")
    for other in KINDS:
        if other != kind and other in raw:
            raise ConfigError(f"key '{other}' does not belong to a '{kind}' scenario")
    seed = raw.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("key 'seed' must be a non-negative integer")
    plots = raw.get("plots", True)
    if not isinstance(plots, bool):
        raise ConfigError("key 'plots' must be true or false")
    name = raw.get("name", f"{kind}-{index + 1}" if index else kind)
    if not isinstance(name, str) or not name or any(c in name for c in "/\\,\n"):
        raise ConfigError("key 'name' must be a plain non-empty string")
    return {
        "kind": kind,
        "name": name,
        "seed": seed,
        "plots": plots,
        "grid": _convert(raw.get("grid") or {}, GRID, "grid", GRID_DEFAULTS[kind]),
        "params": _convert(raw.get(kind) or {}, BLOCKS[kind], kind),
    }


def normalize(raw) -> dict:
    """Whole config: ``{"out", "workers", "scenarios": [...]}``."""
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a mapping at top level")
    _check_keys(raw, TOP_KEYS, "")
    out = raw.get("out")
    if out is not None and not isinstance(out, str):
        raise ConfigError("key 'out' must be a path string")
    workers = raw.get("workers", 1)
    if isinstance(workers, bool) or not isinstance(workers, int) or workers < 1:
        raise ConfigError("key 'workers' must be a positive integer")
    if "scenarios" in raw:
        extra = SCENARIO_KEYS & set(raw)
        if extra:
            raise ConfigError(f"key '{sorted(extra)[0]}' must sit inside a scenario when 'scenarios' is used")
        items = raw["scenarios"]
        if not isinstance(items, list):
            raise ConfigError("key 'scenarios' must be a list")
        scenarios = [normalize_scenario(s, k) for k, s in enumerate(items)]
    else:
        scenarios = [normalize_scenario(raw)]
    names = [s["name"] for s in scenarios]
    if len(set(names)) != len(names):
        raise ConfigError("key 'name' must be unique across scenarios")
    return {"out": out, "workers": workers, "scenarios": scenarios}


def load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from None
    return normalize(raw)


# ---- inline specs shared by configs and CLI flags ----

def parse_graph(spec: str, base: Path | None = None) -> Graph:
    """``chain:N``, ``cycle:N``, ``star:N``, ``complete:N`` or a graph file path."""
    builders = {"chain": chain, "cycle": cycle, "star": star, "complete": complete}
    head, _, tail = spec.partition(":")
    if head in builders and tail:
        try:
            return builders[head](int(tail))
        except ValueError as exc:
            raise ConfigError(f"bad graph spec {spec!r}: {exc}") from None
    path = Path(spec)
    if base is not None and not path.is_absolute():
        path = base / path
    try:
        return Graph.read(path)
    except OSError as exc:
        raise ConfigError(f"cannot read graph file {spec}: {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"bad graph file {spec}: {exc}") from None


def read_measure_csv(path) -> np.ndarray:
    """First column of a CSV file; a non-numeric first row is taken as a header."""
    import csv

    try:
        rows = [r for r in csv.reader(Path(path).read_text().splitlines()) if r and r[0].strip()]
    except OSError as exc:
        raise ConfigError(f"cannot read measure file {path}: {exc}") from None
    vals = []
    for k, r in enumerate(rows):
        try:
            vals.append(float(r[0]))
        except ValueError:
            if k:
                raise ConfigError(f"non-numeric entry {r[0]!r} in {path}") from None
    return np.array(vals)


def parse_measure(spec, n: int, base: Path | None = None) -> np.ndarray:
    """``delta:k`` (1-based), ``uniform``, ``csv:path`` or an explicit list."""
    if isinstance(spec, list):
        x = np.array(spec, dtype=float)
    elif spec == "uniform":
        x = np.full(n, 1.0 / n)
    elif spec.startswith("delta:"):
        try:
            k = int(spec[6:])
        except ValueError:
            raise ConfigError(f"bad measure spec {spec!r}") from None
        if not 1 <= k <= n:
            raise ConfigError(f"measure spec {spec!r} outside vertices 1..{n}")
        x = np.zeros(n)
        x[k - 1] = 1.0
    elif spec.startswith("csv:"):
        path = Path(spec[4:])
        if base is not None and not path.is_absolute():
            path = base / path
        x = read_measure_csv(path)
    else:
        raise ConfigError(f"bad measure spec {spec!r} (use delta:k, uniform or csv:path)")
    if x.size != n:
        raise ConfigError(f"measure has {x.size} entries, graph has {n} vertices")
    if not np.all(np.isfinite(x)) or (x < 0).any():
        raise ConfigError("measure entries must be finite and non-negative")
    return x
