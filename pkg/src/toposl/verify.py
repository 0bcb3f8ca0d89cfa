"""Property suites that check the speed limits and their building blocks numerically.

Each suite returns a :class:`SuiteResult`.  ``quick=True`` shrinks case
counts for smoke runs; the full sizes are the acceptance sizes.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass

import numpy as np

from . import crn, graph
from .dynamics import discretized_transport_check, speed_limit_report, velocity
from .flowgen import random_flow_system
from .quantum import (
    basis_projectors,
    boson_flows,
    boson_lattice_model,
    boson_velocity_bound,
    drive_flow_chain,
    excitation_state,
    exchange_current_bound,
    fock_state,
    isolated_projective,
    jump_flow_bound,
    open_system_flows,
    piecewise_constant_field,
    random_density,
    random_hermitian,
    random_open_system,
    random_pure,
    simulate_boson,
    simulate_open,
    simulate_spin,
    spin_chain_model,
    spin_velocity_bound,
    transfer_time_bound,
)
from .transport import generalized_wasserstein, kantorovich_dual, total_variation, wasserstein1

SLACK = 1e-9


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    cases: int
    violations: int
    worst: float
    elapsed: float
    detail: str = ""
    informational: bool = False

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        tag = " (informational)" if self.informational else ""
        return (f"{status} {self.name}{tag}: cases={self.cases} violations={self.violations} "
                f"worst={self.worst:.3e} time={self.elapsed:.2f}s {self.detail}").rstrip()


class _Tally:
    def __init__(self):
        self.cases = 0
        self.violations = 0
        self.worst = -math.inf

    def check(self, excess: float, slack: float = SLACK):
        """Record a case whose inequality holds when ``excess <= slack``."""
        self.cases += 1
        self.worst = max(self.worst, float(excess))
        if not excess <= slack:
            self.violations += 1


# ---- 1: reaction cascade ----

def cascade_suite(points: int = 20, steps: int = 10_000, N: int = 10) -> list[SuiteResult]:
    t0 = time.perf_counter()
    net = crn.cascade_network(N, 2.0, 1.0)
    x0 = np.linspace(1.0, 0.1, N)
    taus = np.linspace(0.05, 1.0, points)
    bounds = crn.crn_bounds_sweep(net, x0, taus, math.inf, steps)
    el = time.perf_counter() - t0
    hier = _Tally()
    sat = _Tally()
    strict = _Tally()
    for b in bounds:
        for gap in b.hierarchy_gaps():
            hier.check(-gap)
        sat.check(0.99 - b.tau1 / b.tau, 0.0)
        strict.check(b.tau3 - min(b.tau1, b.tau2), -1e-300)
    ratio = min(b.tau1 / b.tau for b in bounds)
    return [
        SuiteResult("cascade hierarchy tau>=tau1>=tau2>=tau3", hier.violations == 0, hier.cases,
                    hier.violations, hier.worst, el),
        SuiteResult("cascade saturation tau1/tau>=0.99", sat.violations == 0, sat.cases, sat.violations,
                    sat.worst, el, f"min ratio={ratio:.9f}"),
        SuiteResult("cascade tau3 strictly smallest", strict.violations == 0, strict.cases,
                    strict.violations, strict.worst, el),
    ]


# ---- 2: transport exactness ----

def transport_suite(cases: int = 200, seed: int = 11) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    g = graph.chain(10)
    a = np.zeros(10)
    b = np.zeros(10)
    a[0] = b[9] = 1.0
    w, _ = wasserstein1(g, a, b)
    exact = SuiteResult("chain delta_1 -> delta_10 equals 9", w == 9.0, 1, int(w != 9.0), w - 9.0,
                        time.perf_counter() - t0, f"value={w!r}")
    t0 = time.perf_counter()
    gap = _Tally()
    for _ in range(cases):
        n = int(rng.integers(2, 17))
        g = graph.random_connected(n, rng)
        a = rng.random(n)
        b = rng.random(n)
        b *= a.sum() / b.sum()
        primal, _ = wasserstein1(g, a, b)
        dual, _ = kantorovich_dual(g, a, b)
        gap.check(abs(primal - dual), 1e-8)
    pd = SuiteResult("primal-dual gap <= 1e-8", gap.violations == 0, gap.cases, gap.violations, gap.worst,
                     time.perf_counter() - t0)
    t0 = time.perf_counter()
    tv = _Tally()
    for _ in range(cases):
        n = int(rng.integers(2, 17))
        g = graph.random_connected(n, rng)
        a = rng.random(n) * rng.uniform(0.1, 3)
        b = rng.random(n) * rng.uniform(0.1, 3)
        if rng.random() < 0.3:
            a[rng.random(n) < 0.4] = 0.0
        tv.check(abs(generalized_wasserstein(g, a, b, 0.5).value - total_variation(a, b)))
    tvr = SuiteResult("W_{1,1/2} equals total variation", tv.violations == 0, tv.cases, tv.violations,
                      tv.worst, time.perf_counter() - t0)
    return [exact, pd, tvr]


# ---- 3: greedy matching ----

def greedy_suite(cases: int = 500, seed: int = 12) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    tally = _Tally()
    for _ in range(cases):
        a = rng.uniform(0.01, 5, int(rng.integers(1, 7)))
        b = rng.uniform(0.01, 5, int(rng.integers(1, 7)))
        if rng.random() < 0.3:
            a = rng.integers(1, 5, a.size).astype(float)
            b = rng.integers(1, 5, b.size).astype(float)
        tally.check(greedy_violation(a, b))
    Z, at, bt = crn.greedy_split([4, 5], [1, 2, 3])
    example = abs(at.sum() - 6.0)
    tally.check(example)
    tally.check(greedy_violation([4, 5], [1, 2, 3]))
    return [SuiteResult("greedy split constraints", tally.violations == 0, tally.cases, tally.violations,
                        tally.worst, time.perf_counter() - t0, f"example sum={at.sum():g}")]


def greedy_violation(a, b) -> float:
    """Largest breach of the split constraints (non-positive means all hold)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    Z, at, bt = crn.greedy_split(a, b)
    scale = max(a.sum(), b.sum())
    excess = [
        -Z.min(),
        np.abs(Z.sum(axis=1) - at).max(),
        np.abs(Z.sum(axis=0) - bt).max(),
        (at - a).max(),
        (bt - b).max(),
        abs(at.sum() - min(a.sum(), b.sum())) - 1e-12 * scale,
        float(np.count_nonzero(Z) - (a.size + b.size - 1)),
    ]
    return float(max(excess))


# ---- 4: master inequality on random flow systems ----

def master_suite(systems: int = 100, steps: int = 1000, seed: int = 13) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    master = _Tally()
    sandwich = _Tally()
    theorem = _Tally()
    literal = _Tally()
    for k in range(systems):
        external = k % 4 != 0
        tree = k % 8 == 0
        sys_ = random_flow_system(rng, external=external, tree=tree)
        traj = sys_.simulate(steps)
        lams = sys_.admissible_lambdas()
        if tree and not external:
            lam = math.inf
        else:
            lam = lams[(k // 4) % len(lams)] if external else lams[(k // 8) % len(lams)]
        rep = speed_limit_report(traj, lam)
        master.check(rep.saturation_ratio - 1.0, 1e-6)
        lhs, rhs = discretized_transport_check(traj, lam)
        w = rep.distance
        sandwich.check(max(w - lhs, lhs - rhs * (1 + 1e-3)), 1e-12)
        closeness = 1.0 - lhs / rhs if rhs > 0 else 0.0
        literal.check(closeness, 0.01)
        if tree and not external and math.isinf(lam):
            theorem.check(closeness, 0.01)
    el = time.perf_counter() - t0
    return [
        SuiteResult("master inequality tau_bound <= tau(1+1e-6)", master.violations == 0, master.cases,
                    master.violations, master.worst, el),
        SuiteResult("chain sum between W(x0,xtau) and velocity integral", sandwich.violations == 0,
                    sandwich.cases, sandwich.violations, sandwich.worst, el),
        SuiteResult("chain sum within 1% on trees without external flows", theorem.violations == 0
                    and theorem.cases > 0, theorem.cases, theorem.violations, theorem.worst, el),
        SuiteResult("chain sum within 1% on every system", literal.violations == 0, literal.cases,
                    literal.violations, literal.worst, el,
                    "circulation and finite-lambda shortcuts make the sum strictly smaller",
                    informational=True),
    ]


# ---- 5: quantum inequalities ----

def _random_boson(rng):
    n = int(rng.integers(1, 4))
    g = graph.random_connected(n, rng) if n > 1 else graph.Graph(1)
    n_max = int(rng.integers(1, 4))
    gamma = float(rng.uniform(0.2, 2.0))
    model = boson_lattice_model(g, gamma, U=float(rng.uniform(-1, 1)), mu=float(rng.uniform(-1, 1)),
                                rate_in=rng.uniform(0.05, 2.0, n), rate_out=rng.uniform(0.05, 2.0, n),
                                n_max=n_max)
    return model, gamma


def quantum_suite(cases: int = 100, seed: int = 14) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    out = []

    t0 = time.perf_counter()
    s3, e28 = _Tally(), _Tally()
    for _ in range(cases):
        model, gamma = _random_boson(rng)
        snap = boson_flows(model, random_density(model.dim, rng))
        lhs, rhs = exchange_current_bound(snap)
        s3.check(lhs - rhs)
        dg = graph.max_degree(model.graph)
        for lam in (0.5, 1.0, 2.0):
            e28.check(velocity(snap.flow, lam) - boson_velocity_bound(snap, gamma, dg, lam))
    el = time.perf_counter() - t0
    out.append(SuiteResult("exchange flows <= sqrt(sigma a/2)", s3.violations == 0, s3.cases,
                           s3.violations, s3.worst, el))
    out.append(SuiteResult("boson velocity <= gamma d_G N + lam sqrt(sigma a/2)", e28.violations == 0,
                           e28.cases, e28.violations, e28.worst, el))

    t0 = time.perf_counter()
    s4a, s4b, s5 = _Tally(), _Tally(), _Tally()
    for _ in range(cases):
        d = int(rng.integers(2, 7))
        model = random_open_system(d, rng)
        rho = random_density(d, rng)
        snap = open_system_flows(model, rho, check=False)
        V = model.data["V"](0.0)
        lhs, mid, rhs = drive_flow_chain(snap, V @ rho - rho @ V)
        s4a.check(lhs - mid)
        s4b.check(mid - rhs)
        e_lhs, e_rhs = jump_flow_bound(snap)
        s5.check(e_lhs - e_rhs)
    el = time.perf_counter() - t0
    out.append(SuiteResult("sum|f_n| <= ||[V,rho]||_1 <= 2 Delta V",
                           s4a.violations + s4b.violations == 0, s4a.cases + s4b.cases,
                           s4a.violations + s4b.violations, max(s4a.worst, s4b.worst), el))
    out.append(SuiteResult("jump flows <= sqrt((sigma_pop+sigma_env) a/2)", s5.violations == 0, s5.cases,
                           s5.violations, s5.worst, el))

    t0 = time.perf_counter()
    iso = _Tally()
    for _ in range(cases):
        d = int(rng.integers(2, 7))
        H = random_hermitian(d, rng)
        rho = random_pure(d, rng) if rng.random() < 0.5 else random_density(d, rng)
        if rng.random() < 0.5:
            P = basis_projectors(d)
        else:
            P = _random_partition(d, rng)
        snap = isolated_projective(H, P, rho, check=False)
        g = graph.Graph(len(P), [(m, n) for m in range(len(P)) for n in range(m + 1, len(P))
                                 if np.abs(P[m] @ H @ P[n]).max() > 1e-12])
        bound = math.sqrt(graph.max_degree(g)) * snap.energy_fluctuation if g.edges else 0.0
        iso.check(velocity(snap.flow) - bound)
    out.append(SuiteResult("isolated velocity <= sqrt(d_G) Delta H", iso.violations == 0, iso.cases,
                           iso.violations, iso.worst, time.perf_counter() - t0))
    return out


def _random_partition(d: int, rng) -> list[np.ndarray]:
    """Projectors onto random groups of basis vectors of a random unitary frame."""
    from .quantum import random_unitary

    U = random_unitary(d, rng)
    k = int(rng.integers(1, d + 1))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, d - k)])
    rng.shuffle(labels)
    return [U[:, labels == c] @ U[:, labels == c].conj().T for c in range(k)]


# ---- 6: spin transfer ----

def spin_suite(Ns=(2, 3, 4, 5, 6), protocols: int = 3, gamma: float = 1.0, seed: int = 15,
               steps_per_unit: int = 4000) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    transfer, vel, master = _Tally(), _Tally(), _Tally()
    for N in Ns:
        T = transfer_time_bound(N, gamma)
        # distance to a point mass has a single feasible plan: sum_n x_n d(n, N)
        hops_to_end = graph.shortest_path_matrix(graph.chain(N))[:, -1]
        fields = [None] + [piecewise_constant_field(rng.uniform(-2, 2, size=(8, N)), T)
                           for _ in range(protocols)]
        for field in fields:
            model = spin_chain_model(N, gamma, field)
            steps = max(int(round(steps_per_unit * T)), 8) // 8 * 8
            run = simulate_spin(model, excitation_state(N, 0), T, steps)
            tr = run.trajectory
            for d in tr.measures[:-1] @ hops_to_end:
                transfer.check(0.05 - d, 0.0)
            for snap in run.snapshots:
                vel.check(velocity(snap.flow) - spin_velocity_bound(model, snap))
            master.check(speed_limit_report(tr).saturation_ratio - 1.0, 1e-6)
    el = time.perf_counter() - t0
    return [
        SuiteResult("no transfer to within 0.05 before (N-1)/(2 gamma)", transfer.violations == 0,
                    transfer.cases, transfer.violations, transfer.worst, el),
        SuiteResult("spin velocity <= 2 gamma M", vel.violations == 0, vel.cases, vel.violations,
                    vel.worst, el),
        SuiteResult("spin trajectories obey the master inequality", master.violations == 0, master.cases,
                    master.violations, master.worst, el),
    ]


# ---- 7: conservation ----

def conservation_suite(runs: int = 6, seed: int = 16, steps: int = 2000) -> list[SuiteResult]:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    trace, eig, number, mass = _Tally(), _Tally(), _Tally(), _Tally()
    for _ in range(runs):
        model, _ = _random_boson(rng)
        with warnings.catch_warnings():
            # random initial states fill the top Fock level on purpose
            warnings.simplefilter("ignore", RuntimeWarning)
            run = simulate_boson(model, random_density(model.dim, rng), 2.0, steps)
        trace.check(run.max_trace_error - 1e-7, 0.0)
        eig.check(-run.min_eigenvalue - 1e-7, 0.0)
        om = random_open_system(int(rng.integers(2, 7)), rng)
        orun = simulate_open(om, random_density(om.dim, rng), 2.0, steps, check=False)
        trace.check(orun.max_trace_error - 1e-7, 0.0)
        eig.check(-orun.min_eigenvalue - 1e-7, 0.0)

        g = graph.random_connected(int(rng.integers(2, 4)), rng)
        iso = boson_lattice_model(g, float(rng.uniform(0.3, 1.5)), U=float(rng.uniform(-1, 1)),
                                  mu=float(rng.uniform(-1, 1)), n_max=2)
        occ = np.zeros(g.n, dtype=int)
        occ[0] = 1
        irun = simulate_boson(iso, fock_state(iso, occ), 2.0, steps)
        Nt = irun.trajectory.measures.sum(axis=1)
        number.check(np.ptp(Nt) - 1e-8, 0.0)

        net = _random_conservative_network(rng)
        x0 = rng.uniform(0.1, 2.0, net.n_species)
        _, xs = crn.simulate(net, x0, 2.0, steps)
        mass.check(np.ptp(xs.sum(axis=1)) - 1e-8, 0.0)
    el = time.perf_counter() - t0
    return [
        SuiteResult("Lindblad trace within 1e-7", trace.violations == 0, trace.cases, trace.violations,
                    trace.worst, el),
        SuiteResult("Lindblad min eigenvalue >= -1e-7", eig.violations == 0, eig.cases, eig.violations,
                    eig.worst, el),
        SuiteResult("isolated boson number constant within 1e-8", number.violations == 0, number.cases,
                    number.violations, number.worst, el),
        SuiteResult("conservative network mass constant within 1e-8", mass.violations == 0, mass.cases,
                    mass.violations, mass.worst, el),
    ]


def _random_conservative_network(rng) -> crn.ReactionNetwork:
    """Random isomerisations and 2-to-2 exchanges, so every channel keeps total stoichiometry."""
    S = int(rng.integers(2, 6))
    R = int(rng.integers(1, 5))
    nup = np.zeros((R, S), dtype=int)
    num = np.zeros((R, S), dtype=int)
    for r in range(R):
        while True:
            size = int(rng.integers(1, 3))
            lhs = rng.integers(0, S, size)
            rhs = rng.integers(0, S, size)
            a = np.bincount(lhs, minlength=S)
            b = np.bincount(rhs, minlength=S)
            if not np.array_equal(a, b):
                break
        nup[r], num[r] = a, b
    return crn.ReactionNetwork(nup, num, rng.uniform(0.2, 2, R), rng.uniform(0.2, 2, R),
                               tuple(f"S{i + 1}" for i in range(S)))


SUITES = {
    "cascade": cascade_suite,
    "transport": transport_suite,
    "greedy": greedy_suite,
    "master": master_suite,
    "quantum": quantum_suite,
    "spin": spin_suite,
    "conservation": conservation_suite,
}

QUICK_ARGS = {
    "cascade": {"points": 5, "steps": 2000},
    "transport": {"cases": 20},
    "greedy": {"cases": 50},
    "master": {"systems": 8, "steps": 200},
    "quantum": {"cases": 10},
    "spin": {"Ns": (2, 3, 4), "protocols": 1},
    "conservation": {"runs": 1, "steps": 400},
}


def run_suites(names=None, quick: bool = False) -> list[SuiteResult]:
    names = list(names or SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise KeyError(f"unknown suite(s): {', '.join(unknown)}")
    out: list[SuiteResult] = []
    for name in names:
        out.extend(SUITES[name](**(QUICK_ARGS[name] if quick else {})))
    return out
