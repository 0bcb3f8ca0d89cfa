"""Deterministic mass-action reaction networks on their stoichiometric transport graph.

Sign conventions: ``J_plus = k_plus * prod x**nu_plus`` is the forward
(reactant to product) flux, ``J_minus`` the backward one, and the net
current reported by :func:`fluxes` is ``J = J_minus - J_plus``.  The rate
equation is the physical one, ``dx/dt = sum_rho (nu_minus - nu_plus) *
(J_plus - J_minus)``.  Every bound below depends on currents only through
``|J|`` or ``J * ln(J_minus / J_plus)``, so the sign of ``J`` never matters
there.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass

import numpy as np

from .dynamics import FlowField
from .errors import EmptyImbalance, NegativeConcentration, NetworkParseError, NonPositiveEntry, ZeroFlux
from .graph import Graph
from .numerics import log_mean, rk4_integrate
from .transport import distance, total_variation

log = logging.getLogger(__name__)

ZERO_PERTURBATION = 1e-12


@dataclass(frozen=True)
class ReactionNetwork:
    """Reversible channels ``sum nu_plus X <-> sum nu_minus X``.

    ``nu_plus`` and ``nu_minus`` are ``(R, S)`` integer arrays; rates are
    length-``R`` positive arrays.
    """

    nu_plus: np.ndarray
    nu_minus: np.ndarray
    k_plus: np.ndarray
    k_minus: np.ndarray
    species: tuple[str, ...]

    def __post_init__(self):
        nup = np.atleast_2d(np.asarray(self.nu_plus))
        num = np.atleast_2d(np.asarray(self.nu_minus))
        if nup.shape != num.shape:
            raise ValueError("stoichiometry arrays differ in shape")
        for nu in (nup, num):
            if (nu < 0).any() or not np.all(np.equal(np.mod(nu, 1), 0)):
                raise ValueError("stoichiometric coefficients must be non-negative integers")
        kp = np.asarray(self.k_plus, dtype=float).ravel()
        km = np.asarray(self.k_minus, dtype=float).ravel()
        if kp.size != nup.shape[0] or km.size != nup.shape[0]:
            raise ValueError("one forward and one backward rate per channel")
        if (kp <= 0).any() or (km <= 0).any():
            raise ValueError("rates must be strictly positive")
        if len(self.species) != nup.shape[1]:
            raise ValueError("species names do not match stoichiometry width")
        for r in range(nup.shape[0]):
            if np.array_equal(nup[r], num[r]):
                raise EmptyImbalance(f"channel {r + 1} leaves every species unchanged")
        object.__setattr__(self, "nu_plus", nup.astype(int))
        object.__setattr__(self, "nu_minus", num.astype(int))
        object.__setattr__(self, "k_plus", kp)
        object.__setattr__(self, "k_minus", km)
        object.__setattr__(self, "species", tuple(self.species))

    @property
    def n_species(self) -> int:
        return self.nu_plus.shape[1]

    @property
    def n_channels(self) -> int:
        return self.nu_plus.shape[0]

    @property
    def stoich(self) -> np.ndarray:
        """``nu_minus - nu_plus``, shape ``(R, S)``."""
        return self.nu_minus - self.nu_plus

    @property
    def conservative(self) -> np.ndarray:
        return self.stoich.sum(axis=1) == 0

    # ---- text format ----

    @classmethod
    def parse(cls, text: str) -> "ReactionNetwork":
        """Parse lines like ``2 X1 + X2 <-> X3 , kf=1.0 , kb=0.5``.

        ``0`` denotes the empty complex; ``#`` starts a comment.
        """
        species: list[str] = []
        rows = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = [p.strip() for p in line.split(",")]
            if "<->" not in parts[0]:
                raise NetworkParseError(f"line {lineno}: missing '<->'")
            lhs, rhs = parts[0].split("<->")
            rates = {}
            for p in parts[1:]:
                m = re.fullmatch(r"(kf|kb)\s*=\s*(\S+)", p)
                if not m:
                    raise NetworkParseError(f"line {lineno}: bad rate field {p!r}")
                try:
                    rates[m.group(1)] = float(m.group(2))
                except ValueError:
                    raise NetworkParseError(f"line {lineno}: bad rate value {m.group(2)!r}") from None
            if set(rates) != {"kf", "kb"}:
                raise NetworkParseError(f"line {lineno}: need both kf= and kb=")
            rows.append((_parse_complex(lhs, species, lineno), _parse_complex(rhs, species, lineno),
                         rates["kf"], rates["kb"]))
        if not rows:
            raise NetworkParseError("no reactions found")
        S = len(species)
        nup = np.zeros((len(rows), S), dtype=int)
        num = np.zeros((len(rows), S), dtype=int)
        for r, (left, right, _, _) in enumerate(rows):
            for i, c in left.items():
                nup[r, i] += c
            for i, c in right.items():
                num[r, i] += c
        return cls(nup, num, [r[2] for r in rows], [r[3] for r in rows], tuple(species))

    def to_text(self) -> str:
        def side(nu):
            terms = [(f"{c} " if c > 1 else "") + s for c, s in zip(nu, self.species) if c]
            return " + ".join(terms) if terms else "0"

        lines = [f"{side(self.nu_plus[r])} <-> {side(self.nu_minus[r])} , "
                 f"kf={float(self.k_plus[r])!r} , kb={float(self.k_minus[r])!r}" for r in range(self.n_channels)]
        return "\n".join(lines) + "\n"


def _parse_complex(text: str, species: list[str], lineno: int) -> dict[int, int]:
    text = text.strip()
    out: dict[int, int] = {}
    if text in ("0", "", "∅"):
        return out
    for term in text.split("+"):
        m = re.fullmatch(r"\s*(\d+)?\s*([A-Za-z_][\w]*)\s*", term)
        if not m:
            raise NetworkParseError(f"line {lineno}: bad term {term.strip()!r} (integer stoichiometry required)")
        coeff = int(m.group(1)) if m.group(1) else 1
        name = m.group(2)
        if name not in species:
            species.append(name)
        idx = species.index(name)
        out[idx] = out.get(idx, 0) + coeff
    return out


def cascade_network(N: int, k_f: float, k_b: float) -> ReactionNetwork:
    """Chain of conversions ``X_i <-> X_{i+1}``, ``i = 1..N-1``."""
    if N < 2:
        raise ValueError("cascade needs N >= 2")
    nup = np.zeros((N - 1, N), dtype=int)
    num = np.zeros((N - 1, N), dtype=int)
    for r in range(N - 1):
        nup[r, r] = 1
        num[r, r + 1] = 1
    return ReactionNetwork(nup, num, np.full(N - 1, float(k_f)), np.full(N - 1, float(k_b)),
                           tuple(f"X{i + 1}" for i in range(N)))


# ---- kinetics ----

def _concentrations(net: ReactionNetwork, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != net.n_species:
        raise ValueError(f"expected {net.n_species} concentrations, got {x.shape[-1]}")
    if (x < -1e-12).any():
        raise NegativeConcentration(f"negative concentration {x.min():.3e}")
    return np.maximum(x, 0.0)


def fluxes(net: ReactionNetwork, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mass-action ``(J_plus, J_minus, J_minus - J_plus)`` per channel.

    ``x`` may be a single state ``(S,)`` or a stack ``(K, S)``.
    """
    x = _concentrations(net, x)
    xe = x[..., None, :]
    jp = net.k_plus * np.prod(xe ** net.nu_plus, axis=-1)
    jm = net.k_minus * np.prod(xe ** net.nu_minus, axis=-1)
    return jp, jm, jm - jp


def rate_derivative(net: ReactionNetwork, x) -> np.ndarray:
    jp, jm, _ = fluxes(net, x)
    return (jp - jm) @ net.stoich


def entropy_production_rate(net: ReactionNetwork, x, strict: bool = False):
    """``sum_rho (J_minus - J_plus) ln(J_minus / J_plus)``; ``inf`` if a one-sided flux vanishes."""
    jp, jm, j = fluxes(net, x)
    one_sided = ((jp == 0) | (jm == 0)) & (jp != jm)
    if strict and one_sided.any():
        raise ZeroFlux("a forward or backward flux vanishes")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = j * (np.log(jm) - np.log(jp))
    terms = np.where(jp == jm, 0.0, terms)
    terms = np.where(one_sided, np.inf, terms)
    out = terms.sum(axis=-1)
    return out if np.ndim(out) else float(out)


def diffusion_coefficient(net: ReactionNetwork, x):
    jp, jm, _ = fluxes(net, x)
    weights = (net.stoich ** 2).sum(axis=1)
    out = (net.n_species / 8.0) * ((jp + jm) * weights).sum(axis=-1)
    return out if np.ndim(out) else float(out)


# ---- transport graph ----

def greedy_split(a, b, tol: float = 1e-12):
    """Match two positive vectors greedily, smallest entries first.

    Returns ``(Z, a_used, b_used)`` with ``Z >= 0``, row sums ``a_used <= a``,
    column sums ``b_used <= b``, ``sum(a_used) == min(sum a, sum b)`` and at
    most ``len(a) + len(b) - 1`` nonzero entries.  Both lists are re-sorted
    by value (ties broken by index) before every match.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if (a <= 0).any() or (b <= 0).any():
        raise NonPositiveEntry("greedy_split needs strictly positive entries")
    Z = np.zeros((a.size, b.size))
    ra = {i: float(v) for i, v in enumerate(a)}
    rb = {j: float(v) for j, v in enumerate(b)}
    scale = max(a.sum(), b.sum())
    while ra and rb:
        i = min(ra, key=lambda k: (ra[k], k))
        j = min(rb, key=lambda k: (rb[k], k))
        m = min(ra[i], rb[j])
        Z[i, j] += m
        ra[i] -= m
        rb[j] -= m
        if ra[i] <= tol * scale:
            del ra[i]
        if rb[j] <= tol * scale:
            del rb[j]
    return Z, Z.sum(axis=1), Z.sum(axis=0)


@dataclass(frozen=True)
class TransportGraphData:
    """Per-channel edge weights ``Z[rho, i, j]`` (``i`` gains, ``j`` loses), ``mu``, ``eta``, ``chi``."""

    graph: Graph
    Z: np.ndarray  # (R, S, S)
    mu: np.ndarray  # (R, S)
    eta: np.ndarray  # (R,)
    chi: np.ndarray  # (R,)
    conservative: np.ndarray  # (R,) bool
    edge_weights: np.ndarray  # (R, |E|): d(stored f_ij)/d(net forward rate)

    @property
    def all_conservative(self) -> bool:
        return bool(self.conservative.all())

    def coefficients(self, lam: float) -> np.ndarray:
        """``lam * eta + chi`` per channel; ``lam = inf`` needs a conservative network."""
        if math.isinf(lam):
            if not self.all_conservative:
                raise ValueError("lambda=inf is only defined for conservative networks")
            return self.chi.copy()
        return lam * self.eta + self.chi

    def edges_added(self, rho: int) -> int:
        return int((self.Z[rho] > 0).sum())


def build_transport_graph(net: ReactionNetwork, tol: float = 1e-12) -> TransportGraphData:
    R, S = net.n_channels, net.n_species
    nu = net.stoich
    Z = np.zeros((R, S, S))
    mu = np.zeros((R, S))
    eta = np.zeros(R)
    chi = np.zeros(R)
    edges = set()
    for r in range(R):
        gain = np.flatnonzero(nu[r] > 0)
        loss = np.flatnonzero(nu[r] < 0)
        if gain.size == 0 or loss.size == 0:
            # pure creation/annihilation: everything goes through external flows
            a_tot, b_tot = nu[r, gain].sum(), -nu[r, loss].sum()
            chi[r] = 0.0
            eta[r] = float(abs(a_tot - b_tot))
            continue
        a = nu[r, gain].astype(float)
        b = (-nu[r, loss]).astype(float)
        z, a_used, b_used = greedy_split(a, b)
        Z[r][np.ix_(gain, loss)] = z
        mu[r, gain] = a_used
        mu[r, loss] = -b_used
        chi[r] = min(a.sum(), b.sum())
        eta[r] = abs(a.sum() - b.sum())
        for ii, i in enumerate(gain):
            for jj, j in enumerate(loss):
                if z[ii, jj] > tol:
                    edges.add((min(i, j), max(i, j)))
    g = Graph(S, edges)
    W = np.zeros((R, len(g.edges)))
    for r in range(R):
        for i, j in zip(*np.nonzero(Z[r] > tol)):
            k = g.edge_index(i, j)
            W[r, k] += Z[r, i, j] if i < j else -Z[r, i, j]
    data = TransportGraphData(g, Z, mu, eta, chi, net.conservative.copy(), W)
    _check_transport_data(net, data)
    return data


def _check_transport_data(net: ReactionNetwork, d: TransportGraphData, tol: float = 1e-9):
    nu = net.stoich
    for r in range(net.n_channels):
        gain = nu[r] > 0
        loss = nu[r] < 0
        rows = d.Z[r].sum(axis=1)
        cols = d.Z[r].sum(axis=0)
        assert np.allclose(rows[gain], d.mu[r, gain], atol=tol)
        assert np.all(d.mu[r, gain] <= nu[r, gain] + tol)
        assert np.allclose(cols[loss], -d.mu[r, loss], atol=tol)
        assert np.all(-d.mu[r, loss] <= -nu[r, loss] + tol)
        assert abs(d.mu[r, gain].sum() - d.chi[r]) <= tol
        assert abs(0.5 * d.eta[r] + d.chi[r] - 0.5 * np.abs(nu[r]).sum()) <= tol
        if d.conservative[r]:
            assert d.eta[r] == 0 and np.allclose(d.mu[r], nu[r], atol=tol)
        assert d.edges_added(r) <= max(gain.sum() + loss.sum() - 1, 0)


def decompose_flows(net: ReactionNetwork, tgd: TransportGraphData, x) -> FlowField:
    """Vertex and edge flows on the transport graph that reproduce the rate equation."""
    jp, jm, _ = fluxes(net, x)
    forward = jp - jm
    external = forward @ (net.stoich - tgd.mu)
    edge = forward @ tgd.edge_weights
    return FlowField(external, edge)


def flow_generator(net: ReactionNetwork, tgd: TransportGraphData | None = None):
    """Adapter for :func:`toposl.dynamics.evolve`."""
    tgd = tgd or build_transport_graph(net)
    return lambda t, x: decompose_flows(net, tgd, x)


def kinetic_term(net: ReactionNetwork, x, lam: float = math.inf,
                 tgd: TransportGraphData | None = None, strict: bool = False):
    """``sum_rho (lam*eta + chi)^2 * logmean(J_minus, J_plus)``.

    ``lam = inf`` gives the conservative form with coefficient
    ``(1/2) sum_i |nu_i^- - nu_i^+|``.
    """
    tgd = tgd or build_transport_graph(net)
    jp, jm, _ = fluxes(net, x)
    if strict and (((jp == 0) | (jm == 0)) & (jp != jm)).any():
        raise ZeroFlux("a forward or backward flux vanishes")
    c = tgd.coefficients(lam)
    out = (c ** 2 * log_mean(jm, jp)).sum(axis=-1)
    return out if np.ndim(out) else float(out)


def weighted_current(net: ReactionNetwork, x, lam: float = math.inf,
                     tgd: TransportGraphData | None = None):
    """``sum_rho (lam*eta + chi) |J|``, the velocity upper bound."""
    tgd = tgd or build_transport_graph(net)
    _, _, j = fluxes(net, x)
    out = (tgd.coefficients(lam) * np.abs(j)).sum(axis=-1)
    return out if np.ndim(out) else float(out)


# ---- bounds ----

@dataclass(frozen=True)
class CrnBounds:
    tau: float
    lam: float
    tau1: float
    tau2: float
    tau3: float
    distance: float
    avg_weighted_current: float
    avg_sqrt_sigma_ell: float
    avg_sigma: float
    avg_ell: float
    avg_diffusion: float
    tv_distance: float

    def hierarchy_gaps(self) -> tuple[float, float, float]:
        return self.tau - self.tau1, self.tau1 - self.tau2, self.tau2 - self.tau3

    def hierarchy_holds(self, rel_tol: float = 1e-9) -> bool:
        scale = max(self.tau, 1e-300)
        return all(gap >= -rel_tol * scale for gap in self.hierarchy_gaps())

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "lambda": "inf" if math.isinf(self.lam) else self.lam,
            "tau1": self.tau1,
            "tau2": self.tau2,
            "tau3": self.tau3,
            "distance": self.distance,
            "avg_weighted_current": self.avg_weighted_current,
            "avg_sqrt_sigma_ell": self.avg_sqrt_sigma_ell,
            "avg_sigma": self.avg_sigma,
            "avg_ell": self.avg_ell,
            "avg_diffusion": self.avg_diffusion,
            "tv_distance": self.tv_distance,
        }


def _ratio(num: float, den: float) -> float:
    if num <= 0:
        return 0.0
    if not math.isfinite(den):
        return 0.0
    return num / den if den > 0 else math.inf


def prepare_initial_state(x0) -> np.ndarray:
    """Lift exact zeros to 1e-12 so entropy and kinetic terms stay finite."""
    x0 = np.array(x0, dtype=float)
    zeros = x0 <= 0
    if zeros.any():
        log.info("perturbing %d zero concentration(s) to %.0e", int(zeros.sum()), ZERO_PERTURBATION)
        x0[zeros] = ZERO_PERTURBATION
    return x0


def simulate(net: ReactionNetwork, x0, tau: float, steps: int):
    """RK4 trajectory of the rate equation; returns ``(times, states)``."""
    series = rk4_integrate(lambda t, x: rate_derivative(net, x), np.asarray(x0, dtype=float),
                           0.0, tau, steps)
    if series.values.min() < -1e-9:
        raise NegativeConcentration(f"trajectory went negative ({series.values.min():.3e})")
    return series.times, np.maximum(series.values, 0.0)


def _bounds_from_prefix(net, tgd, times, xs, k, lam, integrands) -> CrnBounds:
    wc, sq, sig, ell, dif = (np.trapezoid(v[: k + 1], times[: k + 1]) for v in integrands)
    tau = float(times[k])
    wc, sq, sig, ell, dif = (float(v) / tau for v in (wc, sq, sig, ell, dif))
    x0, xt = xs[0], xs[k]
    dist = distance(tgd.graph, x0, xt, lam, allow_disconnected=True)
    tv = total_variation(x0, xt)
    return CrnBounds(
        tau=tau, lam=float(lam),
        tau1=_ratio(dist, wc),
        tau2=_ratio(dist, math.sqrt(sig * ell)),
        tau3=_ratio(tv, math.sqrt(sig * dif)),
        distance=dist, avg_weighted_current=wc, avg_sqrt_sigma_ell=sq,
        avg_sigma=sig, avg_ell=ell, avg_diffusion=dif, tv_distance=tv,
    )


def _integrands(net, tgd, xs, lam):
    sigma = np.asarray(entropy_production_rate(net, xs), dtype=float)
    ell = np.asarray(kinetic_term(net, xs, lam, tgd), dtype=float)
    with np.errstate(invalid="ignore"):
        sq = np.sqrt(sigma * ell)
    return (np.asarray(weighted_current(net, xs, lam, tgd), dtype=float), sq, sigma, ell,
            np.asarray(diffusion_coefficient(net, xs), dtype=float))


def crn_bounds_sweep(net: ReactionNetwork, x0, taus, lam: float = math.inf,
                     steps: int = 10_000, tgd: TransportGraphData | None = None) -> list[CrnBounds]:
    """Bounds at several durations from one integration up to ``max(taus)``.

    Every ``tau`` must fall on the integration grid of ``steps`` steps.
    """
    if not (lam > 0):
        raise ValueError("lambda must be positive")
    tgd = tgd or build_transport_graph(net)
    taus = [float(t) for t in taus]
    t_max = max(taus)
    times, xs = simulate(net, prepare_initial_state(x0), t_max, steps)
    h = t_max / steps
    ints = _integrands(net, tgd, xs, lam)
    out = []
    for tau in taus:
        k = int(round(tau / h))
        if k < 1 or abs(k * h - tau) > 1e-9 * max(tau, 1.0):
            raise ValueError(f"tau={tau} is not on the integration grid (h={h})")
        out.append(_bounds_from_prefix(net, tgd, times, xs, k, lam, ints))
    return out


def crn_bounds(net: ReactionNetwork, x0, tau: float, lam: float = math.inf,
               steps: int = 10_000, tgd: TransportGraphData | None = None) -> CrnBounds:
    return crn_bounds_sweep(net, x0, [tau], lam, steps, tgd)[0]
