"""Kob-Andersen constraint, soft rates and continuous-time kinetic Monte Carlo.

Rate convention: every unordered edge carries a single exponential clock
of rate ``c^(eps)_{x,y}(eta)``; when it rings the occupations at ``x`` and
``y`` are exchanged.  For ``k = 1`` a particle therefore jumps to each
empty neighbour at rate 1 (symmetric simple exclusion).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numba
import numpy as np

from .lattice import Configuration, Edge, Geometry, Torus, exchange, make_edge, neighbors


@dataclass(frozen=True)
class ModelParams:
    d: int
    k: int
    eps: float = 0.0
    rho: float | None = None

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"d must be >= 1, got {self.d}")
        if not (self.k == 1 or 2 <= self.k <= self.d):
            raise ValueError(f"need k = 1 or 2 <= k <= d, got k={self.k}, d={self.d}")
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError(f"eps must lie in [0, 1], got {self.eps}")
        if self.rho is not None and not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")

    def with_(self, **changes) -> "ModelParams":
        vals = dict(d=self.d, k=self.k, eps=self.eps, rho=self.rho)
        vals.update(changes)
        return ModelParams(**vals)


def constraint(config: Configuration, edge: Edge | Sequence, params: ModelParams | int) -> int:
    """``c_{x,y}(eta)``: 1 iff both ends see at least k-1 empty neighbours besides each other.

    On a window, sites outside read as occupied.
    """
    k = params if isinstance(params, int) else params.k
    geom = config.geometry
    x, y = make_edge(edge[0], edge[1], geom)
    if k == 1:
        return 1

    def empties(a, b):
        return sum(1 - config[z] for z in neighbors(a, geom) if z != b)

    return int(empties(y, x) >= k - 1 and empties(x, y) >= k - 1)


def soft_rate(config: Configuration, edge: Edge | Sequence, params: ModelParams) -> float:
    return 1.0 if constraint(config, edge, params) else float(params.eps)


def empty_neighbor_count(occ: np.ndarray) -> np.ndarray:
    """Number of empty nearest neighbours of every site of a periodic array."""
    holes = 1 - occ.astype(np.int16)
    out = np.zeros(occ.shape, dtype=np.int16)
    for axis in range(occ.ndim):
        out += np.roll(holes, 1, axis=axis) + np.roll(holes, -1, axis=axis)
    return out


def constraint_field(occ: np.ndarray, k: int, axis: int) -> np.ndarray:
    """``c_{x, x+e_axis}`` for every site ``x`` of a periodic occupancy array."""
    if k == 1:
        return np.ones(occ.shape, dtype=np.uint8)
    holes = 1 - occ.astype(np.int16)
    E = empty_neighbor_count(occ)
    E_up = np.roll(E, -1, axis=axis)
    holes_up = np.roll(holes, -1, axis=axis)
    return ((E_up - holes >= k - 1) & (E - holes_up >= k - 1)).astype(np.uint8)


def neighbor_table(shape: tuple) -> np.ndarray:
    """Flat-index neighbour table of a torus, columns ordered +e1, -e1, ..., +ed, -ed."""
    idx = np.arange(int(np.prod(shape)), dtype=np.int64).reshape(shape)
    cols = []
    for axis in range(len(shape)):
        cols.append(np.roll(idx, -1, axis=axis).ravel())
        cols.append(np.roll(idx, 1, axis=axis).ravel())
    return np.ascontiguousarray(np.stack(cols, axis=1))


# -- KMC kernel ---------------------------------------------------------------

@numba.njit(cache=True, inline="always")
def _edge_rate_bit(occ, E, nbr, edge, d, k):
    s = edge // d
    a = edge - s * d
    t = nbr[s, 2 * a]
    if k == 1:
        return 1
    if E[t] - (1 - occ[s]) >= k - 1 and E[s] - (1 - occ[t]) >= k - 1:
        return 1
    return 0


@numba.njit(cache=True, inline="always")
def _edge_rate_bit_slow(occ, nbr, edge, d, k):
    # Recount from scratch; used only in debug runs.
    s = edge // d
    a = edge - s * d
    t = nbr[s, 2 * a]
    if k == 1:
        return 1
    es = 0
    et = 0
    for j in range(2 * d):
        if nbr[s, j] != t and occ[nbr[s, j]] == 0:
            es += 1
        if nbr[t, j] != s and occ[nbr[t, j]] == 0:
            et += 1
    return 1 if (es >= k - 1 and et >= k - 1) else 0


@numba.njit(cache=True)
def _kmc(occ, nbr, d, k, eps, duration, max_events, epochs, want_snaps, scheme, debug, seed):
    np.random.seed(seed)
    V = occ.shape[0]
    n_edges = V * d
    E = np.zeros(V, dtype=np.int32)
    for s in range(V):
        c = 0
        for j in range(2 * d):
            if occ[nbr[s, j]] == 0:
                c += 1
        E[s] = c

    # order[:n_act] holds the rate-1 edges, order[n_act:] the rate-eps ones
    cls = np.zeros(n_edges, dtype=np.int8)
    pos = np.zeros(n_edges, dtype=np.int64)
    order = np.zeros(n_edges, dtype=np.int64)
    n_act = 0
    for e in range(n_edges):
        cls[e] = _edge_rate_bit(occ, E, nbr, e, d, k)
        if cls[e] == 1:
            n_act += 1
    lo = 0
    hi = n_act
    for e in range(n_edges):
        if cls[e] == 1:
            order[lo] = e
            pos[e] = lo
            lo += 1
        else:
            order[hi] = e
            pos[e] = hi
            hi += 1
    static = k == 1 or eps >= 1.0

    n_ep = epochs.shape[0]
    ep_acc = np.zeros(n_ep, dtype=np.int64)
    ep_att = np.zeros(n_ep, dtype=np.int64)
    ep_part = np.zeros(n_ep, dtype=np.int64)
    ep_cur = np.zeros((n_ep, d), dtype=np.int64)
    snaps = np.zeros((n_ep if want_snaps else 0, V), dtype=np.uint8)
    current = np.zeros(d, dtype=np.int64)
    n_part = 0
    for s in range(V):
        n_part += occ[s]

    t = 0.0
    accepted = 0
    attempted = 0
    ie = 0
    while True:
        if scheme == 0:
            R = n_act + eps * (n_edges - n_act)
        else:
            R = float(n_edges)
        if R > 0.0:
            tn = t + np.random.exponential(1.0 / R)
        else:
            tn = np.inf
        while ie < n_ep and epochs[ie] < tn:
            ep_acc[ie] = accepted
            ep_att[ie] = attempted
            ep_part[ie] = n_part
            for a in range(d):
                ep_cur[ie, a] = current[a]
            if want_snaps:
                snaps[ie, :] = occ
            ie += 1
        if tn > duration:
            t = duration
            break
        if max_events >= 0 and attempted >= max_events:
            break
        t = tn
        attempted += 1
        if scheme == 0:
            if np.random.random() * R < n_act:
                edge = order[np.random.randint(0, n_act)]
            else:
                edge = order[np.random.randint(n_act, n_edges)]
            if debug and eps == 0.0 and _edge_rate_bit_slow(occ, nbr, edge, d, k) != 1:
                raise RuntimeError("exchange fired on an edge whose constraint fails")
        else:
            edge = np.random.randint(0, n_edges)
            if _edge_rate_bit(occ, E, nbr, edge, d, k) == 0:
                if not np.random.random() < eps:
                    continue
        s = edge // d
        a = edge - s * d
        u = nbr[s, 2 * a]
        if occ[s] == occ[u]:
            continue
        accepted += 1
        if occ[s] == 1:
            current[a] += 1
        else:
            current[a] -= 1
        occ[s], occ[u] = occ[u], occ[s]
        ds = 1 if occ[s] == 0 else -1
        for j in range(2 * d):
            E[nbr[s, j]] += ds
            E[nbr[u, j]] -= ds
        if static or scheme == 1:
            continue
        for zi in range(2):
            z = s if zi == 0 else u
            for j in range(2 * d):
                w = nbr[z, j]
                for b in range(d):
                    for side in range(2):
                        ed = w * d + b if side == 0 else nbr[w, 2 * b + 1] * d + b
                        new = _edge_rate_bit(occ, E, nbr, ed, d, k)
                        if new == cls[ed]:
                            continue
                        i = pos[ed]
                        if new == 1:
                            other = order[n_act]
                            order[i] = other
                            pos[other] = i
                            order[n_act] = ed
                            pos[ed] = n_act
                            n_act += 1
                        else:
                            n_act -= 1
                            other = order[n_act]
                            order[i] = other
                            pos[other] = i
                            order[n_act] = ed
                            pos[ed] = n_act
                        cls[ed] = new
    return t, accepted, attempted, current, ie, ep_acc, ep_att, ep_part, ep_cur, snaps, cls


@dataclass
class TrajectoryStats:
    """Counters of one trajectory plus records at the requested epochs."""

    elapsed: float
    attempted: int
    accepted: int
    current: np.ndarray
    epochs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    epoch_accepted: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    epoch_attempted: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    epoch_density: np.ndarray = field(default_factory=lambda: np.zeros(0))
    epoch_current: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), dtype=np.int64))
    snapshots: list = field(default_factory=list)
    rate_classes: np.ndarray | None = field(default=None, repr=False)

    def to_csv(self) -> str:
        """CSV with columns ``time,accepted,attempted,density``, one row per epoch."""
        rows = ["time,accepted,attempted,density"]
        for i in range(len(self.epoch_accepted)):
            rows.append(
                f"{self.epochs[i]!r},{self.epoch_accepted[i]},{self.epoch_attempted[i]},{self.epoch_density[i]!r}"
            )
        return "\n".join(rows) + "\n"


SCHEMES = {"rejection-free": 0, "uniformized": 1}


def simulate(
    config: Configuration,
    params: ModelParams,
    duration: float,
    rng: np.random.Generator,
    *,
    epochs: Sequence[float] | None = None,
    snapshots: bool = False,
    max_events: int | None = None,
    scheme: str = "rejection-free",
    debug: bool = False,
) -> tuple:
    """Run the soft KA dynamics on the torus for ``duration`` units of time.

    ``scheme="rejection-free"`` draws the next firing edge from the current
    rates (rate-0 edges never enter the schedule).  ``"uniformized"`` rings
    every edge at rate 1 and keeps the exchange with probability
    ``c^(eps)``; the two are equal in law and the second counts every ring
    as an attempt.  Returns ``(final_config, TrajectoryStats)``.
    """
    if duration < 0:
        raise ValueError(f"duration must be non-negative, got {duration}")
    geom = config.geometry
    if not isinstance(geom, Torus):
        raise TypeError("simulation runs on the torus")
    if geom.d != params.d:
        raise ValueError("configuration and parameters disagree on d")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; choose from {sorted(SCHEMES)}")
    ep = np.asarray(sorted(epochs) if epochs is not None else [], dtype=float)
    if ep.size and (ep[0] < 0 or ep[-1] > duration):
        raise ValueError("epochs must lie in [0, duration]")
    occ = config.occ.ravel().copy()
    nbr = neighbor_table(geom.shape)
    seed = int(rng.integers(0, 2**31 - 1))
    t, acc, att, cur, n_rec, e_acc, e_att, e_part, e_cur, snaps, cls = _kmc(
        occ, nbr, geom.d, params.k, float(params.eps), float(duration),
        -1 if max_events is None else int(max_events), ep, bool(snapshots),
        SCHEMES[scheme], bool(debug), seed,
    )
    stats = TrajectoryStats(
        elapsed=float(t),
        attempted=int(att),
        accepted=int(acc),
        current=cur,
        epochs=ep[:n_rec],
        epoch_accepted=e_acc[:n_rec],
        epoch_attempted=e_att[:n_rec],
        epoch_density=e_part[:n_rec] / geom.n_sites,
        epoch_current=e_cur[:n_rec],
        snapshots=[Configuration(geom, s.reshape(geom.shape)) for s in snaps[:n_rec]] if snapshots else [],
        rate_classes=cls,
    )
    return Configuration(geom, occ.reshape(geom.shape)), stats


def run_tasks(fn: Callable, tasks: Sequence[tuple], workers: int = 1) -> list:
    """``[fn(*t) for t in tasks]``, optionally spread over processes; order is always the task order."""
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def replica_rngs(seed: int | np.random.SeedSequence, n: int) -> list:
    """Independent generators for ``n`` tasks, fixed by the master seed and task index."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(child) for child in ss.spawn(n)]


# -- reversibility check -------------------------------------------------------

@dataclass
class DetailedBalanceReport:
    trials: int
    violations: int
    max_abs_log_ratio: float
    examples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.violations == 0


def _log_product_weight(config: Configuration, rho: float) -> float:
    n1 = config.n_particles
    n0 = config.occ.size - n1
    return n1 * math.log(rho) + n0 * math.log1p(-rho)


def check_detailed_balance(
    params: ModelParams,
    size: int,
    trials: int,
    rng: np.random.Generator,
    rate: Callable | None = None,
) -> DetailedBalanceReport:
    """Test ``mu(eta) c(eta) = mu(eta^{xy}) c(eta^{xy})`` on random torus pairs.

    ``rate(config, edge, params)`` defaults to :func:`soft_rate`; passing a
    mutated rate is how the negative control is exercised.
    """
    rate = rate or soft_rate
    rho = params.rho if params.rho is not None else 0.5
    geom = Torus(params.d, size)
    violations = 0
    worst = 0.0
    examples = []
    for _ in range(trials):
        conf = Configuration(geom, (rng.random(geom.shape) < rng.random()).astype(np.uint8))
        x = tuple(int(c) for c in rng.integers(0, size, params.d))
        y = neighbors(x, geom)[int(rng.integers(0, 2 * params.d))]
        edge = make_edge(x, y, geom)
        swapped = exchange(conf, edge)
        lhs = _log_product_weight(conf, rho), rate(conf, edge, params)
        rhs = _log_product_weight(swapped, rho), rate(swapped, edge, params)
        if lhs[1] == 0 and rhs[1] == 0:
            continue
        if lhs[1] == 0 or rhs[1] == 0:
            gap = math.inf
        else:
            gap = abs(lhs[0] + math.log(lhs[1]) - rhs[0] - math.log(rhs[1]))
        worst = max(worst, gap)
        if gap > 1e-12:
            violations += 1
            if len(examples) < 5:
                examples.append((conf.packed().hex(), edge))
    return DetailedBalanceReport(trials, violations, worst, examples)
