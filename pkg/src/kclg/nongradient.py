"""Finite certificates about the configuration space of constrained lattice gases.

* validation of multistep moves and their loss of information,
* reachability in a window (connected and e-connected),
* e-stretch search and a mobile-cluster verifier,
* the torus current sum and the greedy rightward-vacancy witness.

Windows use the exterior-occupied convention.  Constraints enter through
:class:`ConstraintRule`; :class:`KARule` is the Kob-Andersen constraint.
"""
from __future__ import annotations

import json
import math
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .lattice import Configuration, Torus, Window, unit

Site = tuple


class ConstraintRule:
    """A finite-range constraint ``c_{x,y}``.

    Subclasses implement ``__call__(occ_at, x, y)`` where ``occ_at(site)``
    returns the occupation of any site of ``Z^d`` (the caller handles
    windows and wrap-around).  The value must not depend on ``occ_at(x)``,
    ``occ_at(y)`` and must not decrease when sites are emptied.
    """

    range: int = 1

    def __call__(self, occ_at: Callable[[Site], int], x: Site, y: Site) -> bool:
        raise NotImplementedError


@dataclass(frozen=True)
class KARule(ConstraintRule):
    k: int
    range: int = 1

    def __call__(self, occ_at, x, y):
        need = self.k - 1
        if need <= 0:
            return True
        for a, b in ((x, y), (y, x)):
            n = 0
            for z in _neighbors(a):
                if z != b and occ_at(z) == 0:
                    n += 1
            if n < need:
                return False
        return True


def _neighbors(site: Site) -> list:
    out = []
    for ax in range(len(site)):
        for s in (1, -1):
            z = list(site)
            z[ax] += s
            out.append(tuple(z))
    return out


def _rule(k_or_rule) -> ConstraintRule:
    return k_or_rule if isinstance(k_or_rule, ConstraintRule) else KARule(int(k_or_rule))


def _add(a, b):
    return tuple(i + j for i, j in zip(a, b))


def _lookup(config: Configuration) -> Callable[[Site], int]:
    geom = config.geometry
    occ = config.occ
    if isinstance(geom, Torus):
        N = geom.N
        return lambda s: int(occ[tuple(c % N for c in s)])
    return lambda s: config[s]


@dataclass(frozen=True)
class CapReached:
    """Search stopped at its cap; ``lower_bound`` is what was certified so far."""

    lower_bound: int | None
    explored: int


class MalformedMove(ValueError):
    pass


# -- multistep moves ---------------------------------------------------------------

def _valid_direction(e, d) -> bool:
    return len(e) == d and sorted(map(abs, e)) in ([0] * d, [0] * (d - 1) + [1])


@dataclass
class MoveSequence:
    """Configurations ``eta_0..eta_T`` with the exchange ``(x_t, x_t + e_t)`` that produced each.

    ``sites[0]`` and ``directions[0]`` are placeholders for ``t = 0``.
    """

    configurations: list
    sites: list
    directions: list

    @classmethod
    def build(cls, initial: Configuration, steps: Iterable[tuple]) -> "MoveSequence":
        """Apply ``(x_t, e_t)`` steps to ``initial``; ``e_t`` may be the zero vector."""
        d = initial.geometry.d
        configs, sites, dirs = [initial.copy()], [(0,) * d], [(0,) * d]
        for x, e in steps:
            x, e = tuple(x), tuple(e)
            if not _valid_direction(e, d):
                raise MalformedMove(f"direction {e} is not a unit vector or zero")
            nxt = configs[-1].copy()
            y = _add(x, e)
            if e != (0,) * d:
                if not (nxt.geometry.contains(x) and nxt.geometry.contains(y)):
                    raise MalformedMove(f"edge ({x}, {y}) leaves the window")
                a, b = nxt[x], nxt[y]
                nxt[x], nxt[y] = b, a
            configs.append(nxt)
            sites.append(x)
            dirs.append(e)
        return cls(configs, sites, dirs)

    @property
    def T(self) -> int:
        return len(self.configurations) - 1


@dataclass
class MoveCheck:
    valid: bool
    loss: float | None = None
    failed_step: int | None = None
    reason: str = ""
    max_bucket: int | None = None


def _check_structure(M: MoveSequence):
    if not (len(M.configurations) == len(M.sites) == len(M.directions)) or not M.configurations:
        raise MalformedMove("configurations, sites and directions must have the same positive length")
    geom = M.configurations[0].geometry
    for c in M.configurations:
        if c.geometry != geom:
            raise MalformedMove("all configurations must share one geometry")
    for e in M.directions:
        if not _valid_direction(tuple(e), geom.d):
            raise MalformedMove(f"direction {e} is not a unit vector or zero")


def validate_multistep_move(M: MoveSequence, k_or_rule, eta: Configuration | None = None) -> MoveCheck:
    """Check the three multistep-move conditions for one sequence.

    Steps with ``e_t = 0`` must leave the configuration unchanged and pass
    the constraint by convention.  The constraint is evaluated at ``eta_t``
    (it ignores the two exchanged sites, so ``eta_{t-1}`` gives the same).
    Structural problems raise :class:`MalformedMove`.
    """
    _check_structure(M)
    rule = _rule(k_or_rule)
    d = M.configurations[0].geometry.d
    zero = (0,) * d
    if eta is not None and M.configurations[0] != eta:
        return MoveCheck(False, failed_step=0, reason="eta_0 differs from the starting configuration")
    for t in range(1, M.T + 1):
        x, e = tuple(M.sites[t]), tuple(M.directions[t])
        prev, cur = M.configurations[t - 1], M.configurations[t]
        expected = prev.copy()
        if e != zero:
            y = _add(x, e)
            geom = prev.geometry
            if not (geom.contains(x) and geom.contains(y)):
                return MoveCheck(False, failed_step=t, reason=f"edge ({x}, {y}) leaves the window")
            expected[x], expected[y] = prev[y], prev[x]
            if not rule(_lookup(cur), x, y):
                return MoveCheck(False, failed_step=t, reason=f"constraint fails on ({x}, {y})")
        if expected != cur:
            return MoveCheck(False, failed_step=t, reason="configuration is not the exchanged predecessor")
    return MoveCheck(True, loss=None if M.T else 0.0)


def validate_move_family(family: Sequence[MoveSequence], k_or_rule) -> MoveCheck:
    """Validate a move defined on a domain (one sequence per domain element) and compute its loss.

    ``loss_t = log2`` of the largest number of domain elements sharing
    ``(eta_t, x_t, e_t)``; the loss is the maximum over ``t >= 1`` (0 if ``T = 0``).
    """
    if not family:
        raise MalformedMove("empty move family")
    T = family[0].T
    starts = set()
    for i, M in enumerate(family):
        if M.T != T:
            raise MalformedMove("all sequences of a family need the same length")
        key = M.configurations[0].packed()
        if key in starts:
            raise MalformedMove("two sequences start from the same configuration")
        starts.add(key)
        chk = validate_multistep_move(M, k_or_rule)
        if not chk.valid:
            return MoveCheck(False, failed_step=chk.failed_step, reason=f"member {i}: {chk.reason}")
    worst = 1
    for t in range(1, T + 1):
        buckets = Counter(
            (M.configurations[t].packed(), tuple(M.sites[t]), tuple(M.directions[t])) for M in family
        )
        worst = max(worst, max(buckets.values()))
    return MoveCheck(True, loss=math.log2(worst) if T else 0.0, max_bucket=worst)


# -- reachability -------------------------------------------------------------------

class _WindowTables:
    def __init__(self, window: Window):
        self.window = window
        self.sites = list(window.sites())
        self.index = {s: i for i, s in enumerate(self.sites)}
        self.nbr = [[self.index.get(z, -1) for z in _neighbors(s)] for s in self.sites]

    def mask_of(self, config: Configuration) -> int:
        m = 0
        for s in config.empty_sites():
            m |= 1 << self.index[tuple(s)]
        return m

    def config_of(self, mask: int) -> Configuration:
        conf = Configuration.full(self.window)
        for i in _bits(mask):
            conf[self.sites[i]] = 0
        return conf

    def lookup(self, mask: int):
        idx = self.index

        def occ_at(s):
            i = idx.get(s)
            return 1 if i is None else 1 - ((mask >> i) & 1)

        return occ_at


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


@dataclass
class ReachabilityReport:
    window: Window
    states: set  # empty-site bitmasks over the window's site order
    reachable_sites: set
    explored: int
    cap_hit: bool
    sites: list = field(repr=False, default_factory=list)

    @property
    def reachable_count(self) -> int:
        return len(self.states)

    def contains(self, config: Configuration) -> bool:
        idx = {s: i for i, s in enumerate(self.sites)}
        m = 0
        for s in config.empty_sites():
            m |= 1 << idx[tuple(s)]
        return m in self.states

    def configurations(self) -> list:
        out = []
        for m in sorted(self.states):
            conf = Configuration.full(self.window)
            for i in _bits(m):
                conf[self.sites[i]] = 0
            out.append(conf)
        return out

    def to_json(self) -> str:
        return json.dumps({"explored": self.explored, "reachable_count": self.reachable_count,
                           "cap_hit": self.cap_hit}, sort_keys=True)


def reachable_configurations(
    eta0: Configuration,
    k_or_rule,
    mode: str = "connected",
    e: Sequence[int] | None = None,
    cap: int = 10**6,
    stop: Callable[[int], bool] | None = None,
) -> ReachabilityReport:
    """Breadth-first search over configurations joined to ``eta0`` by allowed exchanges.

    ``mode="e-connected"`` only lets a vacancy at ``x`` move to ``x + e``.
    At most ``cap`` states are expanded; ``cap_hit`` flags a partial result.
    ``stop`` (on the bitmask) ends the search early once it returns true.
    """
    geom = eta0.geometry
    if not isinstance(geom, Window):
        raise TypeError("reachability runs on window configurations")
    if mode not in ("connected", "e-connected"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "e-connected":
        if e is None or not _valid_direction(tuple(e), geom.d) or not any(e):
            raise ValueError("e-connected mode needs a unit vector e")
        dir_slots = [2 * list(map(abs, e)).index(1) + (0 if sum(e) > 0 else 1)]
    else:
        dir_slots = list(range(2 * geom.d))
    rule = _rule(k_or_rule)
    tab = _WindowTables(geom)
    start = tab.mask_of(eta0)
    seen = {start}
    queue = deque([start])
    explored = 0
    cap_hit = False
    reach = set()
    while queue:
        if explored >= cap:
            cap_hit = True
            break
        m = queue.popleft()
        explored += 1
        reach |= set(_bits(m))
        if stop is not None and stop(m):
            break
        occ_at = tab.lookup(m)
        for v in _bits(m):
            for slot in dir_slots:
                j = tab.nbr[v][slot]
                if j < 0 or (m >> j) & 1:
                    continue
                if rule(occ_at, tab.sites[v], tab.sites[j]):
                    nm = m ^ (1 << v) ^ (1 << j)
                    if nm not in seen:
                        seen.add(nm)
                        queue.append(nm)
    for m in queue:
        reach |= set(_bits(m))
    return ReachabilityReport(
        window=geom, states=seen, reachable_sites={tab.sites[i] for i in reach},
        explored=explored, cap_hit=cap_hit, sites=tab.sites,
    )


def _window_for(A: Iterable[Site], radius: int | None, margin: int) -> Window:
    A = list(A)
    d = len(A[0])
    r = radius if radius is not None else max(max(abs(c) for c in s) for s in A) + margin
    return Window.box(r, d)


def configuration_empty_on(A: Iterable[Site], window: Window) -> Configuration:
    """``eta_A``: empty exactly on ``A``, occupied elsewhere."""
    A = [tuple(s) for s in A]
    for s in A:
        if not window.contains(s):
            raise ValueError(f"site {s} lies outside the window")
    return Configuration.from_empty_sites(window, A)


def e_stretch(
    A: Iterable[Site],
    e: Sequence[int],
    k_or_rule,
    radius: int | None = None,
    cap: int = 10**6,
):
    """``max e.x`` over sites emptied in configurations e-connected to ``eta_A``.

    The search runs in ``[-radius, radius]^d`` (default: the box around
    ``A`` plus a margin of 5).  Returns an ``int``, or :class:`CapReached`
    carrying the best value seen when the cap stops the search.
    """
    A = [tuple(s) for s in A]
    if not A:
        raise ValueError("A must be non-empty: the empty set has no vacancies")
    win = _window_for(A, radius, 5)
    rep = reachable_configurations(configuration_empty_on(A, win), k_or_rule, "e-connected", e, cap)
    best = max(int(np.dot(e, s)) for s in rep.reachable_sites)
    if rep.cap_hit:
        return CapReached(best, rep.explored)
    return best


@dataclass
class MobileClusterReport:
    translations: dict  # direction -> True / False / CapReached
    edge_coverage: bool
    covering_shift: tuple | None

    @property
    def condition1(self):
        vals = list(self.translations.values())
        if any(isinstance(v, CapReached) for v in vals):
            return None if all(v is not False for v in vals) else False
        return all(vals)

    @property
    def is_mobile(self):
        c1 = self.condition1
        return None if c1 is None else (c1 and self.edge_coverage)


def verify_mobile_cluster(
    A: Iterable[Site],
    k_or_rule,
    radius: int | None = None,
    cap: int = 10**6,
) -> MobileClusterReport:
    """Check both mobile-cluster conditions for ``A`` inside a search box.

    Condition 1 is checked for the generators ``z = +-e_alpha`` (enough by
    composition and translation invariance); each result is ``True``,
    ``False`` or :class:`CapReached` (indeterminate).  Condition 2 is checked
    for the edge ``(0, e_1)`` by scanning the shifts ``z`` with ``z + A``
    inside the box.
    """
    A = [tuple(s) for s in A]
    if not A:
        raise ValueError("A must be non-empty")
    rule = _rule(k_or_rule)
    win = _window_for(A, radius, 4)
    d = win.d
    tab = _WindowTables(win)
    start_conf = configuration_empty_on(A, win)
    results = {}
    for alpha in range(d):
        for sgn in (1, -1):
            z = unit(alpha, d, sgn)
            shifted = [_add(s, z) for s in A]
            if not all(win.contains(s) for s in shifted):
                results[z] = CapReached(None, 0)
                continue
            target = tab.mask_of(configuration_empty_on(shifted, win))
            rep = reachable_configurations(start_conf, rule, "connected", None, cap, stop=lambda m, t=target: m == t)
            if target in rep.states:
                results[z] = True
            elif rep.cap_hit:
                results[z] = CapReached(None, rep.explored)
            else:
                results[z] = False
    zero, e1 = (0,) * d, unit(0, d)
    covering = None
    R = win.hi[0]
    for z in np.ndindex(*(2 * R + 1,) * d):
        z = tuple(c - R for c in z)
        shifted = {_add(s, z) for s in A}
        if not all(win.contains(s) for s in shifted):
            continue
        if rule(lambda s: 0 if s in shifted else 1, zero, e1):
            covering = z
            break
    return MobileClusterReport(results, covering is not None, covering)


# -- current sum and witness ----------------------------------------------------------

def current_sum(config: Configuration, k_or_rule) -> np.ndarray:
    """Per axis, ``sum_x (eta(x) - eta(x + e_alpha)) c_{x, x+e_alpha}(eta)`` on the torus.

    This is the net number of particles that could jump in the ``+e_alpha``
    direction; only edges next to empty sites contribute.
    """
    geom = config.geometry
    if not isinstance(geom, Torus):
        raise TypeError("current_sum is defined on the torus")
    rule = _rule(k_or_rule)
    occ_at = _lookup(config)
    d = geom.d
    total = np.zeros(d, dtype=np.int64)
    for v in map(tuple, np.argwhere(config.occ == 0)):
        for a in range(d):
            e = unit(a, d)
            left = _add(v, tuple(-c for c in e))
            right = _add(v, e)
            if occ_at(left) == 1 and rule(occ_at, left, v):
                total[a] += 1
            if occ_at(right) == 1 and rule(occ_at, v, right):
                total[a] -= 1
    return total


def witness_seed(k: int, d: int) -> list:
    """Empty sites of the starting configuration, relative to the origin.

    The origin plus the ``k-1`` lexicographically first neighbours of ``0``
    other than ``e_1`` and of ``e_1`` other than ``0``.
    """
    zero, e1 = (0,) * d, unit(0, d)
    seed = [zero]
    seed += sorted(z for z in _neighbors(zero) if z != e1)[: k - 1]
    seed += sorted(z for z in _neighbors(e1) if z != zero)[: k - 1]
    return seed


@dataclass
class WitnessReport:
    moves: list  # vacancy positions x_i (relative to the centre) in order
    center: tuple
    N: int

    @property
    def steps(self) -> int:
        return len(self.moves)


def _rightward_moves(config: Configuration, rule: ConstraintRule, center) -> list:
    occ_at = _lookup(config)
    N = config.geometry.N
    d = config.geometry.d
    e1 = unit(0, d)
    out = []
    for v in map(tuple, np.argwhere(config.occ == 0)):
        y = _add(v, e1)
        if occ_at(y) == 1 and rule(occ_at, v, y):
            rel = tuple(int((c - o + N // 2) % N) - N // 2 for c, o in zip(v, center))
            out.append(rel)
    return sorted(out)


def construct_witness(
    k: int,
    d: int,
    N: int | None = None,
    max_steps: int = 100_000,
    rule: ConstraintRule | None = None,
) -> tuple:
    """Greedy rightward-vacancy construction on the torus.

    Starts from :func:`witness_seed` placed at the torus centre and, while
    some vacancy at ``x`` can jump to an occupied ``x + e_1`` with the
    constraint satisfied, performs that exchange for the lexicographically
    smallest ``x`` (centred coordinates).  Returns ``(configuration,
    WitnessReport)``.  Raises ``RuntimeError`` if ``max_steps`` is exceeded.
    """
    if k == 1:
        raise ValueError("k = 1 is the simple exclusion process, which is gradient: no witness exists")
    if not 2 <= k <= d:
        raise ValueError(f"need 2 <= k <= d, got k={k}, d={d}")
    rule = rule or KARule(k)
    N = N or 100 * rule.range + 4
    geom = Torus(d, N)
    center = (N // 2,) * d
    config = Configuration.full(geom)
    for s in witness_seed(k, d):
        config[geom.canonical(_add(center, s))] = 0
    e1 = unit(0, d)
    moves = []
    while True:
        cands = _rightward_moves(config, rule, center)
        if not cands:
            break
        if len(moves) >= max_steps:
            raise RuntimeError(
                f"greedy construction still running after {max_steps} moves; "
                "this contradicts a finite e_1-stretch"
            )
        x = cands[0]
        a = geom.canonical(_add(center, x))
        b = geom.canonical(_add(a, e1))
        config[a], config[b] = 1, 0
        moves.append(x)
    return config, WitnessReport(moves, center, N)


def leftward_allowed(config: Configuration, k_or_rule) -> list:
    """Edges ``(x, x+e_1)`` with a particle at ``x``, a vacancy at ``x+e_1`` and the constraint satisfied."""
    rule = _rule(k_or_rule)
    occ_at = _lookup(config)
    d = config.geometry.d
    e1 = unit(0, d)
    out = []
    for v in map(tuple, np.argwhere(config.occ == 0)):
        x = _add(v, tuple(-c for c in e1))
        if occ_at(x) == 1 and rule(occ_at, x, v):
            out.append(tuple(int(c) for c in config.geometry.canonical(x)))
    return out
