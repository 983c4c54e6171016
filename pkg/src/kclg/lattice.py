"""Lattice geometry, occupancy configurations and elementary surgery.

Two geometries share one :class:`Configuration` type:

* :class:`Torus` -- the periodic box ``Z^d / N Z^d``; site coordinates are
  reduced to ``[0, N)``.
* :class:`Window` -- a finite box ``[lo, hi]`` of ``Z^d`` (bounds inclusive).
  Every site outside the window reads as occupied.

Occupancies are ``uint8`` arrays of 0/1 in row-major (C) order, one entry
per site.  ``Configuration.packed()`` gives the one-bit-per-site form used
for hashing and exact comparisons.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence, TextIO, Union

import numpy as np

Site = tuple


@dataclass(frozen=True)
class Torus:
    d: int
    N: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError(f"dimension must be >= 1, got {self.d}")
        if self.N < 3:
            raise ValueError(f"torus side must be >= 3, got {self.N}")

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def n_sites(self) -> int:
        return self.N**self.d

    def canonical(self, site: Sequence[int]) -> Site:
        if len(site) != self.d:
            raise ValueError(f"site {site} has wrong dimension for d={self.d}")
        return tuple(int(c) % self.N for c in site)

    def index(self, site: Sequence[int]) -> tuple:
        return self.canonical(site)

    def contains(self, site: Sequence[int]) -> bool:
        return len(site) == self.d


@dataclass(frozen=True)
class Window:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(int(c) for c in self.lo))
        object.__setattr__(self, "hi", tuple(int(c) for c in self.hi))
        if len(self.lo) != len(self.hi) or not self.lo:
            raise ValueError("window bounds must be non-empty and of equal length")
        if any(h < l for l, h in zip(self.lo, self.hi)):
            raise ValueError(f"empty window {self.lo}..{self.hi}")

    @classmethod
    def box(cls, radius: int, d: int) -> "Window":
        """The cube ``[-radius, radius]^d``."""
        return cls((-radius,) * d, (radius,) * d)

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def n_sites(self) -> int:
        return int(np.prod(self.shape))

    def canonical(self, site: Sequence[int]) -> Site:
        if len(site) != self.d:
            raise ValueError(f"site {site} has wrong dimension for d={self.d}")
        return tuple(int(c) for c in site)

    def contains(self, site: Sequence[int]) -> bool:
        return len(site) == self.d and all(
            l <= c <= h for c, l, h in zip(site, self.lo, self.hi)
        )

    def index(self, site: Sequence[int]) -> tuple:
        return tuple(int(c) - l for c, l in zip(site, self.lo))

    def site_of(self, index: Sequence[int]) -> Site:
        return tuple(int(i) + l for i, l in zip(index, self.lo))

    def sites(self) -> Iterable[Site]:
        for idx in np.ndindex(*self.shape):
            yield self.site_of(idx)


Geometry = Union[Torus, Window]


class Edge(NamedTuple):
    """Undirected nearest-neighbour edge, lexicographically smaller end first."""

    x: Site
    y: Site

    @property
    def axis(self) -> int:
        return next(i for i, (a, b) in enumerate(zip(self.x, self.y)) if a != b)


def unit(alpha: int, d: int, sign: int = 1) -> Site:
    v = [0] * d
    v[alpha] = sign
    return tuple(v)


def neighbors(site: Sequence[int], geom: Geometry) -> list:
    """The 2d neighbours of ``site`` in the order +e1, -e1, ..., +ed, -ed."""
    site = geom.canonical(site)
    out = []
    for alpha in range(geom.d):
        for sign in (1, -1):
            nb = list(site)
            nb[alpha] += sign
            out.append(geom.canonical(nb))
    return out


def make_edge(x: Sequence[int], y: Sequence[int], geom: Geometry) -> Edge:
    """Validate that ``x ~ y`` in ``geom`` and return the canonical edge."""
    x, y = geom.canonical(x), geom.canonical(y)
    if x == y or y not in neighbors(x, geom):
        raise ValueError(f"{x} and {y} are not nearest neighbours")
    if isinstance(geom, Window) and not (geom.contains(x) and geom.contains(y)):
        raise ValueError(f"edge ({x}, {y}) leaves the window")
    return Edge(*sorted((x, y)))


@dataclass(eq=False)
class Configuration:
    geometry: Geometry
    occ: np.ndarray = field(repr=False)

    def __post_init__(self):
        occ = np.asarray(self.occ)
        if occ.shape != self.geometry.shape:
            raise ValueError(
                f"occupancy shape {occ.shape} does not match geometry {self.geometry.shape}"
            )
        if occ.size and (occ.min() < 0 or occ.max() > 1):
            raise ValueError("occupancies must be 0 or 1")
        self.occ = np.ascontiguousarray(occ, dtype=np.uint8)

    @classmethod
    def full(cls, geom: Geometry) -> "Configuration":
        return cls(geom, np.ones(geom.shape, dtype=np.uint8))

    @classmethod
    def empty(cls, geom: Geometry) -> "Configuration":
        return cls(geom, np.zeros(geom.shape, dtype=np.uint8))

    @classmethod
    def from_empty_sites(cls, geom: Geometry, sites: Iterable[Sequence[int]]) -> "Configuration":
        """Configuration that is empty exactly on ``sites`` (``eta_A``)."""
        conf = cls.full(geom)
        for s in sites:
            conf[s] = 0
        return conf

    def __getitem__(self, site: Sequence[int]) -> int:
        if isinstance(self.geometry, Window) and not self.geometry.contains(site):
            return 1
        return int(self.occ[self.geometry.index(site)])

    def __setitem__(self, site: Sequence[int], value: int) -> None:
        if not self.geometry.contains(site):
            raise IndexError(f"site {site} outside {self.geometry}")
        self.occ[self.geometry.index(site)] = value

    def __eq__(self, other) -> bool:
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.geometry == other.geometry and np.array_equal(self.occ, other.occ)

    def copy(self) -> "Configuration":
        return Configuration(self.geometry, self.occ.copy())

    @property
    def n_particles(self) -> int:
        return int(self.occ.sum(dtype=np.int64))

    @property
    def density(self) -> float:
        return self.n_particles / self.occ.size

    def packed(self) -> bytes:
        return np.packbits(self.occ.ravel()).tobytes()

    def empty_sites(self) -> list:
        idx = np.argwhere(self.occ == 0)
        if isinstance(self.geometry, Window):
            return [self.geometry.site_of(i) for i in idx]
        return [tuple(int(c) for c in i) for i in idx]


def exchange(config: Configuration, edge: Edge | Sequence) -> Configuration:
    """Return ``eta^{x,y}``: the occupations at the two ends of ``edge`` swapped."""
    x, y = make_edge(edge[0], edge[1], config.geometry)
    out = config.copy()
    ix, iy = config.geometry.index(x), config.geometry.index(y)
    out.occ[ix], out.occ[iy] = config.occ[iy], config.occ[ix]
    return out


def translate(config: Configuration, v: Sequence[int]) -> Configuration:
    """``(tau_v eta)(y) = eta(y + v)`` on the torus."""
    if not isinstance(config.geometry, Torus):
        raise TypeError("translate is defined on the torus only")
    v = tuple(int(c) for c in v)
    if len(v) != config.geometry.d:
        raise ValueError("translation vector has wrong dimension")
    return Configuration(config.geometry, np.roll(config.occ, tuple(-c for c in v), axis=tuple(range(len(v)))))


@dataclass(frozen=True)
class DensityProfile:
    """Values of a density profile at the grid points ``i / resolution`` of the unit torus.

    ``values`` has one axis per dimension.  An axis of length 1 means the
    profile is constant along it.
    """

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 0:
            raise ValueError("profile needs at least one axis")
        if np.any(vals < 0) or np.any(vals > 1) or not np.all(np.isfinite(vals)):
            raise ValueError("profile values must lie in [0, 1]")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, rho: float, d: int) -> "DensityProfile":
        return cls(np.full((1,) * d, float(rho)))

    @classmethod
    def from_function(
        cls, func: Callable, resolution: int, d: int, axis: int | None = None
    ) -> "DensityProfile":
        """Sample ``func`` on the grid.

        With ``axis`` given, ``func`` takes the single coordinate ``theta_axis``
        and the profile is constant in the other directions.
        """
        theta = np.arange(resolution) / resolution
        if axis is not None:
            shape = [1] * d
            shape[axis] = resolution
            return cls(np.asarray(func(theta), dtype=float).reshape(shape))
        grids = np.meshgrid(*([theta] * d), indexing="ij")
        return cls(np.asarray(func(*grids), dtype=float))

    @property
    def d(self) -> int:
        return self.values.ndim

    def on_lattice(self, N: int) -> np.ndarray:
        """Nearest-grid-point lookup of ``rho(x / N)`` for every site of the N-torus."""
        idx = []
        for r in self.values.shape:
            idx.append(np.rint(np.arange(N) * r / N).astype(np.int64) % r)
        return self.values[np.ix_(*idx)]


def sample_product(geom: Torus, profile: DensityProfile, rng: np.random.Generator) -> Configuration:
    """Independent occupation of each site ``x`` with probability ``rho(x/N)``."""
    if profile.d != geom.d:
        raise ValueError("profile dimension does not match geometry")
    p = profile.on_lattice(geom.N)
    return Configuration(geom, (rng.random(geom.shape) < p).astype(np.uint8))


def construct_blocked(geom: Torus, profile: DensityProfile, rng: np.random.Generator) -> Configuration:
    """Blocked configuration for k = d = 2.

    Sites off ``3Z^2`` are filled; a site of ``3Z^2`` is filled with
    probability ``9 rho(x/N) - 8``.
    """
    if geom.d != 2:
        raise ValueError("the blocked construction is two-dimensional")
    if geom.N % 3:
        raise ValueError(f"N must be a multiple of 3, got {geom.N}")
    if profile.d != 2:
        raise ValueError("profile must be two-dimensional")
    p = 9.0 * profile.on_lattice(geom.N) - 8.0
    if np.any(p < -1e-12):
        raise ValueError("profile must be bounded below by 8/9")
    p = np.clip(p, 0.0, 1.0)
    occ = np.ones(geom.shape, dtype=np.uint8)
    on_grid = np.zeros(geom.shape, dtype=bool)
    on_grid[::3, ::3] = True
    draws = rng.random(geom.shape) < p
    occ[on_grid] = draws[on_grid]
    return Configuration(geom, occ)


# -- snapshot text format -----------------------------------------------------

def format_snapshot(config: Configuration, k: int, marks: np.ndarray | None = None) -> str:
    """Header ``d N k`` then the sites in row-major order, N characters per line.

    ``marks`` (boolean, same shape) prints '2' in place of the occupancy;
    this is a debugging aid and such output does not round-trip.
    """
    geom = config.geometry
    if not isinstance(geom, Torus):
        raise TypeError("snapshots are written for torus configurations")
    chars = config.occ.ravel().astype(np.int64)
    if marks is not None:
        chars = np.where(np.asarray(marks).ravel(), 2, chars)
    body = "".join("012"[c] for c in chars)
    lines = [f"{geom.d} {geom.N} {k}"]
    lines += [body[i : i + geom.N] for i in range(0, len(body), geom.N)]
    return "\n".join(lines) + "\n"


def parse_snapshot(text: str) -> tuple:
    """Inverse of :func:`format_snapshot`; returns ``(config, k)``."""
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty snapshot")
    try:
        d, N, k = (int(t) for t in lines[0].split())
    except ValueError as exc:
        raise ValueError(f"bad snapshot header {lines[0]!r}") from exc
    body = "".join(lines[1:])
    geom = Torus(d, N)
    if len(body) != geom.n_sites or set(body) - {"0", "1"}:
        raise ValueError("snapshot body must hold N^d characters '0'/'1'")
    occ = (np.frombuffer(body.encode(), dtype=np.uint8) - ord("0")).reshape(geom.shape)
    return Configuration(geom, occ), k


def write_snapshot(config: Configuration, k: int, fh: TextIO | str) -> None:
    text = format_snapshot(config, k)
    if isinstance(fh, str):
        with open(fh, "w") as out:
            out.write(text)
    else:
        fh.write(text)


def read_snapshot(fh: TextIO | str) -> tuple:
    if isinstance(fh, str):
        with open(fh) as src:
            return parse_snapshot(src.read())
    return parse_snapshot(fh.read())
