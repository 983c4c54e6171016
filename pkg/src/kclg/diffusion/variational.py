"""Least-squares estimation of the variational diffusion coefficient.

For ``f = sum_i theta_i phi_i`` the Dirichlet-type objective

    sum_alpha  mu[ c_alpha (b_alpha - theta . A_alpha)^2 ]

is quadratic in ``theta``; ``b_alpha = delta_{alpha,0} (eta(e_0) - eta(0))``
is the current across the edge ``(0, e_alpha)`` and ``A_alpha[i]`` the
translation-summed gradient of ``phi_i`` across the same edge.  Directions
are 0-based: axis 0 is the direction of the current.

Sufficient statistics are accumulated separately for the plain and the
constraint-weighted averages.  Since ``c^(eps) = eps + (1 - eps) c`` the
objective for any ``eps`` is a linear combination of the two, so one
sample set serves every ``eps``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..dynamics import ModelParams
from ..lattice import Configuration, Window, unit


class SingularNormalEquations(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class Monomial:
    """``phi(eta) = prod_{x in support} eta(x)``."""

    support: tuple

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        return values.prod(axis=1, dtype=np.float64)


@dataclass(frozen=True)
class TableFunction:
    """A local function given by its value on each pattern of ``support``.

    The pattern index is ``sum_i eta(support[i]) << i``.
    """

    support: tuple
    table: tuple

    def __post_init__(self):
        if len(self.table) != 2 ** len(self.support):
            raise ValueError("table needs one value per occupancy pattern of the support")

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        weights = 1 << np.arange(values.shape[1], dtype=np.int64)
        return np.asarray(self.table, dtype=float)[values.astype(np.int64) @ weights]


@dataclass
class LocalFunctionBasis:
    d: int
    functions: list = field(default_factory=list)
    descriptor: str = "custom"

    @classmethod
    def empty(cls, d: int) -> "LocalFunctionBasis":
        return cls(d, [], "empty")

    @classmethod
    def monomials(cls, d: int, r: int = 1, max_degree: int = 2, min_degree: int = 1) -> "LocalFunctionBasis":
        """Products of occupations over subsets of ``[-r, r+1] x [-r, r]^{d-1}``."""
        window = Window((-r,) + (-r,) * (d - 1), (r + 1,) + (r,) * (d - 1))
        sites = list(window.sites())
        funcs = []
        for deg in range(min_degree, max_degree + 1):
            for subset in itertools.combinations(sites, deg):
                funcs.append(Monomial(tuple(subset)))
        return cls(d, funcs, f"monomials(r={r},degree={min_degree}..{max_degree})")

    def __len__(self) -> int:
        return len(self.functions)

    def __add__(self, other: "LocalFunctionBasis") -> "LocalFunctionBasis":
        return LocalFunctionBasis(self.d, self.functions + other.functions, f"{self.descriptor}+{other.descriptor}")

    @property
    def window(self) -> set:
        return {s for f in self.functions for s in f.support}


def _add(a, b):
    return tuple(i + j for i, j in zip(a, b))


def _neg(a):
    return tuple(-i for i in a)


def translates(func, e: tuple) -> list:
    """Shifts ``x`` for which ``x + support`` meets the edge ``{0, e}``."""
    zero = (0,) * len(e)
    xs = []
    for s in func.support:
        for target in (zero, e):
            x = _add(target, _neg(s))
            if x not in xs:
                xs.append(x)
    return xs


def gradient_sum(
    config: Configuration,
    func,
    alpha: int,
    coefficients: Sequence[float] | None = None,
    allow_exterior: bool = False,
) -> float:
    """``sum_x grad_{0,e_alpha} tau_x f`` evaluated on a window configuration.

    ``func`` is a single local function or a :class:`LocalFunctionBasis`
    (then ``coefficients`` gives the linear combination).  Raises if some
    contributing translate reads outside the window, unless
    ``allow_exterior`` is set, in which case exterior sites read as occupied.
    """
    geom = config.geometry
    if not isinstance(geom, Window):
        raise TypeError("gradient_sum needs a window configuration")
    if isinstance(func, LocalFunctionBasis):
        coefficients = np.zeros(len(func)) if coefficients is None else np.asarray(coefficients, dtype=float)
        if len(coefficients) != len(func):
            raise ValueError("one coefficient per basis function is required")
        return float(sum(c * gradient_sum(config, f, alpha, None, allow_exterior)
                         for c, f in zip(coefficients, func.functions) if c != 0))
    d = geom.d
    e = unit(alpha, d)
    zero = (0,) * d

    def read(conf_swap: bool, site):
        if not geom.contains(site) and not allow_exterior:
            raise ValueError(f"site {site} needed by a translate lies outside the window")
        if conf_swap:
            if site == zero:
                site = e
            elif site == e:
                site = zero
        return config[site]

    total = 0.0
    for x in translates(func, e):
        sites = [_add(x, s) for s in func.support]
        before = np.array([[read(False, s) for s in sites]], dtype=np.uint8)
        after = np.array([[read(True, s) for s in sites]], dtype=np.uint8)
        total += float(func.evaluate(after)[0] - func.evaluate(before)[0])
    return total


# -- sufficient statistics ------------------------------------------------------

def neighborhood(site: tuple) -> list:
    out = [site]
    for a in range(len(site)):
        for sgn in (1, -1):
            out.append(_add(site, unit(a, len(site), sgn)))
    return out


def dependency_sites(basis: LocalFunctionBasis, k: int) -> list:
    """All sites read by the integrand (currents, constraints, gradient sums)."""
    d = basis.d
    zero = (0,) * d
    deps = set()
    for alpha in range(d):
        e = unit(alpha, d)
        deps.update((zero, e))
        if k > 1:
            deps.update(neighborhood(zero))
            deps.update(neighborhood(e))
        for f in basis.functions:
            for x in translates(f, e):
                deps.update(_add(x, s) for s in f.support)
    return sorted(deps)


class _Layout:
    """Column index of every dependency site inside a flat sample array."""

    def __init__(self, sites: list):
        self.sites = sites
        self.col = {s: i for i, s in enumerate(sites)}

    def swapped_col(self, site, e):
        zero = (0,) * len(e)
        if site == zero:
            site = e
        elif site == e:
            site = zero
        return self.col[site]


def _integrand_terms(X: np.ndarray, layout: _Layout, basis: LocalFunctionBasis, k: int, alpha: int):
    """Per-sample ``(A, b, c)`` for direction ``alpha`` from flat samples ``X``."""
    d = basis.d
    zero = (0,) * d
    e = unit(alpha, d)
    n = X.shape[0]
    b = (X[:, layout.col[e]].astype(float) - X[:, layout.col[zero]]) if alpha == 0 else np.zeros(n)
    if k == 1:
        c = np.ones(n)
    else:
        def empties(a, other):
            cols = [layout.col[z] for z in neighborhood(a)[1:] if z != other]
            return (1 - X[:, cols].astype(np.int16)).sum(axis=1)

        c = ((empties(zero, e) >= k - 1) & (empties(e, zero) >= k - 1)).astype(float)
    A = np.zeros((n, len(basis)))
    for j, f in enumerate(basis.functions):
        for x in translates(f, e):
            sites = [_add(x, s) for s in f.support]
            before = X[:, [layout.col[s] for s in sites]]
            after = X[:, [layout.swapped_col(s, e) for s in sites]]
            A[:, j] += f.evaluate(after) - f.evaluate(before)
    return A, b, c


@dataclass
class VariationalResult:
    estimate: float
    raw: float
    stderr: float
    coefficients: np.ndarray
    eps: float
    rho: float
    k: int
    d: int
    n_samples: int
    exact: bool
    basis: str
    objective: float

    def to_record(self) -> dict:
        return {
            "estimator": "variational",
            "params": {"d": self.d, "k": self.k, "eps": self.eps, "rho": self.rho},
            "basis": self.basis,
            "n_samples": self.n_samples,
            "exact": self.exact,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "raw": self.raw,
        }


@dataclass
class DirichletStatistics:
    """Group-wise sums of ``w A A^T``, ``w b A``, ``w b^2``, plain and weighted by ``c``."""

    d: int
    k: int
    rho: float
    basis: str
    n_samples: int
    exact: bool
    weight: np.ndarray
    M_all: np.ndarray
    M_hard: np.ndarray
    v_all: np.ndarray
    v_hard: np.ndarray
    s_all: np.ndarray
    s_hard: np.ndarray

    @property
    def dim(self) -> int:
        return self.M_all.shape[1]

    def _combined(self, eps: float, keep: np.ndarray):
        w = self.weight[keep].sum()
        M = (eps * self.M_all[keep].sum(0) + (1 - eps) * self.M_hard[keep].sum(0)) / w
        v = (eps * self.v_all[keep].sum(0) + (1 - eps) * self.v_hard[keep].sum(0)) / w
        s = (eps * self.s_all[keep].sum() + (1 - eps) * self.s_hard[keep].sum()) / w
        return M, v, s

    def _optimum(self, M, v, s, ridge):
        p = len(v)
        if p == 0:
            return np.zeros(0), float(s)
        lam = ridge * np.trace(M) / p
        theta, *_ = np.linalg.lstsq(M + lam * np.eye(p), v, rcond=None)
        if not np.all(np.isfinite(theta)):
            cond = np.linalg.cond(M + lam * np.eye(p))
            raise SingularNormalEquations(f"normal equations unsolvable (condition number {cond:.3g})")
        obj = float(s - 2 * theta @ v + theta @ M @ theta)
        return theta, obj

    def solve(self, eps: float, ridge: float = 1e-10) -> VariationalResult:
        G = len(self.weight)
        everything = np.ones(G, dtype=bool)
        M, v, s = self._combined(eps, everything)
        theta, obj = self._optimum(M, v, s, ridge)
        norm = 2 * self.rho * (1 - self.rho)
        raw = obj / norm
        stderr = 0.0
        if G > 1 and not self.exact:
            loo = []
            for g in range(G):
                keep = everything.copy()
                keep[g] = False
                _, o = self._optimum(*self._combined(eps, keep), ridge)
                loo.append(o / norm)
            loo = np.asarray(loo)
            stderr = float(np.sqrt((G - 1) / G * np.sum((loo - loo.mean()) ** 2)))
        return VariationalResult(
            estimate=max(raw, 0.0), raw=raw, stderr=stderr, coefficients=theta, eps=eps,
            rho=self.rho, k=self.k, d=self.d, n_samples=self.n_samples, exact=self.exact,
            basis=self.basis, objective=obj,
        )

    def empty_basis_value(self, eps: float) -> float:
        """Objective at ``f = 0`` divided by ``2 rho (1 - rho)``."""
        _, _, s = self._combined(eps, np.ones(len(self.weight), dtype=bool))
        return float(s / (2 * self.rho * (1 - self.rho)))


MAX_ENUMERATED_SITES = 20


def _accumulate(stats_parts, X, w, groups, layout, basis, k, G):
    for alpha in range(basis.d):
        A, b, c = _integrand_terms(X, layout, basis, k, alpha)
        for g in np.unique(groups):
            sel = groups == g
            Ag, bg, cg, wg = A[sel], b[sel], c[sel], w[sel]
            wc = wg * cg
            stats_parts["M_all"][g] += (Ag * wg[:, None]).T @ Ag
            stats_parts["M_hard"][g] += (Ag * wc[:, None]).T @ Ag
            stats_parts["v_all"][g] += (wg * bg) @ Ag
            stats_parts["v_hard"][g] += (wc * bg) @ Ag
            stats_parts["s_all"][g] += np.sum(wg * bg * bg)
            stats_parts["s_hard"][g] += np.sum(wc * bg * bg)
    for g in np.unique(groups):
        stats_parts["weight"][g] += w[groups == g].sum()


def dirichlet_statistics(
    params: ModelParams,
    basis: LocalFunctionBasis,
    n_samples: int,
    rng: np.random.Generator | None = None,
    method: str = "auto",
    n_groups: int = 20,
    chunk: int = 20000,
) -> DirichletStatistics:
    """Sample (or enumerate) the product measure and accumulate normal-equation sums.

    ``method="auto"`` enumerates all patterns when the integrand depends on
    at most 20 sites and samples otherwise.
    """
    if params.rho is None:
        raise ValueError("the variational estimator needs a density rho")
    if basis.d != params.d:
        raise ValueError("basis and parameters disagree on d")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rho, k, p = params.rho, params.k, len(basis)
    sites = dependency_sites(basis, k)
    layout = _Layout(sites)
    m = len(sites)
    if method == "auto":
        method = "enumerate" if m <= MAX_ENUMERATED_SITES else "sample"
    if method not in ("enumerate", "sample"):
        raise ValueError(f"unknown method {method!r}")
    if method == "enumerate" and m > MAX_ENUMERATED_SITES:
        raise ValueError(f"{m} dependency sites are too many to enumerate")
    exact = method == "enumerate"
    G = 1 if exact else max(1, min(n_groups, n_samples))
    parts = {
        "weight": np.zeros(G),
        "M_all": np.zeros((G, p, p)), "M_hard": np.zeros((G, p, p)),
        "v_all": np.zeros((G, p)), "v_hard": np.zeros((G, p)),
        "s_all": np.zeros(G), "s_hard": np.zeros(G),
    }
    if exact:
        n_total = 2**m
        for start in range(0, n_total, chunk):
            idx = np.arange(start, min(start + chunk, n_total), dtype=np.int64)
            X = ((idx[:, None] >> np.arange(m)) & 1).astype(np.uint8)
            ones = X.sum(axis=1)
            w = rho**ones * (1 - rho) ** (m - ones)
            _accumulate(parts, X, w, np.zeros(len(idx), dtype=np.int64), layout, basis, k, G)
        n_used = n_total
    else:
        if rng is None:
            raise ValueError("sampling needs a random generator")
        for start in range(0, n_samples, chunk):
            stop = min(start + chunk, n_samples)
            X = (rng.random((stop - start, m)) < rho).astype(np.uint8)
            groups = (np.arange(start, stop) * G) // n_samples
            _accumulate(parts, X, np.ones(stop - start), groups, layout, basis, k, G)
        n_used = n_samples
    return DirichletStatistics(
        d=params.d, k=k, rho=rho, basis=basis.descriptor, n_samples=n_used, exact=exact, **parts
    )


def estimate_D_variational(
    params: ModelParams,
    basis: LocalFunctionBasis,
    n_samples: int,
    rng: np.random.Generator | None = None,
    method: str = "auto",
    n_groups: int = 20,
) -> VariationalResult:
    """Estimate ``D^(eps)(rho)`` by minimising the objective over the span of ``basis``.

    Returns the clamped estimate, the raw value, a delete-one-group
    jackknife standard error (0 for exact enumeration) and the optimal
    coefficients.
    """
    stats = dirichlet_statistics(params, basis, n_samples, rng, method, n_groups)
    return stats.solve(params.eps)
