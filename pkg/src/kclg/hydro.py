"""Empirical density profiles, a reference solver for the diffusion equation
``d rho/dt = div(D(rho) grad rho)`` on the unit torus, and experiments
comparing the two under diffusive scaling (microscopic time ``N^2 t``).
"""
from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dynamics import ModelParams, replica_rngs, run_tasks, simulate
from .lattice import Configuration, DensityProfile, Torus, construct_blocked, sample_product


@dataclass
class EmpiricalProfile:
    """Per-bin density of a configuration; ``values`` has one axis per binned direction."""

    values: np.ndarray
    t: float = 0.0
    mass: float = 0.0

    @property
    def bins(self) -> tuple:
        return self.values.shape


def empirical_profile(config: Configuration, bins: int, t: float = 0.0, axis: int | None = None) -> EmpiricalProfile:
    """Bin a torus configuration into ``bins`` cells per axis.

    With ``axis`` given, the other directions are averaged out and the
    profile is one-dimensional.  ``mass`` is the particle count over ``N^d``.
    """
    geom = config.geometry
    if not isinstance(geom, Torus):
        raise TypeError("empirical profiles are defined on the torus")
    N, d = geom.N, geom.d
    if bins < 1 or N % bins:
        raise ValueError(f"bins={bins} must divide N={N}")
    w = N // bins
    occ = config.occ.astype(float)
    if axis is not None:
        occ = occ.mean(axis=tuple(a for a in range(d) if a != axis))
        vals = occ.reshape(bins, w).mean(axis=1)
    else:
        vals = occ.reshape(sum(((bins, w) for _ in range(d)), ())).mean(axis=tuple(range(1, 2 * d, 2)))
    return EmpiricalProfile(vals, t, config.n_particles / N**d)


@dataclass(frozen=True)
class DiffusionTable:
    """``D(rho)`` sampled at 257 equally spaced densities, linearly interpolated."""

    values: np.ndarray
    label: str = "table"

    SIZE = 257

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.SIZE,):
            raise ValueError(f"a diffusion table has {self.SIZE} entries")
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("D must be finite and non-negative")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, D: float) -> "DiffusionTable":
        return cls(np.full(cls.SIZE, float(D)), f"constant({D})")

    @classmethod
    def from_function(cls, func: Callable, label: str = "function") -> "DiffusionTable":
        return cls(np.asarray([func(r) for r in cls.grid()], dtype=float), label)

    @classmethod
    def from_points(cls, rho: Sequence[float], D: Sequence[float], label: str = "points") -> "DiffusionTable":
        """Piecewise-linear table through measured ``(rho, D)`` pairs (held constant beyond the ends)."""
        order = np.argsort(rho)
        return cls(np.interp(cls.grid(), np.asarray(rho)[order], np.asarray(D)[order]), label)

    @classmethod
    def grid(cls) -> np.ndarray:
        return np.linspace(0.0, 1.0, cls.SIZE)

    def __call__(self, rho):
        return np.interp(rho, self.grid(), self.values)

    @property
    def max(self) -> float:
        return float(self.values.max())


@dataclass
class PdeSolution:
    times: np.ndarray
    states: list
    dt: float
    steps: int
    masses: np.ndarray

    @property
    def resolution(self) -> int:
        return self.states[0].shape[0]


def _divergence_step(rho: np.ndarray, D: DiffusionTable, dt: float, h: float) -> np.ndarray:
    out = rho.copy()
    for axis in range(rho.ndim):
        nxt = np.roll(rho, -1, axis=axis)
        flux = D(0.5 * (rho + nxt)) * (nxt - rho) / h
        out += dt / h * (flux - np.roll(flux, 1, axis=axis))
    return out


def pde_solve(
    rho0: DensityProfile | np.ndarray,
    D: DiffusionTable,
    t_final: float,
    resolution: int,
    output_times: Sequence[float] | None = None,
    safety: float = 0.9,
) -> PdeSolution:
    """Explicit conservative finite-volume solution on the periodic unit torus.

    Fluxes are ``D(mean of neighbours) * difference / h`` on every axis and
    the step obeys ``dt <= safety * h^2 / (2 d max D)``; the last step before
    each output time is shortened to land on it exactly.  ``rho0`` may be a
    profile (looked up on the grid) or an array already on the grid.
    """
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    if isinstance(rho0, DensityProfile):
        rho = rho0.on_lattice(resolution).astype(float)
    else:
        rho = np.asarray(rho0, dtype=float)
        if any(s != resolution for s in rho.shape):
            raise ValueError("initial array must have the grid resolution on every axis")
    d = rho.ndim
    h = 1.0 / resolution
    outs = sorted(set([t_final] if output_times is None else [float(t) for t in output_times]))
    if outs and (outs[0] < 0 or outs[-1] > t_final + 1e-15):
        raise ValueError("output times must lie in [0, t_final]")
    dt_max = safety * h * h / (2 * d * D.max) if D.max > 0 else np.inf
    t, steps = 0.0, 0
    states, masses = [], []
    for target in outs:
        while t < target - 1e-15:
            dt = min(dt_max, target - t)
            rho = np.clip(_divergence_step(rho, D, dt, h), 0.0, 1.0)
            t = target if dt == target - t else t + dt
            steps += 1
        states.append(rho.copy())
        masses.append(float(rho.sum() * h**d))
    return PdeSolution(np.asarray(outs), states, float(dt_max), steps, np.asarray(masses))


def coarse_grain(state: np.ndarray, bins: int) -> np.ndarray:
    """Average a grid array into ``bins`` cells per axis."""
    r = state.shape[0]
    if r % bins:
        raise ValueError(f"bins={bins} must divide the grid resolution {r}")
    w = r // bins
    d = state.ndim
    return state.reshape(sum(((bins, w) for _ in range(d)), ())).mean(axis=tuple(range(1, 2 * d, 2)))


@dataclass
class HydroResult:
    times: np.ndarray
    empirical: np.ndarray  # (n_times, bins[, ...])
    pde: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    masses: np.ndarray  # (replicas, n_times + 1) particle count / N^d
    params: ModelParams
    N: int
    replicas: int
    bins: int
    axis: int | None
    D_label: str
    warnings: list = field(default_factory=list)

    def profiles_csv(self, which: str = "empirical") -> str:
        """Long-format CSV ``t,bin_index,density`` (one index column per binned axis)."""
        data = self.empirical if which == "empirical" else self.pde
        ndim = data.ndim - 1
        idx_cols = ["bin_index"] if ndim == 1 else [f"bin_index_{a + 1}" for a in range(ndim)]
        buf = io.StringIO()
        buf.write(",".join(["t", *idx_cols, "density"]) + "\n")
        for i, t in enumerate(self.times):
            for idx in np.ndindex(*data.shape[1:]):
                buf.write(",".join([repr(float(t)), *map(str, idx), repr(float(data[i][idx]))]) + "\n")
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "params": {"d": self.params.d, "k": self.params.k, "eps": self.params.eps},
            "N": self.N,
            "replicas": self.replicas,
            "bins": self.bins,
            "axis": self.axis,
            "D": self.D_label,
            "times": self.times.tolist(),
            "l1": self.l1.tolist(),
            "l2": self.l2.tolist(),
            "mass_conserved": bool(np.all(self.masses == self.masses[:, :1])),
            "warnings": self.warnings,
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def _hydro_replica(params, N, rho0, times, bins, axis, initial, rng):
    geom = Torus(params.d, N)
    if initial == "blocked":
        config = construct_blocked(geom, rho0, rng)
    else:
        config = sample_product(geom, rho0, rng)
    m0 = config.n_particles / N**params.d
    _, stats = simulate(config, params, float(N * N * times[-1]), rng, epochs=N * N * times, snapshots=True)
    profs = [empirical_profile(s, bins, t, axis) for s, t in zip(stats.snapshots, times)]
    return np.stack([p.values for p in profs]), [m0] + [p.mass for p in profs]


def run_hydro_experiment(
    params: ModelParams,
    N: int,
    rho0: DensityProfile,
    times: Sequence[float],
    replicas: int,
    bins: int,
    rng: np.random.Generator | int,
    D: DiffusionTable | None = None,
    *,
    axis: int | None = 0,
    initial: str = "product",
    pde_resolution: int | None = None,
    workers: int = 1,
) -> HydroResult:
    """Average empirical profiles at microscopic times ``N^2 t`` and compare with the PDE.

    ``axis=0`` (default) bins along the first axis only and solves the
    one-dimensional equation for the profile's first-axis marginal, which
    requires ``rho0`` to be constant along the other axes.  ``axis=None``
    bins and solves in all ``d`` directions.  ``initial="blocked"`` starts
    from the blocked construction instead of the product measure.  The PDE
    grid defaults to one cell per lattice site.  Replicas may run in
    ``workers`` processes; results do not depend on it.
    """
    d = params.d
    if rho0.d != d:
        raise ValueError("profile dimension must match the model")
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    if initial not in ("product", "blocked"):
        raise ValueError(f"unknown initial state {initial!r}")
    times = np.asarray(sorted(float(t) for t in times))
    if times.size == 0 or times[0] < 0:
        raise ValueError("need at least one non-negative time")
    notes = []
    if params.eps == 0 and params.k > 1:
        msg = "eps = 0: the hard model need not follow the diffusion equation"
        warnings.warn(msg, stacklevel=2)
        notes.append(msg)
    D = D if D is not None else DiffusionTable.constant(1.0)
    seed = rng if isinstance(rng, int) else int(rng.integers(0, 2**63 - 1))
    tasks = [(params, N, rho0, times, bins, axis, initial, r) for r in replica_rngs(seed, replicas)]
    outcomes = run_tasks(_hydro_replica, tasks, workers)
    emp_sum = sum(o[0] for o in outcomes)
    masses = [o[1] for o in outcomes]
    empirical = emp_sum / replicas

    res = pde_resolution or N
    if axis is not None:
        others = tuple(a for a in range(d) if a != axis)
        grid = rho0.on_lattice(res)
        if others and not np.allclose(grid, grid.mean(axis=others, keepdims=True)):
            raise ValueError("quasi-one-dimensional mode needs rho0 constant off the chosen axis")
        start = grid.mean(axis=others) if others else grid
    else:
        start = rho0.on_lattice(res)
    sol = pde_solve(start, D, float(times[-1]), res, output_times=times)
    pde = np.stack([coarse_grain(s, bins) for s in sol.states])
    diff = empirical - pde
    flat = diff.reshape(len(times), -1)
    return HydroResult(
        times=times, empirical=empirical, pde=pde,
        l1=np.abs(flat).mean(axis=1), l2=np.sqrt((flat**2).mean(axis=1)),
        masses=np.asarray(masses), params=params, N=N, replicas=replicas, bins=bins,
        axis=axis, D_label=D.label, warnings=notes,
    )
