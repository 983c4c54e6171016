"""Green-Kubo estimate of the diffusion matrix from equilibrium trajectories.

Replicas start from the product measure (which is stationary) and are
sampled every ``dt``.  For each lag ``t`` the space-time correlation
``C(x, t) = E[eta(y, s) eta(y + x, s + t)]`` is averaged over all ``y`` and
all time origins ``s`` with FFTs, and

    D_ab(t) = sum_x x_a x_b (C(x, t) - C(x, 0)) / (2 chi t)

with the minimal-image ``x`` and ``chi = rho(1-rho) V/(V-1)`` for ``n``
particles on ``V`` sites.  Every time origin is uniform over the
configurations with ``n`` particles, so ``E C(x, 0)`` is the canonical
pair value ``n(n-1)/(V(V-1))`` for ``x != 0``; subtracting the equal-time
correlation of the same origins instead of that constant keeps the
estimator unbiased and removes most of the slow-mode noise.  The SSEP
expectation is the second moment of the lattice heat kernel over ``2t``.

The integrated particle current gives a second, lower-variance estimate
``E[J_a J_b] / (2 chi t V)`` over the same trajectories.
"""
from __future__ import annotations

import io
import warnings
from dataclasses import dataclass

import numpy as np

from ..dynamics import ModelParams, replica_rngs, run_tasks, simulate
from ..lattice import DensityProfile, Torus, sample_product


@dataclass
class GreenKuboResult:
    times: np.ndarray
    D: np.ndarray  # (n_times, d, d), correlation route
    D_stderr: np.ndarray
    D_current: np.ndarray  # (n_times, d, d), integrated-current route
    D_current_stderr: np.ndarray
    params: ModelParams
    N: int
    n_replicas: int
    total_time: float
    displacement_warning: bool

    def to_csv(self) -> str:
        d = self.params.d
        cols = ["t"]
        for a in range(d):
            for b in range(d):
                cols += [f"D{a + 1}{b + 1}", f"D{a + 1}{b + 1}_se"]
        for a in range(d):
            for b in range(d):
                cols += [f"J{a + 1}{b + 1}", f"J{a + 1}{b + 1}_se"]
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for i, t in enumerate(self.times):
            row = [repr(float(t))]
            for arr, se in ((self.D, self.D_stderr), (self.D_current, self.D_current_stderr)):
                for a in range(d):
                    for b in range(d):
                        row += [repr(float(arr[i, a, b])), repr(float(se[i, a, b]))]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_record(self) -> dict:
        return {
            "estimator": "green-kubo",
            "params": {"d": self.params.d, "k": self.params.k, "eps": self.params.eps, "rho": self.params.rho},
            "N": self.N,
            "n_replicas": self.n_replicas,
            "total_time": self.total_time,
            "displacement_warning": self.displacement_warning,
            "times": self.times.tolist(),
            "diagonal_mean": [float(np.trace(m) / self.params.d) for m in self.D],
        }


def minimal_image(N: int) -> np.ndarray:
    """Signed displacement in ``[-N/2, N/2)`` for each index ``0..N-1``."""
    x = np.arange(N)
    return np.where(x >= (N + 1) // 2, x - N, x).astype(float)


def _second_moments(h: np.ndarray, N: int) -> np.ndarray:
    """``sum_x x_a x_b h(x)`` over the torus with minimal-image ``x``."""
    d = h.ndim
    x = minimal_image(N)
    out = np.zeros((d, d))
    grids = np.meshgrid(*([x] * d), indexing="ij")
    for a in range(d):
        for b in range(a, d):
            out[a, b] = out[b, a] = float(np.sum(grids[a] * grids[b] * h))
    return out


def _replica(params, N, lags, dt, n_origins, burn_in, rng):
    d = params.d
    geom = Torus(d, N)
    V = geom.n_sites
    config = sample_product(geom, DensityProfile.constant(params.rho, d), rng)
    if burn_in > 0:
        config, _ = simulate(config, params, burn_in, rng)
    n = config.n_particles
    lags = np.concatenate([[0], lags])
    L = int(lags.max())
    n_snap = n_origins + L + 1
    block = 256
    cross = np.zeros((len(lags),) + np.fft.rfftn(np.zeros(geom.shape)).shape, dtype=complex)
    n_pairs = np.zeros(len(lags))
    history = {0: np.fft.rfftn(config.occ.astype(float))}
    currents = [np.zeros(d, dtype=np.int64)]
    offset = np.zeros(d, dtype=np.int64)
    idx = 0
    while idx + 1 < n_snap:
        m = min(block, n_snap - idx - 1)
        config, stats = simulate(config, params, dt * m, rng, epochs=dt * np.arange(1, m + 1), snapshots=True)
        for j, snap in enumerate(stats.snapshots):
            idx += 1
            F = np.fft.rfftn(snap.occ.astype(float))
            history[idx] = F
            for li, lag in enumerate(lags):
                if 0 <= idx - lag < n_origins:
                    cross[li] += np.conj(history[idx - lag]) * F
                    n_pairs[li] += 1
            history.pop(idx - L, None)
            currents.append(offset + stats.epoch_current[j])
        offset = offset + stats.current
    corr = [np.fft.irfftn(cross[li] / n_pairs[li], s=geom.shape, axes=tuple(range(d))) / V for li in range(len(lags))]
    currents = np.asarray(currents, dtype=float)
    jj = np.zeros((len(lags) - 1, d, d))
    for li, lag in enumerate(lags[1:]):
        disp = currents[lag : lag + n_origins] - currents[:n_origins]
        jj[li] = disp.T @ disp / n_origins
    return [c - corr[0] for c in corr[1:]], n, jj


def green_kubo_estimate(
    params: ModelParams,
    N: int,
    t_max: float,
    n_replicas: int,
    rng: np.random.Generator | int,
    *,
    dt: float = 1.0,
    times=None,
    n_origins: int = 1000,
    burn_in: float = 0.0,
    workers: int = 1,
) -> GreenKuboResult:
    """Estimate ``D_ab(t)`` on a grid of lags up to ``t_max``.

    Each replica runs for ``(n_origins + t_max/dt) dt`` time units; every
    sample up to ``n_origins`` serves as a time origin.  Standard errors are
    the spread across replicas.  Sets ``displacement_warning`` (and warns)
    when ``sqrt(2 t_max) > N/4``.
    """
    if params.rho is None:
        raise ValueError("green_kubo_estimate needs a density rho")
    if params.eps == 0 and params.k > 1:
        warnings.warn("eps = 0: relaxation at finite N is not guaranteed", stacklevel=2)
    if n_replicas < 1:
        raise ValueError("n_replicas must be >= 1")
    if times is None:
        lags = np.arange(1, int(round(t_max / dt)) + 1)
    else:
        lags = np.unique(np.rint(np.asarray(times, dtype=float) / dt).astype(int))
        if lags.min() < 1:
            raise ValueError("times must be positive multiples of dt")
    warn = bool(np.sqrt(2 * lags.max() * dt) > N / 4)
    if warn:
        warnings.warn("t_max is large for this torus: displacements approach N/4", stacklevel=2)
    seeds = rng if isinstance(rng, int) else int(rng.integers(0, 2**63 - 1))
    V = N**params.d
    per_rep, per_rep_j = [], []
    t = (lags * dt)[:, None, None]
    tasks = [(params, N, lags, dt, n_origins, burn_in, r) for r in replica_rngs(seeds, n_replicas)]
    for increments, n, jj in run_tasks(_replica, tasks, workers):
        rho_hat = n / V
        chi = rho_hat * (1 - rho_hat) * V / (V - 1)
        if chi == 0:
            raise ValueError("a replica drew an empty or full torus; correlations are undefined")
        per_rep.append(np.array([_second_moments(h, N) for h in increments]) / (2 * chi * t))
        per_rep_j.append(jj / (2 * chi * V * t))
    per_rep = np.asarray(per_rep)
    per_rep_j = np.asarray(per_rep_j)

    def mean_se(a):
        m = a.mean(axis=0)
        se = a.std(axis=0, ddof=1) / np.sqrt(len(a)) if len(a) > 1 else np.full_like(m, np.nan)
        return m, se

    D, D_se = mean_se(per_rep)
    J, J_se = mean_se(per_rep_j)
    return GreenKuboResult(
        times=lags * dt, D=D, D_stderr=D_se, D_current=J, D_current_stderr=J_se,
        params=params, N=N, n_replicas=n_replicas,
        total_time=float(n_replicas * (n_origins + lags.max()) * dt),
        displacement_warning=warn,
    )
