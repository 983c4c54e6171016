"""The relevant-site test function and its Dirichlet-form value.

The test function at scale ``l`` is

    f(eta) = ( sum_{x in L+ & R} eta(x) - sum_{x in L- & R} eta(x) ) / Z

with ``L- = [-l,0] x [-l,l]^{d-1}``, ``L+ = [1,l] x [-l,l]^{d-1}``, ``R`` the
relevant sites of ``[-2l,2l]^d`` and ``Z = 2 (2l+1)^{d-1}``.  It only reads
the window ``[-2l,2l]^d``; the exterior counts as occupied.

Gradients are taken across ``{0, e}``: the contribution of the translate
``x`` is ``f(tau_x eta^{0,e}) - f(tau_x eta)``, and ``tau_x f`` reads the
window ``x + [-2l,2l]^d``, in which the edge sits at ``u = -x``, ``w = e - x``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numba
import numpy as np

from ..bootstrap import _offsets, _reach_flat, _span_flat, relevant_mask
from ..dynamics import ModelParams
from ..lattice import Configuration, Window, unit


@dataclass(frozen=True)
class TestFunctionSpec:
    __test__ = False  # not a pytest class

    l: int
    d: int

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("scale l must be >= 1")
        if self.d < 1:
            raise ValueError("d must be >= 1")

    @property
    def Z(self) -> int:
        return 2 * (2 * self.l + 1) ** (self.d - 1)

    @property
    def radius(self) -> int:
        return 2 * self.l

    @property
    def side(self) -> int:
        return 4 * self.l + 1

    def in_plus(self, y) -> bool:
        return 1 <= y[0] <= self.l and all(abs(c) <= self.l for c in y[1:])

    def in_minus(self, y) -> bool:
        return -self.l <= y[0] <= 0 and all(abs(c) <= self.l for c in y[1:])

    def sign(self, y) -> int:
        """+1 on the right half, -1 on the left half, 0 elsewhere."""
        return 1 if self.in_plus(y) else (-1 if self.in_minus(y) else 0)

    @cached_property
    def sign_array(self) -> np.ndarray:
        """``sign`` over ``[-2l,2l]^d`` in array-index order."""
        l, d = self.l, self.d
        arr = np.zeros((self.side,) * d, dtype=np.int8)
        inner = (slice(l, 3 * l + 1),) * (d - 1)
        arr[(slice(l, 2 * l + 1),) + inner] = -1
        arr[(slice(2 * l + 1, 3 * l + 1),) + inner] = 1
        return arr


def _read_block(config: Configuration, center, radius: int) -> np.ndarray:
    """Occupation on ``center + [-radius, radius]^d`` with the exterior occupied."""
    geom = config.geometry
    if not isinstance(geom, Window):
        raise TypeError("test-function evaluation needs a window configuration")
    d = geom.d
    side = 2 * radius + 1
    out = np.ones((side,) * d, dtype=np.uint8)
    src, dst = [], []
    for a in range(d):
        lo = center[a] - radius
        hi = center[a] + radius
        clo, chi = max(lo, geom.lo[a]), min(hi, geom.hi[a])
        if clo > chi:
            return out
        src.append(slice(clo - geom.lo[a], chi - geom.lo[a] + 1))
        dst.append(slice(clo - lo, chi - lo + 1))
    out[tuple(dst)] = config.occ[tuple(src)]
    return out


def value_on_block(block: np.ndarray, spec: TestFunctionSpec, k: int) -> float:
    rel = relevant_mask(block, spec.l, k)
    return float(np.sum(spec.sign_array * (rel & (block == 1)))) / spec.Z


def test_function_value(config: Configuration, spec: TestFunctionSpec, k: int) -> float:
    """Evaluate the test function on a window configuration covering ``[-2l,2l]^d``."""
    geom = config.geometry
    if not isinstance(geom, Window) or geom.d != spec.d:
        raise ValueError("configuration must be a window of matching dimension")
    box = Window.box(spec.radius, spec.d)
    if not all(geom.lo[a] <= box.lo[a] and box.hi[a] <= geom.hi[a] for a in range(spec.d)):
        raise ValueError(f"window must cover [-{spec.radius},{spec.radius}]^d")
    return value_on_block(_read_block(config, (0,) * spec.d, spec.radius), spec, k)


test_function_value.__test__ = False


def _constraint_in_block(block: np.ndarray, u, w, k: int) -> bool:
    """KA constraint of the edge ``{u, w}`` with everything outside ``block`` occupied."""
    def empties(a, other):
        n = 0
        for ax in range(block.ndim):
            for s in (1, -1):
                z = list(a)
                z[ax] += s
                z = tuple(z)
                if z == tuple(other):
                    continue
                if all(0 <= z[i] < block.shape[i] for i in range(block.ndim)) and block[z] == 0:
                    n += 1
        return n

    return empties(u, w) >= k - 1 and empties(w, u) >= k - 1


def test_function_gradient(
    config: Configuration,
    x,
    e,
    spec: TestFunctionSpec,
    k: int,
    method: str = "direct",
) -> float:
    """``f(tau_x eta^{0,e}) - f(tau_x eta)`` for a unit vector ``e``.

    ``method="direct"`` evaluates both terms.  ``method="fast"`` returns 0
    when nothing changes inside the window and uses the closed form
    ``(eta(e) - eta(0)) (s(u) r(u) - s(w) r(w)) / Z`` whenever the edge
    constraint holds inside the window (which leaves the relevant set
    unchanged); other cases fall back to the direct difference.
    """
    d = spec.d
    x, e = tuple(x), tuple(e)
    if sorted(map(abs, e)) != [0] * (d - 1) + [1]:
        raise ValueError("e must be a unit lattice vector")
    zero = (0,) * d
    if method not in ("direct", "fast"):
        raise ValueError(f"unknown method {method!r}")
    R = spec.radius
    block = _read_block(config, x, R)
    eta0, etae = config[zero], config[e]
    u = tuple(-c + R for c in x)
    w = tuple(ec - c + R for c, ec in zip(x, e))
    u_in = all(0 <= c < spec.side for c in u)
    w_in = all(0 <= c < spec.side for c in w)

    if method == "fast":
        if eta0 == etae or not (u_in or w_in):
            return 0.0
        if u_in and w_in and _constraint_in_block(block, u, w, k):
            rel = relevant_mask(block, spec.l, k)
            s = spec.sign_array
            su = int(s[u]) * int(rel[u])
            sw = int(s[w]) * int(rel[w])
            return (etae - eta0) * (su - sw) / spec.Z

    before = value_on_block(block, spec, k)
    swapped = block.copy()
    if u_in:
        swapped[u] = etae
    if w_in:
        swapped[w] = eta0
    return value_on_block(swapped, spec, k) - before


test_function_gradient.__test__ = False


# -- translate sums ----------------------------------------------------------------

def _sup(v) -> int:
    return max(abs(c) for c in v)


def _closed_nbhd(v):
    out = [tuple(v)]
    for a in range(len(v)):
        for s in (1, -1):
            z = list(v)
            z[a] += s
            out.append(tuple(z))
    return out


def contributing_translates(spec: TestFunctionSpec, e, restricted: bool) -> list:
    """Translates ``x`` entering the gradient sum across ``{0, e}``, with an evaluation mode.

    Each entry is ``(x, mode)`` with mode ``"direct"`` or ``"fast"``.  The
    unrestricted list holds every ``x`` whose window meets the edge.  The
    restricted list is valid when the edge constraint holds in ``Z^d``: it
    keeps the translates whose window clips the constraint neighbourhood
    (direct evaluation) and those whose edge crosses the boundary of
    ``[-l,l]^d`` (closed form).  All other translates contribute 0.
    """
    d, R, l = spec.d, spec.radius, spec.l
    e = tuple(e)
    out = []
    rng_ = range(-R - 1, R + 2)
    for x in np.ndindex(*(len(rng_),) * d):
        x = tuple(c - R - 1 for c in x)
        u = tuple(-c for c in x)
        w = tuple(ec - c for c, ec in zip(x, e))
        if _sup(u) > R and _sup(w) > R:
            continue
        if not restricted:
            out.append((x, "direct"))
            continue
        clipped = any(_sup(z) > R for z in _closed_nbhd(u) + _closed_nbhd(w))
        if clipped:
            out.append((x, "direct"))
        elif (_sup(u) <= l) != (_sup(w) <= l):
            out.append((x, "fast"))
    return out


class _Kernel:
    """Index tables mapping translated windows into one big sample array."""

    def __init__(self, spec: TestFunctionSpec, k: int):
        self.spec = spec
        self.k = k
        d, R = spec.d, spec.radius
        self.big_radius = 2 * R + 1
        S = 2 * self.big_radius + 1
        self.big_shape = (S,) * d
        self.big_strides = np.array([S ** (d - 1 - a) for a in range(d)], dtype=np.int64)
        side = spec.side
        buf_shape = (side + 2,) * d
        self.buf_size = int(np.prod(buf_shape))
        self.offsets = _offsets(buf_shape)
        ys = np.array(list(np.ndindex(*(side,) * d)), dtype=np.int64) - R
        buf_strides = np.array([(side + 2) ** (d - 1 - a) for a in range(d)], dtype=np.int64)
        self.base_idx = (ys + self.big_radius) @ self.big_strides
        self.buf_idx = (ys + R + 1) @ buf_strides
        self.sign = spec.sign_array.ravel().astype(np.int64)
        interior = np.zeros(buf_shape, dtype=np.uint8)
        interior[(slice(1, -1),) * d] = 1
        self.interior = interior.ravel()
        seeds = np.zeros(buf_shape, dtype=np.uint8)
        seeds[(slice(2 * spec.l + 1, 2 * spec.l + 3),) + (slice(1, -1),) * (d - 1)] = 1
        self.seeds = seeds.ravel()
        self.local_strides = np.array([side ** (d - 1 - a) for a in range(d)], dtype=np.int64)
        self._tables = {}

    def flat_big(self, site) -> int:
        return int((np.asarray(site) + self.big_radius) @ self.big_strides)

    def local(self, site) -> int:
        R = self.spec.radius
        if _sup(site) > R:
            return -1
        return int((np.asarray(site) + R) @ self.local_strides)

    def table(self, alpha: int, restricted: bool):
        key = (alpha, restricted)
        if key not in self._tables:
            e = unit(alpha, self.spec.d)
            entries = contributing_translates(self.spec, e, restricted)
            toff = np.array([self.flat_big(x) - self.flat_big((0,) * self.spec.d) for x, _ in entries], dtype=np.int64)
            mode = np.array([1 if m == "fast" else 0 for _, m in entries], dtype=np.int64)
            tu = np.array([self.local(tuple(-c for c in x)) for x, _ in entries], dtype=np.int64)
            tw = np.array([self.local(tuple(ec - c for c, ec in zip(x, e))) for x, _ in entries], dtype=np.int64)
            self._tables[key] = (toff, mode, tu, tw)
        return self._tables[key]

    def gradient_total(self, big: np.ndarray, alpha: int, restricted: bool) -> float:
        """``sum_x grad_{0,e_alpha} tau_x f`` on a sample over the big window."""
        toff, mode, tu, tw = self.table(alpha, restricted)
        e = unit(alpha, self.spec.d)
        total = _gradient_total_k(
            big.ravel(), self.flat_big((0,) * self.spec.d), self.flat_big(e),
            toff, mode, tu, tw, self.base_idx, self.buf_idx, self.buf_size,
            self.interior, self.seeds, self.sign, self.offsets, self.k,
        )
        return total / self.spec.Z


@numba.njit(cache=True)
def _relevance(big, off, base_idx, buf_idx, buf_size, interior, seeds, offsets, k):
    empty = np.zeros(buf_size, dtype=np.uint8)
    for i in range(base_idx.shape[0]):
        empty[buf_idx[i]] = 1 - big[base_idx[i] + off]
    inspan = _span_flat(empty, interior, offsets, k)
    return _reach_flat(inspan, seeds, offsets)


@numba.njit(cache=True)
def _window_value(big, off, base_idx, buf_idx, buf_size, interior, seeds, sign, offsets, k):
    hit = _relevance(big, off, base_idx, buf_idx, buf_size, interior, seeds, offsets, k)
    acc = 0
    for i in range(base_idx.shape[0]):
        if sign[i] != 0 and hit[buf_idx[i]] == 0:
            acc += sign[i] * big[base_idx[i] + off]
    return acc


@numba.njit(cache=True)
def _gradient_total_k(big, p0, pe, toff, mode, tu, tw, base_idx, buf_idx, buf_size,
                      interior, seeds, sign, offsets, k):
    # Sum over translates of Z * (f(tau_x eta^{0,e}) - f(tau_x eta)), an integer.
    diff = np.int64(big[pe]) - np.int64(big[p0])
    if diff == 0:
        return 0
    total = 0
    for t in range(toff.shape[0]):
        off = toff[t]
        if mode[t] == 1:
            hit = _relevance(big, off, base_idx, buf_idx, buf_size, interior, seeds, offsets, k)
            su = 0
            sw = 0
            if tu[t] >= 0 and hit[buf_idx[tu[t]]] == 0:
                su = sign[tu[t]]
            if tw[t] >= 0 and hit[buf_idx[tw[t]]] == 0:
                sw = sign[tw[t]]
            total += diff * (su - sw)
        else:
            before = _window_value(big, off, base_idx, buf_idx, buf_size, interior, seeds, sign, offsets, k)
            a = big[p0]
            big[p0] = big[pe]
            big[pe] = a
            after = _window_value(big, off, base_idx, buf_idx, buf_size, interior, seeds, sign, offsets, k)
            big[pe] = big[p0]
            big[p0] = a
            total += after - before
    return total


def gradient_total(config: Configuration, spec: TestFunctionSpec, k: int, alpha: int,
                   restricted: bool = False) -> float:
    """``sum_x grad_{0,e_alpha} tau_x f`` for a window configuration.

    The configuration is read on ``[-(4l+1), 4l+1]^d`` with the exterior
    occupied.  ``restricted=True`` sums only the translates that can be
    nonzero when the edge constraint holds; use it only in that case.
    """
    kern = _Kernel(spec, k)
    big = _read_block(config, (0,) * spec.d, kern.big_radius)
    return kern.gradient_total(big, alpha, restricted)


@dataclass
class DirichletValue:
    value: float
    stderr: float
    l: int
    n_samples: int
    n_evaluated: int
    per_direction: np.ndarray
    rho: float
    k: int
    d: int
    eps: float

    @property
    def normalized(self) -> float:
        """The value divided by ``2 rho (1 - rho)``."""
        return self.value / (2 * self.rho * (1 - self.rho))

    def to_record(self) -> dict:
        return {
            "estimator": "test-function",
            "params": {"d": self.d, "k": self.k, "eps": self.eps, "rho": self.rho},
            "basis": f"relevant-site test function (l={self.l})",
            "n_samples": self.n_samples,
            "estimate": self.normalized,
            "stderr": self.stderr / (2 * self.rho * (1 - self.rho)),
            "raw": self.value,
            "n_evaluated": self.n_evaluated,
        }


def test_function_dirichlet(
    params: ModelParams,
    l: int,
    n_samples: int,
    rng: np.random.Generator,
    restricted: bool = True,
) -> DirichletValue:
    """Monte Carlo value of the Dirichlet integrand at the test function.

    Averages ``sum_alpha c_alpha (delta_{alpha,0}(eta(e_0)-eta(0)) - G_alpha)^2``
    over ``eta ~ mu_rho`` with ``c_alpha`` the soft rate of ``(0, e_alpha)``
    and ``G_alpha`` the translate-summed gradient of the test function.

    The sites fixing the current and the constraints are drawn first for
    every sample; the rest of the window is drawn only for samples whose
    integrand can be nonzero.  This is equal in law to drawing full windows.
    """
    if params.rho is None:
        raise ValueError("test_function_dirichlet needs a density rho")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    d, k, eps, rho = params.d, params.k, params.eps, params.rho
    spec = TestFunctionSpec(l, d)
    kern = _Kernel(spec, k)
    zero = (0,) * d
    local = sorted({s for a in range(d) for s in _closed_nbhd(zero) + _closed_nbhd(unit(a, d))})
    col = {s: i for i, s in enumerate(local)}
    X = (rng.random((n_samples, len(local))) < rho).astype(np.uint8)

    diff = np.zeros((n_samples, d), dtype=np.int64)
    hard = np.zeros((n_samples, d), dtype=bool)
    for a in range(d):
        e = unit(a, d)
        diff[:, a] = X[:, col[e]].astype(np.int64) - X[:, col[zero]]
        if k == 1:
            hard[:, a] = True
        else:
            def empties(site, other):
                cols = [col[z] for z in _closed_nbhd(site)[1:] if z != other]
                return (1 - X[:, cols].astype(np.int16)).sum(axis=1)

            hard[:, a] = (empties(zero, e) >= k - 1) & (empties(e, zero) >= k - 1)
    rate = np.where(hard, 1.0, eps)
    active = (diff != 0) & (rate > 0)
    need = np.flatnonzero(active.any(axis=1))

    integrand = np.zeros((n_samples, d))
    local_big = np.array([kern.flat_big(s) for s in local], dtype=np.int64)
    size = int(np.prod(kern.big_shape))
    for i in need:
        big = (rng.random(size) < rho).astype(np.uint8)
        big[local_big] = X[i]
        for a in np.flatnonzero(active[i]):
            G = kern.gradient_total(big, a, restricted and bool(hard[i, a]))
            current = float(diff[i, a]) if a == 0 else 0.0
            integrand[i, a] = rate[i, a] * (current - G) ** 2
    per_sample = integrand.sum(axis=1)
    value = float(per_sample.mean())
    stderr = float(per_sample.std(ddof=1) / np.sqrt(n_samples)) if n_samples > 1 else 0.0
    return DirichletValue(
        value=value, stderr=stderr, l=l, n_samples=n_samples, n_evaluated=len(need),
        per_direction=integrand.mean(axis=0), rho=rho, k=k, d=d, eps=eps,
    )


test_function_dirichlet.__test__ = False
