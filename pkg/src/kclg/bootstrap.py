"""k-neighbour bootstrap percolation inside finite windows.

Sets are boolean arrays over a rectangular box.  An optional mask ``V``
restricts the region in which sites may be added; neighbours outside the
box (or outside ``V``) are never in the span and contribute nothing to
neighbour counts.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numba
import numpy as np

from .lattice import Configuration, Window


@dataclass
class SpanResult:
    span: np.ndarray
    labels: np.ndarray
    n_components: int

    def component_of(self, index: Sequence[int]) -> np.ndarray:
        lab = self.labels[tuple(index)]
        if lab == 0:
            return np.zeros_like(self.span)
        return self.labels == lab


def _offsets(padded_shape: tuple) -> np.ndarray:
    strides = np.cumprod((1,) + tuple(padded_shape[::-1]))[:-1][::-1]
    out = []
    for st in strides:
        out += [int(st), -int(st)]
    return np.asarray(out, dtype=np.int64)


@numba.njit(cache=True)
def _span_flat(A, V, offsets, k):
    n = A.shape[0]
    inspan = np.zeros(n, dtype=np.uint8)
    count = np.zeros(n, dtype=np.int32)
    queue = np.empty(n, dtype=np.int64)
    tail = 0
    for i in range(n):
        if A[i] and V[i]:
            inspan[i] = 1
            queue[tail] = i
            tail += 1
    head = 0
    while head < tail:
        i = queue[head]
        head += 1
        for o in offsets:
            j = i + o
            count[j] += 1
            if inspan[j] == 0 and V[j] and count[j] >= k:
                inspan[j] = 1
                queue[tail] = j
                tail += 1
    return inspan


@numba.njit(cache=True)
def _label_flat(inspan, offsets):
    n = inspan.shape[0]
    labels = np.zeros(n, dtype=np.int32)
    stack = np.empty(n, dtype=np.int64)
    current = 0
    for i in range(n):
        if inspan[i] == 0 or labels[i] != 0:
            continue
        current += 1
        labels[i] = current
        top = 0
        stack[top] = i
        top += 1
        while top > 0:
            top -= 1
            j = stack[top]
            for o in offsets:
                m = j + o
                if inspan[m] and labels[m] == 0:
                    labels[m] = current
                    stack[top] = m
                    top += 1
    return labels, current


@numba.njit(cache=True)
def _reach_flat(inspan, seeds, offsets):
    # Span sites joined to some seed inside the span.
    n = inspan.shape[0]
    hit = np.zeros(n, dtype=np.uint8)
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for i in range(n):
        if seeds[i] and inspan[i]:
            hit[i] = 1
            stack[top] = i
            top += 1
    while top > 0:
        top -= 1
        j = stack[top]
        for o in offsets:
            m = j + o
            if inspan[m] and hit[m] == 0:
                hit[m] = 1
                stack[top] = m
                top += 1
    return hit


def _prepare(A, V):
    A = np.asarray(A, dtype=bool)
    V = np.ones(A.shape, dtype=bool) if V is None else np.asarray(V, dtype=bool)
    if V.shape != A.shape:
        raise ValueError("A and V must have the same shape")
    Ap = np.pad(A & V, 1).astype(np.uint8)
    Vp = np.pad(V, 1).astype(np.uint8)
    return Ap, Vp, _offsets(Ap.shape)


def _unpad(arr: np.ndarray) -> np.ndarray:
    return arr[(slice(1, -1),) * arr.ndim]


def span(A: np.ndarray, V: np.ndarray | None = None, k: int = 2) -> SpanResult:
    """``[A]^V`` by a work queue, with nearest-neighbour components of the span labelled."""
    Ap, Vp, offs = _prepare(A, V)
    inspan = _span_flat(Ap.ravel(), Vp.ravel(), offs, k)
    labels, n = _label_flat(inspan, offs)
    return SpanResult(
        span=_unpad(inspan.reshape(Ap.shape)).astype(bool),
        labels=_unpad(labels.reshape(Ap.shape)).copy(),
        n_components=int(n),
    )


def span_fixed_point(A: np.ndarray, V: np.ndarray | None = None, k: int = 2) -> np.ndarray:
    """The span by literal iteration of ``A_{t+1} = A_t + {x in V : #nbrs in A_t >= k}``."""
    A = np.asarray(A, dtype=bool)
    V = np.ones(A.shape, dtype=bool) if V is None else np.asarray(V, dtype=bool)
    cur = A & V
    while True:
        padded = np.pad(cur, 1).astype(np.int32)
        count = np.zeros(A.shape, dtype=np.int32)
        for axis in range(A.ndim):
            for shift in (0, 2):
                sl = [slice(1, -1)] * A.ndim
                sl[axis] = slice(shift, shift + A.shape[axis])
                count += padded[tuple(sl)]
        nxt = cur | (V & (count >= k))
        if np.array_equal(nxt, cur):
            return cur
        cur = nxt


def connected_to(S: np.ndarray, A: np.ndarray, V: np.ndarray | None = None, k: int = 2) -> np.ndarray:
    """Mask of sites joined to some site of ``S`` by a path inside ``[A]^V``."""
    Ap, Vp, offs = _prepare(A, V)
    inspan = _span_flat(Ap.ravel(), Vp.ravel(), offs, k)
    seeds = np.pad(np.asarray(S, dtype=bool), 1).astype(np.uint8).ravel()
    hit = _reach_flat(inspan, seeds, offs)
    return _unpad(hit.reshape(Ap.shape)).astype(bool)


def connected_in_span(
    x: Sequence[int], S: np.ndarray, A: np.ndarray, V: np.ndarray | None = None, k: int = 2
) -> bool:
    """Whether the site with array index ``x`` reaches ``S`` inside the span."""
    return bool(connected_to(S, A, V, k)[tuple(x)])


def empty_set(config: Configuration) -> np.ndarray:
    """``A_eta`` restricted to the configuration's window."""
    return config.occ == 0


def slab_mask(l: int, d: int) -> np.ndarray:
    """The central slab ``{0,1} x [-2l,2l]^{d-1}`` as a mask over ``[-2l,2l]^d``."""
    side = 4 * l + 1
    mask = np.zeros((side,) * d, dtype=bool)
    mask[2 * l : 2 * l + 2] = True
    return mask


def relevant_mask(occ: np.ndarray, l: int, k: int) -> np.ndarray:
    """Relevant-site mask for an occupancy array indexed over ``[-2l,2l]^d``."""
    occ = np.asarray(occ)
    if occ.shape != (4 * l + 1,) * occ.ndim:
        raise ValueError(f"expected a window of side {4 * l + 1}, got shape {occ.shape}")
    return ~connected_to(slab_mask(l, occ.ndim), occ == 0, None, k)


def relevant_sites(config: Configuration, l: int, k: int) -> np.ndarray:
    """Sites of ``[-2l,2l]^d`` not joined to the central slab in the span of the empty sites.

    Sites outside the span count as relevant.
    """
    geom = config.geometry
    if not isinstance(geom, Window) or geom != Window.box(2 * l, geom.d):
        raise ValueError(f"configuration must live on the window [-{2 * l},{2 * l}]^d")
    return relevant_mask(config.occ, l, k)
