import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import ndimage

from kclg.bootstrap import (
    connected_in_span,
    connected_to,
    relevant_mask,
    relevant_sites,
    slab_mask,
    span,
    span_fixed_point,
)
from kclg.dynamics import constraint
from kclg.lattice import Configuration, Window, exchange

seeds = st.integers(0, 2**32 - 1)
ks = st.sampled_from([1, 2, 3])


def random_set(g, shape, p=None):
    p = g.random() if p is None else p
    return g.random(shape) < p


def random_mask(g, shape):
    return g.random(shape) < 0.85


def constraint_in_window(occ, x, y, k):
    """KA constraint of (x, y) with everything outside the array occupied."""
    conf = Configuration(Window((0,) * occ.ndim, tuple(s - 1 for s in occ.shape)), occ.astype(np.uint8))
    return constraint(conf, (x, y), k)


def test_empty_and_full_spans():
    A = np.zeros((4, 4), bool)
    assert not span(A, k=2).span.any()
    V = np.ones((4, 4), bool)
    assert span(V, V, k=2).span.all()


def test_two_diagonal_sites_fill_the_square():
    A = np.array([[1, 0], [0, 1]], bool)
    res = span(A, k=2)
    assert res.span.all() and res.n_components == 1
    assert connected_in_span((0, 0), np.array([[0, 0], [0, 1]], bool), A, k=2)


def test_connected_in_span_trivial_cases():
    A = np.array([[1, 0, 0], [0, 0, 0], [0, 0, 1]], bool)
    S = np.zeros_like(A)
    S[0, 0] = True
    assert connected_in_span((0, 0), S, A, k=2)
    assert not connected_in_span((1, 1), S, A, k=2)


@given(seeds, st.sampled_from([1, 2]), st.integers(1, 3))
def test_queue_span_equals_fixed_point(seed, k, d):
    g = np.random.default_rng(seed)
    shape = (6,) * d if d < 3 else (4, 4, 4)
    A, V = random_set(g, shape), random_mask(g, shape)
    assert np.array_equal(span(A, V, k).span, span_fixed_point(A, V, k))


@given(seeds, ks)
def test_span_monotone_in_region(seed, k):
    g = np.random.default_rng(seed)
    A = random_set(g, (7, 7))
    V = random_mask(g, (7, 7))
    U = V & random_mask(g, (7, 7))
    assert not np.any(span(A, U, k).span & ~span(A, V, k).span)


@given(seeds, ks)
def test_span_monotone_in_initial_set(seed, k):
    g = np.random.default_rng(seed)
    A = random_set(g, (7, 7))
    B = A | random_set(g, (7, 7), 0.1)
    assert not np.any(span(A, None, k).span & ~span(B, None, k).span)


@given(seeds, ks)
def test_span_idempotent(seed, k):
    g = np.random.default_rng(seed)
    A, V = random_set(g, (7, 7)), random_mask(g, (7, 7))
    once = span(A, V, k).span
    assert np.array_equal(span(once, V, k).span, once)


@given(seeds, st.sampled_from([(2, 1), (2, 2), (3, 2), (3, 3)]))
def test_span_unchanged_by_allowed_exchange(seed, dk):
    d, k = dk
    g = np.random.default_rng(seed)
    shape = (6,) * d if d == 2 else (4, 4, 4)
    occ = (g.random(shape) < g.random()).astype(np.uint8)
    x = tuple(int(c) for c in g.integers(0, 3, d))
    y = list(x)
    y[int(g.integers(0, d))] += 1
    y = tuple(y)
    if not constraint_in_window(occ, x, y, k):
        return
    swapped = occ.copy()
    swapped[x], swapped[y] = occ[y], occ[x]
    assert np.array_equal(span(occ == 0, None, k).span, span(swapped == 0, None, k).span)


@given(seeds, ks)
def test_component_spans_itself(seed, k):
    g = np.random.default_rng(seed)
    A, V = random_set(g, (8, 8), 0.3), random_mask(g, (8, 8))
    res = span(A, V, k)
    for lab in range(1, res.n_components + 1):
        U = res.labels == lab
        assert np.array_equal(span(A, U, k).span, U)


@given(seeds, ks)
def test_labels_match_scipy_components(seed, k):
    g = np.random.default_rng(seed)
    A, V = random_set(g, (9, 9), 0.35), random_mask(g, (9, 9))
    res = span(A, V, k)
    ref, n = ndimage.label(res.span)
    assert n == res.n_components
    # same partition: labels correspond one-to-one
    pairs = {(int(a), int(b)) for a, b in zip(res.labels[res.span], ref[res.span])}
    assert len(pairs) == n == len({a for a, _ in pairs}) == len({b for _, b in pairs})
    assert np.all(res.labels[~res.span] == 0)


@given(seeds, ks)
def test_disconnection_in_a_subbox_escapes_through_its_boundary(seed, k):
    g = np.random.default_rng(seed)
    big = np.ones((10, 10), bool)
    B = np.zeros_like(big)
    B[2:8, 2:8] = True
    boundary = B & ~ndimage.binary_erosion(B)
    A = random_set(g, big.shape, 0.2 + 0.3 * g.random())
    S = random_set(g, big.shape, 0.1)
    in_big = connected_to(S, A, big, k)
    in_small = connected_to(S, A, B, k)
    to_boundary = connected_to(boundary, A, big, k)
    hypothesis = B & in_big & ~in_small
    assert not np.any(hypothesis & ~to_boundary)


def test_slab_is_two_columns():
    m = slab_mask(2, 2)
    assert m.shape == (9, 9) and m.sum() == 18 and m[4].all() and m[5].all()


def test_relevant_sites_all_empty_and_all_occupied():
    l = 2
    side = 4 * l + 1
    assert not relevant_mask(np.zeros((side, side)), l, 2).any()
    assert relevant_mask(np.ones((side, side)), l, 2).all()


def test_isolated_vacancy_in_the_corner_is_relevant():
    l = 2
    win = Window.box(2 * l, 2)
    empty = [(a, b) for a in (0, 1) for b in range(-4, 5)] + [(4, 4)]
    conf = Configuration.from_empty_sites(win, empty)
    rel = relevant_sites(conf, l, 2)
    assert rel[win.index((4, 4))]
    assert not any(rel[win.index(s)] for s in empty[:-1])
    # oracle: the corner vacancy's span component is a singleton away from the slab
    res = span(conf.occ == 0, None, 2)
    assert not np.any(res.component_of(win.index((4, 4))) & slab_mask(l, 2))


def test_relevant_sites_needs_the_right_window():
    with pytest.raises(ValueError):
        relevant_sites(Configuration.full(Window.box(3, 2)), 2, 2)
