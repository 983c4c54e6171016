import numpy as np
import pytest
from hypothesis import given, strategies as st

from kclg.diffusion import (
    TestFunctionSpec,
    gradient_total,
    test_function_dirichlet as dirichlet,
    test_function_gradient as gradient,
    test_function_value as value,
)
from kclg.dynamics import ModelParams, constraint
from kclg.lattice import Configuration, Window, unit

seeds = st.integers(0, 2**32 - 1)


def random_window(seed, radius, d=2, p=None):
    g = np.random.default_rng(seed)
    win = Window.box(radius, d)
    p = g.uniform(0.3, 0.9) if p is None else p
    return Configuration(win, (g.random(win.shape) < p).astype(np.uint8))


def counting_oracle(l, d):
    """(|Lambda_+| - |Lambda_-|) / Z by direct enumeration."""
    spec = TestFunctionSpec(l, d)
    plus = minus = 0
    for y in Window.box(2 * l, d).sites():
        plus += spec.in_plus(y)
        minus += spec.in_minus(y)
    return (plus - minus) / spec.Z


@pytest.mark.parametrize("l,d", [(1, 2), (2, 2), (3, 2), (1, 3)])
def test_all_occupied_value_by_counting(l, d):
    spec = TestFunctionSpec(l, d)
    conf = Configuration.full(Window.box(2 * l, d))
    assert value(conf, spec, 2) == counting_oracle(l, d) == -0.5


@pytest.mark.parametrize("k", [1, 2])
def test_all_empty_value_is_zero(k):
    assert value(Configuration.empty(Window.box(4, 2)), TestFunctionSpec(2, 2), k) == 0


@given(seeds, st.sampled_from([1, 2]))
def test_value_invariant_under_transverse_reflection(seed, l):
    conf = random_window(seed, 2 * l)
    mirrored = Configuration(conf.geometry, conf.occ[:, ::-1].copy())
    spec = TestFunctionSpec(l, 2)
    assert value(conf, spec, 2) == value(mirrored, spec, 2)


def test_value_needs_a_covering_window():
    with pytest.raises(ValueError):
        value(Configuration.full(Window.box(2, 2)), TestFunctionSpec(2, 2), 2)


def test_equal_occupation_gives_zero_gradient():
    conf = random_window(4, 8)
    conf[(0, 0)] = conf[(1, 0)] = 1
    for method in ("direct", "fast"):
        assert gradient(conf, (1, -2), (1, 0), TestFunctionSpec(2, 2), 2, method) == 0


def test_particle_leaving_the_right_half_through_the_boundary():
    # In the translated frame the edge runs from u=(2,2) in Lambda_+ to w=(3,2) outside [-2,2]^2,
    # next to an empty 2x2 block that keeps both ends relevant.
    spec = TestFunctionSpec(2, 2)
    conf = Configuration.from_empty_sites(Window.box(6, 2), [(1, 0), (0, 1), (1, 1), (0, 2), (1, 2)])
    assert constraint(conf, ((0, 0), (1, 0)), 2) == 1
    for method in ("direct", "fast"):
        assert gradient(conf, (-2, -2), (1, 0), spec, 2, method) == pytest.approx(-1 / spec.Z)


@given(seeds, st.sampled_from([1, 2]), st.sampled_from([1, 2]), st.integers(0, 1), st.integers(-1, 1))
def test_fast_gradient_equals_direct(seed, l, k, alpha, sign):
    g = np.random.default_rng(seed)
    R = 2 * l
    conf = random_window(seed, 3 * R + 2)
    x = tuple(int(c) for c in g.integers(-R - 1, R + 2, 2))
    e = unit(alpha, 2, 1 if sign >= 0 else -1)
    spec = TestFunctionSpec(l, 2)
    assert gradient(conf, x, e, spec, k, "fast") == gradient(conf, x, e, spec, k, "direct")


@given(seeds, st.sampled_from([1, 2]), st.integers(0, 1))
def test_restricted_translate_sum_equals_full_sum(seed, l, alpha):
    spec = TestFunctionSpec(l, 2)
    conf = random_window(seed, 4 * l + 1, p=0.6)
    e = unit(alpha, 2)
    conf[(0, 0)], conf[e] = 1, 0
    if not constraint(conf, ((0, 0), e), 2):
        conf[unit(alpha, 2, -1)] = 0
        conf[tuple(a + b for a, b in zip(e, e))] = 0
    assert constraint(conf, ((0, 0), e), 2)
    full = gradient_total(conf, spec, 2, alpha, restricted=False)
    assert gradient_total(conf, spec, 2, alpha, restricted=True) == pytest.approx(full, abs=1e-12)


def test_translate_sum_matches_explicit_loop():
    spec = TestFunctionSpec(1, 2)
    conf = random_window(17, 5)
    R = spec.radius
    explicit = sum(
        gradient(conf, (a, b), (1, 0), spec, 2)
        for a in range(-R - 1, R + 2) for b in range(-R - 1, R + 2)
    )
    assert gradient_total(conf, spec, 2, 0) == pytest.approx(explicit, abs=1e-12)


def test_k1_value_stable_across_seeds():
    params = ModelParams(2, 1, 0.0, 0.5)
    a = dirichlet(params, 1, 4000, np.random.default_rng(1))
    b = dirichlet(params, 1, 4000, np.random.default_rng(2))
    assert np.isfinite(a.value) and a.value > 0
    assert abs(a.value - b.value) < 4 * np.hypot(a.stderr, b.stderr)
    again = dirichlet(params, 1, 4000, np.random.default_rng(1))
    assert again.value == a.value


def test_nearly_full_density_gives_zero_integrand():
    res = dirichlet(ModelParams(2, 2, 0.0, 1 - 2**-20), 2, 10000, np.random.default_rng(0))
    assert res.value == 0.0


def test_restricted_and_full_sums_give_the_same_dirichlet_value():
    params = ModelParams(2, 2, 0.0, 0.8)
    a = dirichlet(params, 1, 3000, np.random.default_rng(8), restricted=True)
    b = dirichlet(params, 1, 3000, np.random.default_rng(8), restricted=False)
    assert a.value == pytest.approx(b.value, abs=1e-12)


def test_record_is_normalised():
    res = dirichlet(ModelParams(2, 2, 0.0, 0.9), 1, 500, np.random.default_rng(0))
    rec = res.to_record()
    assert rec["estimate"] == pytest.approx(res.value / (2 * 0.9 * 0.1))
    assert rec["raw"] == res.value
