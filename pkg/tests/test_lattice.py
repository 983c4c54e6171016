import io

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from kclg.lattice import (
    Configuration,
    DensityProfile,
    Torus,
    Window,
    construct_blocked,
    exchange,
    format_snapshot,
    make_edge,
    neighbors,
    parse_snapshot,
    read_snapshot,
    sample_product,
    translate,
    unit,
    write_snapshot,
)


def random_config(seed, d=2, N=6, p=0.5):
    g = np.random.default_rng(seed)
    geom = Torus(d, N)
    return Configuration(geom, (g.random(geom.shape) < p).astype(np.uint8))


def test_neighbors_wrap_in_two_dimensions():
    assert sorted(neighbors((0, 0), Torus(2, 5))) == sorted([(1, 0), (4, 0), (0, 1), (0, 4)])


def test_neighbors_wrap_in_one_dimension():
    assert sorted(neighbors((2,), Torus(1, 3))) == [(0,), (1,)]


def test_interior_site_has_2d_distinct_neighbors():
    assert len(set(neighbors((1, 1, 1), Torus(3, 4)))) == 6


def test_window_neighbors_include_exterior_sites():
    win = Window.box(1, 2)
    nbrs = neighbors((1, 1), win)
    assert sorted(nbrs) == [(0, 1), (1, 0), (1, 2), (2, 1)]
    conf = Configuration.empty(win)
    assert [conf[s] for s in nbrs] == [1, 0, 1, 0]


def test_edge_orientation_is_canonical():
    geom = Torus(2, 5)
    assert make_edge((1, 0), (0, 0), geom) == make_edge((0, 0), (1, 0), geom)
    with pytest.raises(ValueError):
        make_edge((0, 0), (2, 0), geom)


def test_exchange_moves_particle_to_vacancy():
    geom = Torus(1, 4)
    conf = Configuration(geom, np.array([1, 0, 1, 1]))
    out = exchange(conf, ((0,), (1,)))
    assert out[(0,)] == 0 and out[(1,)] == 1


def test_exchange_of_equal_occupations_is_identity():
    conf = Configuration(Torus(1, 4), np.array([1, 1, 0, 0]))
    assert exchange(conf, ((0,), (1,))) == conf


@given(st.integers(0, 2**32 - 1), st.integers(0, 5), st.integers(0, 5), st.integers(0, 3))
def test_exchange_is_an_involution_that_conserves_particles(seed, x0, x1, direction):
    conf = random_config(seed)
    x = (x0, x1)
    y = neighbors(x, conf.geometry)[direction]
    once = exchange(conf, (x, y))
    assert once.n_particles == conf.n_particles
    assert exchange(once, (x, y)) == conf


def test_constant_profiles_one_and_zero():
    geom = Torus(2, 8)
    g = np.random.default_rng(0)
    assert sample_product(geom, DensityProfile.constant(1.0, 2), g).n_particles == 64
    assert sample_product(geom, DensityProfile.constant(0.0, 2), g).n_particles == 0


def test_half_profile_fraction_concentrates():
    geom = Torus(2, 64)
    sigma = np.sqrt(0.25 / geom.n_sites)
    for seed in range(100):
        frac = sample_product(geom, DensityProfile.constant(0.5, 2), np.random.default_rng(seed)).density
        assert abs(frac - 0.5) < 4 * sigma


def test_product_counts_follow_binomial():
    geom = Torus(2, 5)
    n, rho = geom.n_sites, 0.3
    counts = np.array([
        sample_product(geom, DensityProfile.constant(rho, 2), np.random.default_rng(s)).n_particles
        for s in range(1000)
    ])
    # pool the tails so every expected cell is at least 5
    edges = [0, 4, 5, 6, 7, 8, 9, 10, 11, n + 1]
    observed = np.histogram(counts, bins=edges)[0]
    cdf = stats.binom.cdf(np.array(edges) - 1, n, rho)
    expected = 1000 * np.diff(np.concatenate([[0.0], cdf[1:-1], [1.0]]))
    assert stats.chisquare(observed, expected).pvalue > 0.001


def test_profile_lookup_uses_nearest_cell():
    prof = DensityProfile(np.array([0.0, 0.1, 0.2, 0.3, 0.4]))
    assert prof.on_lattice(3).tolist() == [0.0, 0.2, 0.3]


def test_blocked_at_limiting_density_empties_every_lattice_point():
    geom = Torus(2, 9)
    conf = construct_blocked(geom, DensityProfile.constant(8 / 9, 2), np.random.default_rng(1))
    assert conf.n_particles == 72
    assert all(x % 3 == 0 and y % 3 == 0 for x, y in conf.empty_sites())


def test_blocked_at_full_density_is_full():
    conf = construct_blocked(Torus(2, 9), DensityProfile.constant(1.0, 2), np.random.default_rng(1))
    assert conf.n_particles == 81


def test_blocked_coin_on_lattice_points():
    geom = Torus(2, 9)
    occupied = 0
    trials = 1000
    for s in range(trials):
        conf = construct_blocked(geom, DensityProfile.constant(17 / 18, 2), np.random.default_rng(s))
        occupied += conf.n_particles - 72
    total = 9 * trials
    assert abs(occupied / total - 0.5) < 4 * np.sqrt(0.25 / total)


@given(st.integers(0, 2**32 - 1), st.floats(8 / 9, 1.0))
def test_blocked_vacancies_lie_on_3z2(seed, rho):
    conf = construct_blocked(Torus(2, 12), DensityProfile.constant(rho, 2), np.random.default_rng(seed))
    assert all(x % 3 == 0 and y % 3 == 0 for x, y in conf.empty_sites())


def test_translate_by_zero_and_full_period():
    conf = random_config(3, N=5)
    assert translate(conf, (0, 0)) == conf
    out = conf
    for _ in range(5):
        out = translate(out, (1, 0))
    assert out == conf


def test_translate_single_particle():
    geom = Torus(2, 5)
    conf = Configuration.empty(geom)
    conf[(0, 0)] = 1
    moved = translate(conf, unit(0, 2))
    assert moved.empty_sites() != conf.empty_sites()
    assert moved[(4, 0)] == 1 and moved.n_particles == 1


@given(st.integers(0, 2**32 - 1), st.integers(-7, 7), st.integers(-7, 7))
def test_translate_is_a_count_preserving_bijection(seed, a, b):
    conf = random_config(seed)
    moved = translate(conf, (a, b))
    assert moved.n_particles == conf.n_particles
    assert translate(moved, (-a, -b)) == conf
    assert moved[(0, 0)] == conf[conf.geometry.canonical((a, b))]


def test_window_exterior_reads_occupied():
    conf = Configuration.empty(Window.box(1, 2))
    assert conf[(5, 0)] == 1 and conf[(0, 0)] == 0


@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(3, 6), st.integers(1, 3))
def test_snapshot_round_trip(seed, d, N, k):
    conf = random_config(seed, d=d, N=N)
    text = format_snapshot(conf, k)
    assert parse_snapshot(text) == (conf, k)
    buf = io.StringIO()
    write_snapshot(conf, k, buf)
    buf.seek(0)
    assert read_snapshot(buf) == (conf, k)


def test_snapshot_rejects_malformed_input():
    with pytest.raises(ValueError):
        parse_snapshot("2 3 2\n010\n01\n")
    with pytest.raises(ValueError):
        parse_snapshot("x y z\n")
