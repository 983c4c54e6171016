import numpy as np
import pytest
from hypothesis import given, strategies as st

from kclg.dynamics import constraint
from kclg.lattice import Configuration, Torus, Window
from kclg.nongradient import (
    CapReached,
    ConstraintRule,
    KARule,
    MalformedMove,
    MoveSequence,
    construct_witness,
    current_sum,
    e_stretch,
    leftward_allowed,
    reachable_configurations,
    validate_move_family,
    validate_multistep_move,
    verify_mobile_cluster,
    witness_seed,
)

seeds = st.integers(0, 2**32 - 1)
WIN = Window.box(3, 2)
E1 = (1, 0)


class Unconstrained(ConstraintRule):
    def __call__(self, occ_at, x, y):
        return True


def move(empty, steps, win=WIN):
    return MoveSequence.build(Configuration.from_empty_sites(win, empty), steps)


# -- multistep moves


def test_empty_sequence_is_valid_with_zero_loss():
    chk = validate_multistep_move(move([(0, 0)], []), 2)
    assert chk.valid and chk.loss == 0
    assert validate_move_family([move([(0, 0)], [])], 2).loss == 0


def test_swap_on_empty_window_is_valid():
    win = Window.box(1, 2)
    seq = MoveSequence.build(Configuration.empty(win), [((0, 0), E1)])
    assert validate_multistep_move(seq, 2).valid


def test_swap_on_full_window_fails_the_constraint():
    seq = MoveSequence.build(Configuration.full(WIN), [((0, 0), E1)])
    chk = validate_multistep_move(seq, 2)
    assert not chk.valid and chk.failed_step == 1 and "constraint" in chk.reason


def test_tampered_configuration_is_detected():
    seq = move([(0, 0)], [((0, 0), E1)])
    seq.configurations[1] = seq.configurations[0].copy()
    assert not validate_multistep_move(seq, 1).valid


def test_start_must_match_eta():
    seq = move([(0, 0)], [((0, 0), E1)])
    assert not validate_multistep_move(seq, 1, eta=Configuration.full(WIN)).valid


def test_malformed_moves_raise():
    with pytest.raises(MalformedMove):
        move([(0, 0)], [((0, 0), (2, 0))])
    with pytest.raises(MalformedMove):
        move([(0, 0)], [((3, 0), E1)])
    with pytest.raises(MalformedMove):
        validate_move_family([move([(0, 0)], []), move([(0, 0)], [])], 1)
    with pytest.raises(MalformedMove):
        validate_move_family([move([(0, 0)], []), move([(1, 0)], [((0, 0), E1)])], 1)


def test_injective_family_has_zero_loss():
    family = [move([(a, b)], [((a, b), E1)]) for a in range(-3, 3) for b in range(-3, 4)]
    chk = validate_move_family(family, 1)
    assert chk.valid and chk.loss == 0 and chk.max_bucket == 1


def test_merging_family_loses_one_bit():
    family = [
        move([(0, 0)], [((0, 0), E1), ((1, 0), (0, 0))]),
        move([(2, 0)], [((1, 0), E1), ((1, 0), (0, 0))]),
    ]
    chk = validate_move_family(family, 1)
    assert chk.valid and chk.loss == 1.0


# -- reachability


def test_full_window_reaches_only_itself():
    rep = reachable_configurations(Configuration.full(WIN), 2)
    assert rep.reachable_count == 1 and rep.reachable_sites == set()


def test_single_vacancy_is_stuck_for_k2():
    rep = reachable_configurations(Configuration.from_empty_sites(WIN, [(0, 0)]), 2)
    assert len(rep.states) == 1 and not rep.cap_hit


def test_single_vacancy_walks_everywhere_for_k1():
    win = Window.box(2, 2)
    rep = reachable_configurations(Configuration.from_empty_sites(win, [(0, 0)]), 1)
    confs = rep.configurations()
    assert len(confs) == win.n_sites
    assert all(c.n_particles == win.n_sites - 1 for c in confs)
    assert rep.reachable_sites == set(win.sites())


def test_cap_is_reported_not_hidden():
    rep = reachable_configurations(Configuration.from_empty_sites(WIN, [(0, 0)]), 1, cap=3)
    assert rep.cap_hit and rep.explored == 3


def random_small_window(seed, n_empty):
    g = np.random.default_rng(seed)
    win = Window.box(1, 2)
    sites = list(win.sites())
    idx = g.choice(len(sites), size=n_empty, replace=False)
    return Configuration.from_empty_sites(win, [sites[i] for i in idx])


@given(seeds, st.integers(1, 5), st.sampled_from([1, 2]))
def test_connectivity_is_symmetric(seed, n_empty, k):
    eta = random_small_window(seed, n_empty)
    rep = reachable_configurations(eta, k)
    for other in rep.configurations()[:8]:
        assert reachable_configurations(other, k).contains(eta)


@given(seeds, st.integers(1, 5), st.sampled_from([1, 2]), st.sampled_from([(1, 0), (0, -1)]))
def test_e_connected_is_a_subset_of_connected(seed, n_empty, k, e):
    eta = random_small_window(seed, n_empty)
    assert reachable_configurations(eta, k, "e-connected", e).states <= reachable_configurations(eta, k).states


def test_single_vacancy_has_zero_stretch_for_k2():
    assert e_stretch([(0, 0)], E1, 2) == 0


def test_single_vacancy_stretch_hits_the_window_edge_for_k1():
    assert e_stretch([(0, 0)], E1, 1, radius=5) == 5


def test_stretch_rejects_empty_set():
    with pytest.raises(ValueError):
        e_stretch([], E1, 2)


def test_stretch_cap_is_tri_state():
    out = e_stretch([(0, 0)], E1, 1, radius=5, cap=2)
    assert isinstance(out, CapReached) and out.lower_bound >= 0


@given(st.lists(st.tuples(st.integers(-2, 2), st.integers(-2, 2)), min_size=1, max_size=4, unique=True),
       st.sampled_from([1, 2]))
def test_stretch_at_least_the_initial_extent(A, k):
    out = e_stretch(A, E1, k, radius=3, cap=20000)
    value = out.lower_bound if isinstance(out, CapReached) else out
    assert value >= max(a for a, _ in A)


# -- mobile clusters


def test_single_vacancy_is_mobile_for_k1():
    rep = verify_mobile_cluster([(0, 0)], 1)
    assert rep.is_mobile and rep.condition1 and rep.edge_coverage


def test_single_vacancy_is_not_mobile_for_k2():
    rep = verify_mobile_cluster([(0, 0)], 2)
    assert rep.condition1 is False and rep.is_mobile is False


@given(st.lists(st.tuples(st.integers(-1, 1), st.integers(-1, 1)), min_size=1, max_size=5, unique=True))
def test_no_finite_vacancy_set_is_mobile_for_k2(A):
    # vacancies never leave the bootstrap span of A, so no translate is reachable
    rep = verify_mobile_cluster(A, 2, cap=200000)
    assert rep.condition1 is False


def test_mobile_cluster_rejects_empty_set():
    with pytest.raises(ValueError):
        verify_mobile_cluster([], 1)


# -- current sums and the witness


def random_torus(seed, N=5, d=2):
    g = np.random.default_rng(seed)
    geom = Torus(d, N)
    return Configuration(geom, (g.random(geom.shape) < g.random()).astype(np.uint8))


@given(seeds)
def test_current_sum_vanishes_for_k1(seed):
    conf = random_torus(seed)
    assert current_sum(conf, 1).tolist() == [0, 0]
    assert current_sum(conf, Unconstrained()).tolist() == [0, 0]


@given(seeds, st.sampled_from([2]))
def test_current_sum_against_edge_loop(seed, k):
    conf = random_torus(seed, N=6)
    geom = conf.geometry
    expected = np.zeros(2, dtype=int)
    for x in np.ndindex(*geom.shape):
        for a in range(2):
            y = list(x)
            y[a] = (y[a] + 1) % geom.N
            y = tuple(y)
            expected[a] += (conf[x] - conf[y]) * constraint(conf, (x, y), k)
    assert current_sum(conf, k).tolist() == expected.tolist()


def test_current_sum_of_full_torus_is_zero():
    assert current_sum(Configuration.full(Torus(2, 6)), 2).tolist() == [0, 0]


def test_witness_seed_for_k2_d2():
    assert sorted(witness_seed(2, 2)) == [(-1, 0), (0, 0), (1, -1)]


@pytest.mark.parametrize("d", [2, 3])
def test_witness_has_positive_current_and_no_rightward_vacancy_move(d):
    conf, rep = construct_witness(2, d, N=24 if d == 3 else None)
    assert current_sum(conf, 2)[0] >= 1
    assert len(leftward_allowed(conf, 2)) >= 1
    geom = conf.geometry
    rule = KARule(2)
    for v in conf.empty_sites():
        y = geom.canonical((v[0] + 1,) + tuple(v[1:]))
        assert not (conf[y] == 1 and constraint(conf, (v, y), 2))
    assert rep.steps == len(rep.moves) and rule.k == 2


def test_witness_is_deterministic():
    a, ra = construct_witness(2, 2)
    b, rb = construct_witness(2, 2)
    assert a == b and ra.moves == rb.moves


def test_witness_rejects_k1():
    with pytest.raises(ValueError, match="gradient"):
        construct_witness(1, 2)
