import numpy as np
import pytest
from hypothesis import given, strategies as st

from kclg.dynamics import ModelParams
from kclg.hydro import DiffusionTable, coarse_grain, empirical_profile, pde_solve, run_hydro_experiment
from kclg.lattice import Configuration, DensityProfile, Torus


def cosine(mean, amp, res=256, d=1):
    return DensityProfile.from_function(lambda th: mean + amp * np.cos(2 * np.pi * th), res, d, axis=0)


def test_profile_of_full_and_empty_torus():
    geom = Torus(2, 8)
    assert np.all(empirical_profile(Configuration.full(geom), 4).values == 1)
    assert np.all(empirical_profile(Configuration.empty(geom), 4, axis=0).values == 0)


def test_single_particle_one_bin_per_site():
    conf = Configuration.empty(Torus(2, 6))
    conf[(2, 3)] = 1
    prof = empirical_profile(conf, 6).values
    assert prof.sum() == 1 and prof[2, 3] == 1


def test_bins_must_divide_the_side():
    with pytest.raises(ValueError):
        empirical_profile(Configuration.full(Torus(2, 6)), 4)


def test_constant_initial_state_stays_constant():
    sol = pde_solve(DensityProfile.constant(0.3, 1), DiffusionTable.constant(1.0), 0.1, 64)
    assert np.allclose(sol.states[-1], 0.3, atol=1e-14)


def test_cosine_mode_decays_like_the_heat_kernel():
    t = 0.05
    sol = pde_solve(cosine(0.5, 0.1), DiffusionTable.constant(1.0), t, 256)
    amp = 2 * abs(np.fft.rfft(sol.states[-1])[1]) / 256
    assert abs(amp - 0.1 * np.exp(-4 * np.pi**2 * t)) < 1e-3


def test_pde_mass_is_conserved():
    D = DiffusionTable.from_function(lambda r: 0.2 + r * r)
    sol = pde_solve(cosine(0.5, 0.3, 64, 2), D, 0.02, 64, output_times=np.linspace(0, 0.02, 6))
    assert np.ptp(sol.masses) < 1e-12


@given(st.floats(0.0, 0.2), st.floats(0.0, 0.2), st.floats(0.0, 0.3))
def test_pde_comparison_principle(delta, amp, bump):
    D = DiffusionTable.from_function(lambda r: 0.1 + r)
    lo = cosine(0.4, amp, 64).values.ravel()
    hi = lo + delta + bump * (np.arange(64) < 16)
    hi = np.clip(hi, 0, 1)
    times = [0.001, 0.005, 0.01]
    a = pde_solve(lo, D, 0.01, 64, output_times=times)
    b = pde_solve(hi, D, 0.01, 64, output_times=times)
    for sa, sb in zip(a.states, b.states):
        assert np.all(sa <= sb + 1e-8)


def test_diffusion_table_interpolates():
    tab = DiffusionTable.from_points([0.0, 1.0], [1.0, 3.0])
    assert tab(0.25) == pytest.approx(1.5)
    with pytest.raises(ValueError):
        DiffusionTable(np.zeros(10))


def test_coarse_grain_averages_cells():
    assert coarse_grain(np.arange(8.0), 2).tolist() == [1.5, 5.5]


def test_flat_start_gives_flat_profiles():
    N, bins, reps = 32, 4, 4
    res = run_hydro_experiment(ModelParams(2, 1), N, DensityProfile.constant(0.5, 2), [0.01], reps, bins, 3)
    se = np.sqrt(0.25 / (N * N / bins * reps))
    assert np.all(np.abs(res.empirical - 0.5) < 5 * se)
    assert res.summary()["mass_conserved"]


def test_diffusive_scaling_leaves_profiles_unchanged():
    prof = cosine(0.5, 0.2, 64, 2)
    bins, reps, t = 8, 8, 0.01
    out = {}
    for N in (32, 64):
        res = run_hydro_experiment(ModelParams(2, 1), N, prof, [t], reps, bins, 100 + N)
        out[N] = res.empirical[0]
    se = np.sqrt(sum(0.25 / (N * N / bins * reps) for N in (32, 64)))
    rms = np.sqrt(np.mean(((out[32] - out[64]) / se) ** 2))
    assert rms < 2


def test_blocked_start_stays_frozen():
    prof = DensityProfile.from_function(lambda th: 17 / 18 + 0.05 * np.cos(2 * np.pi * th), 18, 2, axis=0)
    with pytest.warns(UserWarning):
        res = run_hydro_experiment(ModelParams(2, 2, 0.0), 18, prof, [0.0, 0.01, 0.05], 2, 6, 4, initial="blocked")
    assert np.array_equal(res.empirical[0], res.empirical[1])
    assert np.array_equal(res.empirical[0], res.empirical[2])
    assert res.l1[2] > res.l1[0]
    assert res.summary()["mass_conserved"]


def test_csv_and_summary_layout():
    res = run_hydro_experiment(ModelParams(2, 1), 16, cosine(0.5, 0.1, 16, 2), [0.01, 0.02], 2, 4, 0)
    lines = res.profiles_csv().splitlines()
    assert lines[0] == "t,bin_index,density" and len(lines) == 1 + 2 * 4
    assert set(res.summary()) >= {"l1", "l2", "mass_conserved", "warnings"}


def test_worker_count_does_not_change_results():
    args = (ModelParams(2, 1), 16, cosine(0.5, 0.1, 16, 2), [0.01], 3, 4, 9)
    a = run_hydro_experiment(*args, workers=1)
    b = run_hydro_experiment(*args, workers=2)
    assert np.array_equal(a.empirical, b.empirical)
