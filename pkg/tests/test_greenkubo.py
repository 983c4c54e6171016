import warnings

import numpy as np
import pytest

from kclg.diffusion import green_kubo_estimate
from kclg.diffusion.greenkubo import _second_moments, minimal_image
from kclg.dynamics import ModelParams

SSEP = ModelParams(2, 1, 0.0, 0.5)


def test_minimal_image_range():
    assert minimal_image(4).tolist() == [0, 1, -2, -1]
    assert minimal_image(5).tolist() == [0, 1, 2, -2, -1]


def test_second_moments_of_a_point_mass():
    h = np.zeros((6, 6))
    h[2, 5] = 1.0  # displacement (2, -1)
    assert _second_moments(h, 6).tolist() == [[4.0, -2.0], [-2.0, 1.0]]


@pytest.fixture(scope="module")
def small_run():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return green_kubo_estimate(SSEP, 16, 3.0, 4, 7, n_origins=200)


def test_ssep_current_route_near_one(small_run):
    diag = small_run.D_current[:, [0, 1], [0, 1]]
    se = small_run.D_current_stderr[:, [0, 1], [0, 1]]
    assert np.all(np.abs(diag - 1) < 5 * se + 0.05)


def test_ssep_correlation_route_is_consistent(small_run):
    diag = small_run.D[:, [0, 1], [0, 1]]
    se = small_run.D_stderr[:, [0, 1], [0, 1]]
    assert np.all(np.abs(diag - 1) < 5 * se + 0.1)


def test_matrix_is_symmetric(small_run):
    assert np.allclose(small_run.D, np.transpose(small_run.D, (0, 2, 1)))


def test_csv_layout(small_run):
    lines = small_run.to_csv().splitlines()
    assert lines[0].startswith("t,D11,D11_se,D12") and len(lines) == 4


def test_displacement_warning():
    with pytest.warns(UserWarning):
        res = green_kubo_estimate(SSEP, 8, 3.0, 1, 0, n_origins=5)
    assert res.displacement_warning


def test_results_do_not_depend_on_worker_count():
    kw = dict(n_origins=20)
    a = green_kubo_estimate(SSEP, 12, 2.0, 3, 11, workers=1, **kw)
    b = green_kubo_estimate(SSEP, 12, 2.0, 3, 11, workers=2, **kw)
    assert np.array_equal(a.D, b.D) and np.array_equal(a.D_current, b.D_current)


def test_needs_density():
    with pytest.raises(ValueError):
        green_kubo_estimate(ModelParams(2, 1), 12, 2.0, 1, 0)
