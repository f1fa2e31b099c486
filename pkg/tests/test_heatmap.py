import numpy as np
import pytest

from taf.errors import ParameterError
from taf.heatmap import TRUNCATE, render_frame, render_gaussian, render_stack

GRID = (64, 116)


def test_peak_and_sigma_distance():
    g = render_gaussian((32, 58), 2.0)
    assert g[32, 58] == 1.0
    assert g[32, 60] == pytest.approx(np.exp(-0.5))
    assert g.max() == 1.0


def test_off_grid_center_peaks_at_nearest_cell():
    g = render_gaussian((10.3, 20.8), 2.0)
    assert np.unravel_index(g.argmax(), g.shape) == (10, 21)
    assert g.max() == 1.0


@pytest.mark.parametrize("sigma", [1.5, 2.0, 3.0])
def test_mass_matches_quadrature(sigma):
    g = render_gaussian((32, 58), sigma)
    # direct summation of the analytic Gaussian over the same lattice
    r, c = np.mgrid[0:64, 0:116]
    direct = np.exp(-((r - 32) ** 2 + (c - 58) ** 2) / (2 * sigma**2)).sum()
    assert g.sum() == pytest.approx(direct, rel=1e-3)
    assert g.sum() == pytest.approx(2 * np.pi * sigma**2, rel=0.01)


def test_truncation():
    g = render_gaussian((32, 58), 2.0)
    r, c = np.mgrid[0:64, 0:116]
    far = (r - 32) ** 2 + (c - 58) ** 2 > (TRUNCATE * 2.0) ** 2
    assert (g[far] == 0).all()


@pytest.mark.parametrize("sigma", [0.0, -1.0])
def test_bad_sigma(sigma):
    with pytest.raises(ParameterError):
        render_gaussian((3, 3), sigma)


def test_out_of_grid_center():
    with pytest.raises(ParameterError):
        render_gaussian((64, 3), 2.0)


def test_coincident_joints():
    f = render_frame(np.tile([[20.0, 30.0]], (10, 1)))
    np.testing.assert_array_equal(f[10], f[0])


def test_two_distant_joints_two_peaks():
    pts = np.tile([[10.0, 10.0]], (10, 1))
    pts[5] = [50.0, 100.0]
    f = render_frame(pts)
    assert f[10][10, 10] == 1.0 and f[10][50, 100] == 1.0


def test_background_is_max_bit_equal():
    rng = np.random.default_rng(0)
    coords = rng.uniform([0, 0], [63.99, 115.99], size=(5, 10, 2))
    stack = render_stack(coords)
    assert stack.shape == (5, 11, 64, 116)
    brute = stack[:, 0].copy()
    for j in range(1, 10):
        brute = np.where(stack[:, j] > brute, stack[:, j], brute)
    np.testing.assert_array_equal(stack[:, 10], brute)
    for j in range(10):
        assert (stack[:, 10] >= stack[:, j]).all()
    assert stack.min() >= 0 and stack.max() <= 1


def test_translation_equivariance():
    a = render_gaussian((30.4, 50.7), 2.0)
    b = render_gaussian((33.4, 45.7), 2.0)
    np.testing.assert_allclose(b[13:50, 10:100], a[10:47, 15:105], atol=1e-15)


def test_frame_matches_single_renders():
    rng = np.random.default_rng(1)
    pts = rng.uniform([0, 0], [63, 115], size=(10, 2))
    f = render_frame(pts)
    for j in range(10):
        np.testing.assert_array_equal(f[j], render_gaussian(pts[j], 2.0))
