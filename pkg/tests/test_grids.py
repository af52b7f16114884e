import numpy as np
import pytest

from qcenergy.errors import ConfigurationError
from qcenergy.grids import build_grid, disk_grid, half_plane_grid, rectangle_grid


def test_disk_area_converges_to_pi():
    g = disk_grid(64)
    assert abs(g.area - np.pi) / np.pi < 0.03
    finer = disk_grid(256)
    assert abs(finer.area - np.pi) < abs(g.area - np.pi)


def test_rectangle_area_exact():
    g = rectangle_grid(32)
    assert g.area == 1.0


def test_half_plane_band_area_and_count():
    g = half_plane_grid(256, X=10, y_min=0.01, Y=10)
    assert np.isclose(g.area, 2 * 10 * 9.99)
    assert g.inside.sum() == 256 * 256


def test_invalid_extents_rejected():
    with pytest.raises(ConfigurationError):
        build_grid("half-plane", 32, (10.0, 5.0, 1.0))   # y_min >= Y
    with pytest.raises(ConfigurationError):
        build_grid("half-plane", 32, (-1.0, 0.1, 5.0))   # X <= 0
    with pytest.raises(ConfigurationError):
        build_grid("rectangle", 32, (1.0, 0.0, 0.0, 1.0))
    with pytest.raises(ConfigurationError):
        build_grid("disk", 4)
    with pytest.raises(ConfigurationError):
        build_grid("torus", 32)


def test_cell_area_positive_and_ordering_deterministic():
    g = disk_grid(32)
    assert g.cell_area > 0
    g2 = disk_grid(32)
    assert np.array_equal(g.zz, g2.zz)
    assert np.array_equal(g.inside, g2.inside)


def test_interior_nodes_have_full_stencils():
    g = disk_grid(48)
    interior = g.interior_mask(4)
    inside = g.inside
    # every interior node has both 1- and 2-offset neighbors inside, per axis
    for ax in (0, 1):
        for k in (1, 2, -1, -2):
            shifted = np.roll(inside, -k, axis=ax)
            if k > 0:
                if ax == 0:
                    shifted[-k:, :] = False
                else:
                    shifted[:, -k:] = False
            else:
                if ax == 0:
                    shifted[:(-k), :] = False
                else:
                    shifted[:, :(-k)] = False
            assert np.all(shifted[interior])


def test_boundary_mask_is_inside_ring():
    g = disk_grid(48)
    b = g.boundary_mask()
    assert np.all(g.inside[b])
    # ring nodes are near the circle
    assert np.all(np.abs(g.zz[b]) > 1 - 3 * g.hx)
