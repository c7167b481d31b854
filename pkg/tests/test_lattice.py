import numpy as np
import pytest

from maglab.fields import Domain
from maglab.lattice import build_lattice, coverage_defect, dump_csv


def test_unit_square_lattice_count():
    dom = Domain.square(1.0, h=1 / 32)
    lat = build_lattice(dom, 0.25)
    # centers 0.25 m with the open square inside (0,1): m in {1,2,3}
    assert lat.count == 9
    assert abs(coverage_defect(lat) - (1.0 - 9 / 16)) < 1e-12


def test_lattice_cells_inside_domain():
    dom = Domain.disk((0.0, 0.0), 1.0, h=1 / 32)
    lat = build_lattice(dom, 0.2)
    assert lat.count > 0
    for cell in lat.cells():
        cx, cy = cell.center
        half = cell.size / 2
        corners_x = np.array([cx - half, cx + half, cx + half, cx - half])
        corners_y = np.array([cy - half, cy - half, cy + half, cy + half])
        assert np.all(dom.signed_distance(corners_x, corners_y) >= -1e-9)
    assert coverage_defect(lat) >= 0.0


def test_lattice_avoids_holes():
    dom = Domain.annulus((0, 0), 1.0, holes=[(0.0, 0.0, 0.25)], h=1 / 32)
    lat = build_lattice(dom, 0.2)
    for cx, cy in lat.centers:
        # nearest point of the cell to the hole center stays outside it
        dx = max(abs(cx) - 0.1, 0.0)
        dy = max(abs(cy) - 0.1, 0.0)
        assert np.hypot(dx, dy) >= 0.25 - 1e-9
    full = build_lattice(dom.outer(), 0.2)
    assert lat.count < full.count


def test_lattice_determinism_and_validation():
    dom = Domain.square(1.0, h=1 / 16)
    a = build_lattice(dom, 0.125)
    b = build_lattice(dom, 0.125)
    assert a.centers == b.centers
    with pytest.raises(ValueError):
        build_lattice(dom, 0.0)


def test_dump_csv(tmp_path):
    dom = Domain.square(1.0, h=1 / 16)
    lat = build_lattice(dom, 0.25)
    path = tmp_path / "lattice.csv"
    dump_csv(lat, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "m,n,cx,cy"
    assert len(lines) == lat.count + 1
