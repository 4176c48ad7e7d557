import os

import numpy as np
import pytest

from kpc.config import load_scenario
from kpc.export import (csv_bytes, export_csv, export_pgm, pgm_bytes, read_csv, read_pgm,
                        table_bytes)
from kpc.geometry import component_mask, half_plane_mask
from kpc.kernel import field_f_grid
from kpc.model import GridSpec, ScalarField
from kpc.regularization import FLOOR, regularize_field

GOLDEN = os.path.join(os.path.dirname(__file__), "golden")


def test_zero_field_csv():
    fld = ScalarField(GridSpec(0, 2, 0, 2, 2, 2), np.zeros(4))
    lines = csv_bytes(fld).decode().split("\n")
    assert lines[0] == "x,y,f,F,mask"
    assert lines[1:5] == ["0.5,0.5,0,0,0", "1.5,0.5,0,0,0", "0.5,1.5,0,0,0", "1.5,1.5,0,0,0"]
    assert lines[5] == ""
    assert b"\r" not in csv_bytes(fld)


def test_masked_cell_flag():
    fld = ScalarField(GridSpec.square(1, 2), [-np.inf, 1, 2, 3], [True, False, False, False])
    row = csv_bytes(fld).decode().split("\n")[1].split(",")
    assert row[2] == "-inf" and row[4] == "1"
    assert float(row[3]) == FLOOR


def test_csv_round_trip_bits(tmp_path, fig7):
    fld = field_f_grid(fig7, GridSpec.square(5, 30), 0.0)
    p = tmp_path / "f.csv"
    export_csv(fld, p)
    back = read_csv(p)
    assert back["f"].tobytes() == fld.values.ravel().tobytes()
    assert np.array_equal(back["mask"], fld.mask.ravel())
    assert back["F"].tobytes() == regularize_field(fld).values.ravel().tobytes()


def test_two_pixel_extremes():
    fld = ScalarField(GridSpec(0, 2, 0, 1, 2, 1), [-3.0, 7.0])
    assert pgm_bytes(fld).endswith(bytes([0, 255]))


def test_constant_field_with_range():
    fld = ScalarField(GridSpec.square(1, 3), np.full(9, 0.5))
    data = pgm_bytes(fld, (0.0, 1.0))
    assert data.startswith(b"P5\n3 3\n255\n")
    assert set(data[-9:]) == {128}


def test_degenerate_range_warns_mid_gray():
    fld = ScalarField(GridSpec.square(1, 2), np.ones(4))
    with pytest.warns(RuntimeWarning):
        data = pgm_bytes(fld)
    assert set(data[-4:]) == {128}


def test_top_row_is_max_y_and_mask_black(tmp_path):
    vals = [[0.0, 0.0], [1.0, -np.inf]]  # row 1 is the larger y
    fld = ScalarField(GridSpec.square(1, 2), vals, [[False, False], [False, True]])
    export_pgm(fld, tmp_path / "a.pgm")
    img = read_pgm(tmp_path / "a.pgm")
    np.testing.assert_array_equal(img, [[255, 0], [0, 0]])


def test_clamping_outside_range():
    fld = ScalarField(GridSpec(0, 3, 0, 1, 3, 1), [-5.0, 0.5, 5.0])
    assert pgm_bytes(fld, (0.0, 1.0))[-3:] == bytes([0, 128, 255])


def test_table_formatting():
    assert table_bytes(("a", "b"), [(1, 0.1)]) == b"a,b\n1,0.10000000000000001\n"


def _golden(name):
    with open(os.path.join(GOLDEN, name), "rb") as fh:
        return fh.read()


def test_fig01_heightmap_golden():
    c = load_scenario("fig01")
    fld = field_f_grid(c.spec, c.grid, 0.0)
    assert pgm_bytes(regularize_field(fld)) == _golden("fig01.pgm")


def test_fig02_half_golden():
    c = load_scenario("fig01")
    fld = regularize_field(field_f_grid(c.spec, c.grid, 0.0))
    cm = component_mask(c.spec, c.grid, 0.0)
    assert pgm_bytes(cm.restrict(fld, cm.largest()[0])) == _golden("fig02_half.pgm")


def test_fig15_upper_half_golden():
    c = load_scenario("fig14")
    fld = regularize_field(field_f_grid(c.spec, c.grid, 0.0))
    hp = half_plane_mask(c.grid, (0.0, 0.0), (0.0, 1.0))
    assert pgm_bytes(hp.restrict(fld, 1)) == _golden("fig15_upper.pgm")


def test_write_error_names_path(tmp_path):
    fld = ScalarField(GridSpec.square(1, 2), np.zeros(4))
    bad = tmp_path / "missing" / "x.csv"
    with pytest.raises(OSError, match="missing"):
        export_csv(fld, bad)
