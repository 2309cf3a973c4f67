import numpy as np
import pytest

# Local Imports
from shrinklab.core.exceptions import ParseError
from shrinklab.utils.utils import (
    VERSION_LINE,
    csv_lines,
    format_value,
    read_curve_csv,
    read_obj,
    write_csv,
    write_obj,
)


def test_read_obj_accepts_comments_and_one_based_faces(tmp_path):
    path = tmp_path / "tri.obj"
    path.write_text("# triángulo\nv 0 0 0\nv 1 0 0\n\nv 0 1 0\nf 1 2 3\n")
    vertices, faces = read_obj(path)
    assert vertices.shape == (3, 3)
    assert faces.tolist() == [[0, 1, 2]]


def test_read_obj_rejects_unsupported_lines(tmp_path):
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nvn 0 0 1\n")
    with pytest.raises(ParseError, match="2"):
        read_obj(path)


def test_read_obj_rejects_bad_numbers_and_zero_index(tmp_path):
    bad_number = tmp_path / "number.obj"
    bad_number.write_text("v 0 x 0\n")
    with pytest.raises(ParseError):
        read_obj(bad_number)
    zero = tmp_path / "zero.obj"
    zero.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n")
    with pytest.raises(ParseError):
        read_obj(zero)


def test_read_obj_missing_file(tmp_path):
    with pytest.raises(ParseError):
        read_obj(tmp_path / "nothing.obj")


def test_write_obj_starts_with_version_line(tmp_path):
    path = write_obj(tmp_path / "out.obj", np.eye(3), np.array([[0, 1, 2]]))
    lines = path.read_text().splitlines()
    assert lines[0] == VERSION_LINE
    assert lines[-1] == "f 1 2 3"
    vertices, faces = read_obj(path)
    assert np.array_equal(vertices, np.eye(3))


def test_read_curve_csv_with_header_and_planar_rows(tmp_path):
    path = tmp_path / "curve.csv"
    path.write_text("# comentario\nx,y\n0,0\n1,0\n0,1\n")
    points = read_curve_csv(path)
    assert points.shape == (3, 2)


def test_read_curve_csv_errors(tmp_path):
    mixed = tmp_path / "mixed.csv"
    mixed.write_text("0,0\n1,0,0\n")
    with pytest.raises(ParseError, match="dimensión"):
        read_curve_csv(mixed)
    garbage = tmp_path / "garbage.csv"
    garbage.write_text("0,0\n1,abc\n")
    with pytest.raises(ParseError):
        read_curve_csv(garbage)
    empty = tmp_path / "empty.csv"
    empty.write_text("x,y,z\n")
    with pytest.raises(ParseError):
        read_curve_csv(empty)


def test_format_value_is_stable():
    assert format_value(True) == "true"
    assert format_value(np.bool_(False)) == "false"
    assert format_value(3) == "3"
    assert format_value(0.1 + 0.2) == "0.3"
    assert format_value(None) == ""


def test_write_csv_matches_csv_lines(tmp_path):
    rows = [[1, 2.5, True], [2, float("inf"), False]]
    path = write_csv(tmp_path / "t.csv", ["a", "b", "c"], rows)
    assert path.read_text().splitlines() == csv_lines(["a", "b", "c"], rows)
