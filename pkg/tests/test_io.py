import numpy as np
import pytest

from motsink import DiscreteMeasure, MeasureFileError
from motsink.io import (read_grid_file, read_measure_file, read_series_file, write_grid_file,
                        write_measure_file, write_series_file)


def test_measure_roundtrip(tmp_path, rng):
    w = rng.random(7)
    m = DiscreteMeasure(rng.standard_normal((7, 2)), w / w.sum())
    path = tmp_path / "m.txt"
    write_measure_file(path, m)
    back = read_measure_file(path)
    np.testing.assert_array_equal(back.points, m.points)
    np.testing.assert_array_equal(back.weights, m.weights)


def test_measure_commas_and_comments(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("# d=1 n=2\n0.0, 0.5\n# note\n\n1.0,0.5\n")
    m = read_measure_file(path)
    assert m.n == 2 and m.dim == 1


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("d=1 n=1\n0 1\n", 1),
    ("# d=1 n=1\n0 1 2\n", 2),
    ("# d=1 n=2\n0 0.5\nx 0.5\n", 3),
    ("# d=1 n=1\n0 -1\n", 2),
    ("# d=1 n=2\n0 1\n", None),
    ("# d=1 n=1\n0 0.7\n", None),
])
def test_measure_errors(tmp_path, text, line):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(MeasureFileError) as info:
        read_measure_file(path)
    assert info.value.line == line


def test_missing_file(tmp_path):
    with pytest.raises(MeasureFileError):
        read_measure_file(tmp_path / "absent.txt")


def test_grid_roundtrip(tmp_path, rng):
    A = rng.random((3, 4))
    write_grid_file(tmp_path / "g", A)
    np.testing.assert_array_equal(read_grid_file(tmp_path / "g"), A)
    (tmp_path / "h").write_text("# 2 2\n1 2\n3\n")
    with pytest.raises(MeasureFileError):
        read_grid_file(tmp_path / "h")


def test_series_roundtrip(tmp_path):
    write_series_file(tmp_path / "s", ("n", "t"), [(1, 0.5), (2, 0.25)])
    cols, rows = read_series_file(tmp_path / "s")
    assert cols == ["n", "t"] and rows == [[1.0, 0.5], [2.0, 0.25]]
