import json

import numpy as np
import pytest

from ancientflow.errors import AncientFlowError
from ancientflow.io import dumps, fmt, parse_curve, read_curve, write_csv, write_curve

from conftest import circle


def test_fmt_uses_17_digits():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(3) == "3"
    assert fmt(True) == "true"
    assert fmt(float("nan")) == "NaN"


def test_dumps_sorted_and_stable():
    text = dumps({"b": 1.0 / 3.0, "a": [1, 2], "c": np.array([0.5])})
    assert text == '{"a": [1, 2], "b": 0.33333333333333331, "c": [0.5]}'
    assert json.loads(text)["b"] == 1.0 / 3.0


def test_curve_round_trip_is_exact(tmp_path):
    c = circle(40, radius=np.pi).with_points(circle(40, radius=np.pi).points, label="x")
    path = tmp_path / "c.json"
    write_curve(path, c)
    back = read_curve(path)
    np.testing.assert_array_equal(back.points, c.points)
    assert back.metadata == {"label": "x"}
    assert back.param_period == c.param_period


@pytest.mark.parametrize("text, fragment", [
    ('{"points": [[0, 1], [1, 0]', "line 1"),
    ("[1, 2]", "top level"),
    ('{"points": []}', "non-empty"),
    ('{"pts": []}', "unknown field"),
    ('{"points": [[0, 0], [1]]}', "points[1]"),
    ('{"points": [[0, 0], [1, "a"]]}', "points[1][1]"),
    ('{"points": [[0, 0], [1, 1]], "param_period": -1}', "param_period"),
    ('{"points": [[0, 0], [1, 1]]}', "field 'points'"),
])
def test_bad_files_are_diagnosed(text, fragment):
    with pytest.raises(AncientFlowError) as exc:
        parse_curve(text, "f.json")
    assert exc.value.code == "bad-curve-file"
    assert fragment in str(exc.value)


def test_multiline_error_reports_line():
    text = '{\n "points": [\n  [0, 1],\n  [1, 0],,\n ]\n}'
    with pytest.raises(AncientFlowError) as exc:
        parse_curve(text)
    assert "line 4" in str(exc.value)


def test_csv(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ["a", "b"], [[1, 0.1], [2, "x"]])
    assert path.read_text() == "a,b\n1,0.10000000000000001\n2,x\n"
