"""Deterministic serialization: JSON, CSV, binary snapshots."""

import math

import numpy as np

import resonance_lab as rl
from resonance_lab.reporting import (
    csv_cell,
    json_dumps,
    read_snapshots,
    write_csv,
    write_snapshots,
)


def test_json_float_formatting():
    text = json_dumps({"x": 1.0 / 3.0})
    assert '"x": 0.33333333333333331' in text


def test_json_sorted_keys_and_nesting():
    a = json_dumps({"b": 1, "a": {"d": [1.5, 2], "c": None}})
    b = json_dumps({"a": {"c": None, "d": [1.5, 2]}, "b": 1})
    assert a == b
    assert a.index('"a"') < a.index('"b"')


def test_json_special_values():
    text = json_dumps({"nan": math.nan, "inf": math.inf, "flag": True})
    assert '"nan": null' in text
    assert '"inf": "inf"' in text
    assert '"flag": true' in text


def test_json_parses_back():
    import json

    payload = {"vals": [0.1, 2.0**-40], "n": 3, "s": "a\nb"}
    parsed = json.loads(json_dumps(payload))
    assert parsed["vals"] == [0.1, 2.0**-40]
    assert parsed["s"] == "a\nb"


def test_json_numpy_types():
    text = json_dumps({"a": np.float64(0.5), "b": np.int64(2),
                       "c": np.array([1.0, 2.0]), "d": np.bool_(False)})
    assert '"a": 0.5' in text and '"b": 2' in text and '"d": false' in text


def test_csv_roundtrip_floats(tmp_path):
    path = tmp_path / "t.csv"
    rows = [(0.1, 1.0 / 3.0, True), (2.0**-45, -1.5e300, False)]
    write_csv(path, ["a", "b", "c"], rows)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "a,b,c"
    for line, row in zip(lines[1:], rows):
        cells = line.split(",")
        assert float(cells[0]) == row[0]
        assert float(cells[1]) == row[1]
        assert cells[2] == ("true" if row[2] else "false")


def test_csv_cell_shortest_roundtrip():
    assert csv_cell(0.1) == "0.1"
    assert float(csv_cell(2.0 / 3.0)) == 2.0 / 3.0


def test_snapshots_roundtrip(tmp_path, rng):
    g = rl.make_grid(2, 3.0, 11)
    fields = [rng.standard_normal(g.num_nodes) for _ in range(3)]
    path = tmp_path / "snap.bin"
    write_snapshots(path, g, fields)
    ndim, n, L, back = read_snapshots(path)
    assert (ndim, n, L) == (2, 11, 3.0)
    assert back.shape == (3, g.num_nodes)
    for orig, rec in zip(fields, back):
        assert np.array_equal(orig, rec)


def test_snapshots_header_layout(tmp_path):
    g = rl.make_grid(1, 2.0, 5)
    path = tmp_path / "snap.bin"
    write_snapshots(path, g, [np.zeros(5)])
    raw = path.read_bytes()
    assert len(raw) == 24 + 5 * 8
    assert int.from_bytes(raw[0:8], "little") == 1
    assert int.from_bytes(raw[8:16], "little") == 5
