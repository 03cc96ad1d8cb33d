import json
import math

import numpy as np
import pytest

from test_series import rand_matrix, rand_series
from torikam.fileio import (
    dumps_csv, dumps_json, dumps_series, loads_series, read_series, write_series,
)
from torikam.series import MatrixSeries, TruncationSpec


def test_matrix_roundtrip_exact(tmp_path):
    rng = np.random.default_rng(0)
    spec = TruncationSpec(2, 4, n=2, d=2)
    items = [rand_matrix(spec, 3, rng) for _ in range(2)]
    path = tmp_path / "m.series"
    write_series(path, items)
    back = read_series(path)
    assert len(back) == 2
    for a, b in zip(items, back):
        assert isinstance(b, MatrixSeries) and b.spec == spec
        assert a.data.tobytes() == b.data.tobytes()


def test_scalar_roundtrip_and_format():
    rng = np.random.default_rng(1)
    spec = TruncationSpec(1, 3)
    s = rand_series(spec, rng)
    text = dumps_series([s])
    assert text.startswith("torikam-series n=1 d=1 K=1 m_max=3 kind=scalar count=1\n")
    assert "entry" not in text
    (back,) = loads_series(text)
    assert np.array_equal(back.data, s.data)
    # dumping again is byte-identical
    assert dumps_series([back]) == text


def test_only_nonzero_records_and_comments():
    spec = TruncationSpec(0, 2)
    I = MatrixSeries.identity(spec, 2)
    text = dumps_series([I])
    records = [ln for ln in text.splitlines() if "|" in ln]
    assert len(records) == 2
    (back,) = loads_series("# comment\n" + text.replace("block 1", "block 1\n# inner"))
    assert back == I


def test_bad_inputs():
    with pytest.raises(ValueError, match="header"):
        loads_series("nope\n")
    with pytest.raises(ValueError):
        loads_series("torikam-series n=1 d=1 K=0 count=1 kind=scalar\n")
    with pytest.raises(ValueError):
        loads_series("torikam-series n=1 d=1 K=0 m_max=2 kind=matrix ell=2 count=1\n"
                     "block 1\n0 | 1 | 1.0 0.0\n")


def test_json_floats_roundtrip_bitwise():
    rng = np.random.default_rng(2)
    xs = list(rng.random(50) * 10.0 ** rng.integers(-20, 20, 50))
    text = dumps_json({"x": xs, "third": 1 / 3, "n": np.int64(3), "t": (1, 2)})
    back = json.loads(text)
    assert back["x"] == xs
    assert back["third"] == 1 / 3 and back["n"] == 3 and back["t"] == [1, 2]
    assert "0.33333333333333331" in text


def test_json_nonfinite_as_strings():
    back = json.loads(dumps_json({"a": math.inf, "b": -math.inf, "c": math.nan, "e": {}}))
    assert back == {"a": "inf", "b": "-inf", "c": "nan", "e": {}}


def test_csv_17_digits():
    text = dumps_csv(["k", "v"], [[0, 0.1], [1, np.float64(2 / 3)]])
    lines = text.splitlines()
    assert lines[0] == "k,v"
    assert float(lines[1].split(",")[1]) == 0.1
    assert float(lines[2].split(",")[1]) == 2 / 3
