import json
from pathlib import Path

import numpy as np
from pydantic import BaseModel

from utils.utils import (
    config_hash,
    convert_to_serializable,
    format_float,
    package_versions,
    read_csv,
    render_csv,
    write_csv,
    write_json,
)


class Report(BaseModel):
    name: str
    value: float


def test_format_float_keeps_17_digits():
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(1.0 / 3.0)) == 1.0 / 3.0
    assert format_float(np.float64(2.0)) == "2"


def test_render_csv_formats_only_floats():
    text = render_csv(["a", "b", "c"], [[1, 0.5, "x"], [2, np.float64(0.1), "y"]])
    assert text == "a,b,c\n1,0.5,x\n2,0.10000000000000001,y\n"


def test_csv_round_trip(tmp_path):
    path = write_csv(tmp_path / "nested" / "table.csv", ["t", "x"], [[0.0, 1.0 / 3.0], [0.5, -2.0]])
    header, rows = read_csv(path)
    assert header == ["t", "x"]
    assert float(rows[0][1]) == 1.0 / 3.0
    assert not list(path.parent.glob("*.tmp"))


def test_write_json_sorts_keys(tmp_path):
    path = write_json(tmp_path / "summary.json", {"b": 1, "a": np.arange(2), "c": float("inf")})
    text = path.read_text(encoding="utf-8")
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    assert json.loads(text) == {"a": [0, 1], "b": 1, "c": "inf"}


def test_convert_to_serializable():
    data = {"report": Report(name="r", value=np.nan), "path": Path("out") / "x.csv", "flag": np.bool_(True),
            "pair": (np.float64(1.5), 2)}
    assert convert_to_serializable(data) == {
        "report": {"name": "r", "value": "nan"},
        "path": str(Path("out") / "x.csv"),
        "flag": True,
        "pair": [1.5, 2],
    }


def test_config_hash_is_sha256():
    assert config_hash(b"") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    assert config_hash(b"{}") != config_hash(b"{ }")


def test_package_versions_cover_the_stack():
    versions = package_versions()
    assert {"numpy", "scipy", "pydantic", "loguru"} <= set(versions)
    assert all(isinstance(v, str) for v in versions.values())
