import math

import numpy as np
import pytest

from toposl.config import load, normalize, parse_graph, parse_measure, read_measure_csv
from toposl.errors import ConfigError


def test_defaults_filled():
    cfg = normalize({"kind": "crn"})
    sc = cfg["scenarios"][0]
    assert cfg["out"] is None and cfg["workers"] == 1
    assert sc["name"] == "crn" and sc["seed"] == 0 and sc["plots"] is True
    assert sc["grid"]["steps"] == 10_000 and sc["grid"]["lambdas"] == [math.inf]
    assert sc["params"]["N"] == 10 and sc["params"]["kf"] == 2.0


def test_defaults_are_not_shared():
    a = normalize({"kind": "boson"})["scenarios"][0]
    a["grid"]["lambdas"].append(9.0)
    b = normalize({"kind": "boson"})["scenarios"][0]
    assert b["grid"]["lambdas"] == [0.5, 1.0, 2.0]


@pytest.mark.parametrize("raw,msg", [
    ({"kind": "crn", "crn": {"kff": 1}}, "unknown key 'crn.kff'"),
    ({"kind": "crn", "grid": {"step": 10}}, "unknown key 'grid.step'"),
    ({"kind": "crn", "colour": "red"}, "unknown key 'colour'"),
    ({"kind": "nope"}, "key 'kind'"),
    ({"kind": "crn", "boson": {}}, "does not belong"),
    ({"kind": "crn", "seed": -1}, "seed"),
    ({"kind": "crn", "grid": {"lambdas": [0]}}, "grid.lambdas"),
    ({"kind": "spin", "spin": {"N": 2.5}}, "spin.N"),
    ({"kind": "crn", "workers": 0}, "workers"),
    ({"scenarios": [{"kind": "crn", "name": "a"}, {"kind": "spin", "name": "a"}]}, "unique"),
    ({"kind": "crn", "scenarios": []}, "inside a scenario"),
])
def test_rejections(raw, msg):
    with pytest.raises(ConfigError, match=msg.replace("(", r"\(")):
        normalize(raw)


def test_scenarios_list_and_lambda_strings():
    cfg = normalize({"out": "o", "workers": 2, "scenarios": [
        {"kind": "transport", "name": "t", "transport": {"graph": "chain:3", "a": "delta:1", "b": "delta:3"},
         "grid": {"lambdas": ["inf", 0.5]}},
        {"kind": "spin"},
    ]})
    assert cfg["workers"] == 2 and cfg["out"] == "o"
    assert [s["name"] for s in cfg["scenarios"]] == ["t", "spin-2"]
    assert cfg["scenarios"][0]["grid"]["lambdas"] == [math.inf, 0.5]


def test_load_yaml(tmp_path):
    p = tmp_path / "c.yaml"
    p.write_text("kind: crn\ncrn:\n  N: 4\ngrid:\n  lambdas: [inf, 1]\n")
    sc = load(p)["scenarios"][0]
    assert sc["params"]["N"] == 4 and sc["grid"]["lambdas"] == [math.inf, 1.0]
    (tmp_path / "bad.yaml").write_text("kind: [unclosed\n")
    with pytest.raises(ConfigError, match="not valid YAML"):
        load(tmp_path / "bad.yaml")
    with pytest.raises(ConfigError, match="cannot read"):
        load(tmp_path / "missing.yaml")


def test_parse_graph(tmp_path):
    assert len(parse_graph("cycle:5").edges) == 5
    assert len(parse_graph("complete:4").edges) == 6
    (tmp_path / "g.txt").write_text("3 2\n1 2\n2 3\n")
    assert len(parse_graph("g.txt", tmp_path).edges) == 2
    with pytest.raises(ConfigError):
        parse_graph("nothing-here.txt", tmp_path)


def test_parse_measure(tmp_path):
    assert parse_measure("delta:2", 3).tolist() == [0, 1, 0]
    assert parse_measure("uniform", 4).sum() == pytest.approx(1)
    assert parse_measure([1, 2], 2).tolist() == [1, 2]
    (tmp_path / "m.csv").write_text("mass\n0.5\n0.25\n0.25\n")
    assert parse_measure("csv:m.csv", 3, tmp_path).tolist() == [0.5, 0.25, 0.25]
    assert read_measure_csv(tmp_path / "m.csv").size == 3
    for bad in ("delta:0", "delta:4", "delta:x", "gauss", [1, -1, 0], [1, 2]):
        with pytest.raises(ConfigError):
            parse_measure(bad, 3)
    assert np.all(parse_measure([0, 0, 0], 3) == 0)
