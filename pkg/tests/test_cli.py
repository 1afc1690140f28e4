import json

import pytest

from cli import load_config, run
from config import settings
from utils.errors import ConfigurationError


@pytest.fixture(autouse=True)
def keep_threads(monkeypatch):
    monkeypatch.setattr(settings.runtime, "threads", settings.runtime.threads)


def _write(tmp_path, name, data):
    path = tmp_path / name
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


SIMULATE = {
    "mode": "simulate",
    "system": {"name": "reflected_bm", "params": {"x0": 0.2}},
    "grid": {"steps": 32},
    "particles": 8,
    "replications": 2,
    "scheme": "both",
    "epsilon": [0.25],
    "iterations": 2,
    "certificate": {"anchor": [1.0], "radius": 1.0},
}


def test_properties_mode(tmp_path):
    config = _write(tmp_path, "properties.json", {
        "mode": "properties",
        "system": {"constraint": {"kind": "indicator", "geometry": "half-space",
                                  "params": {"normal": [0.0, 1.0], "offset": 1.0}}},
        "properties": {"samples": 50},
    })
    out = tmp_path / "out"
    assert run(["--config", str(config), "--out", str(out)]) == 0

    summary = json.loads((out / "summary.json").read_text(encoding="utf-8"))
    assert summary["mode"] == "properties"
    assert summary["passed"] is True
    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    assert manifest["outputs"] == ["properties.csv"]
    assert manifest["seed"] == 42
    assert len(manifest["config_sha256"]) == 64
    assert (out / "properties.csv").read_text(encoding="utf-8").splitlines()[0] == \
        "property,max_violation,tolerance,passed"


def test_simulate_is_reproducible(tmp_path):
    config = _write(tmp_path, "simulate.json", SIMULATE)
    first, second = tmp_path / "first", tmp_path / "second"
    assert run(["--config", str(config), "--out", str(first), "--threads", "1"]) == 0
    assert run(["--config", str(config), "--out", str(second), "--threads", "3"]) == 0

    for name in ("trajectories_projected.csv", "trajectories_penalized.csv", "diagnostics_projected.csv",
                 "euler_iteration.csv", "summary.json", "manifest.json"):
        assert (first / name).read_bytes() == (second / name).read_bytes(), name

    summary = json.loads((first / "summary.json").read_text(encoding="utf-8"))
    assert summary["summary"]["interior_bound_margin_projected"] >= -1e-8
    assert summary["reports"]["diagnostics_projected"]["passed"] is True


def test_seed_flag_changes_the_paths(tmp_path):
    config = _write(tmp_path, "simulate.json", dict(SIMULATE, scheme="projected", iterations=None))
    assert run(["--config", str(config), "--out", str(tmp_path / "a")]) == 0
    assert run(["--config", str(config), "--out", str(tmp_path / "b"), "--seed", "7"]) == 0
    a = (tmp_path / "a" / "trajectories_projected.csv").read_bytes()
    b = (tmp_path / "b" / "trajectories_projected.csv").read_bytes()
    assert a != b


def test_short_epsilon_ladder_is_a_configuration_error(tmp_path):
    config = _write(tmp_path, "converge.json", {"mode": "converge", "system": {"name": "ou"},
                                                 "epsilon": [0.1, 0.05]})
    assert run(["--config", str(config), "--out", str(tmp_path / "out")]) == 2


def test_stability_violation_is_a_configuration_error(tmp_path):
    config = _write(tmp_path, "simulate.json", dict(SIMULATE, scheme="penalized", epsilon=[0.001]))
    assert run(["--config", str(config), "--out", str(tmp_path / "out")]) == 2


def test_stability_is_checked_when_loading(tmp_path):
    config = _write(tmp_path, "simulate.json", dict(SIMULATE, scheme="penalized", epsilon=[0.001]))
    with pytest.raises(ConfigurationError) as info:
        load_config(config)
    assert info.value.field == "grid.steps"

    # h = 1/16 > 0.001/2 для наименьшего ε лестницы
    config = _write(tmp_path, "control.json", {
        "mode": "control",
        "grid": {"steps": 16},
        "epsilon": [0.1, 0.01, 0.001],
        "control": {"problem": "two_control", "params": {"sigma": 0.3}, "probes": ["penalization_rate"]},
    })
    with pytest.raises(ConfigurationError) as info:
        load_config(config)
    assert info.value.field == "grid.steps"

    # проекционная схема не ограничивает шаг
    config = _write(tmp_path, "projected.json", dict(SIMULATE, scheme="projected", epsilon=[0.001]))
    cfg, _ = load_config(config)
    assert cfg.scheme == "projected"


def test_unknown_keys_are_rejected(tmp_path):
    config = _write(tmp_path, "bad.json", {"mode": "validate", "grid": {"steps": 8, "width": 2}})
    with pytest.raises(ConfigurationError) as info:
        load_config(config)
    assert info.value.field == "grid.width"
    assert run(["--config", str(config)]) == 2


def test_unreadable_configs(tmp_path):
    broken = tmp_path / "broken.json"
    broken.write_text("{mode: ", encoding="utf-8")
    assert run(["--config", str(broken)]) == 2
    assert run(["--config", str(tmp_path / "missing.json")]) == 2
    assert run([]) == 2


def test_describe(capsys):
    assert run(["--describe", "example31"]) == 0
    assert "example31" in capsys.readouterr().out
    assert run(["--describe", "nothing"]) == 2


def test_schema(capsys):
    assert run(["--schema"]) == 0
    schema = json.loads(capsys.readouterr().out)
    assert "mode" in schema["properties"]


def test_strict_mode_reports_failed_checks(tmp_path):
    # без касания границы штрафная схема совпадает с проекционной: наклон не оценивается
    config = _write(tmp_path, "control.json", {
        "mode": "control",
        "grid": {"steps": 16},
        "particles": 4,
        "epsilon": [0.5, 0.25, 0.125],
        "control": {"problem": "reflected_ou", "params": {"sigma": 0.0, "x0": 0.5},
                    "probes": ["penalization_rate"]},
    })
    assert run(["--config", str(config), "--out", str(tmp_path / "lenient")]) == 0
    assert run(["--config", str(config), "--out", str(tmp_path / "strict"), "--strict"]) == 4
    summary = json.loads((tmp_path / "lenient" / "summary.json").read_text(encoding="utf-8"))
    assert summary["passed"] is False
    assert summary["reports"]["penalization_rate"]["degenerate"] is True
