import json
from pathlib import Path

import pytest

from htlab.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write(tmp_path, obj, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return p


BINARY = {"tree": {"depth": 12, "branching": 2, "w": "ones", "field": "gf2"},
          "space": {"dim": 1, "metric": "discrete"}, "seed": 7}


def run(cmd, cfg, out, *extra):
    return main([cmd, "--config", str(cfg), "--out", str(out), *extra])


def test_validate_ok_and_bad(tmp_path):
    assert run("validate", write(tmp_path, BINARY), tmp_path / "a") == 0
    assert run("validate", CONFIGS / "bad_q.json", tmp_path / "b") == 1
    report = json.loads((tmp_path / "b" / "validate.json").read_text())
    assert any("9/10" in p and "vertex" in p for p in report["problems"])


def test_missing_and_malformed_config(tmp_path):
    assert run("validate", tmp_path / "nope.json", tmp_path) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run("validate", bad, tmp_path) == 2
    assert run("validate", write(tmp_path, {"tree": BINARY["tree"], "seed": -1}), tmp_path) == 2
    assert run("validate", write(tmp_path, {"space": {}}), tmp_path) == 2


def test_seed_flag_range(tmp_path):
    with pytest.raises(SystemExit):
        run("validate", write(tmp_path, BINARY), tmp_path, "--seed", str(2 ** 64))


def test_universal_certificate(tmp_path, capsys):
    cfg = dict(BINARY, universal={"n_targets": 4, "mc_samples": 2000})
    assert run("universal", write(tmp_path, cfg), tmp_path) == 0
    report = json.loads((tmp_path / "universal.json").read_text())
    assert len(report["certificate"]) == 4
    assert report["config_hash"]
    assert "achieved" in capsys.readouterr().out


def test_universal_exhaustion(tmp_path):
    cfg = dict(BINARY, universal={"n_targets": 40})
    assert run("universal", write(tmp_path, cfg), tmp_path) == 3
    assert (tmp_path / "universal.json").exists()


def test_frequent_codes(tmp_path):
    assert run("frequent", write(tmp_path, dict(BINARY, frequent={"horizon": 6})), tmp_path / "ok") == 0
    assert run("frequent", write(tmp_path, dict(BINARY, frequent={"horizon": 9})), tmp_path / "x") == 3
    assert (tmp_path / "x" / "frequent.json").exists()


def test_frequent_on_even_levels(tmp_path):
    cfg = dict(BINARY, frequent={"horizon": 3, "levels": list(range(0, 13, 2))})
    assert run("frequent", write(tmp_path, cfg), tmp_path) == 0
    hits = json.loads((tmp_path / "frequent.json").read_text())["log"]["hits"]
    assert all(h["level"] % 2 == 0 for h in hits)


def test_x_rejects_gf2_ones(tmp_path):
    assert run("x", CONFIGS / "gf2_ones_x.json", tmp_path) == 1


def test_x_rational(tmp_path):
    cfg = {"tree": {"depth": 32, "branching": 2, "w": "q", "field": "rational"},
           "space": {"dim": 1, "metric": "sup_abs"},
           "x": {"balls": [{"target": 0, "radius": "1/2"}]}}
    assert run("x", write(tmp_path, cfg), tmp_path) == 0
    assert (tmp_path / "x_density.csv").exists()


def test_schedule_small(tmp_path):
    assert run("schedule", write(tmp_path, dict(BINARY, schedule={"horizon": 4, "m_max": 2})), tmp_path) == 0
    lines = (tmp_path / "schedule.csv").read_text().splitlines()
    assert [int(x.split(",")[2]) for x in lines[1:]] == [1, 3, 4, 7]


def test_schedule_rejects_tiny_horizon(tmp_path):
    assert run("schedule", write(tmp_path, dict(BINARY, schedule={"horizon": 1})), tmp_path) == 2


def test_genericity_small(tmp_path):
    cfg = {"tree": {"depth": 12, "branching": 2, "q": ["1/10", "9/10"], "w": "q", "field": "rational"},
           "space": {"dim": 1, "metric": "sup_abs"},
           "genericity": {"m": 2, "coeffs": [[1, 1], [3, 2]], "span_targets": [1]}}
    assert run("genericity", write(tmp_path, cfg), tmp_path) == 0
    report = json.loads((tmp_path / "genericity.json").read_text())
    assert all(s["ok"] for s in report["spans"])


def test_reports_are_deterministic(tmp_path):
    cfg = write(tmp_path, dict(BINARY, universal={"n_targets": 3, "mc_samples": 500}, frequent={"horizon": 5}))
    for cmd in ("universal", "frequent"):
        assert run(cmd, cfg, tmp_path / "r1") == run(cmd, cfg, tmp_path / "r2")
    for f in sorted((tmp_path / "r1").iterdir()):
        assert f.read_bytes() == (tmp_path / "r2" / f.name).read_bytes()
