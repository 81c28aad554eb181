import json
from fractions import Fraction

import numpy as np
import pytest
from click.testing import CliRunner

from lumpkit.cli_io import (
    EXIT_COMPUTE,
    EXIT_CONFIG,
    ConfigError,
    GridConfig,
    RunConfig,
    apply_override,
    build_config,
    info_report,
    load_config,
    main,
    run_peaks,
)
from lumpkit.polyring import Gaussian


def invoke(*args):
    return CliRunner().invoke(main, list(args))


def test_grid_parsing():
    assert GridConfig.parse("-1,1,-2,2") == GridConfig(-1, 1, -2, 2, 301, 301)
    assert GridConfig.parse("-1, 1, -2, 2, 11, 7").ns == 7
    for bad in ("1,2,3", "a,b,c,d", "1,0,0,1"):
        with pytest.raises(ConfigError):
            GridConfig.parse(bad).validate()


def test_overrides_and_config_defaults(tmp_path):
    doc = {"partition": [2, 1], "detection": {"threshold": 0.01}}
    apply_override(doc, "detection.dedup_cells", 3)
    cfg = build_config(doc)
    assert cfg.partition == (1, 2)
    assert cfg.detection == {"threshold": 0.01, "dedup_cells": 3}
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"partition": "1,1", "t": -10, "b": 0.5}))
    cfg = load_config(str(path), {"omega": "1/3", "grid": "-5,5,-5,5,3,3"})
    spec = cfg.spec()
    assert (spec.b, spec.omega, cfg.t) == (Fraction(1, 2), Fraction(1, 3), -10.0)
    assert cfg.resolved_grid(spec) == GridConfig(-5, 5, -5, 5, 3, 3)
    assert RunConfig().resolved_grid(RunConfig().spec()).nr == 301


def test_complex_gammas():
    cfg = build_config({"gammas": [[1, 2], "1/3", 0]})
    assert cfg.spec().gammas[0] == Gaussian(1, 2)


@pytest.mark.parametrize(
    "doc",
    [
        {"partition": [0, 1]},
        {"b": 0},
        {"t": float("inf")},
        {"detection": {"nonsense": 1}},
        {"colour": "red"},
        {"gammas": [0, 0]},
        {"nodes": 1},
    ],
)
def test_bad_configs(doc):
    with pytest.raises(ConfigError):
        build_config(doc)


@pytest.mark.parametrize(
    "parts, m, M, tags",
    [
        ((1, 1), [1, 2], 6, ["rectangular", "square"]),
        ((1, 2, 3, 4), [1, 3, 5, 7], 38, ["triangular"]),
        ((2, 4, 6), [2, 5, 8], 36, ["even"]),
    ],
)
def test_info_report(parts, m, M, tags):
    report = info_report(build_config({"partition": list(parts)}))
    assert report["degree_vector"] == m
    assert report["M"] == M
    assert report["classification"] == tags


def test_info_command_formats():
    res = invoke("info", "--partition", "1,1")
    assert res.exit_code == 0
    assert json.loads(res.output)["M"] == 6
    text = invoke("info", "--partition", "3,1", "--format", "text")
    assert "M: 12" in text.output and "[][][]\n[]" in text.output


def test_config_errors_exit_two_with_json():
    res = CliRunner().invoke(main, ["info", "--partition", "0,2"])
    assert res.exit_code == EXIT_CONFIG
    err = json.loads(res.stderr.strip().splitlines()[-1])
    assert err["error"] == "config"
    assert invoke("info", "--set", "novalue").exit_code == EXIT_CONFIG
    assert invoke("info", "--config", "/does/not/exist.json").exit_code == EXIT_CONFIG


def test_prediction_at_zero_time_is_a_config_error(tmp_path):
    res = invoke("predict", "--partition", "1,1", "--t", "0", "--out", str(tmp_path))
    assert res.exit_code == EXIT_CONFIG


def test_computation_errors_exit_three(tmp_path, monkeypatch):
    def broken(spec):
        raise ArithmeticError("tau vanished")

    monkeypatch.setattr("lumpkit.cli_io.build_tau", broken)
    res = CliRunner().invoke(main, ["field", "--partition", "1,1", "--grid=-1,1,-1,1,3,3", "--out", str(tmp_path)])
    assert res.exit_code == EXIT_COMPUTE
    assert json.loads(res.stderr.strip())["error"] == "computation"


def test_field_csv_is_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        res = invoke("field", "--partition", "1,1", "--t", "10", "--grid=-20,20,-20,20,31,21", "--out", str(out))
        assert res.exit_code == 0, res.output
        outs.append((out / "field.csv").read_bytes())
    assert outs[0] == outs[1]
    data = outs[0]
    assert b"\r" not in data
    lines = data.decode().splitlines()
    assert lines[0] == "r,s,v"
    assert len(lines) == 1 + 31 * 21
    r, s, v = (float(x) for x in lines[1].split(","))
    assert (r, s) == (-20.0, -20.0) and np.isfinite(v)
    meta = json.loads((tmp_path / "a" / "field_meta.json").read_text())
    assert meta["rows"] == 31 * 21 and meta["tau_degree"] > 0 and meta["singular_nodes"] == []


def test_default_grid_row_count(tmp_path):
    res = invoke("field", "--partition", "1", "--t", "10", "--out", str(tmp_path))
    assert res.exit_code == 0
    assert json.loads(res.output)["rows"] == 301 * 301


def test_opposite_times_deflect_the_peaks():
    maps = {}
    for t in (10.0, -10.0):
        pm, _ = run_peaks(build_config({"partition": [1, 1], "t": t, "grid": "-40,40,-40,40,201,201"}))
        maps[t] = np.sort(pm.positions(), axis=0)
    assert maps[10.0].shape == maps[-10.0].shape
    assert np.abs(maps[10.0] - maps[-10.0]).max() > 1.0


def test_peaks_command(tmp_path):
    res = invoke("peaks", "--partition", "1,1", "--t", "10", "--grid=-40,40,-40,40,301,301", "--out", str(tmp_path))
    assert res.exit_code == 0, res.output
    summary = json.loads(res.output)
    assert summary == {"peaks": 6, "multi_groups": 2, "singles": 2, "consistent": True}
    doc = json.loads((tmp_path / "peaks.json").read_text())
    assert doc["provenance"] == "detected" and len(doc["peaks"]) == 6
    assert {p["kind"] for p in doc["peaks"]} == {"multi", "single"}


def test_predict_compare_writes_all_outputs(tmp_path):
    res = invoke(
        "predict", "--compare", "--partition", "1,1", "--t", "10", "--grid=-40,40,-40,40,201,201", "--out", str(tmp_path)
    )
    assert res.exit_code == 0, res.output
    for name in ("predicted.json", "patterns.json", "detected.json", "comparison.json", "comparison.csv"):
        assert (tmp_path / name).exists()
    comparison = json.loads((tmp_path / "comparison.json").read_text())
    assert comparison["predicted_count"] == 6 and comparison["shortfall"] == 0
    assert comparison["relative_mean"] <= 0.1
    rows = (tmp_path / "comparison.csv").read_text().splitlines()
    assert rows[0].startswith("detected_r") and len(rows) == 7
    predicted = json.loads((tmp_path / "predicted.json").read_text())
    assert predicted["provenance"] == "predicted"
