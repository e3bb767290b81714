import csv
import math
from pathlib import Path

import numpy as np
import pytest

from fresnelsim import cli
from fresnelsim.geometry import Point2
from fresnelsim.propagation import Transmitter, transmit_amplitude

SCENARIOS = Path(cli.__file__).parent / "scenarios"

EMPTY = """
name: empty
transmitter: {position: [0, 0]}
path: {start: [3, -4], end: [3, 4], samples: 9}
frequencies: [{center: 2.4e9}, {center: 30e9}]
"""

SINGLE = """
name: single
transmitter:
  position: [-9.32, 4.82]
  aperture: {center: [4.59, 8.55], angle: 105.0, lo: -.inf, hi: 0.0}
path: {start: [0, 10], end: [20, 10], samples: 2001}
frequencies: [{center: 2.4e9}]
"""


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def test_run_empty_scene(tmp_path):
    doc = tmp_path / "empty.yaml"
    doc.write_text(EMPTY)
    assert cli.main(["run", "--scenario", str(doc), "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "empty.csv")
    assert len(rows) == 18
    assert list(rows[0])[:8] == ["x_m", "y_m", "f_hz", "h_re", "h_im", "h_abs", "h_abs_norm", "band_power"]
    assert list(rows[0])[8:] == ["m0_re", "m0_im", "m0_aoa_deg"]
    a = transmit_amplitude(Transmitter(Point2(0, 0)))
    for r in rows:
        dist = math.hypot(float(r["x_m"]), float(r["y_m"]))
        assert float(r["h_abs"]) == pytest.approx(a / dist, rel=1e-6)


def test_run_with_reflector_has_component_columns(tmp_path):
    assert cli.main(["run", "--scenario", str(SCENARIOS / "four_reflectors.yaml"), "--out", str(tmp_path)]) == 0
    header = read_rows(tmp_path / "four_reflectors.csv")[0]
    assert "m4_aoa_deg" in header


def test_missing_file_is_io_error(tmp_path, capsys):
    missing = tmp_path / "nope.yaml"
    assert cli.main(["run", "--scenario", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_invalid_document_is_usage_error(tmp_path, capsys):
    doc = tmp_path / "bad.yaml"
    doc.write_text(EMPTY.replace("samples: 9", "samples: 1"))
    assert cli.main(["run", "--scenario", str(doc), "--out", str(tmp_path)]) == 1
    assert "path.samples" in capsys.readouterr().err


def test_bad_flags_are_usage_errors():
    assert cli.main(["analyze", "--scenario", "x.yaml", "--level", "1.5"]) == 1
    assert cli.main(["map", "--scenario", "x.yaml", "--grid", "0,1,0"]) == 1
    assert cli.main([]) == 1


def test_map_grid_size_and_header(tmp_path):
    args = ["map", "--scenario", str(SCENARIOS / "spread_map.yaml"), "--grid", "0,10,0,10,0.05",
            "--frequency", "2.4e9", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    (path,) = tmp_path.glob("*.csv")
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# reference=")
    rows = read_rows(path)
    assert len(rows) == 200 * 200
    assert list(rows[0]) == ["x_m", "y_m", "h_abs_norm"]
    # row-major: x varies fastest
    assert rows[0]["y_m"] == rows[1]["y_m"] and rows[0]["x_m"] != rows[1]["x_m"]


def test_map_coarse_resolution_single_cell(tmp_path):
    args = ["map", "--scenario", str(SCENARIOS / "spread_map.yaml"), "--grid", "0,10,0,10,50",
            "--frequency", "30e9", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    (path,) = tmp_path.glob("*.csv")
    assert len(read_rows(path)) == 1


def test_map_deterministic(tmp_path):
    outs = []
    for sub in ("a", "b"):
        args = ["map", "--scenario", str(SCENARIOS / "spread_map.yaml"), "--grid", "0,10,0,10,0.5",
                "--out", str(tmp_path / sub)]
        assert cli.main(args) == 0
        outs.append(sorted(p.read_bytes() for p in (tmp_path / sub).glob("*.csv")))
    assert outs[0] == outs[1]


def test_analyze_los_nlos(tmp_path):
    assert cli.main(["analyze", "--scenario", str(SCENARIOS / "los_nlos.yaml"), "--out", str(tmp_path)]) == 0
    delays = {r["direction"]: r for r in read_rows(tmp_path / "delays.csv")}
    assert float(delays["falling"]["delay_m"]) == pytest.approx(0.72, abs=0.15)
    assert float(delays["rising"]["delay_m"]) == pytest.approx(0.86, abs=0.15)
    events = read_rows(tmp_path / "events.csv")
    assert list(events[0]) == ["frequency", "position", "direction", "level"]


def test_analyze_half_level_warns(tmp_path, capsys):
    args = ["analyze", "--scenario", str(SCENARIOS / "los_nlos.yaml"), "--level", "0.5", "--out", str(tmp_path)]
    assert cli.main(args) == 0
    assert "50%" in capsys.readouterr().err


def test_analyze_single_frequency(tmp_path):
    doc = tmp_path / "single.yaml"
    doc.write_text(SINGLE)
    assert cli.main(["analyze", "--scenario", str(doc), "--out", str(tmp_path)]) == 0
    assert read_rows(tmp_path / "delays.csv") == []
    assert len(read_rows(tmp_path / "events.csv")) > 0


def test_analyze_no_crossing_row_has_empty_delay(tmp_path):
    doc = tmp_path / "empty.yaml"
    doc.write_text(EMPTY)
    assert cli.main(["analyze", "--scenario", str(doc), "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "delays.csv")
    assert len(rows) == 2 and all(r["delay_m"] == "" for r in rows)


def test_sweep_unknown_name(capsys):
    assert cli.main(["sweep", "bogus"]) == 1
    assert "rough_grid" in capsys.readouterr().err


def test_sweep_uses_environment_output(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path))
    assert cli.main(["sweep", "los_nlos", "--seed", "7"]) == 0
    assert (tmp_path / "los_nlos" / "report.csv").exists()
    first = (tmp_path / "los_nlos" / "report.csv").read_bytes()
    assert cli.main(["sweep", "los_nlos", "--seed", "7"]) == 0
    assert (tmp_path / "los_nlos" / "report.csv").read_bytes() == first


def test_output_is_locale_independent(tmp_path):
    import locale
    doc = tmp_path / "empty.yaml"
    doc.write_text(EMPTY)
    old = locale.setlocale(locale.LC_NUMERIC)
    try:
        try:
            locale.setlocale(locale.LC_NUMERIC, "de_DE.UTF-8")
        except locale.Error:
            pass
        assert cli.main(["run", "--scenario", str(doc), "--out", str(tmp_path)]) == 0
    finally:
        locale.setlocale(locale.LC_NUMERIC, old)
    body = [l for l in (tmp_path / "empty.csv").read_text().splitlines() if not l.startswith("#")]
    assert all(len(l.split(",")) == len(body[0].split(",")) for l in body)
    assert np.isfinite(float(body[1].split(",")[5]))
