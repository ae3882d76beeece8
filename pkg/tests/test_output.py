import xml.etree.ElementTree as ET

import numpy as np
import pytest

from parabolic_dd.output import (dump_trajectory, emit_csv, emit_heat_svg,
                                 emit_json, emit_line_svg, emit_matrix_csv)
from parabolic_dd.schemes import Trajectory


def test_empty_series_header_only(tmp_path):
    path = emit_csv(["t", "eps"], [], tmp_path / "empty.csv")
    assert path.read_text() == "t,eps\n"


def test_csv_row_count_and_time_column(tmp_path):
    times = np.linspace(0.0, 0.1, 11)
    values = np.sin(times)
    path = emit_csv(["t", "v"], zip(times, values), tmp_path / "series.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 12
    parsed_t = [float(ln.split(",")[0]) for ln in lines[1:]]
    assert np.all(np.diff(parsed_t) > 0)


def test_csv_round_trip_bitwise(tmp_path):
    rng = np.random.default_rng(123)
    values = np.concatenate([rng.standard_normal(50) * 10.0 ** rng.integers(
        -300, 300, 50), [0.0, 1.0, -1.0]])
    path = emit_csv(["x"], ((v,) for v in values), tmp_path / "vals.csv")
    lines = path.read_text().splitlines()[1:]
    parsed = np.array([float(ln) for ln in lines])
    assert np.array_equal(parsed, values)


def test_csv_uses_lf_line_endings(tmp_path):
    path = emit_csv(["a"], [(1.5,)], tmp_path / "lf.csv")
    raw = path.read_bytes()
    assert b"\r" not in raw
    assert raw.endswith(b"\n")


def test_matrix_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    grid = rng.standard_normal((4, 4))
    path = emit_matrix_csv(grid, tmp_path / "grid.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 5
    parsed = np.array([[float(v) for v in ln.split(",")[1:]]
                       for ln in lines[1:]])
    assert np.array_equal(parsed, grid)


def test_line_svg_is_valid_xml(tmp_path):
    x = np.linspace(0, 1, 5)
    path = emit_line_svg(x, {"a": x ** 2, "b": 1 - x}, tmp_path / "plot.svg",
                         title="curves")
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")


def test_heat_svg_prints_range(tmp_path):
    grid = np.array([[0.0, 1.0], [-2.0, 3.0]])
    path = emit_heat_svg(grid, tmp_path / "heat.svg", title="snapshot")
    text = path.read_text()
    assert "min=-2" in text
    assert "max=3" in text
    ET.parse(path)  # well-formed XML


def test_json_emission(tmp_path):
    path = emit_json({"a": [1, 2]}, tmp_path / "r.json")
    import json
    assert json.loads(path.read_text()) == {"a": [1, 2]}


def test_trajectory_dump_binary_and_csv(tmp_path):
    states = np.random.default_rng(0).standard_normal((4, 6))
    traj = Trajectory(kind="theta", times=np.arange(4.0), states=states)
    npy = dump_trajectory(traj, tmp_path / "traj.npy")
    assert np.array_equal(np.load(npy), states)
    csv = dump_trajectory(traj, tmp_path / "traj.csv")
    parsed = np.loadtxt(csv, delimiter=",")
    assert np.array_equal(parsed, states)


def test_csv_io_failure_is_surfaced(tmp_path):
    target = tmp_path / "not_a_dir"
    target.write_text("occupied")
    with pytest.raises(OSError):
        emit_csv(["x"], [(1.0,)], target / "file.csv")
