import csv
import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from cavitybh import cli
from cavitybh.config import (PRESETS, ConfigError, config_from_csv, load_config,
                             parse_config)
from cavitybh.runner import ResultTable, read_csv, run_scenario, write_csv

DATA = Path(__file__).parent / "data"


def caption_table():
    with open(DATA / "caption_values.csv") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    return rows[1:]


@pytest.mark.parametrize("scenario,key,value", caption_table())
def test_preset_matches_caption(scenario, key, value):
    cfg = parse_config(f"scenario = {scenario}")
    got = cfg.settings[key]
    if ";" in value:
        assert got == tuple(float(v) for v in value.split(";"))
    elif isinstance(got, str):
        assert got == value
    else:
        assert got == float(value)


def test_every_preset_audited():
    audited = {row[0] for row in caption_table()}
    assert audited == set(PRESETS) - {"custom"}


def test_fig3_defaults():
    cfg = parse_config("scenario = fig3\n")
    assert cfg.u0_values == (-1.2, -0.4)
    assert cfg.params.eta == 2.0 and cfg.params.v_cl == -4.0
    assert cfg.sweep.parameter == "delta_c"


def test_comments_blank_lines_and_overrides():
    text = "# a comment\n\nscenario = fig4b   # trailing\nsweep_points = 3\n"
    cfg = parse_config(text, ["sweep_points=5", "a_s = 0.5"])
    assert cfg.sweep.n_points == 5
    assert cfg.params.a_s == 0.5


@pytest.mark.parametrize("text,line", [
    ("scenario = fig3\neta = abc\n", 2),
    ("scenario = fig3\nbogus = 1\n", 2),
    ("scenario = fig3\nnot a pair\n", 2),
    ("scenario = fig3\neta = 1\neta = 2\n", 3),
    ("scenario = fig9\n", 1),
    ("scenario = fig3\nn_atoms = 1.5\n", 2),
])
def test_parse_errors_name_the_line(text, line):
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.line == line
    assert f"line {line}" in str(err.value)


def test_custom_requires_keys():
    with pytest.raises(ConfigError) as err:
        parse_config("scenario = custom\n")
    for key in ("u0", "delta_c", "eta", "v_cl", "a_s", "n_atoms", "n_sites"):
        assert key in str(err.value)
    with pytest.raises(ConfigError):
        parse_config("")


@pytest.mark.parametrize("extra", ["sweep = n_atoms", "sweep_points = 1", "site = 9",
                                   "dt = 0", "kappa_in_recoils = -1", "n_q = 15"])
def test_invalid_values(extra):
    with pytest.raises(ConfigError):
        parse_config("scenario = fig4b\n" + extra)


CUSTOM = """scenario = custom
u0 = -1
delta_c = -3
eta = 2
v_cl = -4
a_s = 0.1
n_atoms = 2
n_sites = 3
"""


def test_custom_two_point_sweep():
    cfg = parse_config(CUSTOM + "sweep = a_s\nsweep_start = 0\nsweep_stop = 1\nsweep_points = 2\n")
    table = run_scenario(cfg)
    assert len(table.rows) == 2
    assert table.header[0] == "a_s[E_R]" and table.header[-1] == "error"
    assert all(len(r) == len(table.header) for r in table.rows)


def test_custom_single_point_has_no_error_column():
    table = run_scenario(parse_config(CUSTOM))
    assert len(table.rows) == 1 and "error" not in table.header


def test_failed_point_becomes_nan_row():
    # eta = 0 leaves no photons, so the relative error divides by zero
    cfg = parse_config("scenario = fig2a\nsweep_points = 2\nsweep2_points = 2\nsweep = eta\n"
                       "sweep_start = 0\nsweep_stop = 2\n")
    table = run_scenario(cfg)
    errs = table.column("error")
    bad = [i for i, e in enumerate(errs) if e]
    assert bad and len(bad) < len(errs)
    for i in bad:
        assert all(math.isnan(v) for v in table.rows[i][:-1])


def test_parallel_rows_keep_sweep_order():
    cfg = parse_config("scenario = fig3\nsweep_points = 6\n")
    serial = run_scenario(cfg, jobs=1)
    threaded = run_scenario(cfg, jobs=3)
    assert serial.rows == threaded.rows


def test_fig4a_limits():
    cfg = parse_config("scenario = fig4a\nsweep_start = 0\nsweep_stop = 12\nsweep_points = 2\n")
    t = run_scenario(cfg)
    q1, c1 = t.column("p1_quantum"), t.column("p1_classical")
    assert c1[-1] > 0.999 and q1[-1] < c1[-1]
    # quantum p0 and p2 persist further into the insulator
    assert t.column("p0_quantum")[-1] > t.column("p0_classical")[-1]
    assert t.column("p2_quantum")[-1] > t.column("p2_classical")[-1]


def test_result_table_row_length_checked():
    with pytest.raises(ValueError):
        ResultTable(["a", "b"], [[1.0]])


def test_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    rows = [list(rng.normal(size=3) * 10.0 ** rng.integers(-12, 12, 3)) for _ in range(20)]
    table = ResultTable(["x[E_R]", "y", "z"], rows, {"version": "t"}, ["scenario = fig3"])
    path = tmp_path / "t.csv"
    write_csv(table, path)
    header, back, pre = read_csv(path)
    assert header == table.header
    assert np.allclose(np.array(back), np.array(rows), rtol=1e-14, atol=0)
    assert "# scenario = fig3" in pre
    raw = path.read_bytes()
    assert b"\r\n" in raw and b"," in raw


def test_csv_empty_rows(tmp_path):
    path = tmp_path / "e.csv"
    write_csv(ResultTable(["a", "b"], [], {"version": "x"}, ["scenario = fig3"]), path)
    header, rows, pre = read_csv(path)
    assert header == ["a", "b"] and rows == [] and pre


def test_echo_reproduces_bytes(tmp_path):
    cfg = parse_config("scenario = fig5a\nsweep_points = 3\n")
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(run_scenario(cfg), a, timestamp="T")
    cfg2 = parse_config(config_from_csv(a))
    write_csv(run_scenario(cfg2), b, timestamp="T")
    assert a.read_bytes() == b.read_bytes()


def test_cli_exit_codes(tmp_path, monkeypatch, capsys):
    good = tmp_path / "good.cfg"
    good.write_text("scenario = fig3\nsweep_points = 3\n")
    out = tmp_path / "o.csv"
    monkeypatch.setenv("SIM_JOBS", "2")
    assert cli.main([str(good), "--out", str(out), "--set", "u0_values=-1.0"]) == 0
    header, rows, pre = read_csv(out)
    assert len(rows) == 3 and "# u0_values = -1.0" in pre

    bad = tmp_path / "bad.cfg"
    bad.write_text("eta = abc\n")
    assert cli.main([str(bad)]) == 1
    assert "line 1" in capsys.readouterr().err
    assert cli.main([str(tmp_path / "missing.cfg")]) == 1
    assert cli.main([str(good), "--jobs", "0"]) == 1

    # a non-sweep run that fails numerically
    failing = tmp_path / "fail.cfg"
    failing.write_text(CUSTOM + "v_target = 3.0\n")
    assert cli.main([str(failing), "--out", str(tmp_path / "f.csv")]) == 2


def test_cli_mode_flag(tmp_path):
    good = tmp_path / "g.cfg"
    good.write_text("scenario = fig2a\nsweep_points = 2\nsweep2_points = 2\n")
    out = tmp_path / "o.csv"
    assert cli.main([str(good), "--out", str(out), "--mode", "effective"]) == 0
    assert "# mode = effective" in read_csv(out)[2]


def test_console_script(tmp_path):
    good = tmp_path / "g.cfg"
    good.write_text("scenario = fig3\nsweep_points = 2\n")
    res = subprocess.run([sys.executable, "-m", "cavitybh.cli", str(good), "--out",
                          str(tmp_path / "o.csv")], capture_output=True, text=True,
                         env={**os.environ, "SIM_JOBS": "1"})
    assert res.returncode == 0, res.stderr


def test_load_config_from_file(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("scenario = fig5b\n", encoding="utf-8")
    cfg = load_config(path, ["t_final = 1"])
    assert cfg.t_final == 1.0 and cfg.params.delta_c == -4.2
