import os
import subprocess
import sys
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsomsim import cli
from nsomsim.config import (EnvironmentConfig, RunConfig, ScanConfig, TipConfig,
                            parse_config, render_config)
from nsomsim.errors import NumericalError, ParseError, ValidationError


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def body(path):
    return [ln for ln in open(path).read().splitlines() if not ln.startswith("#")]


def test_minimal_config_defaults():
    cfg = parse_config("[tip]\nkind = point\norientation = z\n")
    assert cfg == RunConfig()
    assert cfg.tip.wavelength == 600.0 and cfg.tip.radius == 40.0 and cfg.tip.height == 10.0
    assert cfg.environment.epsilon == 2.25 and cfg.scan.step == 1.0
    assert (cfg.scan.x_min, cfg.scan.x_max) == (-200.0, 200.0)
    assert parse_config("") == RunConfig()


def test_negative_height():
    with pytest.raises(ValidationError, match="height must be positive"):
        parse_config("[tip]\nheight = -5\n")


@pytest.mark.parametrize("text, line", [
    ("[tip]\nkind = point\ncolor = red\n", 3),
    ("[tip]\nkind = point\n[colour]\nx = 1\n", 3),
    ("kind = point\n", 1),
    ("[tip]\nheight = tall\n", 2),
    ("[tip]\nkind = point\nkind = aperture\n", 3),
])
def test_parse_errors_carry_lines(text, line):
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert info.value.line == line
    assert str(info.value).startswith(f"line {line}:")


@pytest.mark.parametrize("text", [
    "[tip]\nkind = tube\n",
    "[environment]\nepsilon = -1\n",
    "[environment]\nside = middle\n",
    "[scan]\nstep = 0\n",
    "[scan]\nheights = 20, 10\n",
    "[tip]\nkind = aperture\nn_segments = 15\n",
    "[tip]\norientation = 1, 1, 0\n",
    "[quantum]\nsigma_ee0 = 2\n",
])
def test_validation_errors(text):
    with pytest.raises(ValidationError):
        parse_config(text)


def test_inline_comments_and_vectors():
    cfg = parse_config("[tip]\norientation = 0, 0.6, 0.8  # tilted\n[sample]\n"
                       "emitters = -25, 25\n")
    assert cfg.tip_model().orientation == (0.0, 0.6, 0.8)
    assert cfg.sample.emitters == (-25.0, 25.0)


finite = dict(allow_nan=False, allow_infinity=False)


@st.composite
def configs(draw):
    tip = TipConfig(kind=draw(st.sampled_from(["point", "aperture"])),
                    orientation=draw(st.sampled_from(["x", "y", "z"])),
                    radius=draw(st.floats(1, 200, **finite)),
                    sigma0=draw(st.floats(-10, 10, **finite)),
                    include_magnetic=draw(st.booleans()),
                    n_segments=2 * draw(st.integers(8, 500)),
                    height=draw(st.floats(0.1, 500, **finite)),
                    wavelength=draw(st.floats(100, 2000, **finite)))
    env = EnvironmentConfig(kind=draw(st.sampled_from(["vacuum", "halfspace"])),
                            epsilon=draw(st.floats(1.0, 20.0, **finite)),
                            side=draw(st.sampled_from(["below", "above"])))
    lo = draw(st.floats(-1e3, 0, **finite))
    heights = tuple(sorted(draw(st.lists(st.floats(0.5, 300, **finite), min_size=1,
                                         max_size=6))))
    scan = ScanConfig(x_min=lo, x_max=lo + draw(st.floats(0, 1e3, **finite)),
                      step=draw(st.floats(0.01, 10, **finite)), heights=heights,
                      threads=draw(st.integers(0, 16)))
    return replace(RunConfig(), tip=tip, environment=env, scan=scan)


@settings(max_examples=60, deadline=None)
@given(cfg=configs())
def test_round_trip(cfg):
    assert parse_config(render_config(cfg)) == cfg


def test_scan_rows_and_header(tmp_path):
    out = tmp_path / "o"
    assert cli.main(["scan", "--out", str(out)]) == 0
    rows = body(out / "scan.csv")
    assert rows[0] == "position_nm,signal" and len(rows) == 402
    head = [ln[2:] for ln in open(out / "scan.csv").read().splitlines()
            if ln.startswith("# ")][1:]
    # the header is a loadable configuration
    assert parse_config("\n".join(head)) == RunConfig()


def test_sweep_rows(tmp_path):
    cfg = write(tmp_path, "[sample]\nemitters = -25, 25\n[scan]\nstep = 2\n")
    assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = body(tmp_path / "sweep.csv")
    assert rows[0] == "h_nm,resolved,dip_contrast" and len(rows) == 7
    assert [r.split(",")[1] for r in rows[1:]] == ["true"] * 5 + ["false"]


def test_sweep_needs_two_emitters(tmp_path):
    assert cli.main(["sweep", "--out", str(tmp_path)]) == cli.EXIT_CONFIG
    assert not (tmp_path / "sweep.csv").exists()


def test_quantum_outputs(tmp_path):
    assert cli.main(["quantum", "--out", str(tmp_path)]) == 0
    rows = body(tmp_path / "quantum_populations.csv")
    assert rows[0] == "t_ns,sigma_ee,sigma_gg" and len(rows) == 202
    sat = np.array([[float(v) for v in r.split(",")] for r in
                    body(tmp_path / "quantum_saturation.csv")[1:]])
    assert np.all(np.diff(sat[:, 1]) > 0) and sat[-1, 1] < 0.5


def test_fieldmap_outputs(tmp_path):
    cfg = write(tmp_path, "[tip]\nkind = aperture\nheight = 20\n[grid]\nx_min = -61\n"
                          "x_max = 61\nnx = 32\nz_min = -41\nz_max = 39\nnz = 21\n"
                          "max_steps = 40\n")
    assert cli.main(["fieldmap", "--config", cfg, "--out", str(tmp_path)]) == 0
    lines = open(tmp_path / "fieldmap.pgm").read().split("\n")
    assert lines[0] == "P2" and lines[2] == "32 21" and lines[3] == "65535"
    vals = np.array(" ".join(lines[4:]).split(), dtype=int)
    assert vals.size == 32 * 21 and vals.max() == 65535 and vals.min() >= 0
    assert len(body(tmp_path / "fieldmap.csv")) == 32 * 21 + 1
    flines = open(tmp_path / "fieldlines.csv").read()
    assert flines.count("# line ") == 24 and "forward=" in flines


def test_pgm_orientation():
    vals = np.array([[0.0, 0.0], [6.0, 6.0]])  # row 1 is the top of the map
    text = cli.pgm16(vals, 6.0).split("\n")
    assert text[4] == "65535 65535" and text[5] == "0 0"


def test_partial_files_removed(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise NumericalError("line tracing failed")

    monkeypatch.setattr(cli, "field_lines", boom)
    cfg = write(tmp_path, "[grid]\nx_min = -11\nx_max = 11\nnx = 4\nz_min = -7\n"
                          "z_max = 5\nnz = 3\n")
    assert cli.main(["fieldmap", "--config", cfg, "--out", str(tmp_path / "o")]) == 2
    assert os.listdir(tmp_path / "o") == []


def test_exit_codes(tmp_path):
    assert cli.main(["scan", "--config", str(tmp_path / "missing.ini")]) == cli.EXIT_IO
    bad = write(tmp_path, "[tip]\nheight = -5\n")
    assert cli.main(["scan", "--config", bad]) == cli.EXIT_CONFIG
    sing = write(tmp_path, "[tip]\nkind = aperture\nheight = 10\n[grid]\nx_min = -40\n"
                           "x_max = 40\nnx = 3\nz_min = 10\nz_max = 20\nnz = 2\n", "s.ini")
    assert cli.main(["fieldmap", "--config", sing, "--out", str(tmp_path)]) == cli.EXIT_NUMERIC
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert cli.main(["scan", "--out", str(blocker / "sub")]) == cli.EXIT_IO
    with pytest.raises(SystemExit):
        cli.main(["render"])


def test_deterministic_across_threads(tmp_path, monkeypatch):
    cfg = write(tmp_path, "[tip]\nkind = aperture\n[sample]\nemitters = -25, 25\n"
                          "[scan]\nstep = 4\n")
    outs = []
    for i, n in enumerate(("1", "4", "1")):
        d = tmp_path / f"r{i}"
        monkeypatch.setenv("NSOM_THREADS", n)
        assert cli.main(["scan", "--config", cfg, "--out", str(d)]) == 0
        outs.append((d / "scan.csv").read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_validate_exits_zero(capsys):
    assert cli.main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out and "invariants hold" in out


def test_console_script(tmp_path):
    r = subprocess.run([sys.executable, "-m", "nsomsim.cli", "quantum", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "quantum_saturation.csv").exists()
