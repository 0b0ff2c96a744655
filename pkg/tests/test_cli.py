import json
import subprocess
import sys

import numpy as np
import pytest

from bosonsim import __version__
from bosonsim.cli import parse_values, run_cli
from bosonsim.io import read_curve, read_map, read_stack
from bosonsim.scenes import nanobridge_config


@pytest.fixture(scope="module")
def scene_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("scene") / "bridge.json"
    cfg = nanobridge_config(n=48, dx=50.0, bridge_width=300.0, bridge_length=600.0, defects=False)
    p.write_text(json.dumps(cfg))
    return p


WINDOW = "825,825,1575,1575"


def _err_line(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return err


def test_version_and_help(capsys):
    with pytest.raises(SystemExit) as exc:
        run_cli(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
    with pytest.raises(SystemExit) as exc:
        run_cli(["--help"])
    assert exc.value.code == 0
    assert "simulate" in capsys.readouterr().out


def test_dispersion_reference(capsys):
    assert run_cli(["dispersion", "--thickness", "50", "--freq", "1491.9",
                    "--substrate", "metal"]) == 0
    out = capsys.readouterr().out
    lam = float(out.split("lambda_p_nm=")[1].split()[0])
    assert lam == pytest.approx(230, rel=0.10)


def test_missing_scene_exit_2(capsys, tmp_path):
    missing = tmp_path / "nope.json"
    assert run_cli(["simulate", "nfpc", "--scene", str(missing), "--out",
                    str(tmp_path / "m.bsn")]) == 2
    err = _err_line(capsys)
    assert len(err) == 1 and err[0].startswith("error: ") and str(missing) in err[0]


def test_unknown_flag_single_line(capsys):
    assert run_cli(["dispersion", "--thickness", "50", "--colour", "red"]) == 2
    err = _err_line(capsys)
    assert len(err) == 1 and "--colour" in err[0]


def test_schema_violation_names_path(capsys, tmp_path):
    cfg = nanobridge_config(n=32, dx=50.0)
    cfg["optics"]["tip_radius"] = 20
    p = tmp_path / "bad.json"
    p.write_text(json.dumps(cfg))
    assert run_cli(["simulate", "nfpc", "--scene", str(p), "--out", str(tmp_path / "m.bsn")]) == 1
    err = _err_line(capsys)
    assert len(err) == 1 and "optics.tip_radius" in err[0]


def test_zero_bias_warning_and_zero_map(capsys, scene_file, tmp_path):
    out = tmp_path / "z.bsn"
    assert run_cli(["simulate", "nfpc", "--scene", str(scene_file), "--bias", "0", "--temp", "8.3",
                    "--window", WINDOW, "--step", "150", "--out", str(out)]) == 0
    assert "warning" in capsys.readouterr().err
    assert np.all(read_map(out).values == 0)


def test_simulate_both_and_deterministic(scene_file, tmp_path):
    args = ["simulate", "both", "--scene", str(scene_file), "--temp", "8.3", "--window", WINDOW,
            "--step", "150"]
    assert run_cli(args + ["--out", str(tmp_path / "a.bsn")]) == 0
    assert run_cli(args + ["--out", str(tmp_path / "b.bsn")]) == 0
    for ch in ("nfpc", "ssnom"):
        a = (tmp_path / f"a_{ch}.bsn").read_bytes()
        assert a == (tmp_path / f"b_{ch}.bsn").read_bytes()
        meta = read_map(tmp_path / f"a_{ch}.bsn").metadata
        assert meta["fingerprint"].startswith("sha256:") and meta["version"] == __version__


def test_dump_thermal(scene_file, tmp_path):
    out = tmp_path / "d.bsn"
    assert run_cli(["simulate", "nfpc", "--scene", str(scene_file), "--window", WINDOW,
                    "--step", "750", "--dump-thermal", "1200,1200", "--out", str(out)]) == 0
    T = read_map(tmp_path / "d_thermal.bsn")
    assert T.values.shape == (48, 48) and T.values.max() > 0


def test_sweep_analyze_render_pipeline(scene_file, tmp_path, capsys):
    stack = tmp_path / "stack"
    assert run_cli(["sweep", "temp", "--values", "7.6:8.8:7", "--scene", str(scene_file),
                    "--window", WINDOW, "--step", "150", "--out", str(stack)]) == 0
    st = read_stack(stack)
    assert len(st) == 7 and st.parameter == "temperature"
    te = tmp_path / "te.bsn"
    assert run_cli(["analyze", "te-map", "--stack", str(stack), "--threshold", "0.05",
                    "--out", str(te)]) == 0
    tem = read_map(te)
    valid = tem.values[tem.values > 0]
    assert valid.size and valid.min() >= 7.6 and valid.max() <= 8.8
    curve = tmp_path / "int.csv"
    assert run_cli(["analyze", "integrate", "--stack", str(stack), "--out", str(curve)]) == 0
    cols, units, meta = read_curve(curve)
    assert units["temperature"] == "K" and len(cols["integrated_signal"]) == 7
    assert meta["fingerprint"] == st.fingerprint
    first = curve.read_bytes()
    assert run_cli(["analyze", "integrate", "--stack", str(stack), "--out", str(curve)]) == 0
    assert curve.read_bytes() == first
    png = tmp_path / "te.png"
    assert run_cli(["render", "--map", str(te), "--out", str(png), "--clip", "1:99"]) == 0
    assert png.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_fringes_command(tmp_path, capsys):
    from bosonsim.io import write_map

    x = (np.arange(400) + 0.5) * 10.0
    vals = np.tile(np.sin(2 * np.pi * x / 268.0), (20, 1))
    write_map(tmp_path / "f.bsn", vals, {"channel": "nfpc"}, dx=10.0)
    capsys.readouterr()
    assert run_cli(["analyze", "fringes", "--map", str(tmp_path / "f.bsn"), "--line",
                    "5,100,3995,100", "--width", "5", "--band", "100:800",
                    "--out", str(tmp_path / "p.csv")]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["wavelength_nm"] == pytest.approx(268, abs=3)


def test_calibrate_commands(tmp_path, capsys):
    assert run_cli(["calibrate", "apply", "--alpha", "1.398", "--dT", "5.224",
                    "--traw", "5.0"]) == 0
    assert float(capsys.readouterr().out.split()[1]) == pytest.approx(8.40, abs=0.01)
    a = tmp_path / "a.csv"
    a.write_text("t_raw,t_sample\n3,%r\n6,%r\n" % tuple(
        (t**1.4 + 5.0**1.4) ** (1 / 1.4) for t in (3.0, 6.0)))
    assert run_cli(["calibrate", "fit", "--anchors", str(a)]) == 0
    res = json.loads(capsys.readouterr().out)
    assert res["alpha"] == pytest.approx(1.4, abs=1e-6) and res["dT"] == pytest.approx(5.0, abs=1e-6)


def test_parse_values():
    assert np.allclose(parse_values("7:8:3"), [7, 7.5, 8])
    assert np.allclose(parse_values("1,2.5"), [1, 2.5])


def test_console_script_runs():
    r = subprocess.run([sys.executable, "-m", "bosonsim.cli", "dispersion", "--thickness", "50",
                        "--substrate", "dielectric"], capture_output=True, text=True)
    assert r.returncode == 0 and "lambda_p_nm=" in r.stdout
