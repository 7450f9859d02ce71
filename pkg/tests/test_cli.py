import json

import numpy as np
import pytest

from claritk.cli import main
from claritk.settling import (
    SettlingKind,
    SettlingModel,
    model_from_text,
    model_to_text,
)

GEOM_TXT = """\
diameter = 18.5
side_water_depth = 5.0
feedwell_diameter = 3.7
feedwell_depth = 1.8
weir_length = 55.0
n_tanks = 1
"""

MODEL = SettlingModel(SettlingKind.VESILIND, V0=2.5e-3, r_h=0.45)


@pytest.fixture
def geom_file(tmp_path):
    f = tmp_path / "geom.txt"
    f.write_text(GEOM_TXT)
    return f


@pytest.fixture
def model_file(tmp_path):
    f = tmp_path / "model.txt"
    f.write_text(model_to_text(MODEL))
    return f


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestStatePoint:
    def test_zero_feed_underloaded(self, capsys, geom_file, model_file):
        code, out, _ = run(capsys, "state-point", "--model", str(model_file),
                           "--geom", str(geom_file),
                           "--qi", "0.1", "--qr", "0.05", "--xf", "0")
        assert code == 0
        assert "underloaded" in out

    def test_json_matches_library(self, capsys, geom_file, model_file):
        from claritk.clarifier import (ClarifierGeometry, OperatingPoint,
                                       state_point)
        code, out, _ = run(capsys, "state-point", "--model", str(model_file),
                           "--geom", str(geom_file), "--json",
                           "--qi", "0.1", "--qr", "0.05", "--xf", "3.0")
        assert code == 0
        payload = json.loads(out)
        lib = state_point(MODEL, ClarifierGeometry(18.5, 5.0, 3.7, 1.8, 55.0, 1),
                          OperatingPoint(0.1, 0.05, 3.0))
        assert payload["X_u"] == lib.X_u
        assert payload["classification"] == lib.classification.value
        assert payload["limiting_flux"] == lib.limiting_flux

    def test_missing_input_file_exits_2(self, capsys, geom_file):
        code, _, err = run(capsys, "state-point", "--model", "/no/such/file",
                           "--geom", str(geom_file),
                           "--qi", "0.1", "--qr", "0.05", "--xf", "1")
        assert code == 2
        assert "/no/such/file" in err


class TestFitSettling:
    def test_points_fixture_recovers_generator(self, capsys, tmp_path):
        xs = np.arange(1.0, 9.0)
        rows = ["X_kg_m3,Vs_m_s"] + [
            f"{float(x)},{float(2.5e-3 * np.exp(-0.45 * x))!r}" for x in xs]
        f = tmp_path / "points.csv"
        f.write_text("\n".join(rows) + "\n")
        code, out, _ = run(capsys, "fit-settling", "--points", str(f),
                           "--kind", "vesilind", "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["V0"] == pytest.approx(2.5e-3, rel=1e-9)
        assert payload["r_h"] == pytest.approx(0.45, rel=1e-9)

    def test_batch_test_chain(self, capsys, tmp_path):
        paths = []
        for x in (2.0, 4.0, 6.0):
            vs = 2.5e-3 * np.exp(-0.45 * x)
            t = np.arange(0.0, 600.0, 30.0)
            h = 1.2 - vs * t
            f = tmp_path / f"test_{x}.csv"
            f.write_text(f"# X_kg_m3: {x}\ntime_s,height_m\n" +
                         "\n".join(f"{float(ti)!r},{float(hi)!r}"
                                    for ti, hi in zip(t, h)) + "\n")
            paths.append(str(f))
        out_file = tmp_path / "model.txt"
        code, _, _ = run(capsys, "fit-settling", "--tests", *paths,
                         "--out", str(out_file))
        assert code == 0
        model = model_from_text(out_file.read_text())
        assert model.V0 == pytest.approx(2.5e-3, rel=1e-6)
        assert model.r_h == pytest.approx(0.45, rel=1e-6)


class TestFilter:
    def test_filter_and_resample(self, capsys, tmp_path):
        f = tmp_path / "inflow.csv"
        f.write_text("t,value\n" + "\n".join(
            f"{60 * i},{5.0 + (i % 3)}" for i in range(50)) + "\n")
        code, out, _ = run(capsys, "filter", "--in", str(f), "--filter",
                           "movavg", "--window-n", "5", "--json")
        assert code == 0
        payload = json.loads(out)
        assert len(payload["values"]) == 50

    def test_validation_error_exit_2(self, capsys, tmp_path):
        f = tmp_path / "inflow.csv"
        f.write_text("t,value\n0,1\n")
        code, _, _ = run(capsys, "filter", "--in", str(f), "--filter",
                         "outliers", "--window-n", "20")
        assert code == 2


class TestMixer:
    MIXER_TXT = """\
id = mx1
center = 1.0, 2.0, 3.0
vertical_incl_deg = 15.0
azimuth_deg = 30.0
D_b = 0.58
F0 = 935.0
omega0 = 49.0
omega = 49.0
rho = 998.0
"""

    def test_source_matches_golden(self, capsys, tmp_path):
        f = tmp_path / "mx1.txt"
        f.write_text(self.MIXER_TXT)
        code, out, _ = run(capsys, "mixer-source", "--mixers", str(f))
        assert code == 0
        import pathlib
        golden = (pathlib.Path(__file__).parent / "golden" /
                  "mixer_single.dict").read_text()
        assert out == golden

    def test_tag_counts(self, capsys, tmp_path):
        f = tmp_path / "mx1.txt"
        f.write_text(self.MIXER_TXT)
        code, out, _ = run(capsys, "mixer-tag", "--mixer", str(f),
                           "--grid-origin", "0,1,2.5",
                           "--grid-h", "0.05", "--grid-counts", "40,40,20",
                           "--json")
        assert code == 0
        payload = json.loads(out)
        assert payload["count"] == len(payload["cells"]) > 0


class TestConfigFile:
    def test_config_provides_defaults_flags_win(self, capsys, tmp_path):
        f = tmp_path / "inflow.csv"
        f.write_text("t,value\n" + "\n".join(f"{i},{1.0}" for i in range(30)))
        cfg = tmp_path / "claritk.toml"
        cfg.write_text('window_n = 3\n')
        code, out, _ = run(capsys, "filter", "--in", str(f), "--filter",
                           "movavg", "--json", "--config", str(cfg))
        assert code == 0
        code2, out2, _ = run(capsys, "filter", "--in", str(f), "--filter",
                             "movavg", "--window-n", "7", "--json",
                             "--config", str(cfg))
        assert code2 == 0


def test_asm1_cstr_roundtrip(capsys, tmp_path):
    inflow = tmp_path / "in.txt"
    inflow.write_text("S_S = 60\nS_NH = 25\nS_ALK = 7\n")
    init = tmp_path / "init.txt"
    init.write_text("S_S = 30\nX_BH = 100\nS_ALK = 6\n")
    out_file = tmp_path / "traj.csv"
    code, _, _ = run(capsys, "asm1-cstr", "--q", "0.05", "--v", "500",
                     "--inflow-state", str(inflow), "--init-state", str(init),
                     "--duration", "600", "--dt", "30",
                     "--out", str(out_file))
    assert code == 0
    lines = out_file.read_text().strip().splitlines()
    assert lines[0].startswith("t,S_I,S_S")
    assert len(lines) == 22  # header + t=0 + 20 steps
