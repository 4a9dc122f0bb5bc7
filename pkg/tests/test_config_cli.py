import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from laserweed import cli
from laserweed.config import ConfigError, RunConfig, load_config, merge
from laserweed.vision.image import read_pnm, write_pnm

ROOT = Path(__file__).resolve().parents[1]


def test_default_file_spells_out_the_defaults():
    assert load_config(ROOT / "configs" / "default.toml") == RunConfig()


def test_merge_replaces_only_given_keys():
    cfg = merge(RunConfig(), {"world": {"row_count": 1}, "navigation": {"speed_cm_s": 30},
                              "gantry": {"x": {"microstepping": 8}}, "seed": 4})
    assert cfg.world.row_count == 1 and cfg.world.row_length_m == 10.0
    assert cfg.navigation.speed_cm_s == 30.0 and isinstance(cfg.navigation.speed_cm_s, float)
    assert cfg.gantry.x.microstepping == 8 and cfg.gantry.x.teeth == 20
    assert cfg.seed == 4


@pytest.mark.parametrize("table", [{"bogus": {}}, {"navigation": {"speed": 1}},
                                   {"gantry": {"quantized": 1}}, {"navigation": 3},
                                   {"world": {"rows": 2}}])
def test_bad_tables_are_rejected(table):
    with pytest.raises(ConfigError):
        merge(RunConfig(), table)


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("seed = = 3\n")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_precedence(tmp_path):
    cfg_file = tmp_path / "run.toml"
    cfg_file.write_text('seed = 5\nout = "from-file"\n[world]\nrow_count = 3\n[navigation]\nspeed_cm_s = 30\n')
    _, cfg, _ = cli.parse_args(["mission", "--config", str(cfg_file)])
    assert (cfg.seed, cfg.out, cfg.world.row_count, cfg.navigation.speed_cm_s) == (5, "from-file", 3, 30.0)
    _, cfg, _ = cli.parse_args(["mission", "--config", str(cfg_file), "--scenario", "single-row",
                                "--seed", "9", "--speed", "55"])
    assert (cfg.seed, cfg.world.row_count, cfg.navigation.speed_cm_s) == (9, 1, 55.0)
    _, cfg, _ = cli.parse_args(["sweep", "--speeds", "30,50", "--trials", "2"])
    assert cfg.experiment.speeds == (30.0, 50.0) and cfg.experiment.trials == 2


def test_exit_codes(tmp_path, capsys):
    assert cli.main([]) == 2
    assert cli.main(["sweep", "--speeds", "fast"]) == 2
    assert cli.main(["mission", "--speed", "-3"]) == 2
    assert cli.main(["kinematics", "--config", str(tmp_path / "missing.toml")]) == 2
    assert cli.main(["gantry", "--target", "500", "0", "0", "--out", str(tmp_path)]) == 1
    assert cli.main(["vision", "run", "--in", str(tmp_path / "missing.ppm"), "--out", str(tmp_path)]) == 1
    capsys.readouterr()


def test_kinematics_and_gantry_output(tmp_path, capsys):
    assert cli.main(["kinematics", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "link_angle_deg_formula,-10.81" in out and "climb_limit_cm,13.7" in out
    assert (tmp_path / "kinematics.csv").exists()
    assert cli.main(["gantry", "--target", "10", "20", "0", "--out", str(tmp_path)]) == 0
    assert "y1,32000,," in (tmp_path / "plan.csv").read_text()


def test_render_then_vision(tmp_path):
    assert cli.main(["render", "--camera", "weed", "--out", str(tmp_path), "--scenario", "single-row"]) == 0
    (img,) = tmp_path.glob("*.ppm")
    assert read_pnm(img).shape == (480, 640, 3)
    assert cli.main(["vision", "run", "--in", str(img), "--stage", "mask", "--out", str(tmp_path / "v")]) == 0
    assert (tmp_path / "v" / "detections.csv").exists()
    gray = np.zeros((20, 20), np.uint8)
    write_pnm(tmp_path / "g.pgm", gray)
    # a grayscale input is a usage error
    assert cli.main(["vision", "run", "--in", str(tmp_path / "g.pgm"), "--out", str(tmp_path / "w")]) == 2


def test_mission_command(tmp_path):
    toml = tmp_path / "small.toml"
    toml.write_text("[world]\nrow_count = 1\nrow_length_m = 1.0\n")
    assert cli.main(["mission", "--scenario", str(toml), "--out", str(tmp_path / "m"), "--no-fire"]) == 0
    assert (tmp_path / "m" / "raw.csv").read_bytes().startswith(b"t,event,x,y,heading,detail\r\n")
    assert (tmp_path / "m" / "summary.csv").exists()


@pytest.mark.parametrize("command", ["kinematics", "gantry", "vision", "mission", "sweep", "accuracy",
                                     "stability", "render"])
def test_help_for_every_command(command):
    done = subprocess.run([sys.executable, "-m", "laserweed.cli", command, "--help"],
                          capture_output=True, text=True)
    assert done.returncode == 0
    assert "usage: laserweed " + command in done.stdout
