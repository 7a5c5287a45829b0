"""Config parsing, subcommand behavior, exit codes, and report determinism."""

import csv
import json
import math

import numpy as np
import pytest

from ioncavity.cli import ConfigError, main, parse_config

MINIMAL = '{"params": {}, "layout": {}}'


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


# ---------------------------------------------------------------- parsing

def test_parse_minimal_config_applies_defaults():
    config = parse_config(MINIMAL)
    assert config.model == "effective"
    assert config.grid_policy == 20
    assert config.noise is None
    assert config.output_path is None
    assert config.layout.vib_cutoff == 5 and config.layout.cav_cutoff == 5
    assert config.params.Omega == 2 * math.pi * 1e5


def test_parse_config_validation_messages():
    with pytest.raises(ConfigError, match=r"eta_c must lie in \(0,1\)"):
        parse_config('{"params": {"eta_c": 1.5}, "layout": {}}')
    with pytest.raises(ConfigError, match="omega_x"):
        parse_config('{"params": {"omega_x": 1.0}, "layout": {}}')
    with pytest.raises(ConfigError, match="unknown key in config: 'extra'"):
        parse_config('{"params": {}, "layout": {}, "extra": 1}')
    with pytest.raises(ConfigError, match="missing required config key: 'layout'"):
        parse_config('{"params": {}}')
    with pytest.raises(ConfigError, match="line 1, column 15"):
        parse_config('{"params": {},,,}')
    with pytest.raises(ConfigError, match="params.nu must be a number"):
        parse_config('{"params": {"nu": "fast"}, "layout": {}}')
    with pytest.raises(ConfigError, match="grid_policy"):
        parse_config('{"params": {}, "layout": {}, "grid_policy": 0}')
    with pytest.raises(ConfigError, match="model"):
        parse_config('{"params": {}, "layout": {}, "model": "magic"}')
    with pytest.raises(ConfigError, match="layout.vib_cutoff"):
        parse_config('{"params": {}, "layout": {"vib_cutoff": 4.5}}')


def test_parse_config_model_case_and_noise():
    config = parse_config(
        '{"params": {}, "layout": {}, "model": "Full",'
        ' "noise": {"kappa": 10.0}}')
    assert config.model == "full"
    assert config.noise.kappa == 10.0
    assert config.noise.gamma == 0.0
    with pytest.raises(ConfigError, match="kappa must be >= 0"):
        parse_config('{"params": {}, "layout": {}, "noise": {"kappa": -1}}')


# ---------------------------------------------------------------- truth-table

def test_truth_table_command_and_determinism(tmp_path):
    cfg = write(tmp_path, "cfg.json", MINIMAL)
    out1, out2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    assert main(["truth-table", "--config", cfg, "--out", out1]) == 0
    assert main(["truth-table", "--config", cfg, "--out", out2]) == 0
    blob1, blob2 = open(out1, "rb").read(), open(out2, "rb").read()
    assert blob1 == blob2        # byte-identical reports

    report = json.loads(blob1)
    assert report["basis"] == ["00", "01", "10", "11"]
    g1 = complex(*report["makhlin"]["g1"])
    assert abs(g1) < 1e-9
    assert abs(report["makhlin"]["g2"] - 1.0) < 1e-9
    assert report["local_equiv_fidelity"] > 1 - 1e-6
    assert all(leak < 1e-10 for leak in report["leakage_per_input"])


@pytest.mark.filterwarnings("ignore:time step leaves")
def test_truth_table_full_model(tmp_path):
    cfg = write(tmp_path, "cfg.json",
                '{"params": {}, "layout": {}, "model": "full"}')
    out = str(tmp_path / "full.json")
    assert main(["truth-table", "--config", cfg, "--out", out]) == 0
    report = json.loads(open(out).read())
    assert report["local_equiv_fidelity"] >= 0.99


def test_output_path_resolution(tmp_path):
    # --out missing falls back to config output_path; neither is an error
    target = str(tmp_path / "from_config.json")
    cfg = write(tmp_path, "cfg.json",
                json.dumps({"params": {}, "layout": {}, "output_path": target}))
    assert main(["truth-table", "--config", cfg]) == 0
    assert json.loads(open(target).read())["basis"][0] == "00"
    bare = write(tmp_path, "bare.json", MINIMAL)
    assert main(["truth-table", "--config", bare]) == 2


# ---------------------------------------------------------------- rwa-compare

@pytest.mark.filterwarnings("ignore:time step leaves")
def test_rwa_compare_default_masks(tmp_path):
    cfg = write(tmp_path, "cfg.json", MINIMAL)
    out = str(tmp_path / "rwa.csv")
    assert main(["rwa-compare", "--config", cfg, "--out", out]) == 0
    rows = read_csv(out)
    assert rows[0] == ["mask", "amp_e10_re", "amp_e10_im", "amp_g01_re",
                       "amp_g01_im"]
    by_mask = {row[0]: [float(v) for v in row[1:]] for row in rows[1:]}
    # resonant exchange term alone: exact −1 return amplitude
    assert abs(complex(by_mask["ii"][0], by_mask["ii"][1]) - (-1.0)) < 1e-9
    # all seven terms: within the RWA error of −1 (reported, not pinned)
    assert abs(complex(by_mask["all"][0], by_mask["all"][1]) - (-1.0)) < 0.01
    # empty mask: input unchanged
    assert by_mask["none"] == [1.0, 0.0, 0.0, 0.0]


@pytest.mark.filterwarnings("ignore:time step leaves")
def test_rwa_compare_custom_and_bad_masks(tmp_path):
    cfg = write(tmp_path, "cfg.json", MINIMAL)
    out = str(tmp_path / "rwa.csv")
    code = main(["rwa-compare", "--config", cfg, "--out", out,
                 "--mask", "ii,vi", "--mask", "none"])
    assert code == 0
    rows = read_csv(out)
    assert [row[0] for row in rows[1:]] == ["ii+vi", "none"]
    assert main(["rwa-compare", "--config", cfg, "--out", out,
                 "--mask", "ix"]) == 2


# ---------------------------------------------------------------- noise-sweep

def test_noise_sweep_presets_flags_optical(tmp_path):
    cfg = write(tmp_path, "cfg.json",
                '{"params": {}, "layout": {}, "grid_policy": 30}')
    out = str(tmp_path / "sweep.csv")
    assert main(["noise-sweep", "--config", cfg, "--out", out]) == 0
    rows = read_csv(out)
    flags = {row[0]: row[-1] for row in rows[1:]}
    assert flags == {"optical": "true", "microwave": "false"}
    payload = json.loads(open(str(tmp_path / "sweep.json")).read())
    assert payload["tau_hadamard"] == 1.25e-6
    names = [s["name"] for s in payload["scenarios"]]
    assert names == ["optical", "microwave"]


def test_noise_sweep_zero_noise_and_monotone_kappa(tmp_path):
    cfg = write(tmp_path, "cfg.json",
                '{"params": {}, "layout": {}, "grid_policy": 200}')
    out = str(tmp_path / "zero.csv")
    assert main(["noise-sweep", "--config", cfg, "--out", out,
                 "--scenario", "clean,0,0,0"]) == 0
    rows = read_csv(out)
    assert all(float(row[8]) >= 1 - 1e-6 for row in rows[1:])

    cfg30 = write(tmp_path, "cfg30.json",
                  '{"params": {}, "layout": {}, "grid_policy": 30}')
    out = str(tmp_path / "kappa.csv")
    assert main(["noise-sweep", "--config", cfg30, "--out", out,
                 "--scenario", "k0,0,0,0", "--scenario", "k1,2e3,0,0",
                 "--scenario", "k2,2e4,0,0"]) == 0
    means = [float(row[9]) for row in read_csv(out)[1::4]]
    assert means[0] >= means[1] >= means[2]


def test_noise_sweep_jobs_deterministic(tmp_path):
    cfg = write(tmp_path, "cfg.json",
                '{"params": {}, "layout": {}, "grid_policy": 30}')
    out1, out2 = str(tmp_path / "j1.csv"), str(tmp_path / "j2.csv")
    args = ["--scenario", "a,1e3,0,0", "--scenario", "b,0,1e3,0"]
    assert main(["noise-sweep", "--config", cfg, "--out", out1] + args) == 0
    assert main(["noise-sweep", "--config", cfg, "--out", out2, "--jobs", "2"]
                + args) == 0
    assert open(out1, "rb").read() == open(out2, "rb").read()


def test_noise_sweep_unstable_grid_exits_3(tmp_path, capsys):
    cfg = write(tmp_path, "cfg.json",
                '{"params": {}, "layout": {}, "grid_policy": 1}')
    out = str(tmp_path / "boom.csv")
    code = main(["noise-sweep", "--config", cfg, "--out", out,
                 "--scenario", "hot,0,0,1e6"])
    assert code == 3
    assert "numerical failure" in capsys.readouterr().err


def test_noise_sweep_bad_scenario_spec(tmp_path):
    cfg = write(tmp_path, "cfg.json", MINIMAL)
    out = str(tmp_path / "x.csv")
    assert main(["noise-sweep", "--config", cfg, "--out", out,
                 "--scenario", "broken,1,2"]) == 2
    assert main(["noise-sweep", "--config", cfg, "--out", out,
                 "--scenario", "neg,-1,0,0"]) == 2


# ---------------------------------------------------------------- lamb-dicke

def test_lamb_dicke_check_bound_and_slope(tmp_path):
    cfg = write(tmp_path, "cfg.json", '{"params": {}, "layout": {"vib_cutoff": 6}}')
    out = str(tmp_path / "ld.csv")
    assert main(["lamb-dicke-check", "--config", cfg, "--out", out]) == 0
    rows = read_csv(out)
    assert rows[0] == ["eta", "error_norm", "spectral_bound"]
    etas, errors, bounds = np.array([[float(v) for v in row] for row in rows[1:]]).T
    assert np.all(errors <= bounds)
    slope = np.polyfit(np.log(etas), np.log(errors), 1)[0]
    assert slope == pytest.approx(3.0, abs=0.2)


# ---------------------------------------------------------------- exit codes

def test_config_error_exits_2(tmp_path, capsys):
    missing = str(tmp_path / "nope.json")
    assert main(["truth-table", "--config", missing, "--out", "x"]) == 2
    assert "config error" in capsys.readouterr().err
    bad = write(tmp_path, "bad.json", '{"params": {"eta_c": 1.5}, "layout": {}}')
    assert main(["truth-table", "--config", bad, "--out", "x"]) == 2
    err = capsys.readouterr().err
    assert "eta_c must lie in (0,1)" in err
