import json

import numpy as np
import pytest

from wavemaslov.cli import BETA_HEADER, EVANS_HEADER, main
from wavemaslov.config import ConfigError, config_from_dict, load_config

STEPS = 3


def write_config(path, **sections):
    path.write_text(json.dumps(sections))
    return path


@pytest.fixture(scope="module")
def file_config(tmp_path_factory, saved_profile):
    d = tmp_path_factory.mktemp("cfg")
    return write_config(d / "run.json", system={"preset": "fhn", "eps": 0.0005},
                        wave={"source": "file", "path": str(saved_profile)},
                        analysis={"lambda_steps": STEPS})


@pytest.fixture(scope="module")
def two_runs(file_config, tmp_path_factory):
    outs = [tmp_path_factory.mktemp(f"run{k}") for k in range(2)]
    codes = [main(["analyze", "--config", str(file_config), "--out", str(o)]) for o in outs]
    return codes, outs


def _report_without_meta(path):
    d = json.loads(path.read_text())
    d.pop("meta")
    return d


def test_analyze_succeeds_and_writes_all_files(two_runs):
    codes, (out, _) = two_runs
    assert codes == [0, 0]
    report = json.loads((out / "report.json").read_text())
    assert report["consistent"] is True
    assert report["maslov"]["signatures"] == [-1, 1, -1, 1]
    assert "timing" in report["meta"]
    evans = (out / "evans.csv").read_text().splitlines()
    assert evans[0] == EVANS_HEADER and len(evans) == STEPS + 1
    assert (out / "beta.csv").read_text().splitlines()[0] == BETA_HEADER


def test_analyze_is_deterministic(two_runs):
    _, (a, b) = two_runs
    for name in ("evans.csv", "beta.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert _report_without_meta(a / "report.json") == _report_without_meta(b / "report.json")


def test_numbers_round_trip(two_runs):
    _, (out, _) = two_runs
    row = (out / "evans.csv").read_text().splitlines()[1].split(",")
    for tok in row:
        assert repr(float(tok)) == repr(float(repr(float(tok))))
        assert float("%.17g" % float(tok)) == float(tok)


def test_beta_trace_zeros(two_runs):
    _, (out, _) = two_runs
    data = np.loadtxt(out / "beta.csv", delimiter=",", skiprows=1)
    z, beta = data[:, 0], data[:, 1]
    report = json.loads((out / "report.json").read_text())
    interior = [c["z"] for c in report["maslov"]["crossings"]]
    flips = np.nonzero(np.sign(beta[:-1]) * np.sign(beta[1:]) < 0)[0]
    assert len(flips) == len(interior) == 3
    for k, zc in zip(flips, interior):
        assert z[k] <= zc <= z[k + 1]
    # the trace ends at tau, where the reference plane meets E^u by construction
    assert z[-1] == pytest.approx(report["maslov"]["tau"])
    assert abs(beta[-1]) < 1e-9 * np.max(np.abs(beta))


def test_flipped_invariant_raises_the_alarm(file_config, tmp_path, capsys):
    code = main(["analyze", "--config", str(file_config), "--out", str(tmp_path), "--debug-flip-lt",
                 "--lambda-steps", "1", "--lambda-min", "0.9", "--lambda-max", "1.0"])
    assert code == 2
    assert "parity inconsistency" in capsys.readouterr().err
    assert json.loads((tmp_path / "report.json").read_text())["consistent"] is False


def test_missing_profile_is_an_operational_error(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", wave={"source": "file", "path": "nowhere/profile.json"})
    assert main(["wave", "--config", str(cfg)]) == 1
    err = capsys.readouterr().err
    assert "nowhere/profile.json" in err and "[config]" in err


def test_bad_configs(tmp_path, capsys):
    (tmp_path / "broken.json").write_text("{")
    assert main(["wave", "--config", str(tmp_path / "broken.json")]) == 1
    cfg = write_config(tmp_path / "k.json", system={"preset": "fhn", "epsilon": 1})
    assert main(["wave", "--config", str(cfg)]) == 1
    assert "epsilon" in capsys.readouterr().err
    assert main(["wave", "--config", str(tmp_path / "absent.json")]) == 1


def test_beyond_the_fold_names_the_stage(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", system={"preset": "fhn"})
    assert main(["wave", "--config", str(cfg), "--eps", "0.002", "--out", str(tmp_path)]) == 1
    assert "[homoclinic]" in capsys.readouterr().err


def test_wave_command_reproduces_the_saved_profile(file_config, saved_profile, tmp_path):
    assert main(["wave", "--config", str(file_config), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "profile.json").read_bytes() == saved_profile.read_bytes()


def test_evans_scan_row_count(file_config, tmp_path):
    code = main(["evans-scan", "--config", str(file_config), "--out", str(tmp_path),
                 "--lambda-min", "0.5", "--lambda-max", "1.0", "--lambda-steps", "2"])
    assert code == 0
    lines = (tmp_path / "evans.csv").read_text().splitlines()
    assert lines[0] == EVANS_HEADER and len(lines) == 3


def test_config_precedence_and_paths(tmp_path):
    (tmp_path / "p.json").write_text("{}")
    cfg = config_from_dict({"wave": {"source": "file", "path": "p.json"},
                            "analysis": {"lambda_steps": 7}, "output": {"directory": "res"}}, tmp_path)
    assert cfg.wave.path == tmp_path / "p.json"
    assert cfg.output == tmp_path / "res"
    assert cfg.analysis.lambda_steps == 7
    cfg.validate()
    from types import SimpleNamespace

    from wavemaslov.config import apply_overrides

    args = SimpleNamespace(a=None, eps=0.0004, gamma=None, preset=None, lambda_min=None, lambda_max=None,
                           lambda_steps=5, tau=None, debug_flip_lt=False, out=None)
    over = apply_overrides(cfg, args)
    assert over.analysis.lambda_steps == 5 and over.system.eps == 0.0004
    assert over.output == cfg.output


def test_config_validation_rules(tmp_path):
    with pytest.raises(ConfigError, match="preset"):
        config_from_dict({"system": {"preset": "brusselator"}}).validate()
    with pytest.raises(ConfigError, match="guess"):
        config_from_dict({"system": {"preset": "custom", "f": [0, -0.2, 1.2, -1], "g": [0, -0.01]}}).validate()
    with pytest.raises(ConfigError, match="lambda_min"):
        config_from_dict({"analysis": {"lambda_min": 1.0, "lambda_max": 0.5}}).validate()
    with pytest.raises(ConfigError, match="tolerance"):
        config_from_dict({"wave": {"solver": {"residual_tol": -1.0}}}).validate()
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")
