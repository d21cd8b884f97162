import json
import math

import pytest

from eulerdamp.cli import (
    ConfigError,
    ExperimentConfig,
    config_echo,
    execute,
    main,
    parse_config,
    render_config,
)


def strip_wall_time(path):
    with open(path) as fh:
        payload = json.load(fh)
    payload.get("provenance", {}).pop("wall_time_s", None)
    return payload


def test_defaults():
    cfg = parse_config()
    assert cfg.params.gamma == 1.4
    assert cfg.cfl == 0.5
    assert cfg.grid.n_cells == 1024
    assert cfg.horizon == 1000.0
    assert cfg.data.family == "sine"
    assert cfg.kind == "run"


def test_semantic_errors_are_named():
    with pytest.raises(ConfigError, match="gamma must exceed 1"):
        parse_config("gamma=0.9")
    with pytest.raises(ConfigError, match="unknown key"):
        parse_config("gammma=1.4")
    with pytest.raises(ConfigError, match="n_cells"):
        parse_config("n_cells=8")
    with pytest.raises(ConfigError, match="kind"):
        parse_config("kind=explode")
    with pytest.raises(ConfigError, match="expected key=value"):
        parse_config("gamma 1.4")


def test_theorem_region_config_accepted():
    cfg = parse_config("mu=1\nlambda=2.5\nkind=run\n")
    assert cfg.params.mu == 1.0
    assert cfg.params.lam == 2.5


def test_overrides_beat_file():
    cfg = parse_config("gamma=2.0\n", {"gamma": "3.0"})
    assert cfg.params.gamma == 3.0


def test_config_echo_round_trip():
    cfg = parse_config("mu=1\nlambda=2.5\nn_cells=128\neps_list=0.1,0.02\n"
                       "family=gaussian_bump\nwidth=0.7\n")
    again = parse_config(render_config(cfg))
    assert again == cfg
    echo = config_echo(cfg)
    assert echo["lambda"] == 2.5
    assert echo["eps_list"] == [0.1, 0.02]


def run_cli(tmp_path, *args):
    return main(list(args) + ["--output", str(tmp_path / "out")])


def test_cli_run_writes_artifacts(tmp_path):
    code = run_cli(tmp_path, "run", "--n_cells", "64", "--horizon", "2.0",
                   "--series_interval", "0.5")
    assert code == 0
    csv_text = (tmp_path / "out.csv").read_text()
    lines = csv_text.strip().splitlines()
    assert lines[0] == "t,sup_r,sup_s,sup_rx,sup_sx,sup_rt,sup_st"
    ts = [float(row.split(",")[0]) for row in lines[1:]]
    assert ts == sorted(ts)
    payload = strip_wall_time(tmp_path / "out.json")
    assert payload["schema"] == 1
    assert payload["status"]["kind"] == "global"


def test_cli_config_error_exit_code(tmp_path):
    code = run_cli(tmp_path, "run", "--gamma", "0.5")
    assert code == 2


def test_cli_vacuum_exit_code(tmp_path):
    code = run_cli(tmp_path, "run", "--n_cells", "64", "--horizon", "5.0",
                   "--epsilon", "0.8", "--u_floor", "0.5", "--lambda", "0.0",
                   "--v_scale", "1.0")
    payload = strip_wall_time(tmp_path / "out.json")
    assert payload["status"]["kind"] in ("vacuum", "blowup")
    if payload["status"]["kind"] == "vacuum":
        assert code == 3
    else:
        assert code == 0


def test_cli_blowup_is_success(tmp_path):
    code = run_cli(tmp_path, "run", "--gamma", "3.0", "--lambda", "0.0",
                   "--mu", "0.0", "--epsilon", "0.05", "--n_cells", "512",
                   "--family", "simple_wave_s_const", "--horizon", "30.0",
                   "--blowup_factor", "8.0")
    assert code == 0
    payload = strip_wall_time(tmp_path / "out.json")
    assert payload["status"]["kind"] == "blowup"
    assert payload["t_star"] is not None


def test_cli_lemma_check(tmp_path):
    code = run_cli(tmp_path, "lemma-check", "--mu", "1.0", "--lambda", "4.0",
                   "--t_max", "1e7")
    assert code == 0
    payload = strip_wall_time(tmp_path / "out.json")
    assert abs(payload["sup_value"] - 1.0) <= 1e-6
    assert payload["stable"] is True


def test_cli_lemma_check_region_guard(tmp_path):
    code = run_cli(tmp_path, "lemma-check", "--mu", "2.0", "--lambda", "1.0")
    assert code == 2


def test_cli_oracle_compare(tmp_path):
    code = run_cli(tmp_path, "oracle-compare", "--gamma", "3.0", "--lambda",
                   "0.0", "--mu", "0.0", "--epsilon", "0.05",
                   "--family", "simple_wave_s_const", "--n_cells", "1024",
                   "--horizon", "30.0", "--blowup_factor", "12.0")
    assert code == 0
    payload = strip_wall_time(tmp_path / "out.json")
    assert payload["t_star_oracle"] == pytest.approx(9.89, rel=0.01)
    assert payload["rel_gap"] < 0.15


def test_cli_oracle_compare_requires_no_damping(tmp_path):
    code = run_cli(tmp_path, "oracle-compare", "--lambda", "1.0")
    assert code == 2


def test_cli_sweep(tmp_path):
    code = run_cli(tmp_path, "sweep", "--mu", "2.0", "--lambda", "1.0",
                   "--gamma", "1.4", "--n_cells", "192",
                   "--u_scale", "0.0", "--v_scale", "1.0",
                   "--eps_list", "0.2,0.1,0.05,0.02", "--horizon", "2500",
                   "--blowup_factor", "4.0", "--series_interval", "2500")
    assert code == 0
    payload = strip_wall_time(tmp_path / "out.json")
    assert len(payload["points"]) == 4
    assert "exponent" in payload["fit"]
    csv_lines = (tmp_path / "out.csv").read_text().strip().splitlines()
    assert csv_lines[0] == "epsilon,status,t_star,t_star_low"
    assert len(csv_lines) == 5


def test_cli_determinism(tmp_path, monkeypatch):
    # identical config (including relative output path) twice: identical bytes
    args = ["run", "--n_cells", "64", "--horizon", "2.0",
            "--series_interval", "0.5", "--output", "out"]
    d1, d2 = tmp_path / "first", tmp_path / "second"
    d1.mkdir(), d2.mkdir()
    monkeypatch.chdir(d1)
    assert main(args) == 0
    monkeypatch.chdir(d2)
    assert main(args) == 0
    assert (d1 / "out.csv").read_bytes() == (d2 / "out.csv").read_bytes()
    assert strip_wall_time(d1 / "out.json") == strip_wall_time(d2 / "out.json")


def test_cli_worker_count_does_not_change_artifacts(tmp_path):
    base = ["sweep", "--mu", "2.0", "--lambda", "1.0", "--n_cells", "64",
            "--u_scale", "0.0", "--v_scale", "1.0",
            "--eps_list", "0.2,0.1", "--horizon", "50",
            "--blowup_factor", "4.0", "--series_interval", "50"]
    main(base + ["--workers", "1", "--output", str(tmp_path / "w1")])
    main(base + ["--workers", "2", "--output", str(tmp_path / "w2")])
    assert (tmp_path / "w1.csv").read_bytes() == (tmp_path / "w2.csv").read_bytes()
    p1 = strip_wall_time(tmp_path / "w1.json")
    p2 = strip_wall_time(tmp_path / "w2.json")
    for payload in (p1, p2):
        payload["config"].pop("workers")
        payload["config"].pop("output")
    assert p1 == p2


def test_cli_config_file(tmp_path):
    cfg_path = tmp_path / "exp.cfg"
    cfg_path.write_text("n_cells=64\nhorizon=1.0\nseries_interval=0.5\n"
                        "# a comment\n\ngamma=2.0\n")
    code = main(["run", "--config", str(cfg_path),
                 "--output", str(tmp_path / "out")])
    assert code == 0
    payload = strip_wall_time(tmp_path / "out.json")
    assert payload["config"]["gamma"] == 2.0
    assert payload["config"]["n_cells"] == 64
