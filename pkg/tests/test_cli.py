import json

import pytest

from shepplab import cli
from shepplab.errors import EmbeddingError


def run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_asymptotics_example(capsys):
    code, out, _ = run(capsys, "asymptotics", "--h", "0.25", "--T", "1", "--pickands", "1", "--u", "3")
    assert code == 0
    assert "value=0.246019 " in out and "log=-1.40235" in out


def test_unknown_flag_lists_valid_flags(capsys):
    code, _, err = run(capsys, "tail", "--bogus", "1")
    assert code == 2
    assert "--bogus" in err and "--reps" in err and "--seed" in err
    assert len(err.strip().splitlines()) == 1


def test_configuration_error_exit_2(capsys):
    code, _, err = run(capsys, "tail", "--h", "1.5")
    assert code == 2 and "Hurst" in err


def test_gumbel_needs_constant(capsys):
    code, _, err = run(capsys, "gumbel", "--reps", "10")
    assert code == 2 and "--pickands" in err


def test_numerical_failure_exit_3(capsys, monkeypatch, tmp_path):
    def boom(config):
        raise EmbeddingError(-1.0, 1e-9)

    monkeypatch.setattr(cli.mc, "estimate_tail", boom)
    code, _, err = run(capsys, "tail", "--reps", "10", "--out", str(tmp_path))
    assert code == 3 and "fbm_sim" in err


def test_tail_twice_byte_identical(capsys, tmp_path):
    args = ["tail", "--h", "0.5", "--T", "1", "--m", "256", "--u", "2,2.5,3", "--reps", "100000", "--seed", "42"]
    assert run(capsys, *args, "--out", str(tmp_path / "a"))[0] == 0
    assert run(capsys, *args, "--out", str(tmp_path / "b"))[0] == 0
    assert (tmp_path / "a/tail.csv").read_bytes() == (tmp_path / "b/tail.csv").read_bytes()


def test_metadata_replays_run(capsys, tmp_path):
    assert run(capsys, "tail", "--h", "0.3", "--m", "32", "--u", "1,2", "--reps", "3000",
               "--seed", "5", "--out", str(tmp_path / "a"))[0] == 0
    assert run(capsys, "tail", "--config", str(tmp_path / "a/tail.json"), "--out", str(tmp_path / "b"),
               "--workers", "2")[0] == 0
    assert (tmp_path / "a/tail.csv").read_bytes() == (tmp_path / "b/tail.csv").read_bytes()


def test_config_file_precedence(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# tail settings\nh = 0.3\nm=16\nreps=500\nu=1,2\nseed=3\n")
    run(capsys, "tail", "--config", str(cfg), "--reps", "700", "--out", str(tmp_path))
    meta = json.loads((tmp_path / "tail.json").read_text())
    assert meta["params"]["reps"] == "700" and meta["params"]["h"] == "0.3"
    assert meta["params"]["T"] == "1.0"  # built-in default


def test_config_unknown_key(capsys, tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("frobnicate=1\n")
    code, _, err = run(capsys, "tail", "--config", str(cfg))
    assert code == 2 and "frobnicate" in err


def test_seed_environment_override(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "11")
    run(capsys, "tail", "--m", "16", "--u", "1", "--reps", "200", "--seed", "3", "--out", str(tmp_path))
    meta = json.loads((tmp_path / "tail.json").read_text())
    assert meta["params"]["seed"] == "11" and meta["seed_source"] == "env"


@pytest.mark.parametrize("sub", list(cli._COMMANDS))
def test_help_lists_defaults(capsys, sub):
    code, out, _ = run(capsys, sub, "--help")
    assert code == 0
    parser = cli._subparser(cli.build_parser(), sub)
    for action in parser._actions:
        if action.option_strings and action.dest != "help":
            assert action.option_strings[0] in out
    assert out.count("(default:") >= len(parser._actions) - 2


def test_simulate_writes_paths(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", "--h", "0.3", "--T", "1", "--m", "8", "--paths", "2",
                     "--method", "dense", "--out", str(tmp_path))
    assert code == 0
    lines = (tmp_path / "path_00001.csv").read_text().splitlines()
    assert lines[0] == "t,value" and len(lines) == 10


def test_lemma31_and_scan_and_gumbel(capsys, tmp_path):
    assert run(capsys, "lemma31", "--m", "32", "--reps", "500", "--out", str(tmp_path))[0] == 0
    assert (tmp_path / "lemma31.csv").exists()
    assert run(capsys, "scan-demo", "--lambda", "20", "--T", "2", "--m", "16", "--reps", "100",
               "--out", str(tmp_path))[0] == 0
    assert run(capsys, "gumbel", "--T", "20", "--m", "16", "--reps", "100", "--pickands", "0.8",
               "--out", str(tmp_path))[0] == 0
    assert (tmp_path / "gumbel.csv").read_text().startswith("T,a_T,b_T,ks_stat,n_reps")


def test_pickands_cli_example(alpha1_cli_run):
    code, rows, ex, out = alpha1_cli_run
    assert code == 0
    assert {step for _, step, _ in rows} == {2.0**-6, 2.0**-5}  # coarsen factor 2 added
    assert abs(ex.value - 1.0) < 0.10
    meta = json.loads((out / "pickands.json").read_text())
    assert meta["extrapolated"]["value"] == pytest.approx(ex.value)
