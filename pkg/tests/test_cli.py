"""Harness behavior: config merging, file outputs, determinism, exit codes."""

import csv
import json

import numpy as np
import pytest

from gradplan.cli import (
    RunConfig,
    compare_optimizers,
    main,
    parse_config,
    read_config_file,
    run,
)
from gradplan.errors import ConfigError

FAST = [
    "--batch", "3", "--horizon", "5", "--epochs", "8", "--seed", "4",
    "--rate", "0.1", "--patience", "50",
]


def test_parse_config_flags():
    config, compare = parse_config(
        ["--domain", "hvac", "--optimizer", "rmsprop", "--rate", "0.001",
         "--epochs", "1000", "--batch", "100", "--horizon", "96", "--seed", "1"]
    )
    assert compare is None
    assert config.domain == "hvac"
    assert config.optimizer == "rmsprop"
    assert config.rate == 0.001
    assert config.epochs == 1000
    assert config.batch == 100
    assert config.horizon == 96
    assert config.seed == 1


def test_missing_domain_names_the_key():
    with pytest.raises(ConfigError, match="domain"):
        parse_config(["--epochs", "5"])


def test_negative_rate_is_range_error():
    with pytest.raises(ConfigError, match="rate"):
        parse_config(["--domain", "hvac", "--rate", "-1"])


def test_unknown_domain_rejected():
    with pytest.raises(ConfigError, match="unknown domain"):
        parse_config(["--domain", "gridworld"])


def test_config_file_merging_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "domain = reservoir-linear\n"
        "rate = 0.5\n"
        "epochs = 11  # trailing comment\n"
        "reservoir.rain = 12.5\n"
        "\n"
    )
    config, _ = parse_config(["--config", str(cfg), "--rate", "0.25"])
    assert config.domain == "reservoir-linear"
    assert config.rate == 0.25  # flag wins
    assert config.epochs == 11
    assert config.overrides == {"rain": 12.5}


def test_config_file_unknown_key_named(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("domain = hvac\nlearning_rate = 0.1\n")
    with pytest.raises(ConfigError, match="learning_rate"):
        parse_config(["--config", str(cfg)])


def test_override_prefix_must_match_domain():
    with pytest.raises(ConfigError, match="reservoir.rain"):
        parse_config(["--domain", "hvac", "--set", "reservoir.rain=3"])


def test_override_unknown_parameter_named():
    with pytest.raises(ConfigError, match="hvac.windows"):
        parse_config(["--domain", "hvac", "--set", "hvac.windows=2"])


def test_override_applies_to_domain_params():
    config, _ = parse_config(
        ["--domain", "hvac", "--set", "hvac.alpha=0.1", "--set", "hvac.floors=2"]
    )
    assert config.overrides == {"alpha": 0.1, "floors": 2}
    assert isinstance(config.overrides["floors"], int)


def test_workers_env_default(monkeypatch):
    monkeypatch.setenv("GRADPLAN_WORKERS", "3")
    config, _ = parse_config(["--domain", "hvac"])
    assert config.workers == 3
    monkeypatch.delenv("GRADPLAN_WORKERS")
    config, _ = parse_config(["--domain", "hvac"])
    assert config.workers == 1


def test_run_writes_complete_outputs(tmp_path):
    config, _ = parse_config(
        ["--domain", "nav-nonlinear", "--out", str(tmp_path), "--heuristic", *FAST]
    )
    outputs = run(config)
    with open(outputs.curve_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["epoch", "loss", "best_value", "wall_ms"]
    assert len(rows) == 2 + config.epochs  # header + epoch 0 + epochs
    wall = [float(r[3]) for r in rows[1:]]
    assert wall == sorted(wall)
    best = [float(r[2]) for r in rows[1:]]
    assert all(b2 >= b1 for b1, b2 in zip(best, best[1:]))

    plan_doc = json.loads(outputs.plan_path.read_text())
    assert plan_doc["domain"] == "nav-nonlinear"
    assert plan_doc["seed"] == 4
    actions = np.asarray(plan_doc["actions"])
    assert actions.shape == (5, 2)
    assert np.all(actions >= -1.0) and np.all(actions <= 1.0)

    summary = json.loads(outputs.summary_path.read_text())
    assert summary["n_action_variables"] == 3 * 5 * 2
    assert "heuristic_value" in summary
    assert summary["config"]["domain"] == "nav-nonlinear"


def test_summary_reports_full_hvac_action_count():
    config, _ = parse_config(["--domain", "hvac", "--batch", "100", "--horizon", "96"])
    spec_dim = 60
    assert config.batch * config.horizon * spec_dim == 576_000


def test_plan_json_byte_identical_across_runs_and_workers(tmp_path):
    blobs = []
    for workers, sub in (("1", "a"), ("1", "b"), ("4", "c")):
        config, _ = parse_config(
            ["--domain", "reservoir-nonlinear", "--out", str(tmp_path / sub),
             "--workers", workers, "--set", "reservoir.levels=4", *FAST]
        )
        outputs = run(config)
        blobs.append(outputs.plan_path.read_bytes())
    assert blobs[0] == blobs[1] == blobs[2]


def test_compare_optimizers_outputs(tmp_path):
    config, names = parse_config(
        ["--domain", "nav-bilinear", "--out", str(tmp_path),
         "--compare-optimizers", "sgd,rmsprop", *FAST]
    )
    assert names == ["sgd", "rmsprop"]
    outputs = compare_optimizers(config, names)
    with open(outputs.curve_path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["optimizer", "epoch", "loss", "best_value", "wall_ms"]
    seen = {r[0] for r in rows[1:]}
    assert seen == {"sgd", "rmsprop"}
    for row in rows[1:]:
        assert np.isfinite(float(row[2]))
    # shared initialization: epoch-0 loss identical across optimizers
    first = {}
    for row in rows[1:]:
        if row[1] == "0":
            first[row[0]] = row[2]
    assert first["sgd"] == first["rmsprop"]


def test_compare_optimizers_rejects_single_name(tmp_path):
    config, _ = parse_config(["--domain", "nav-bilinear", "--out", str(tmp_path), *FAST])
    with pytest.raises(ConfigError):
        compare_optimizers(config, ["rmsprop"])


def test_unwritable_out_dir_fails_before_compute(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("")  # a file where a directory is needed
    config, _ = parse_config(
        ["--domain", "nav-bilinear", "--out", str(blocker / "sub"), *FAST]
    )
    with pytest.raises(ConfigError):
        run(config)


def test_main_exit_codes(tmp_path, capsys):
    assert main(["--domain", "nosuch"]) == 2
    code = main(
        ["--domain", "nav-linear", "--out", str(tmp_path), *FAST]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "best value" in out


def test_run_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(domain="hvac", batch=0)
    with pytest.raises(ConfigError):
        RunConfig(domain="hvac", optimizer="newton")
    with pytest.raises(ConfigError):
        RunConfig(domain="")


def test_read_config_file_rejects_malformed_line(tmp_path):
    cfg = tmp_path / "broken.cfg"
    cfg.write_text("domain hvac\n")
    with pytest.raises(ConfigError):
        read_config_file(cfg)
