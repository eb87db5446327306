"""Command-line client: envelopes, formats, exit codes, config handling."""

import json
import math

import pytest
from click.testing import CliRunner

from lskl.cli import main

import oracles


@pytest.fixture()
def runner():
    return CliRunner()


def _stderr(result) -> str:
    try:
        return result.stderr
    except ValueError:
        return ""


# ---------------------------------------------------------------------------
# envelopes and formats
# ---------------------------------------------------------------------------


def test_kl_json_envelope(runner):
    result = runner.invoke(
        main,
        ["kl", "--from", "halfnormal(sigma=1)", "--to", "exponential(beta=1)"],
    )
    assert result.exit_code == 0
    body = json.loads(result.output)
    assert body["subcommand"] == "kl"
    assert body["config"]["from"] == "halfnormal(sigma=1)"
    assert body["config"]["method"] == "auto"
    assert body["config"]["seed"] == 0
    assert body["result"]["method"] == "closed_form"
    assert math.isfinite(body["result"]["value"])


def test_floats_are_printed_to_twelve_significant_digits(runner):
    result = runner.invoke(
        main,
        [
            "kl",
            "--from",
            "halfnormal(sigma=1)",
            "--to",
            f"exponential(beta={math.sqrt(2.0 / math.pi)!r})",
        ],
    )
    assert result.exit_code == 0
    assert '"value": 0.0484172947105' in result.output


def test_output_is_byte_identical_across_runs(runner):
    args = [
        "kl",
        "--from", "normal(a=0,b=1)",
        "--to", "normal(a=1,b=2)",
        "--method", "monte_carlo",
        "--n", "5000",
        "--seed", "3",
    ]
    a = runner.invoke(main, args)
    b = runner.invoke(main, args)
    assert a.exit_code == b.exit_code == 0
    assert a.output == b.output


def test_seed_can_come_from_the_environment(runner):
    args = [
        "kl",
        "--from", "normal(a=0,b=1)",
        "--to", "normal(a=1,b=2)",
        "--method", "monte_carlo",
        "--n", "5000",
    ]
    via_env = runner.invoke(main, args, env={"LSKL_SEED": "3"})
    via_flag = runner.invoke(main, args + ["--seed", "3"])
    assert via_env.exit_code == 0
    assert json.loads(via_env.output)["config"]["seed"] == 3
    assert json.loads(via_env.output)["result"] == json.loads(via_flag.output)["result"]


def test_csv_format_flattens_scalar_results(runner):
    result = runner.invoke(
        main,
        [
            "kl",
            "--from", "halfnormal(sigma=1)",
            "--to", "exponential(beta=1)",
            "--format", "csv",
        ],
    )
    assert result.exit_code == 0
    lines = result.output.strip().splitlines()
    assert lines[0] == "key,value"
    assert any(line.startswith("value,") for line in lines)


def test_simulate_csv_has_the_documented_header(runner):
    result = runner.invoke(
        main,
        [
            "simulate",
            "--truth", "halfnormal(sigma=1)",
            "--m1", "halfnormal",
            "--m2", "exponential",
            "--n-grid", "20",
            "--reps", "2",
            "--format", "csv",
        ],
    )
    assert result.exit_code == 0
    lines = result.output.strip().splitlines()
    assert lines[0] == "n,rep,posterior_prob"
    assert len(lines) == 3


def test_independence_text_table(runner):
    result = runner.invoke(
        main,
        [
            "independence",
            "--source", "halfnormal",
            "--target", "exponential",
            "--grid", "sigma=[0.5,1,2,8]",
            "--format", "text-table",
        ],
    )
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert lines[0].split() == ["sigma", "value"]
    assert len([l for l in lines if l.strip()]) == 6  # header, rule, four rows


def test_output_file_writing(runner, tmp_path):
    out = tmp_path / "kl.json"
    result = runner.invoke(
        main,
        [
            "kl",
            "--from", "halfnormal(sigma=1)",
            "--to", "exponential(beta=1)",
            "--output", str(out),
        ],
    )
    assert result.exit_code == 0
    assert result.output == ""
    body = json.loads(out.read_text())
    assert body["subcommand"] == "kl"


# ---------------------------------------------------------------------------
# exit codes
# ---------------------------------------------------------------------------


def test_parse_failures_exit_2(runner):
    result = runner.invoke(
        main, ["kl", "--from", "halfnormal(sigma=1", "--to", "exponential(beta=1)"]
    )
    assert result.exit_code == 2
    assert "error" in _stderr(result)


def test_usage_errors_exit_2(runner):
    result = runner.invoke(main, ["kl", "--from", "halfnormal(sigma=1)"])
    assert result.exit_code == 2


def test_numerical_failures_exit_3(runner):
    result = runner.invoke(
        main,
        [
            "minkl",
            "--from", "exponential(beta=1)",
            "--target", "halfnormal",
            "--method", "analytic",
        ],
    )
    assert result.exit_code == 3


def test_unreadable_config_exits_4(runner):
    result = runner.invoke(
        main,
        [
            "kl",
            "--from", "halfnormal(sigma=1)",
            "--to", "exponential(beta=1)",
            "--config", "/nonexistent/lskl.cfg",
        ],
    )
    assert result.exit_code == 4


def test_unwritable_output_exits_4(runner):
    result = runner.invoke(
        main,
        [
            "kl",
            "--from", "halfnormal(sigma=1)",
            "--to", "exponential(beta=1)",
            "--output", "/nonexistent/dir/out.json",
        ],
    )
    assert result.exit_code == 4


def test_unreadable_data_file_exits_4(runner):
    result = runner.invoke(
        main,
        [
            "select",
            "--m1", "halfnormal",
            "--m2", "exponential",
            "--data", "/nonexistent/data.txt",
        ],
    )
    assert result.exit_code == 4


def test_malformed_data_file_exits_2(runner, tmp_path):
    bad = tmp_path / "data.txt"
    bad.write_text("1.0\ntwo\n")
    result = runner.invoke(
        main,
        ["select", "--m1", "halfnormal", "--m2", "exponential", "--data", str(bad)],
    )
    assert result.exit_code == 2


def test_select_with_both_data_and_truth_exits_2(runner, tmp_path):
    data = tmp_path / "data.txt"
    data.write_text("0.5\n1.0\n")
    result = runner.invoke(
        main,
        [
            "select",
            "--m1", "halfnormal",
            "--m2", "exponential",
            "--data", str(data),
            "--truth", "halfnormal(sigma=1)",
        ],
    )
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# select and data files
# ---------------------------------------------------------------------------


def test_select_reads_data_files_with_comments(runner, tmp_path):
    data = tmp_path / "data.txt"
    data.write_text("# half-normal draws\n0.5 1.2\n0.8\n2.1  # trailing note\n")
    result = runner.invoke(
        main,
        ["select", "--m1", "halfnormal", "--m2", "exponential", "--data", str(data)],
    )
    assert result.exit_code == 0
    body = json.loads(result.output)
    assert body["result"]["n_used"] == 4


# ---------------------------------------------------------------------------
# config file layering
# ---------------------------------------------------------------------------


def test_config_file_fills_unset_options(runner, tmp_path):
    cfg = tmp_path / "lskl.cfg"
    cfg.write_text("# defaults\nmethod = quadrature\ntol = 1e-6\n")
    result = runner.invoke(
        main,
        [
            "kl",
            "--from", "halfnormal(sigma=1)",
            "--to", "exponential(beta=1)",
            "--config", str(cfg),
        ],
    )
    assert result.exit_code == 0
    body = json.loads(result.output)
    assert body["config"]["method"] == "quadrature"
    assert body["config"]["tol"] == 1e-6
    assert body["result"]["method"] == "quadrature"


def test_flags_beat_the_config_file(runner, tmp_path):
    cfg = tmp_path / "lskl.cfg"
    cfg.write_text("method = quadrature\n")
    result = runner.invoke(
        main,
        [
            "kl",
            "--from", "halfnormal(sigma=1)",
            "--to", "exponential(beta=1)",
            "--method", "closed_form",
            "--config", str(cfg),
        ],
    )
    assert result.exit_code == 0
    assert json.loads(result.output)["config"]["method"] == "closed_form"


def test_config_value_must_satisfy_the_option_type(runner, tmp_path):
    cfg = tmp_path / "lskl.cfg"
    cfg.write_text("method = sorcery\n")
    result = runner.invoke(
        main,
        [
            "kl",
            "--from", "halfnormal(sigma=1)",
            "--to", "exponential(beta=1)",
            "--config", str(cfg),
        ],
    )
    assert result.exit_code == 2


def test_malformed_config_line_exits_2(runner, tmp_path):
    cfg = tmp_path / "lskl.cfg"
    cfg.write_text("tol 1e-6\n")
    result = runner.invoke(
        main,
        [
            "kl",
            "--from", "halfnormal(sigma=1)",
            "--to", "exponential(beta=1)",
            "--config", str(cfg),
        ],
    )
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# priors note
# ---------------------------------------------------------------------------


def test_priors_note_when_loss_source_is_defaulted(runner):
    result = runner.invoke(
        main, ["priors", "--source1", "halfnormal", "--source2", "exponential"]
    )
    assert result.exit_code == 0
    assert "published values" in _stderr(result)
    body = json.loads(result.stdout)
    assert body["result"]["loss_source"] == "numeric"


def test_priors_note_is_silent_when_loss_source_is_explicit(runner):
    result = runner.invoke(
        main,
        [
            "priors",
            "--source1", "halfnormal",
            "--source2", "exponential",
            "--loss-source", "paper",
        ],
    )
    assert result.exit_code == 0
    assert "published values" not in _stderr(result)
    body = json.loads(result.output)
    assert round(body["result"]["p1"], 2) == 0.46


def test_priors_accepts_explicit_parameter_priors(runner):
    result = runner.invoke(
        main,
        [
            "priors",
            "--source1", "halfnormal",
            "--prior1", "grid(sigma=[0.5,1,2])",
            "--source2", "exponential",
            "--prior2", "point(beta=1)",
            "--loss-source", "numeric",
        ],
    )
    assert result.exit_code == 0
    body = json.loads(result.output)
    assert body["result"]["loss1"] == pytest.approx(oracles.HN_TO_EXP_MIN, abs=1e-7)


# ---------------------------------------------------------------------------
# minkl and independence pass-through
# ---------------------------------------------------------------------------


def test_minkl_mle_route_via_cli(runner):
    result = runner.invoke(
        main,
        [
            "minkl",
            "--from", "halfnormal(sigma=1)",
            "--target", "exponential",
            "--method", "mle",
            "--n", "20000",
            "--seed", "0",
        ],
    )
    assert result.exit_code == 0
    body = json.loads(result.output)
    assert body["result"]["method"] == "mle_asymptotic"
    assert abs(body["result"]["value"]["value"] - oracles.HN_TO_EXP_MIN) < 5e-3


def test_independence_json_reports_pass(runner):
    result = runner.invoke(
        main,
        [
            "independence",
            "--source", "lognormal",
            "--target", "weibull",
            "--grid", "mu=[-1,0,2]; tau=[0.25,1,9]",
        ],
    )
    assert result.exit_code == 0
    body = json.loads(result.output)
    assert body["result"]["pass"] is True
    assert len(body["result"]["values"]) == 9
