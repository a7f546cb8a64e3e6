import json

import pytest

from jason_rs.cli import main

GOOD_PROGRAM = "cost(e1,10).\n+data(X) : X > 3 <- .publish_decision(high).\n"
BAD_PROGRAM = "+data(X"  # unclosed argument list


def run_cli(argv):
    try:
        return main(argv)
    except SystemExit as exit_:  # usage errors raise through argparse
        return exit_.code


class TestCheck:
    def test_valid_file_exits_zero(self, tmp_path, capsys):
        path = tmp_path / "good.asl"
        path.write_text(GOOD_PROGRAM)
        assert run_cli(["check", str(path)]) == 0
        out = capsys.readouterr().out
        assert "ok" in out

    def test_parse_error_exits_two_with_position(self, tmp_path, capsys):
        path = tmp_path / "bad.asl"
        path.write_text(BAD_PROGRAM)
        assert run_cli(["check", str(path)]) == 2
        err = capsys.readouterr().err
        assert f"{path}:1:" in err

    def test_missing_file_exits_two(self, capsys):
        assert run_cli(["check", "/nonexistent/never.asl"]) == 2

    def test_lint_warnings_still_exit_zero(self, tmp_path, capsys):
        path = tmp_path / "warn.asl"
        path.write_text("odd(X, Y) :- p(X).\n")
        assert run_cli(["check", str(path)]) == 0
        assert "warning" in capsys.readouterr().err


class TestUsage:
    def test_no_command_is_usage_error(self):
        assert run_cli([]) == 1

    def test_unknown_command_is_usage_error(self):
        assert run_cli(["frobnicate"]) == 1

    def test_bench_requires_url(self):
        assert run_cli(["bench", "--method", "GET"]) == 1

    def test_bench_sample_floor_is_usage_error(self):
        assert run_cli(["bench", "--method", "GET", "--n", "10",
                        "--url", "http://127.0.0.1:1/x"]) == 1


class TestRunScenario:
    def test_spec_file_runs_and_prints_decisions(self, tmp_path, capsys):
        spec = {
            "evacuators": [
                {"name": "e1", "base_cost": 10},
                {"name": "e2", "base_cost": 7},
                {"name": "e3", "base_cost": 12},
            ],
            "sensor_bindings": [
                {"feature": 1, "evacuator": "e1"},
                {"feature": 2, "evacuator": "e2"},
                {"feature": 3, "evacuator": "e3"},
            ],
            "script": [[2, 5]],
        }
        path = tmp_path / "spec.json"
        path.write_text(json.dumps(spec))
        assert run_cli(["run-scenario", "--spec", str(path)]) == 0
        out = capsys.readouterr().out
        assert "final: allocate(e1)" in out
        assert "expected: allocate(e1)" in out

    def test_bad_spec_exits_two(self, tmp_path, capsys):
        path = tmp_path / "spec.json"
        path.write_text("{\"evacuators\": []}")
        assert run_cli(["run-scenario", "--spec", str(path)]) == 2


class TestServeErrors:
    def test_bad_listen_address(self, capsys):
        assert run_cli(["serve", "--listen", "not-an-address"]) == 1

    def test_missing_agents_dir(self, capsys):
        assert run_cli(["serve", "--agents", "/nonexistent/dir"]) == 2

    def test_bad_agent_program(self, tmp_path, capsys):
        (tmp_path / "broken.asl").write_text(BAD_PROGRAM)
        assert run_cli(["serve", "--agents", str(tmp_path)]) == 2
