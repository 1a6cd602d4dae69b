"""
Tests for problem files and the mcopt command line.
"""

import importlib
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.cli.main import (
    EXIT_INPUT,
    EXIT_OK,
    EXIT_VERIFY,
    build_parser,
    build_solver_config,
    main,
    parse_cone_tokens,
)
from src.cli.problem_io import (
    TRACE_COLUMNS,
    load_problem_file,
    parse_problem,
    parse_problem_data,
    require_strict_start,
    write_problem,
)
from src.core.exceptions import ParseError
from src.optimization.cones import ConeSpec
from src.optimization.model import random_instance
from src.optimization.verification import CheckResult

SAMPLES = Path(__file__).resolve().parent.parent / "data" / "samples"


def sample_data(name):
    with open(SAMPLES / name, "r", encoding="utf-8") as f:
        return json.load(f)


def test_parse_cone_tokens():
    cones = parse_cone_tokens("nonneg:4, lorentz:3x2,psd:2")
    assert cones == [ConeSpec.nonneg()] * 4 + [ConeSpec.lorentz(2)] * 2 + [ConeSpec.psd(2)]


@pytest.mark.parametrize("token", ["cube:3", "lorentz:1", "psd:0", "nonneg", "psd:2x0"])
def test_bad_cone_tokens(token):
    with pytest.raises(ParseError) as info:
        parse_cone_tokens(token)
    assert info.value.field == "cones"


def test_load_mixed_sample():
    problem, start = load_problem_file(SAMPLES / "mixed_small.json")
    assert [c.label for c in problem.cones] == ["nonneg", "nonneg", "lorentz(3)", "psd(2)"]
    assert problem.m == 2
    assert problem.nu_total == 6
    u = require_strict_start(problem, start)
    assert problem.primal_residual(u.x) == pytest.approx(0.0)


def test_problem_file_round_trip(tmp_path):
    problem, start = random_instance(3, 3, [ConeSpec.nonneg()] * 3 + [ConeSpec.lorentz(2), ConeSpec.psd(2)])
    target = tmp_path / "nested" / "instance.json"
    write_problem(target, problem, start)
    with open(target, "r", encoding="utf-8") as f:
        raw = json.load(f)
    assert raw["cones"][0] == {"kind": "nonneg", "dim": 3}
    loaded, loaded_start = load_problem_file(target)
    assert loaded.cones == problem.cones
    np.testing.assert_array_equal(loaded.stacked_A, problem.stacked_A)
    np.testing.assert_array_equal(loaded.b, problem.b)
    for a, b in zip(loaded_start.x, start.x):
        np.testing.assert_array_equal(a, b)


def test_wrong_block_shape_names_the_block():
    data = sample_data("mixed_small.json")
    data["c"][1] = [3.0, 1.0]
    with pytest.raises(ParseError) as info:
        parse_problem_data(data)
    assert info.value.field == "c[1]"


def test_schema_errors_name_the_field():
    data = sample_data("lp_small.json")
    data["cones"][0]["kind"] = "cube"
    with pytest.raises(ParseError) as info:
        parse_problem_data(data)
    assert info.value.field.startswith("cones")


def test_malformed_json_reports_line(tmp_path):
    target = tmp_path / "broken.json"
    target.write_text('{\n  "m": 1,\n  "cones": [\n}\n', encoding="utf-8")
    with pytest.raises(ParseError) as info:
        load_problem_file(target)
    assert info.value.line == 4


def test_start_is_required(tmp_path):
    data = sample_data("lp_small.json")
    del data["start"]
    problem, start = parse_problem_data(data)
    with pytest.raises(ParseError) as info:
        require_strict_start(problem, start)
    assert info.value.field == "start"


def test_infeasible_start_is_rejected():
    data = sample_data("lp_small.json")
    data["start"]["x"] = [[1.0, 1.0, 2.0]]
    problem, start = parse_problem_data(data)
    with pytest.raises(ParseError):
        require_strict_start(problem, start)


def test_config_precedence(tmp_path):
    config = tmp_path / "solver.json"
    config.write_text(json.dumps({"solver": {"eps": 1e-3, "max_outer_iters": 77}}), encoding="utf-8")
    args = build_parser().parse_args(["--config", str(config), "solve", "p.json", "--eps", "1e-5"])
    cfg = build_solver_config(args)
    assert cfg.eps == 1e-5
    assert cfg.max_outer_iters == 77


def test_solve_lp_sample(tmp_path, capsys):
    out, trace = tmp_path / "solution.json", tmp_path / "trace.csv"
    code = main(["solve", str(SAMPLES / "lp_small.json"), "--out", str(out), "--trace", str(trace)])
    assert code == EXIT_OK
    assert "✅" in capsys.readouterr().out
    with open(out, "r", encoding="utf-8") as f:
        solution = json.load(f)
    assert solution["status"] == "Converged"
    assert solution["primal_objective"] == pytest.approx(3.0, abs=1e-5)
    assert solution["x"][0][0] == pytest.approx(3.0, abs=1e-5)
    frame = pd.read_csv(trace)
    assert list(frame.columns) == TRACE_COLUMNS
    assert len(frame) == solution["iterations"]
    assert set(frame["stage"]) <= {"corrector", "predictor"}


def test_solve_mixed_sample(tmp_path):
    out = tmp_path / "mixed.json"
    assert main(["solve", str(SAMPLES / "mixed_small.json"), "--out", str(out)]) == EXIT_OK
    with open(out, "r", encoding="utf-8") as f:
        solution = json.load(f)
    assert solution["gap"] <= 1e-6
    assert solution["primal_residual"] <= 1e-7


def test_solve_input_errors(tmp_path):
    assert main(["solve", str(tmp_path / "missing.json")]) == EXIT_INPUT
    assert main(["solve", str(SAMPLES / "lp_small.json"), "--beta1", "0.5"]) == EXIT_INPUT


def test_generate_then_solve(tmp_path):
    target = tmp_path / "gen.json"
    code = main(["gen", "--seed", "5", "--m", "2", "--cones", "nonneg:3,lorentz:3,psd:2", "--out", str(target)])
    assert code == EXIT_OK
    problem, start = load_problem_file(target)
    assert problem.m == 2
    require_strict_start(problem, start)
    assert main(["solve", str(target), "--eps", "1e-4"]) == EXIT_OK


def test_generate_rejects_too_many_constraints(tmp_path):
    code = main(["gen", "--seed", "1", "--m", "9", "--cones", "nonneg:2", "--out", str(tmp_path / "x.json")])
    assert code == EXIT_INPUT


def test_verify_writes_summary(tmp_path):
    target = tmp_path / "summary.csv"
    code = main(["verify", "--family", "nonneg", "--samples", "5", "--seed", "2", "--csv", str(target)])
    assert code == EXIT_OK
    frame = pd.read_csv(target)
    assert frame["passed"].all()


def test_verify_unknown_check():
    assert main(["verify", "--family", "nonneg", "--samples", "1", "--check", "nope"]) == EXIT_INPUT


def test_verify_failure_exit_code(monkeypatch, capsys):
    failing = [CheckResult("exchange_rule", "nonneg", 5, 1.0, 1e-9, False)]
    monkeypatch.setattr(importlib.import_module("src.cli.main"), "run_suite", lambda *args, **kwargs: failing)
    assert main(["verify", "--family", "nonneg", "--samples", "5"]) == EXIT_VERIFY
    assert "exchange_rule@nonneg" in capsys.readouterr().out


def test_parse_problem_returns_problem_only():
    problem = parse_problem(SAMPLES / "lp_small.json")
    assert problem.m == 1
    assert problem.n_blocks == 3
