import json

import numpy as np
import pytest

from iso_lab.__main__ import main
from iso_lab.errors import InvalidInputError, InvalidParameterError
from iso_lab.runner import RunConfig, parse_generator, parse_measure
from iso_lab.testbed import doubling_matrix
from iso_lab.types import Command, EnsembleKind, MeasureKind


def run_cli(capsys, *argv):
    with pytest.raises(SystemExit) as excinfo:
        main(list(argv) + ["--log-file", ""])
    return excinfo.value.code, capsys.readouterr().out


def test_check_identity(capsys, matrix_file):
    code, out = run_cli(capsys, "check", matrix_file(np.eye(3)), "--epsilon", "0.5", "--subset", "0,1,2")
    assert code == 0
    result = json.loads(out)
    assert result["member"] is True
    assert result["gram_spectrum"] == pytest.approx([1.0, 1.0, 1.0])


def test_check_suppression(capsys, matrix_file):
    path = matrix_file([[0.0, 0.8, 0.0], [0.8, 0.0, 0.1], [0.0, 0.1, 0.0]])
    code, out = run_cli(capsys, "check", path, "--delta", "0.5", "--subset", "0,1")
    assert code == 0
    assert json.loads(out)["member"] is False


def test_witness_on_generated_doubling(capsys):
    code, out = run_cli(capsys, "witness", "gen:doubling:4", "--epsilon", "0.5")
    assert code == 0
    result = json.loads(out)
    assert result["floor"] == pytest.approx(0.5, abs=1e-9)
    assert result["gap"] <= 1e-9


def test_enumerate_above_the_cap_exits_3(capsys, matrix_file):
    code, _ = run_cli(capsys, "enumerate", matrix_file(np.eye(30)), "--epsilon", "0.5")
    assert code == 3


def test_invalid_inputs_exit_2(capsys, matrix_file, tmp_path):
    assert run_cli(capsys, "enumerate", matrix_file(np.eye(3)), "--epsilon", "1.5")[0] == 2
    assert run_cli(capsys, "enumerate", str(tmp_path / "missing.txt"))[0] == 2
    assert run_cli(capsys, "check", matrix_file(np.eye(3)), "--subset", "0,5")[0] == 2
    assert run_cli(capsys, "select", matrix_file(np.eye(3)), "--mu", "weights")[0] == 2


def test_enumerate_round_trips(capsys, matrix_file):
    code, out = run_cli(capsys, "enumerate", matrix_file(doubling_matrix(4)), "--epsilon", "0.5")
    assert code == 0
    family = json.loads(out)
    assert family["maximal_sets"] == [[0, 1, 3], [0, 2, 3]]
    assert json.loads(json.dumps(family)) == family


def test_select_methods(capsys):
    for method in ("exhaustive", "greedy", "pipeline"):
        code, out = run_cli(capsys, "select", "gen:doubling:4", "--epsilon", "0.5", "--method", method)
        assert code == 0
        result = json.loads(out)
        assert result["method"] == method
        assert result["chosen"] == [0, 1, 3]
        assert result["reports"]["thm14"]["ratio"] == pytest.approx(1.5)


def test_select_with_weights_file(capsys, tmp_path):
    weights = tmp_path / "mu.txt"
    weights.write_text("1\n1\n2\n1\n")
    code, out = run_cli(capsys, "select", "gen:doubling:4", "--mu", f"file:{weights}")
    assert code == 0
    assert json.loads(out)["chosen"] == [0, 2, 3]


def test_trace_writes_output_file(capsys, tmp_path):
    out_file = tmp_path / "trace.json"
    code, out = run_cli(capsys, "trace", "gen:doubling:4", "--C", "2", "--out", str(out_file))
    assert code == 0
    assert out == ""
    trace = json.loads(out_file.read_text())
    assert trace["sigma2"] == [0, 1, 3]
    assert trace["failed"] is False


def test_estimate_csv_and_tsv(capsys):
    code, csv = run_cli(capsys, "estimate", "gen:identity:3", "--epsilon", "0.3,0.5", "--C", "2")
    assert code == 0
    lines = csv.splitlines()
    assert lines[0] == "ensemble,n,epsilon,C,seed,c_eq2,c_eq4,c_eq6,c_eq9,status"
    assert len(lines) == 3
    code, tsv = run_cli(capsys, "estimate", "gen:identity:3", "--epsilon", "0.5", "--format", "tsv")
    assert code == 0
    assert tsv.splitlines()[0].startswith("ensemble\tepsilon")


def test_estimate_writes_the_figure(capsys, tmp_path):
    code, _ = run_cli(capsys, "estimate", "gen:doubling:4", "--epsilon", "0.3,0.5", "--plot", str(tmp_path))
    assert code == 0
    figure = json.loads((tmp_path / "constants_plot.json").read_text())
    assert len(figure["data"]) >= 3
    assert (tmp_path / "constants_plot.html").exists()
    assert (tmp_path / "constants_plot.tsv").read_text().startswith("ensemble\tepsilon")


def test_rate(capsys):
    code, out = run_cli(capsys, "rate", "gen:doubling:4", "--trials", "400", "--seed", "1")
    assert code == 0
    result = json.loads(out)
    assert result["exact"] == pytest.approx(0.75)
    assert result["analytic"] == pytest.approx(0.75)
    assert result["trials"] == 400


def test_output_is_deterministic(capsys):
    first = run_cli(capsys, "witness", "gen:gaussian_normalized:6:5", "--epsilon", "0.4")
    second = run_cli(capsys, "witness", "gen:gaussian_normalized:6:5", "--epsilon", "0.4")
    assert first == second


def test_params_file_supplies_defaults(capsys, tmp_path):
    params = tmp_path / "params.json"
    params.write_text(json.dumps({"epsilon": 0.5, "subset": "1,2"}))
    code, out = run_cli(capsys, "check", "gen:doubling:4", "--params", str(params))
    assert code == 0
    assert json.loads(out)["member"] is False
    code, out = run_cli(capsys, "check", "gen:doubling:4", "--params", str(params), "--subset", "0,1")
    assert json.loads(out)["member"] is True
    params.write_text(json.dumps({"colour": "red"}))
    assert run_cli(capsys, "check", "gen:doubling:4", "--params", str(params))[0] == 2


def test_parse_generator():
    spec = parse_generator("gen:pair_correlation:5:0.3:11")
    assert (spec.kind, spec.n, spec.param, spec.seed) == (EnsembleKind.PAIR_CORRELATION, 5, 0.3, 11)
    assert parse_generator("gen:doubling:4").seed == 0
    assert parse_generator("gen:gaussian_normalized:4:3", seed=8).seed == 8
    assert parse_generator("gen:rank_deficient:6:2").param == 2.0
    for text in ("gen:unknown:3", "gen:identity", "gen:identity:x", "gen:identity:3:1:2"):
        with pytest.raises(InvalidInputError):
            parse_generator(text)


def test_parse_measure():
    assert parse_measure("counting", 3).kind is MeasureKind.COUNTING
    np.testing.assert_array_equal(parse_measure("inline:1,0,2", 3).weights, [1.0, 0.0, 2.0])
    with pytest.raises(InvalidInputError):
        parse_measure("inline:1,2", 3)


def test_run_config_ranges():
    with pytest.raises(InvalidParameterError):
        RunConfig(Command.CHECK, "x", epsilons=[0.0])
    with pytest.raises(InvalidParameterError):
        RunConfig(Command.TRACE, "x", c_values=[1.0])
    with pytest.raises(InvalidParameterError):
        RunConfig(Command.WITNESS, "x", delta=-1.0)
    with pytest.raises(InvalidParameterError):
        RunConfig(Command.SELECT, "x", epsilons=[0.3, 0.5])
