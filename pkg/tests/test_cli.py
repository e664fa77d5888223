"""
Command-line tests
"""
import csv
import io

import pytest

from drbd.cli import cli
from tests.conftest import REPEATED_TEXT, SERIES_TEXT, WSP_TEXT


def rows(output):
    return list(csv.reader(io.StringIO(output)))


class TestRel:
    """Test the rel command"""

    def test_series_curve(self, runner, write_model):
        result = runner.invoke(cli, ["rel", write_model(SERIES_TEXT), "--t0", "0", "--t1", "1", "--steps", "1"])
        assert result.exit_code == 0
        assert result.output == "t,rel\n0,1\n1,0.740818221\n"

    def test_with_mc_columns(self, runner, write_model):
        result = runner.invoke(cli, ["rel", write_model(WSP_TEXT), "--t1", "1", "--steps", "2",
                                     "--mc", "--samples", "5000"])
        assert result.exit_code == 0
        table = rows(result.output)
        assert table[0] == ["t", "rel", "mc_rel", "mc_halfwidth"]
        assert len(table) == 4

    def test_rate_override(self, runner, write_model):
        result = runner.invoke(cli, ["rel", write_model(SERIES_TEXT), "--t1", "1", "--steps", "1",
                                     "--rate", "A=0.2", "--rate", "B=0.1"])
        assert result.exit_code == 0
        assert rows(result.output)[-1] == ["1", "0.740818221"]

    def test_bad_override(self, runner, write_model):
        result = runner.invoke(cli, ["rel", write_model(SERIES_TEXT), "--t1", "1", "--rate", "A=-1"])
        assert result.exit_code == 2

    def test_repeated_block(self, runner, write_model):
        """Non-read-once models point at simulate"""
        result = runner.invoke(cli, ["rel", write_model(REPEATED_TEXT), "--t1", "1"])
        assert result.exit_code == 2
        assert "use simulate" in result.output

    def test_parse_error(self, runner, write_model):
        result = runner.invoke(cli, ["rel", write_model("A ~ exp(0.1\nsystem = A"), "--t1", "1"])
        assert result.exit_code == 2
        assert "2:1:" in result.output

    @pytest.mark.parametrize("command", [["rel", "--t1", "1"], ["simplify"]])
    def test_undecodable_file(self, runner, tmp_path, command):
        """Bytes that are not UTF-8 are a parse error at their position"""
        path = tmp_path / "latin1.drbd"
        path.write_bytes(b"A ~ exp(0.1)\nB ~ exp(0.2) # r\xe9seau\nsystem = A * B\n")
        result = runner.invoke(cli, command[:1] + [str(path)] + command[1:])
        assert result.exit_code == 2
        assert "2:17:" in result.output
        assert "UTF-8" in result.output


class TestSimplify:

    @pytest.mark.parametrize("expr,expected", [
        ("X + X * Y", "X"),
        ("X * never", "X"),
        ("X + never", "never"),
        ("Y + X", "X + Y"),
        ("after(X, Y) + after(Y, X)", "never"),
    ])
    def test_expressions(self, runner, expr, expected):
        result = runner.invoke(cli, ["simplify", "-e", expr])
        assert result.exit_code == 0
        assert result.output == expected + "\n"

    def test_expand(self, runner):
        result = runner.invoke(cli, ["simplify", "--expand", "-e", "X * (Y + Z)"])
        assert result.exit_code == 0
        assert result.output == "X * Y + X * Z\n"

    def test_model_file(self, runner, write_model):
        result = runner.invoke(cli, ["simplify", write_model(WSP_TEXT)])
        assert result.exit_code == 0
        assert result.output == "wsp(Y, S)\n"

    def test_budget_exhausted(self, runner):
        result = runner.invoke(cli, ["simplify", "--max-steps", "1", "-e", "(X + X * Y) * never"])
        assert result.exit_code == 3
        assert "partial: never * X" in result.output

    def test_needs_one_input(self, runner):
        assert runner.invoke(cli, ["simplify"]).exit_code == 2


class TestSimulate:
    """Test the simulate command"""

    def test_worker_independent(self, runner, write_model):
        """Output is byte-identical whatever the worker count"""
        path = write_model(WSP_TEXT)
        outputs = []
        for workers in ("1", "2", "8"):
            result = runner.invoke(cli, ["simulate", path, "--t1", "2", "--steps", "4",
                                         "--samples", "20000", "--seed", "3", "--workers", workers])
            assert result.exit_code == 0
            outputs.append(result.output)
        assert outputs[0] == outputs[1] == outputs[2]
        assert rows(outputs[0])[0] == ["t", "mc_rel", "mc_halfwidth"]

    def test_seed_from_environment(self, runner, write_model):
        path = write_model(SERIES_TEXT)
        args = ["simulate", path, "--t1", "1", "--steps", "1", "--samples", "5000"]
        explicit = runner.invoke(cli, args + ["--seed", "77"])
        from_env = runner.invoke(cli, args, env={"DRBD_SEED": "77"})
        assert explicit.exit_code == 0
        assert explicit.output == from_env.output

    def test_repeated_block_is_fine(self, runner, write_model):
        result = runner.invoke(cli, ["simulate", write_model(REPEATED_TEXT), "--t1", "1", "--steps", "1",
                                     "--samples", "2000"])
        assert result.exit_code == 0
        assert rows(result.output)[1][:2] == ["0", "1"]


class TestCompare:

    def test_consistent(self, runner, write_model):
        result = runner.invoke(cli, ["compare", write_model(SERIES_TEXT), "--t", "1", "--t", "0.5",
                                     "--samples", "100000", "--seed", "5"])
        assert result.exit_code == 0
        table = rows(result.output)
        assert table[0] == ["t", "rel", "mc_rel", "mc_halfwidth", "z", "verdict"]
        assert [r[0] for r in table[1:]] == ["0.5", "1"]
        assert all(r[-1] == "consistent" for r in table[1:])

    def test_needs_times(self, runner, write_model):
        assert runner.invoke(cli, ["compare", write_model(SERIES_TEXT)]).exit_code == 2


class TestEquiv:

    def test_equivalent(self, runner, write_model):
        result = runner.invoke(cli, ["equiv", write_model(SERIES_TEXT), "A + B", "B + A", "--samples", "1000"])
        assert result.exit_code == 0
        assert result.output.startswith("equivalent on 1000 samples")

    def test_counterexample(self, runner, write_model):
        result = runner.invoke(cli, ["equiv", write_model(SERIES_TEXT), "A * B", "A + B", "--samples", "1000"])
        assert result.exit_code == 4
        assert result.output.startswith("counterexample at sample 0")

    def test_unknown_block(self, runner, write_model):
        result = runner.invoke(cli, ["equiv", write_model(SERIES_TEXT), "A * W", "A"])
        assert result.exit_code == 2


class TestRules:

    def test_listing(self, runner):
        result = runner.invoke(cli, ["rules"])
        assert result.exit_code == 0
        lines = result.output.strip().splitlines()
        assert len(lines) == 19
        assert any("absorb: X + X * Y = X" in line for line in lines)

    def test_verify(self, runner):
        result = runner.invoke(cli, ["rules", "--verify", "--samples", "5000"])
        assert result.exit_code == 0
        table = rows(result.output)
        verdicts = {(r[0], r[1]): r[2] for r in table[1:]}
        assert len(verdicts) == 20 * 3
        assert verdicts[("after_after_and (gated)", "exp(1)")] == "fail"
        assert all(v == "pass" for (name, _), v in verdicts.items() if "gated" not in name)


class TestCaseStudy:
    """Test the built-in case studies"""

    def test_dbw(self, runner):
        result = runner.invoke(cli, ["casestudy", "dbw", "--t1", "5000", "--steps", "2"])
        assert result.exit_code == 0
        table = rows(result.output)
        assert table[1] == ["0", "1"]
        assert len(table) == 4

    def test_sen_dominates_nospare(self, runner):
        args = ["--t1", "200000", "--steps", "5"]
        with_spares = rows(runner.invoke(cli, ["casestudy", "sen"] + args).output)[1:]
        without = rows(runner.invoke(cli, ["casestudy", "sen-nospare"] + args).output)[1:]
        for a, b in zip(with_spares, without):
            assert float(a[1]) >= float(b[1])

    def test_unknown(self, runner):
        assert runner.invoke(cli, ["casestudy", "nope"]).exit_code == 2

    def test_override(self, runner):
        base = runner.invoke(cli, ["casestudy", "dbw", "--t1", "5000", "--steps", "1"]).output
        faster = runner.invoke(cli, ["casestudy", "dbw", "--t1", "5000", "--steps", "1", "--rate", "TF=1e-3"]).output
        assert float(rows(faster)[-1][1]) < float(rows(base)[-1][1])
