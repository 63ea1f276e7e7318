"""Tests for the command-line interface."""

import json

import numpy as np
import pytest
from click.testing import CliRunner

from framesynth.cli import cli


@pytest.fixture
def runner():
    """Click test runner."""
    return CliRunner()


@pytest.fixture
def example1_file(write_problem, example1):
    """Problem file for diag(5,4) with weights (3,3,2,1)."""
    return write_problem(example1)


def invoke(runner, *args):
    return runner.invoke(cli, ["-q", *args])


class TestFeasible:
    """Test the feasible command."""

    def test_feasible(self, runner, example1_file):
        """Test diag(5,4) with weights (3,3,2,1) is feasible."""
        result = invoke(runner, "feasible", example1_file)
        assert result.exit_code == 0
        assert json.loads(result.stdout)["feasible"] is True

    def test_infeasible(self, runner, write_problem, example2):
        """Test diag(5,2,2) with weights (4,4,1) exits with 2 and reports p = 2."""
        result = invoke(runner, "feasible", write_problem(example2))
        assert result.exit_code == 2
        report = json.loads(result.stdout)
        assert report["feasible"] is False
        assert report["violating_p"] == 2

    def test_norms(self, runner, write_problem):
        """Test norms are squared into weights."""
        path = write_problem({"eigenvalues": [1.5, 1.5], "norms": [1.0, 1.0, 1.0]})
        result = invoke(runner, "feasible", path)
        assert result.exit_code == 0

    def test_single_eigenvalue(self, runner, write_problem):
        """Test a one-dimensional operator with one weight."""
        result = invoke(runner, "feasible", write_problem({"eigenvalues": [1], "weights": [1]}))
        assert result.exit_code == 0

    def test_missing_file(self, runner, tmp_path):
        """Test a missing problem file is an input error."""
        result = invoke(runner, "feasible", str(tmp_path / "missing.json"))
        assert result.exit_code == 1

    def test_malformed_file(self, runner, tmp_path):
        """Test malformed JSON is an input error."""
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        result = invoke(runner, "feasible", str(path))
        assert result.exit_code == 1

    def test_both_operator_forms(self, runner, write_problem):
        """Test 'matrix' and 'eigenvalues' together are rejected."""
        path = write_problem({"matrix": [[1.0]], "eigenvalues": [1.0], "weights": [1.0]})
        result = invoke(runner, "feasible", path)
        assert result.exit_code == 1

    def test_not_positive(self, runner, write_problem):
        """Test an indefinite operator exits with 2."""
        path = write_problem({"matrix": [[1.0, 2.0], [2.0, 1.0]], "weights": [1.0, 1.0]})
        result = invoke(runner, "feasible", path)
        assert result.exit_code == 2


class TestDecompose:
    """Test the decompose command."""

    def test_diag_five_four(self, runner, example1_file):
        """Test diag(5,4) with weights (3,3,2,1) decomposes and reconstructs."""
        result = invoke(runner, "decompose", example1_file)
        assert result.exit_code == 0
        output = json.loads(result.stdout)
        assert output["dim"] == 2
        assert output["weights"] == [3.0, 3.0, 2.0, 1.0]
        assert [step["kind"] for step in output["steps"]] == ["case2", "case1", "rank_one", "rank_one"]
        assert output["report"]["reconstruction_error"] <= 1e-12
        np.testing.assert_allclose(output["matrix"], np.diag([5.0, 4.0]))

    def test_identity(self, runner, write_problem):
        """Test I_3 with unit weights gives the standard basis up to sign."""
        path = write_problem({"matrix": np.eye(3).tolist(), "weights": [1, 1, 1]})
        result = invoke(runner, "decompose", path)
        assert result.exit_code == 0
        np.testing.assert_allclose(np.abs(json.loads(result.stdout)["vectors"]), np.eye(3), atol=1e-12)

    def test_infeasible(self, runner, write_problem, example2):
        """Test infeasible weights exit with 2."""
        result = invoke(runner, "decompose", write_problem(example2))
        assert result.exit_code == 2

    def test_deterministic(self, runner, write_problem, rng, random_orthogonal, schur_weights):
        """Test the same input gives byte-identical output."""
        b = rng.uniform(0.5, 3.0, 8)
        q = random_orthogonal(rng, 8)
        matrix = q @ np.diag(b) @ q.T
        matrix = (matrix + matrix.T) / 2
        path = write_problem({"matrix": matrix.tolist(), "weights": schur_weights(rng, b, 12)})
        first = invoke(runner, "decompose", path)
        second = invoke(runner, "decompose", path)
        assert first.exit_code == 0
        assert first.stdout == second.stdout

    def test_verify_round_trip(self, runner, example1_file, tmp_path):
        """Test a written decomposition verifies, and a tampered one fails with 3."""
        out = tmp_path / "decomposition.json"
        assert invoke(runner, "decompose", example1_file, "-o", str(out)).exit_code == 0

        result = invoke(runner, "verify", str(out))
        assert result.exit_code == 0
        assert json.loads(result.stdout)["reconstruction_error"] <= 1e-12

        data = json.loads(out.read_text())
        data["vectors"][0][0] += 0.1
        tampered = tmp_path / "tampered.json"
        tampered.write_text(json.dumps(data))
        assert invoke(runner, "verify", str(tampered)).exit_code == 3

    def test_csv(self, runner, example1_file):
        """Test CSV export has a weight column and one row per term."""
        result = invoke(runner, "decompose", example1_file, "--format", "csv")
        assert result.exit_code == 0
        lines = result.stdout.splitlines()
        assert lines[0] == "weight,x0,x1"
        assert len(lines) == 5
        assert float(lines[1].split(",")[0]) == 3.0

    def test_tol(self, runner, example1_file):
        """Test --tol accepts a positive value and rejects a negative one."""
        assert invoke(runner, "decompose", example1_file, "--tol", "1e-6").exit_code == 0
        assert invoke(runner, "decompose", example1_file, "--tol", "-1").exit_code == 1

    def test_config(self, runner, example1_file, tmp_path):
        """Test a tolerance file is applied and a bad one is rejected."""
        good = tmp_path / "tolerances.yaml"
        good.write_text("tolerances:\n  sums: 1.0e-8\n")
        assert runner.invoke(cli, ["-q", "--config", str(good), "decompose", example1_file]).exit_code == 0

        bad = tmp_path / "bad.yaml"
        bad.write_text("tolerances:\n  sums: -1\n")
        assert runner.invoke(cli, ["-q", "--config", str(bad), "decompose", example1_file]).exit_code == 1


class TestTight:
    """Test the tight command."""

    def test_three_vectors_in_plane(self, runner):
        """Test norms (1,1,1) in R^2 give frame bound 3/2."""
        result = invoke(runner, "tight", "-n", "2", "--norms", "1,1,1")
        assert result.exit_code == 0
        output = json.loads(result.stdout)
        assert output["tight"] is True
        assert output["frame_bound"] == pytest.approx(1.5)
        np.testing.assert_allclose(output["frame_operator"], 1.5 * np.eye(2), atol=1e-12)

    def test_ffi_violated(self, runner):
        """Test norms (2,1) in R^2 exit with 2."""
        result = invoke(runner, "tight", "-n", "2", "--norms", "2,1")
        assert result.exit_code == 2

    def test_bad_norms(self, runner):
        """Test unparsable norms are an input error."""
        assert invoke(runner, "tight", "-n", "2", "--norms", "1,x").exit_code == 1


class TestFrame:
    """Test the frame command."""

    def test_diag_five_four_norms(self, runner, write_problem):
        """Test a frame for diag(5,4) with squared norms (3,3,2,1)."""
        path = write_problem({"eigenvalues": [5.0, 4.0], "norms": [3 ** 0.5, 3 ** 0.5, 2 ** 0.5, 1.0]})
        result = invoke(runner, "frame", path)
        assert result.exit_code == 0
        output = json.loads(result.stdout)
        np.testing.assert_allclose(output["frame_operator"], np.diag([5.0, 4.0]), atol=1e-9)
        np.testing.assert_allclose(output["bounds"], [4.0, 5.0], atol=1e-9)

    def test_needs_norms(self, runner, example1_file):
        """Test a problem with weights instead of norms is rejected."""
        assert invoke(runner, "frame", example1_file).exit_code == 1


class TestStream:
    """Test the stream command."""

    def test_constant_half(self, runner):
        """Test three blocks of c_i = 1/2."""
        result = invoke(runner, "stream", "const:0.5", "--blocks", "3")
        assert result.exit_code == 0
        output = json.loads(result.stdout)
        assert [block["n"] for block in output["blocks"]] == [4, 8, 12]
        assert [block["threshold"] for block in output["blocks"]] == [9, 17, 25]
        assert len(output["terms"]) == 25
        assert output["consumed"] >= 25
        assert all(block["partial_sum_error"] <= 1e-12 for block in output["blocks"])

    def test_no_terms(self, runner):
        """Test --no-terms drops the term list."""
        result = invoke(runner, "stream", "const:0.5", "--blocks", "1", "--no-terms")
        assert "terms" not in json.loads(result.stdout)

    def test_stalls(self, runner):
        """Test c_i = 1 stalls at the cap with exit code 2."""
        assert invoke(runner, "stream", "const:1", "--cap", "50").exit_code == 2

    def test_unknown_stream(self, runner):
        """Test an unknown stream source is an input error."""
        assert invoke(runner, "stream", "harmonic").exit_code == 1


class TestInitProblem:
    """Test the init-problem command."""

    @pytest.mark.parametrize("name", ["problem.yaml", "problem.json"])
    def test_template_is_solvable(self, runner, tmp_path, name):
        """Test the template round-trips through decompose."""
        path = tmp_path / name
        assert runner.invoke(cli, ["init-problem", "-o", str(path)]).exit_code == 0
        assert path.exists()
        assert invoke(runner, "decompose", str(path)).exit_code == 0
