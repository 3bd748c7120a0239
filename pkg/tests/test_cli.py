import json

import pytest

from meanreduce.cli import main


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, err = run_cli(capsys, *argv)
    assert code == 0, f"exit {code}, stderr: {err}"
    return json.loads(out)


class TestMeanCommand:
    def test_holder(self, capsys):
        data = run_json(capsys, "mean", "--kind", "holder", "--p", "2", "--x", "1,7")
        assert data["value"] == pytest.approx(5.0)
        assert data["converged"] is True

    def test_arithmetic_constant(self, capsys):
        data = run_json(capsys, "mean", "--kind", "arithmetic", "--x", "4,4,4")
        assert data["value"] == pytest.approx(4.0)

    def test_gini(self, capsys):
        data = run_json(capsys, "mean", "--kind", "gini", "--p", "2", "--q", "1",
                        "--x", "1,3")
        assert data["value"] == pytest.approx(2.5)

    def test_vector_arithmetic(self, capsys):
        data = run_json(capsys, "mean", "--kind", "arithmetic", "--dim", "2",
                        "--x", "0,0;2,2")
        assert data["value"] == pytest.approx([1.0, 1.0])

    def test_custom_deviation_reports_solver_diagnostics(self, capsys):
        data = run_json(capsys, "mean", "--kind", "deviation-custom",
                        "--exprs", "u*(u - v)", "--domain", "0.05,30",
                        "--x", "1,3")
        assert data["value"] == pytest.approx(2.5, abs=1e-9)
        assert data["iterations"] > 0

    def test_descriptor_json_string(self, capsys):
        desc = json.dumps({"kind": "holder", "arity": 2, "params": {"p": 2}})
        data = run_json(capsys, "mean", "--descriptor", desc, "--x", "1,7")
        assert data["value"] == pytest.approx(5.0)

    def test_invalid_input_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "mean", "--kind", "holder", "--p", "1",
                               "--x", "1,-3")
        assert code == 2
        assert err

    def test_csv_output(self, capsys):
        code, out, _ = run_cli(capsys, "mean", "--kind", "holder", "--p", "1",
                               "--x", "1,3", "--format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0].split(",")[0] == "value"
        assert float(lines[1].split(",")[0]) == pytest.approx(2.0)


class TestReduceCommand:
    def test_arithmetic_reduction(self, capsys):
        data = run_json(capsys, "reduce", "--kind", "arithmetic", "--arity", "3",
                        "--chi", "1,2", "--x", "1,5")
        assert data["value"] == pytest.approx(3.0, abs=1e-9)
        assert data["unique_flag"] == "unique"

    def test_geometric_reduction(self, capsys):
        data = run_json(capsys, "reduce", "--kind", "quasi-arithmetic", "--f", "log",
                        "--arity", "3", "--chi", "1,2", "--x", "2,8")
        assert data["value"] == pytest.approx(4.0, abs=1e-8)

    def test_bijective_injection(self, capsys):
        data = run_json(capsys, "reduce", "--kind", "arithmetic", "--arity", "3",
                        "--chi", "1,2,3", "--x", "1,2,3")
        assert data["value"] == pytest.approx(2.0, abs=1e-10)

    def test_vector_reduction(self, capsys):
        data = run_json(capsys, "reduce", "--kind", "arithmetic", "--arity", "4",
                        "--dim", "2", "--chi", "1,3", "--x", "0,0;2,2")
        assert data["value"] == pytest.approx([1.0, 1.0], abs=1e-9)

    def test_budget_exhaustion_exits_3(self, capsys):
        code, _, err = run_cli(capsys, "reduce", "--kind", "arithmetic",
                               "--arity", "4", "--chi", "1,2,3", "--x", "1,2,4",
                               "--max-iter", "1", "--abs-tol", "1e-13")
        assert code == 3
        assert "converge" in err


class TestVerifyCommand:
    def test_jensen_suite_passes(self, capsys):
        report = run_json(capsys, "verify", "jensen", "--trials", "10")
        assert report["passed"] is True

    def test_reduction_oracles_pass(self, capsys):
        report = run_json(capsys, "verify", "reduction-oracles")
        assert report["passed"] is True

    def test_failing_suite_records_expected_failures(self, capsys):
        report = run_json(capsys, "verify", "failing", "--trials", "60")
        assert report["passed"] is True
        reversed_case = next(c for c in report["cases"]
                             if c["case"] == "power-order-reversed")
        assert reversed_case["full"]["found"] is True
        assert reversed_case["expected"] == "fail"
        assert reversed_case["ok"] is True

    def test_unknown_suite_exits_2(self, capsys):
        code, _, err = run_cli(capsys, "verify", "no-such-suite")
        assert code == 2
        assert "suite" in err

    def test_malformed_suite_exits_2(self, capsys, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{\"name\": \"broken\"}")
        code, _, _ = run_cli(capsys, "verify", str(bad))
        assert code == 2

    def test_output_file_and_determinism(self, capsys, tmp_path):
        out1 = tmp_path / "a.json"
        out2 = tmp_path / "b.json"
        assert main(["verify", "failing", "--seed", "7", "--trials", "40",
                     "--output", str(out1)]) == 0
        assert main(["verify", "failing", "--seed", "7", "--trials", "40",
                     "--output", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_csv_format(self, capsys):
        code, out, _ = run_cli(capsys, "verify", "reduction-oracles", "--format", "csv")
        assert code == 0
        header = out.splitlines()[0]
        assert header.startswith("case,kind,expected,ok")


class TestFuzzCommand:
    def test_fuzz_reports_without_expectations(self, capsys):
        report = run_json(capsys, "fuzz", "failing", "--trials", "40")
        assert report["counterexamples"] >= 5
        assert report["errors"] == 0

    def test_fuzz_same_seed_identical(self, capsys, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        assert main(["fuzz", "failing", "--seed", "3", "--trials", "30",
                     "--output", str(a)]) == 0
        assert main(["fuzz", "failing", "--seed", "3", "--trials", "30",
                     "--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
