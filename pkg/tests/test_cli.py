"""The fisher-solve command line tool end to end."""

import numpy as np

from fisher_solve import generate_problem, read_matrix, read_vector, solve_chol
from fisher_solve.bench import CSV_HEADER
from fisher_solve.cli import run_cli


def run(capsys, *argv):
    code = run_cli(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestGen:
    def test_writes_problem_files(self, tmp_path, capsys):
        base = str(tmp_path / "prob")
        code, out, _ = run(capsys, "gen", "--n", "4", "--m", "12", "--lambda", "1e-3",
                           "--seed", "5", "--out", base)
        assert code == 0
        assert "prob.S.fmat" in out
        S = read_matrix(base + ".S.fmat")
        v = read_vector(base + ".v.fmat")
        reference = generate_problem(5, 4, 12, 1e-3)
        assert S.tobytes() == reference.system.S.data.tobytes()
        assert v.tobytes() == reference.system.v.tobytes()

    def test_structured_also_writes_f(self, tmp_path, capsys):
        base = str(tmp_path / "sp")
        code, _, _ = run(capsys, "gen", "--n", "3", "--m", "9", "--kind", "structured",
                         "--out", base)
        assert code == 0
        f = read_vector(base + ".f.fmat")
        assert f.shape == (3,)


class TestSolve:
    def test_solve_matches_library_and_is_deterministic(self, tmp_path, capsys):
        base = str(tmp_path / "p")
        assert run(capsys, "gen", "--n", "4", "--m", "16", "--seed", "2", "--out", base)[0] == 0
        out1 = str(tmp_path / "x1.fmat")
        out2 = str(tmp_path / "x2.fmat")
        for out in (out1, out2):
            code, stdout, _ = run(capsys, "solve", base + ".S.fmat", base + ".v.fmat",
                                  "--method", "chol", "--lambda", "0.001", "--out", out)
            assert code == 0
            assert "method=chol" in stdout
        x1, x2 = read_vector(out1), read_vector(out2)
        assert x1.tobytes() == x2.tobytes()
        reference = generate_problem(2, 4, 16, 1e-3)
        assert np.allclose(x1, solve_chol(reference.system).x, rtol=1e-12, atol=0)

    def test_rvb_reads_coefficients_as_rhs(self, tmp_path, capsys):
        base = str(tmp_path / "p")
        assert run(capsys, "gen", "--n", "4", "--m", "16", "--kind", "structured",
                   "--out", base)[0] == 0
        out = str(tmp_path / "x.fmat")
        code, stdout, _ = run(capsys, "solve", base + ".S.fmat", base + ".f.fmat",
                              "--method", "rvb", "--lambda", "0.001", "--out", out)
        assert code == 0
        assert read_vector(out).shape == (16,)

    def test_missing_file_is_a_runtime_error(self, tmp_path, capsys):
        code, _, err = run(capsys, "solve", str(tmp_path / "nope.fmat"),
                           str(tmp_path / "nope2.fmat"), "--method", "chol")
        assert code == 1
        assert "error" in err

    def test_variant_mismatch_exits_one(self, tmp_path, capsys):
        base = str(tmp_path / "p")
        run(capsys, "gen", "--n", "2", "--m", "6", "--out", base)
        code, _, err = run(capsys, "solve", base + ".S.fmat", base + ".v.fmat",
                           "--method", "chol", "--variant", "hermitian")
        assert code == 1
        assert "hermitian" in err


class TestBench:
    def test_emits_header_and_row(self, capsys):
        code, out, _ = run(capsys, "bench", "--method", "chol", "--n", "8", "--m", "64",
                           "--lambda", "1e-3", "--seed", "0", "--repeats", "3", "--warmup", "1")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == CSV_HEADER
        fields = lines[1].split(",")
        assert fields[0] == "chol"
        assert fields[1:6] == ["8", "64", "0.001", "0", "3"]
        assert fields[9] == "ok"

    def test_structured_bench_can_time_rvb(self, capsys):
        code, out, _ = run(capsys, "bench", "--method", "rvb", "--kind", "structured",
                           "--n", "4", "--m", "32", "--repeats", "2", "--warmup", "0")
        assert code == 0
        assert out.strip().splitlines()[1].startswith("rvb,")


class TestScaling:
    def test_small_sweep_reports_fit(self, capsys):
        code, out, _ = run(capsys, "scaling", "--method", "chol", "--fix", "n=8",
                           "--vary", "m=64:512:3", "--repeats", "2", "--warmup", "1")
        assert code == 0
        lines = out.strip().splitlines()
        assert lines[0] == CSV_HEADER
        assert len(lines) == 5  # header, 3 points, fit summary
        assert lines[-1].startswith("# scaling m in [64, 512] at n=8:")
        assert "exponent=" in lines[-1]

    def test_same_dimension_refused(self, capsys):
        code, _, err = run(capsys, "scaling", "--method", "chol", "--fix", "m=8",
                           "--vary", "m=64:512:3")
        assert code == 1
        assert "same dimension" in err

    def test_malformed_vary_is_a_usage_error(self, capsys):
        code, _, err = run(capsys, "scaling", "--method", "chol", "--fix", "n=8",
                           "--vary", "m=64")
        assert code == 2
        assert "usage" in err


class TestCheck:
    def test_passes_on_well_posed_problem(self, capsys):
        code, out, _ = run(capsys, "check", "--n", "8", "--m", "64", "--seed", "42")
        assert code == 0
        assert "all checks passed" in out
        assert out.count("ok  ") == 7


class TestPlumbing:
    def test_bad_flags_exit_two(self, capsys):
        assert run(capsys, "bench", "--method", "warp", "--n", "1", "--m", "1")[0] == 2
        assert run(capsys, "no-such-command")[0] == 2
        assert run(capsys)[0] == 2

    def test_thread_cap_env(self, capsys, monkeypatch):
        monkeypatch.setenv("FISHER_SOLVE_THREADS", "1")
        code, out, _ = run(capsys, "bench", "--method", "chol", "--n", "4", "--m", "16",
                           "--repeats", "1", "--warmup", "0")
        assert code == 0
        assert out.startswith(CSV_HEADER)

    def test_thread_cap_zero_means_auto(self, capsys, monkeypatch):
        monkeypatch.setenv("FISHER_SOLVE_THREADS", "0")
        assert run(capsys, "check", "--n", "2", "--m", "8")[0] == 0

    def test_bad_thread_cap_reports_error(self, capsys, monkeypatch):
        monkeypatch.setenv("FISHER_SOLVE_THREADS", "-2")
        code, _, err = run(capsys, "check", "--n", "2", "--m", "8")
        assert code == 1
        assert "FISHER_SOLVE_THREADS" in err
