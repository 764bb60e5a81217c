import csv
import math

import pytest

from tmsv_bell import analytic_core as ac
from tmsv_bell import cli


def parse_kv(text):
    return dict(line.split(None, 1) for line in text.strip().splitlines())


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestBell:
    def test_lossless(self, capsys):
        assert cli.main(["bell", "--r", "1", "--R", "0", "--R2", "0"]) == 0
        out = parse_kv(capsys.readouterr().out)
        assert float(out["bmax"]) == pytest.approx(2.7780, abs=1e-4)
        assert out["violated"] == "true"
        for key in ("alpha", "beta", "terms_used", "tail_estimate"):
            assert key in out

    def test_product_state(self, capsys):
        assert cli.main(["bell", "--r", "0", "--R", "0.5", "--R2", "0.5"]) == 0
        out = parse_kv(capsys.readouterr().out)
        assert float(out["bmax"]) == 2.0 and out["violated"] == "false"

    def test_threshold_point(self, capsys):
        cli.main(["bell", "--r", "1", "--R", "0.42", "--R2", "0.42"])
        assert abs(float(parse_kv(capsys.readouterr().out)["bmax"]) - 2) <= 0.02

    def test_oracle_flag(self, capsys):
        cli.main(["bell", "--r", "1", "--R", "0.3", "--R2", "0.1", "--oracle", "--cutoff", "40"])
        out = parse_kv(capsys.readouterr().out)
        assert float(out["oracle_delta"]) < 1e-6

    def test_gamma_and_lambda_forms(self, capsys):
        cli.main(["bell", "--lambda", str(math.tanh(1)), "--gamma", "0.1", "--R2", "0"])
        out = parse_kv(capsys.readouterr().out)
        assert float(out["R_A"]) == pytest.approx(math.sqrt(1 - math.exp(-0.2)), abs=1e-11)

    @pytest.mark.parametrize("argv", [
        ["bell", "--r", "1", "--lambda", "0.5"],
        ["bell", "--r", "1", "--R", "1.5"],
        ["bell", "--r", "-1"],
        ["bell", "--r", "1", "--R", "0.1", "--gamma", "0.1"],
        ["bell"],
    ])
    def test_domain_errors_exit_2(self, argv, capsys):
        assert cli.main(argv) == 2

    def test_convergence_error_exit_3(self, capsys):
        assert cli.main(["bell", "--r", "5", "--R", "0.1", "--R2", "0.1"]) == 3


class TestEve:
    def test_matches_oracle(self, capsys):
        assert cli.main(["eve", "--r", "1", "--R", "0.5", "--oracle"]) == 0
        out = parse_kv(capsys.readouterr().out)
        assert float(out["oracle_delta"]) < 1e-6

    def test_full_reflection_is_nopa(self, capsys):
        cli.main(["eve", "--r", "1", "--R", "1"])
        out = parse_kv(capsys.readouterr().out)
        assert float(out["bmax"]) == pytest.approx(ac.bmax_lossless(math.tanh(1)), abs=1e-10)


class TestSweep:
    def test_symmetric_crossing(self, tmp_path):
        path = tmp_path / "s.csv"
        assert cli.main(["sweep", "--start", "0", "--stop", "0.6", "--step", "0.01",
                         "--r", "1", "-o", str(path)]) == 0
        rows = read_csv(path)
        assert list(rows[0]) == cli.SWEEP_HEADER
        assert len(rows) == 61
        b = {round(float(r["R_A"]), 2): float(r["bmax"]) for r in rows}
        assert b[0.41] > 2.0 > b[0.43]

    def test_zero_squeezing_constant(self, tmp_path):
        path = tmp_path / "s.csv"
        cli.main(["sweep", "--start", "0", "--stop", "1", "--step", "0.1", "--r", "0",
                  "-o", str(path)])
        assert {r["bmax"] for r in read_csv(path)} == {"2"}

    def test_r_sweep_monotone(self, tmp_path):
        path = tmp_path / "s.csv"
        cli.main(["sweep", "--variable", "r", "--start", "0.1", "--stop", "3", "--step", "0.1",
                  "--R", "0", "-o", str(path)])
        rows = read_csv(path)
        b = [float(r["bmax"]) for r in rows]
        assert all(y > x for x, y in zip(b, b[1:]))
        assert b[-1] <= 2 * math.sqrt(2)
        for r in rows:
            assert float(r["bmax"]) == pytest.approx(ac.bmax_lossless(float(r["lambda"])), abs=1e-10)

    def test_gamma_sweep_asymmetric(self, tmp_path):
        path = tmp_path / "s.csv"
        cli.main(["sweep", "--variable", "gamma", "--start", "0", "--stop", "0.2", "--step", "0.05",
                  "--r", "1", "--mode", "asymmetric", "-o", str(path)])
        rows = read_csv(path)
        assert all(r["R_B"] == "0" for r in rows)

    def test_deterministic_and_parallel(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        args = ["sweep", "--start", "0", "--stop", "0.3", "--step", "0.05", "--r", "1.5"]
        cli.main(args + ["-o", str(a)])
        cli.main(args + ["-o", str(b), "--jobs", "2"])
        assert a.read_bytes() == b.read_bytes()

    def test_rows_rederivable_by_bell(self, tmp_path, capsys):
        path = tmp_path / "s.csv"
        cli.main(["sweep", "--start", "0.1", "--stop", "0.3", "--step", "0.1", "--r", "1",
                  "-o", str(path)])
        for row in read_csv(path):
            capsys.readouterr()
            cli.main(["bell", "--r", row["r"], "--R", row["R_A"], "--R2", row["R_B"]])
            assert parse_kv(capsys.readouterr().out)["bmax"] == row["bmax"]

    def test_unwritable_exit_4(self, tmp_path):
        assert cli.main(["sweep", "--start", "0", "--stop", "0.1", "--step", "0.1", "--r", "1",
                         "-o", str(tmp_path / "missing" / "x.csv")]) == 4

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv(cli.OUTDIR_ENV, str(tmp_path))
        cli.main(["sweep", "--start", "0", "--stop", "0.1", "--step", "0.1", "--r", "1"])
        assert (tmp_path / "sweep.csv").exists()

    def test_bad_grid(self):
        assert cli.main(["sweep", "--start", "1", "--stop", "0", "--step", "0.1", "--r", "1"]) == 2
        assert cli.main(["sweep", "--start", "0", "--stop", "1", "--step", "1e-6", "--r", "1"]) == 2


class TestThreshold:
    def test_symmetric_row(self, tmp_path):
        path = tmp_path / "t.csv"
        assert cli.main(["threshold", "--mode", "symmetric", "--r-start", "1", "--r-stop", "1",
                         "-o", str(path)]) == 0
        (row,) = read_csv(path)
        assert list(row) == cli.THRESHOLD_HEADER
        assert abs(float(row["r_max"]) - 0.42) <= 0.01
        assert abs(float(row["gamma_max"]) - 0.097) <= 0.002

    def test_asymmetric_row(self, tmp_path):
        path = tmp_path / "t.csv"
        cli.main(["threshold", "--mode", "asymmetric", "--r-start", "2", "--r-stop", "2",
                  "-o", str(path)])
        assert abs(float(read_csv(path)[0]["r_max"]) - 0.24) <= 0.01

    def test_r_start_floor(self):
        assert cli.main(["threshold", "--r-start", "0.05", "-o", "-"]) == 2

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(f"# defaults\nbisection_tol = 0.01\noutput_dir = {tmp_path}\n")
        cli.main(["--config", str(cfg), "threshold", "--r-start", "1", "--r-stop", "1"])
        row = read_csv(tmp_path / "threshold_symmetric.csv")[0]
        # coarse tolerance shows up in the bisection midpoint
        assert abs(float(row["r_max"]) - 0.42) <= 0.01

    def test_bad_config(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("colour = blue\n")
        assert cli.main(["--config", str(cfg), "bell", "--r", "1"]) == 2


class TestFitCheck:
    def test_exit_status_reflects_fit(self, capsys):
        code = cli.main(["fit-check", "--mode", "symmetric", "--r-values", "2.5",
                         "--tolerance", "0.5"])
        assert code == 0
        code = cli.main(["fit-check", "--mode", "symmetric", "--r-values", "2.5",
                         "--tolerance", "0.01", "--refit"])
        out = capsys.readouterr().out
        assert code == 1 and "FAIL" in out and "least-squares" in out


class TestOracleAudit:
    def test_small_grid_passes(self, capsys):
        code = cli.main(["oracle-audit", "--lambdas", "0", "0.5", "--grid", "0", "0.6",
                         "--cutoff", "40"])
        out = capsys.readouterr().out
        assert code == 0 and "PASS" in out

    def test_coarse_cutoff_fails(self, capsys):
        code = cli.main(["oracle-audit", "--lambdas", "0.5", "--grid", "0.2", "--cutoff", "2"])
        out = capsys.readouterr().out
        assert code == 1 and "FAIL" in out

    def test_vacuum_row_exact(self):
        for rA in (0.0, 0.5, 1.0):
            db, td = cli.audit_point(0.0, rA, 0.3, 10)
            assert db == 0.0 and td < 1e-15

    def test_odd_cutoff(self):
        assert cli.main(["oracle-audit", "--cutoff", "3"]) == 2
