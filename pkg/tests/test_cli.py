import csv
import io

import pytest

from tcmcap.cli import fmt, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text, delim=","):
    return list(csv.reader(io.StringIO(text), delimiter=delim))


class TestFormatting:
    @pytest.mark.parametrize(
        "x,s",
        [(2.0, "2"), (4.025191880637, "4.02519"), (1e-9, "1e-09"), (-0.0, "0"), (3, "3"), (None, ""), (float("nan"), "nan"), (True, "1")],
    )
    def test_fmt(self, x, s):
        assert fmt(x) == s


class TestCapacity:
    def test_plain_range(self, capsys):
        code, out, _ = run(capsys, "capacity", "--method", "plain", "--d-min", "1", "--d-max", "7")
        assert code == 0
        r = rows(out)
        assert r[0] == ["d", "method", "alpha_bound", "c3_star", "gamma_star", "tol", "runtime_ms"]
        assert [x[0] for x in r[1:]] == ["1", "3", "5", "7"]
        assert r[1][2] == "2"
        assert r[2][3] == "" and r[2][4] == "" and r[2][6] == ""
        assert out.endswith("\n") and "\r" not in out

    def test_timings_column(self, capsys):
        code, out, _ = run(capsys, "capacity", "--method", "plain", "--d", "3", "--timings", "--no-cache")
        assert code == 0 and rows(out)[1][6] != ""

    def test_cache_hit_labelled(self, capsys):
        run(capsys, "capacity", "--method", "plain", "--d", "5")
        code, out2, err = run(capsys, "capacity", "--method", "plain", "--d", "5")
        assert code == 0
        assert "cache hit" in err

    def test_tsv_and_out(self, capsys, tmp_path):
        target = tmp_path / "o.tsv"
        code, out, _ = run(capsys, "capacity", "--method", "plain", "--d", "1", "--format", "tsv", "--out", str(target))
        assert code == 0 and out == ""
        assert rows(target.read_text(), "\t")[1][:3] == ["1", "plain", "2"]

    @pytest.mark.parametrize(
        "argv",
        [
            ["capacity", "--method", "plain", "--d", "4"],
            ["capacity", "--d", "3"],
            ["capacity", "--method", "cubic", "--d", "3"],
            ["capacity", "--method", "plain", "--d", "3", "--d-max", "7"],
            ["nosuch"],
            [],
        ],
    )
    def test_usage_errors(self, capsys, argv):
        code, out, err = run(capsys, *argv)
        assert code == 1
        assert out == ""

    def test_numerical_failure_exit_code(self, capsys):
        code, _, err = run(capsys, "capacity", "--method", "plain", "--d", "3", "--tol", "-1", "--no-cache")
        assert code == 2
        assert err.strip()


class TestOtherCommands:
    def test_asymptotic(self, capsys):
        code, out, _ = run(capsys, "asymptotic", "--d", "101", "1001")
        r = rows(out)
        assert code == 0 and r[0] == ["d", "c_hat", "ratio", "limit_gap"]
        assert r[1][2] == "4.0187"

    def test_oracle(self, capsys):
        code, out, _ = run(capsys, "oracle", "--d", "3", "--l", "1", "--samples", "20000", "--c3", "1", "--gamma", "1")
        r = rows(out)
        assert code == 0
        assert r[0] == ["l", "d", "c3", "gamma", "mc_mean", "mc_stderr", "quadrature", "abs_gap", "z_score"]
        assert len(r) == 3
        assert r[1][2] == "" and r[2][2] == "1"
        assert all(abs(float(x[8])) < 4 for x in r[1:])

    def test_oracle_mismatched_pairs(self, capsys):
        assert run(capsys, "oracle", "--c3", "1", "2", "--gamma", "1")[0] == 1

    def test_simulate(self, capsys):
        code, out, _ = run(capsys, "simulate", "--d", "3", "--delta", "2", "--alpha-min", "0.5", "--alpha-max", "1.5", "--trials", "10")
        r = rows(out)
        assert code == 0
        assert r[0] == ["alpha", "m", "trials", "success_frac", "ci_lo", "ci_hi", "timeout_frac"]
        assert [x[0] for x in r[1:]] == ["0.5", "1", "1.5"]

    def test_simulate_too_large(self, capsys):
        assert run(capsys, "simulate", "--delta", "6", "--alpha-max", "3", "--alpha-min", "3", "--trials", "1")[0] == 1

    def test_saddle_with_config(self, capsys, tmp_path):
        cfg = tmp_path / "s.cfg"
        cfg.write_text("alpha = 3\nd = 3\npoints = 3\n")
        code, out, err = run(capsys, "saddle", "--config", str(cfg))
        assert code == 0
        assert len(rows(out)) == 10
        assert "saddle" in err

    def test_flags_win_over_config(self, capsys, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("method = plain\nd = 3 5\n")
        code, out, _ = run(capsys, "capacity", "--config", str(cfg), "--d", "7")
        assert code == 0
        assert [x[0] for x in rows(out)[1:]] == ["7"]
        code, out, _ = run(capsys, "capacity", "--config", str(cfg))
        assert [x[0] for x in rows(out)[1:]] == ["3", "5"]

    def test_bad_config_key(self, capsys, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("colour = red\n")
        assert run(capsys, "capacity", "--config", str(cfg))[0] == 1


@pytest.mark.slow
def test_figure1_small(capsys):
    code, out, _ = run(capsys, "figure1", "--d-max", "5")
    r = rows(out)
    assert code == 0
    assert r[0] == ["d", "lifted", "plain", "cg_reference"]
    assert [x[0] for x in r[1:]] == ["1", "3", "5"]
    assert r[2][3] == "5.42"
    for x in r[2:]:
        assert float(x[1]) < float(x[2])
