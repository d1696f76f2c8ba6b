import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

import genlik.cli as cli
from genlik.errors import RootSolveFailure
from genlik.likelihood import FiniteJoint

INSTANCE1_PY = "0.1,0.3,0.6"
INSTANCE1_PX = "0.55,0.25,0.20"
BOLD1 = np.array([[0, 0, 55 / 60], [0, 25 / 30, 0], [1, 5 / 30, 5 / 60]])


def run(argv):
    """In-process run returning (status, stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    try:
        config = cli.parse_config(argv)
    except cli.UsageError as exc:
        return 2, "", str(exc)
    return cli.dispatch(config, out, err), out.getvalue(), err.getvalue()


def golden_joint_csv(p):
    lines = ["x,y,p_hat"]
    for x in range(p.shape[0]):
        for y in range(p.shape[1]):
            lines.append(f"{x},{y},{format(float(p[x, y]), '.17g')}")
    return "\n".join(lines) + "\n"


class TestParseConfig:
    def test_d1d2_flags(self):
        cfg = cli.parse_config(["d1d2", "--n", "4", "--m", "4", "--score", "abs-diff", "--S", "1000",
                                "--seed", "7"])
        assert cfg.command == "d1d2"
        assert cfg.params["n"] == 4 and cfg.params["S"] == 1000 and cfg.seed == 7
        assert cfg.params["beta"] == 0.95
        assert cfg.format == "csv"

    def test_defaults(self):
        cfg = cli.parse_config(["discrete"])
        assert cfg.seed == 0 and cfg.params["beta"] == 0.95

    def test_flag_overrides_file(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("# comment\nbeta = 0.95\nz = 0.3  # trailing\n")
        assert cli.parse_config(["discrete", "--config", str(f)]).params["z"] == 0.3
        cfg = cli.parse_config(["discrete", "--config", str(f), "--beta", "0.9"])
        assert cfg.params["beta"] == 0.9

    def test_vectors_in_file(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("pY = 0.4, 0.01, 0.5, 0.09\ntarget = 4\n")
        cfg = cli.parse_config(["solve-avg", "--config", str(f)])
        assert cfg.params["pY"] == [0.4, 0.01, 0.5, 0.09]

    @pytest.mark.parametrize("argv", [
        ["discrete", "--beta", "-1"],
        ["discrete", "--beta", "abc"],
        ["discrete", "--z", "1.5"],
        ["discrete", "--bogus", "1"],
        ["nosuch"],
        ["d1d2", "--format", "xml"],
        ["solve-avg", "--target", "4"],
        ["solve-avg", "--pY", "0.5,0.6", "--target", "4"],
        ["d3", "--M", "0"],
    ])
    def test_usage_errors(self, argv):
        with pytest.raises(cli.UsageError):
            cli.parse_config(argv)

    def test_unknown_file_key_named(self, tmp_path):
        f = tmp_path / "bad.cfg"
        f.write_text("bogus_key = 3\n")
        with pytest.raises(cli.UsageError, match="bogus_key"):
            cli.parse_config(["discrete", "--config", str(f)])

    def test_threads_env(self, monkeypatch):
        monkeypatch.setenv("GENLIK_THREADS", "3")
        assert cli.parse_config(["d1d2"]).params["threads"] == 3
        assert cli.parse_config(["d1d2", "--threads", "2"]).params["threads"] == 2


class TestSubcommands:
    def test_eval_uniform(self, tmp_path):
        g = tmp_path / "u.csv"
        g.write_text("0.25,0.25\n0.25,0.25\n")
        status, out, _ = run(["eval", "--grid", str(g), "--beta", "1"])
        assert status == 0
        val = float(out.splitlines()[1].split(",")[1])
        assert abs(val + math.log(2)) <= 1e-12

    def test_majorize_golden(self):
        status, out, _ = run(["majorize", "--pY", INSTANCE1_PY, "--pX", INSTANCE1_PX])
        assert status == 0
        got = FiniteJoint.from_csv(out).p
        pY = np.array([0.1, 0.3, 0.6])
        np.testing.assert_allclose(got, BOLD1 * pY, atol=1e-12)
        assert out == golden_joint_csv(got)

    def test_grid_round_trip(self):
        status, out, _ = run(["solve-avg", "--pY", "0.4,0.01,0.5,0.09", "--target", "4"])
        assert status == 0
        joint = FiniteJoint.from_csv(out)
        values = np.array([float(line.split(",")[2]) for line in out.splitlines()[1:]])
        np.testing.assert_allclose(joint.p.ravel(), values, rtol=0, atol=1e-15)

    def test_solve_avg_beta_above_one_routes_sparse(self):
        status, out, err = run(["solve-avg", "--pY", "0.4,0.01,0.5,0.09", "--target", "4", "--beta", "2"])
        assert status == 0
        assert json.loads(err.splitlines()[-1])["solver"] == "greedy_majorize"

    def test_solve_two_sidecar(self):
        status, out, err = run(["solve-two", "--pY", "0.4,0.01,0.5,0.09", "--target", "4"])
        assert status == 0
        side = json.loads(err.splitlines()[-1])
        assert side["residual_marginal"] <= 1e-10 and side["residual_average"] <= 1e-10
        joint = FiniteJoint.from_csv(out)
        np.testing.assert_allclose(joint.marginal_y(), [0.4, 0.01, 0.5, 0.09], atol=1e-10)

    def test_gibbs_and_analytic(self):
        assert run(["gibbs-limit", "--pY", "0.4,0.01,0.5,0.09", "--target", "4"])[0] == 0
        status, out, _ = run(["discrete", "--z", "0.5", "--beta", "0.4", "--format", "jsonl"])
        assert status == 0 and json.loads(out)["regime"] == "trivial"
        status, out, _ = run(["continuous", "--chi", "2", "--beta", "0.9", "--format", "jsonl"])
        assert json.loads(out)["chi_hat"] == pytest.approx(1.70765, abs=1e-5)

    def test_em_trace(self):
        status, out, err = run(["em", "--max-iters", "2"])
        assert status == 0
        assert out.splitlines()[0] == "iter,theta_0,theta_1,L_beta,grad_norm"
        assert json.loads(err)["stop_reason"] == "max_iters"

    def test_em_mixture(self, tmp_path):
        comp = tmp_path / "c.csv"
        comp.write_text("0.8,0.2\n0.3,0.7\n")
        status, out, _ = run(["em", "--family", "mixture", "--components", str(comp),
                              "--pY", "0.45,0.55", "--beta", "1", "--theta0", "0.2"])
        assert status == 0

    def test_fig1_and_maxent(self):
        status, out, _ = run(["fig1", "--points", "3"])
        assert status == 0 and out.splitlines()[0] == "beta,E,hellinger"
        assert len(out.splitlines()) == 10
        status, out, _ = run(["maxent-study", "--draws", "2", "--samples", "20", "--M-list", "7"])
        assert status == 0
        assert out.splitlines()[0] == "M,pct_d1,pct_d12,pct_md,pct_d0,dbar1,dbar12,dbarmd,dbar0"

    def test_maximin(self):
        status, out, _ = run(["maximin-demo", "--n-grid", "101", "--format", "jsonl"])
        assert status == 0
        first = json.loads(out.splitlines()[0])
        assert first["kind"] == "summary"

    def test_output_file(self, tmp_path):
        dest = tmp_path / "out.csv"
        status, out, _ = run(["discrete", "--output", str(dest)])
        assert status == 0 and out == ""
        assert dest.read_text().startswith("regime,")


class TestDeterminism:
    def test_d1d2_twice(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for dest in (a, b):
            assert run(["d1d2", "--S", "6", "--seed", "3", "--output", str(dest)])[0] == 0
        assert a.read_bytes() == b.read_bytes()

    def test_threads_byte_identical(self, tmp_path):
        outs = []
        for t in ("1", "4"):
            dest = tmp_path / f"d3_{t}.csv"
            summ = tmp_path / f"d3_{t}.json"
            assert run(["d3", "--S", "5", "--M", "200", "--threads", t, "--output", str(dest),
                        "--summary", str(summ)])[0] == 0
            outs.append((dest.read_bytes(), summ.read_bytes()))
        assert outs[0] == outs[1]

    def test_floats_seventeen_digits(self):
        assert cli.fmt_value(0.1) == "0.10000000000000001"
        assert cli.json_value({"a": [0.1, math.inf]}) == '{"a": [0.10000000000000001, null]}'


class TestExitStatus:
    def test_missing_grid_file(self, tmp_path):
        status, _, err = run(["eval", "--grid", str(tmp_path / "none.csv")])
        assert status == 2 and "not found" in err

    def test_malformed_grid(self, tmp_path):
        g = tmp_path / "bad.csv"
        g.write_text("0.5,zz\n")
        assert run(["eval", "--grid", str(g)])[0] == 2

    def test_infeasible_target(self):
        assert run(["solve-avg", "--pY", "0.4,0.01,0.5,0.09", "--target", "20"])[0] == 2

    def test_wrong_score_shape(self, tmp_path):
        s = tmp_path / "E.csv"
        s.write_text("1,2\n3,4\n")
        assert run(["solve-avg", "--pY", "0.5,0.2,0.3", "--target", "2", "--score", str(s)])[0] == 2

    def test_solver_failure(self, monkeypatch):
        def boom(*a, **k):
            raise RootSolveFailure("forced failure", residuals={"marginal": 0.5})

        monkeypatch.setattr(cli.constrained, "solve_known_average", boom)
        status, out, err = run(["solve-avg", "--pY", "0.4,0.01,0.5,0.09", "--target", "4"])
        assert status == 1 and out == ""
        diag = json.loads(err)
        assert diag["error"] == "RootSolveFailure" and diag["residuals"]["marginal"] == 0.5

    def test_console_entry(self):
        res = subprocess.run([sys.executable, "-m", "genlik.cli", "discrete", "--beta", "-1"],
                             capture_output=True, text=True)
        assert res.returncode == 2 and "usage error" in res.stderr
        res = subprocess.run([sys.executable, "-m", "genlik.cli", "discrete", "--z", "0.5"],
                             capture_output=True, text=True)
        assert res.returncode == 0 and res.stdout.startswith("regime,")
