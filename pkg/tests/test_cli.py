import json
import subprocess
import sys

import pytest

from ipsteleport.cli import main, parse_grid


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestEval:
    def test_p11(self, capsys):
        code, out, _ = run(capsys, "eval", "p11", "--x", "0.5", "--tau-eff", "0.8")
        assert code == 0 and float(out) == pytest.approx(1 / 56, abs=1e-12)
        assert out.strip() == "0.0178571428571"

    def test_fidelity_zero_x(self, capsys):
        _, out, _ = run(capsys, "eval", "avg-fidelity", "--x", "0", "--tau-eff", "0.9")
        assert out.strip() == "0.5"

    def test_twb_fidelity(self, capsys):
        _, out, _ = run(capsys, "eval", "twb-fidelity", "--x", "0.333333333333")
        assert out.strip() == "0.666666666667"

    def test_tau_eta(self, capsys):
        _, out, _ = run(capsys, "eval", "tau-eff", "--tau", "0.9", "--eta", "0.5")
        assert float(out) == pytest.approx(0.95)

    def test_numerical(self, capsys):
        _, out, _ = run(capsys, "eval", "delta-ab", "--x", "0.5", "--tau-eff", "0.8", "--numerical")
        vals = dict(line.split() for line in out.strip().splitlines())
        assert float(vals["delta_ab_numerical"]) == pytest.approx(float(vals["delta_ab"]), abs=1e-8)

    def test_window(self, capsys):
        _, out, _ = run(capsys, "eval", "secure-window", "--tau-eff", "0.95")
        vals = dict(line.split() for line in out.strip().splitlines())
        assert float(vals["window_lo"]) < 1 / 3 < float(vals["window_hi"])

    def test_none(self, capsys):
        _, out, _ = run(capsys, "eval", "x-th", "--tau-eff", "0.5")
        assert out.strip() == "none"

    @pytest.mark.parametrize(
        "args,needle",
        [
            (("eval", "p11", "--x", "1.5", "--tau-eff", "0.8"), "twin-beam parameter"),
            (("eval", "p11", "--x", "0.5", "--tau-eff", "0"), "tau_eff"),
            (("eval", "p11", "--x", "0.5", "--tau", "0.8", "--eta", "2"), "efficiency"),
            (("eval", "p11", "--tau-eff", "0.8"), "--x"),
            (("eval", "p11", "--x", "0.5", "--tau-eff", "0.8", "--tau", "0.9"), "not both"),
        ],
    )
    def test_domain_errors(self, capsys, args, needle):
        code, _, err = run(capsys, *args)
        assert code != 0 and needle in err


class TestSweep:
    def test_csv_file(self, tmp_path, capsys):
        out = tmp_path / "fig2.csv"
        assert main(["sweep", "fig2", "--out", str(out), "--jobs", "1"]) == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("# ") and "x,tau_eff,p11" in lines

    def test_json_stdout(self, capsys):
        code, out, _ = run(capsys, "sweep", "p11", "--x", "0.1:0.3:0.1", "--tau-eff", "0.8", "--format", "json", "--jobs", "1")
        doc = json.loads(out)
        assert code == 0 and [r["x"] for r in doc["rows"]] == [0.1, 0.2, 0.3]

    def test_unwritable(self, capsys):
        code, _, err = run(capsys, "sweep", "p11", "--x", "0.5", "--tau-eff", "0.8", "--out", "/nonexistent/dir/f.csv")
        assert code != 0 and "cannot write" in err

    def test_invalid_grid(self, capsys):
        code, _, err = run(capsys, "sweep", "p11", "--x", "0.5,1.5", "--tau-eff", "0.8")
        assert code != 0 and "x values" in err

    def test_byte_stable(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        main(["sweep", "fig4", "--out", str(a), "--jobs", "1"])
        main(["sweep", "fig4", "--out", str(b), "--jobs", "2"])
        assert a.read_bytes() == b.read_bytes()

    def test_parse_grid(self):
        assert parse_grid("0.5:0.6:0.05") == (0.5, 0.55, 0.6)
        assert parse_grid("0.1,0.2") == (0.1, 0.2)


class TestVerify:
    def test_passes(self, capsys):
        code, out, _ = run(capsys, "verify")
        assert code == 0 and "FAIL" not in out

    def test_perturbed_tolerance(self, capsys):
        code, out, _ = run(capsys, "verify", "--override-tol", "1e-20")
        assert code != 0
        first = next(line for line in out.splitlines() if line.startswith("FAIL"))
        assert "ips_state direct~simulated" in first and "tol=1.0e-20" in first

    @pytest.mark.slow
    def test_dense(self, capsys):
        code, out, _ = run(capsys, "verify", "--grid", "dense")
        assert code == 0, [line for line in out.splitlines() if line.startswith("FAIL")]


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "ipsteleport", "eval", "twb-fidelity", "--x", "0.4"],
        capture_output=True,
        text=True,
        check=True,
    )
    assert proc.stdout.strip() == "0.7"
