import subprocess
import sys

import numpy as np
import pytest

from chanbound import acceptance, channels as ch, cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def first_value(out):
    return float(out.splitlines()[0].split("=")[1])


def test_measure_weight_of_depolarizing(capsys):
    code, out, _ = run(capsys, "measure", "--theory", "ns", "--channel", "depolarizing:p=0.3", "--monotone", "weight")
    assert code == 0
    assert first_value(out) == pytest.approx(0.3, abs=1e-6)
    assert "witness: verified" in out and "solver:" in out


def test_measure_t_state_fidelity(capsys):
    code, out, _ = run(capsys, "measure", "--theory", "stab", "--state", "T", "--monotone", "fidelity")
    assert code == 0
    assert first_value(out) == pytest.approx(0.853553, abs=1e-6)


def test_measure_ppt_identity_fidelity(capsys):
    code, out, _ = run(capsys, "measure", "--theory", "ppt", "--channel", "identity:d=2", "--monotone", "fidelity")
    assert code == 0
    assert first_value(out) == pytest.approx(0.5, abs=1e-6)


def test_measure_sep_closed_form(capsys):
    code, out, _ = run(capsys, "measure", "--theory", "sep", "--channel", "ad:gamma=0.3", "--monotone", "robustness")
    assert code == 0
    assert first_value(out) == pytest.approx(1.7, abs=1e-9)


def test_channel_file_input(capsys, tmp_path):
    path = tmp_path / "choi.txt"
    with open(path, "w") as fh:
        ch.to_text(ch.make_depolarizing(0.5), fh)
    code, out, _ = run(capsys, "measure", "--theory", "ns", "--channel", str(path), "--monotone", "robustness")
    assert code == 0
    assert first_value(out) == pytest.approx(2.5, abs=1e-6)


def test_state_file_input(capsys, tmp_path):
    path = tmp_path / "rho.npy"
    np.save(path, np.diag([0.5, 0.5, 0.0]).astype(complex))
    code, out, _ = run(capsys, "measure", "--theory", "coherence", "--state", str(path), "--monotone", "robustness")
    assert code == 0
    assert first_value(out) == pytest.approx(1.0, abs=1e-6)


def test_parse_channel_specs():
    assert np.allclose(cli.parse_channel("dephasing:p=0.2").choi, ch.make_dephasing(0.2).choi)
    assert cli.parse_channel("depolarizing:p=0.1,power=2").dims == (4, 4)
    assert np.allclose(cli.parse_channel("T").choi, ch.make_unitary(ch.GATES["T"]).choi)
    with pytest.raises(cli.UsageError):
        cli.parse_channel("dephasing:p=0.2,q=0.1")
    with pytest.raises(cli.UsageError):
        cli.parse_channel("warp:p=0.2")


@pytest.mark.parametrize("argv", [
    ["measure", "--theory", "sep", "--channel", "identity", "--monotone", "weight"],
    ["measure", "--theory", "ns", "--channel", "nosuch", "--monotone", "weight"],
    ["measure", "--theory", "ns", "--monotone", "weight"],
    ["measure", "--theory", "coherence", "--channel", "identity", "--monotone", "weight"],
    ["fig", "--fig", "9z"],
    ["bound", "copies", "--r", "2"],
    ["bound", "error-unitary", "--r", "0.5", "--w", "0.1", "--f", "0.2"],
    ["frobnicate"],
])
def test_usage_errors_exit_2(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_numerical_failure_exit_3(capsys, monkeypatch):
    from chanbound.errors import SolverError

    def boom(*a, **k):
        raise SolverError("diverged")

    monkeypatch.setattr(cli.measures, "weight", boom)
    code, _, err = run(capsys, "measure", "--theory", "ns", "--channel", "identity", "--monotone", "weight")
    assert code == 3 and "numerical failure" in err


def test_bound_output(capsys):
    code, out, _ = run(capsys, "bound", "error-unitary", "--r", "2.8", "--w", "0.4", "--f", "0.25")
    assert code == 0
    assert "robustness: 0.3 [ok]" in out
    code, out, _ = run(capsys, "bound", "copies", "--r", "1.3", "--w", "0", "--f", "0.5625", "--eps", "0.09")
    assert code == 0
    assert "weight: - [inapplicable]" in out
    code, out, _ = run(capsys, "bound", "previous", "--lambda-min", "0.2", "--f", "0.6")
    assert code == 0 and "previous: 0.08" in out


def test_fig_csv_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        assert cli.main(["fig", "--fig", "2a", "--points", "3", "--seed", "1", "--out", str(path)]) == 0
    capsys.readouterr()
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0] == "p,robustness_bound,weight_bound,ns_achievable_error"
    assert len(lines) == 4


def test_fig_to_stdout(capsys):
    code, out, _ = run(capsys, "fig", "--fig", "4b", "--points", "2")
    assert code == 0
    assert out.splitlines()[0].startswith("eps,")


def test_selftest_reports_criteria(capsys, monkeypatch):
    def fake(printer=None):
        res = [acceptance.Criterion(1, "one", True, "ok", 0.0), acceptance.Criterion(2, "two", False, "bad", 0.0)]
        for c in res:
            printer(c.line())
        return res

    monkeypatch.setattr(acceptance, "run_all", fake)
    code, out, _ = run(capsys, "selftest")
    assert code == 1
    assert "[PASS]" in out and "[FAIL]" in out and "1/2 criteria passed" in out


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "chanbound", "bound", "rate-adaptive", "--r", "4", "--f", "0.25"],
                          capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0
    assert "rate: 1 [ok]" in proc.stdout
