import json

import numpy as np
import pytest

from twoway_qkd import cli
from twoway_qkd.attack import AttackConfig, as_channel_hook
from twoway_qkd.protocol import ChannelModel, ProtocolConfig, estimate_channel_noise, run_session


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_parse_range():
    np.testing.assert_allclose(cli.parse_range("0:1:3"), [0, 0.5, 1])
    np.testing.assert_allclose(cli.parse_range("1e-3:1e3:7:log"), np.logspace(-3, 3, 7))
    np.testing.assert_allclose(cli.parse_range("0.5"), [0.5])
    for bad in ("1:2", "a:b:c", "1:2:3:lin", "1:2:0", "0:1:3:log"):
        with pytest.raises(Exception):
            cli.parse_range(bad)


def test_analyze_single_point(capsys):
    code, out, _ = run(capsys, "analyze", "--grid", "0.5")
    assert code == 0
    row = out.splitlines()[1].split("\t")
    assert row[0] == "0.5" and row[2] == "2" and row[3] == "2.5" and row[-1] == "secure"
    assert "1.309016994" in out and "0.5" in out.splitlines()[-1]


def test_analyze_flip_once(capsys):
    code, out, _ = run(capsys, "analyze", "--grid", "0.7:0.9:21")
    flags = [ln.split("\t")[-1] for ln in out.splitlines()[1:] if not ln.startswith("#")]
    assert len(flags) == 21
    changes = sum(a != b for a, b in zip(flags, flags[1:]))
    assert changes == 1 and flags[0] == "secure" and flags[-1] == "insecure"


def test_analyze_svg(tmp_path, capsys):
    svg = tmp_path / "chart.svg"
    code, _, _ = run(capsys, "analyze", "--grid", "0.2:1.5:30", "--svg", str(svg))
    text = svg.read_text()
    assert code == 0 and text.startswith("<svg") and "threshold" in text and "<metadata>" in text


@pytest.mark.parametrize("grid", ["1:2", "x", "-1:1:3"])
def test_usage_errors(capsys, grid):
    with pytest.raises(SystemExit) as exc:
        cli.main(["analyze", "--grid", grid])
    assert exc.value.code == 2


def test_no_command_is_usage_error(capsys):
    assert cli.main([]) == 2


def test_threshold(capsys):
    code, out, _ = run(capsys, "threshold")
    assert code == 0
    assert out.splitlines()[0] == "1.309016994 (closed) / 1.309016994 (numeric) / baseline 0.5"


def test_threshold_precision_warning(capsys):
    with pytest.warns(UserWarning):
        code, out, _ = run(capsys, "threshold", "--tolerance", "1e-15")
    assert code == 0 and "warning" in out


def test_ppt_scan(capsys):
    code, out, _ = run(capsys, "ppt-scan", "--grid", "0.5")
    assert code == 0 and "0.8660254038\tseparable" in out
    code, out, _ = run(capsys, "ppt-scan")
    rows = [ln.split("\t") for ln in out.splitlines()[1:] if not ln.startswith("#")]
    assert len(rows) == 100
    assert all(float(r[1]) >= 0.5 and r[2] == "separable" for r in rows)
    assert "all separable: True" in out


def test_simulate_large(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "--rounds", "1000000", "--omega-sq", "0.5", "--seed", "42",
                       "--off-probability", "0.5", "--out", str(tmp_path))
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    # the ON-round estimate of Bob's error variance
    assert 1.98 <= summary["empirical"]["sigma_B_sq"] <= 2.02
    assert summary["checks"]["sigma_B_sq"]["within_tolerance"]
    assert summary["noise_estimation"]["total"] == pytest.approx(1.0, rel=0.02)
    assert summary["manifest"]["seed"] == 42 and summary["manifest"]["command"] == "simulate"
    assert "sigma_E_sq" in out


def test_simulate_deterministic_and_replay(tmp_path, capsys):
    argv = ["simulate", "--rounds", "3000", "--seed", "5", "--out", str(tmp_path)]
    csv = tmp_path / "transcript.csv"
    assert run(capsys, *argv)[0] == 0
    first = csv.read_bytes()
    assert run(capsys, *argv)[0] == 0
    assert csv.read_bytes() == first
    csv.unlink()
    assert run(capsys, "--replay", str(tmp_path / "summary.json"))[0] == 0
    assert csv.read_bytes() == first
    assert run(capsys, "--replay", str(csv))[0] == 0
    assert csv.read_bytes() == first
    # same seed, different worker count: same bytes
    assert run(capsys, *argv, "--workers", "8")[0] == 0
    body = lambda b: b.split(b"\n", 1)[1]
    assert body(csv.read_bytes()) == body(first)


def test_transcript_roundtrip(tmp_path):
    cfg = ProtocolConfig(rounds=2000, off_probability=0.4, seed=3)
    t = run_session(cfg, ChannelModel(attack=as_channel_hook(AttackConfig(0.5))))
    path = tmp_path / "t.csv"
    cli.write_transcript(path, t, cli.make_manifest("simulate", {}, 3))
    header = path.read_text().splitlines()[1]
    assert header.startswith("round,kind,beta_x,beta_p,alpha_x,alpha_p,zeta_x,zeta_p,est_x,est_p,eve_est_x,eve_est_p")
    back = cli.read_transcript(path)
    np.testing.assert_array_equal(back.off, t.off)
    np.testing.assert_array_equal(back.bob_outcome, t.bob_outcome)
    np.testing.assert_array_equal(back.alpha, t.alpha)
    np.testing.assert_array_equal(back.eve.alpha_estimate, t.eve.alpha_estimate)
    assert estimate_channel_noise(back) == estimate_channel_noise(t)
    first_off = path.read_text().splitlines()[2 + int(np.argmax(t.off))].split(",")
    assert first_off[1] == "OFF" and first_off[4] == "" and first_off[8] == ""


def test_simulate_plain_channel(tmp_path, capsys):
    code, _, _ = run(capsys, "simulate", "--no-attack", "--forward-noise", "0.3", "--rounds", "20000",
                     "--out", str(tmp_path))
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert code == 0 and "sigma_E_sq" not in summary["empirical"]


def test_simulate_unwritable_path(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    code, _, err = run(capsys, "simulate", "--rounds", "100", "--out", str(blocker / "sub"))
    assert code == 3 and "I/O" in err


def test_internal_failure_exit_code(monkeypatch, capsys):
    def boom(*a, **k):
        raise AssertionError("predicates disagree")

    monkeypatch.setattr(cli, "build_report", boom)
    code, _, err = run(capsys, "analyze", "--grid", "0.5")
    assert code == 4 and "consistency" in err


def test_seed_env_override(monkeypatch):
    monkeypatch.setenv(cli.SEED_ENV, "77")
    args = cli.build_parser().parse_args(["simulate"])
    assert args.seed == 77
    assert args.rounds == 10**5 and args.signal_var == 100 and args.reference_var == 1000
    assert args.off_probability == 0.1 and args.omega_sq == 0.5
