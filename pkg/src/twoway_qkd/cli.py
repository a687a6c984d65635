"""Command-line front end.

Subcommands::

    analyze    closed-form table over a grid of omega^2 (optionally an SVG chart)
    simulate   Monte Carlo session under the attack; writes transcript CSV + JSON summary
    threshold  closed-form vs bisected security threshold
    ppt-scan   partial-transpose test of the cloner output over a grid of sigma^2

``--replay FILE`` re-runs the command recorded in a summary JSON or
transcript CSV. Exit codes: 0 success, 2 usage, 3 I/O, 4 internal
consistency failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import io
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .attack import AttackConfig, EveRecord, Strategy, as_channel_hook
from .cloner import gqcm_joint_cm
from .core_math import empirical_error_variance, empirical_mi
from .phase_space import PHYSICALITY_TOL, pt_min_symplectic_eigenvalue
from .protocol import (
    ChannelModel,
    ProtocolConfig,
    Transcript,
    estimate_channel_noise,
    extract_eve_pairs,
    extract_on_pairs,
    run_session,
)
from .security import (
    build_report,
    sigma_B_sq,
    sigma_E_sq,
    sigma_ch_sq,
    threshold_closed_form,
    threshold_numeric,
    ONE_WAY_THRESHOLD,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4
SEED_ENV = "TWOWAY_QKD_SEED"
FLOAT_RESOLUTION = 8 * np.finfo(float).eps
MANIFEST_PREFIX = "# manifest "

TRANSCRIPT_COLUMNS = (
    "round,kind,beta_x,beta_p,alpha_x,alpha_p,zeta_x,zeta_p,est_x,est_p,"
    "eve_est_x,eve_est_p,alice_x,alice_p,retx_x,retx_p"
).split(",")


def fmt(v) -> str:
    return f"{v:.10g}"


def parse_range(spec: str) -> np.ndarray:
    """``start:stop:count[:log]`` -> grid; a bare number gives a one-point grid."""
    parts = spec.split(":")
    try:
        if len(parts) == 1:
            return np.array([float(parts[0])])
        if len(parts) not in (3, 4) or (len(parts) == 4 and parts[3] != "log"):
            raise ValueError
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError(f"malformed range {spec!r}; expected start:stop:count[:log]")
    if count < 1:
        raise argparse.ArgumentTypeError("range count must be >= 1")
    if len(parts) == 4:
        if start <= 0 or stop <= 0:
            raise argparse.ArgumentTypeError("log range needs positive endpoints")
        return np.logspace(math.log10(start), math.log10(stop), count)
    return np.linspace(start, stop, count)


def positive_grid(spec: str) -> np.ndarray:
    grid = parse_range(spec)
    if np.any(grid <= 0) or not np.all(np.isfinite(grid)):
        raise argparse.ArgumentTypeError(f"range {spec!r} must be strictly positive")
    return grid


def _default_seed() -> int:
    return int(os.environ.get(SEED_ENV, "0"))


# -- manifests -------------------------------------------------------------


def make_manifest(command: str, config: dict, seed=None) -> dict:
    return {
        "command": command,
        "config": config,
        "seed": seed,
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }


def load_manifest(path: str) -> dict:
    text = Path(path).read_text()
    if text.startswith(MANIFEST_PREFIX):
        return json.loads(text.splitlines()[0][len(MANIFEST_PREFIX) :])
    data = json.loads(text)
    return data.get("manifest", data)


# -- transcript files ------------------------------------------------------


def transcript_to_csv(transcript: Transcript, manifest: dict | None = None) -> str:
    """Serialise a transcript; empty fields where a column does not apply.

    The embedded manifest line omits the timestamp so equal runs give equal bytes.
    """
    n = len(transcript)
    nan2 = np.full((n, 2), np.nan)
    eve = transcript.eve.alpha_estimate if transcript.eve is not None and transcript.eve.alpha_estimate is not None else nan2
    vals = np.hstack(
        [
            transcript.beta,
            transcript.alpha,
            transcript.bob_outcome,
            transcript.bob_estimate,
            eve,
            transcript.alice_outcome,
            transcript.retransmit,
        ]
    )
    row_fmt = "%d,%s," + ",".join(["%.17g"] * vals.shape[1])
    kinds = np.where(transcript.off, "OFF", "ON")
    buf = io.StringIO()
    if manifest is not None:
        stable = {k: v for k, v in manifest.items() if k != "timestamp"}
        buf.write(MANIFEST_PREFIX + json.dumps(stable, sort_keys=True) + "\n")
    buf.write(",".join(TRANSCRIPT_COLUMNS) + "\n")
    for i in range(n):
        buf.write(row_fmt % (i, kinds[i], *vals[i]))
        buf.write("\n")
    return buf.getvalue().replace("nan", "")


def write_transcript(path, transcript: Transcript, manifest: dict | None = None) -> None:
    Path(path).write_text(transcript_to_csv(transcript, manifest))


def read_transcript(path) -> Transcript:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    if header != TRANSCRIPT_COLUMNS:
        raise ValueError(f"unexpected transcript header in {path}")
    rows = [ln.split(",") for ln in lines[1:]]
    off = np.array([r[1] == "OFF" for r in rows], dtype=bool)
    num = np.array([[float(v) if v else np.nan for v in r[2:]] for r in rows]).reshape(len(rows), -1)
    col = lambda k: num[:, 2 * k : 2 * k + 2]
    eve_est = col(4)
    return Transcript(
        off=off,
        beta=col(0),
        alpha=col(1),
        bob_outcome=col(2),
        bob_estimate=col(3),
        alice_outcome=col(5),
        retransmit=col(6),
        eve=None if np.all(np.isnan(eve_est)) else EveRecord(alpha_estimate=eve_est),
    )


# -- commands --------------------------------------------------------------


def cmd_analyze(grid, signal_var: float = 100.0, svg=None, out=None, manifest=None):
    out = out or sys.stdout
    thr_ch, thr_omega = threshold_closed_form()
    header = ["omega_sq", "sigma_ch_sq", "sigma_B_sq", "sigma_E_sq", "I_AB", "I_AE", "secure"]
    print("\t".join(header), file=out)
    reports = [build_report(signal_var, float(w)) for w in grid]
    for r in reports:
        cells = [r.omega_sq, r.sigma_ch_sq, r.sigma_B_sq, r.sigma_E_sq, r.I_AB, r.I_AE]
        print("\t".join(fmt(c) for c in cells) + "\t" + ("secure" if r.secure else "insecure"), file=out)
    print(f"# threshold sigma_ch^2 (two-way, this attack): {fmt(thr_ch)} at omega^2 = {fmt(thr_omega)}", file=out)
    print(f"# threshold sigma_ch^2 (one-way baseline): {fmt(ONE_WAY_THRESHOLD)}", file=out)
    if svg is not None:
        Path(svg).write_text(render_svg(reports, thr_omega, manifest))
    return reports


def render_svg(reports, threshold_omega: float, manifest=None, width=640, height=400) -> str:
    """Line chart of I_AB and I_AE against omega^2 with the threshold marked."""
    w = np.array([r.omega_sq for r in reports])
    ib = np.array([r.I_AB for r in reports])
    ie = np.array([r.I_AE for r in reports])
    pad = 50
    x0, x1 = float(w.min()), float(w.max())
    if x1 == x0:
        x1 = x0 + 1.0
    y0 = float(min(ib.min(), ie.min()))
    y1 = float(max(ib.max(), ie.max()))
    if y1 == y0:
        y1 = y0 + 1.0
    sx = lambda v: pad + (v - x0) / (x1 - x0) * (width - 2 * pad)
    sy = lambda v: height - pad - (v - y0) / (y1 - y0) * (height - 2 * pad)
    pts = lambda ys: " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(w, ys))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
    ]
    if manifest is not None:
        parts.append(f"<metadata>{json.dumps(manifest, sort_keys=True)}</metadata>")
    parts += [
        f'<rect x="{pad}" y="{pad}" width="{width - 2 * pad}" height="{height - 2 * pad}" fill="none" stroke="#888"/>',
        f'<polyline fill="none" stroke="#1f77b4" stroke-width="2" points="{pts(ib)}"/>',
        f'<polyline fill="none" stroke="#d62728" stroke-width="2" points="{pts(ie)}"/>',
        f'<text x="{pad}" y="{pad - 10}" font-size="12">I_AB (blue), I_AE (red) [bits] vs omega^2</text>',
        f'<text x="{pad}" y="{height - 15}" font-size="12">{fmt(x0)}</text>',
        f'<text x="{width - pad}" y="{height - 15}" font-size="12" text-anchor="end">{fmt(x1)}</text>',
    ]
    if x0 <= threshold_omega <= x1:
        xt = sx(threshold_omega)
        parts.append(
            f'<line x1="{xt:.2f}" y1="{pad}" x2="{xt:.2f}" y2="{height - pad}" stroke="#2ca02c" stroke-dasharray="4 3"/>'
        )
        parts.append(f'<text x="{xt + 4:.2f}" y="{pad + 14}" font-size="12">threshold {fmt(threshold_omega)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _variance_check(empirical: float, expected: float, n_samples: int, n_se: float = 5.0) -> dict:
    se = expected * math.sqrt(2.0 / max(n_samples - 1, 1))
    return {
        "empirical": empirical,
        "closed_form": expected,
        "relative_error": (empirical - expected) / expected,
        "standard_error": se,
        "within_tolerance": abs(empirical - expected) <= n_se * se,
    }


def simulate_summary(transcript: Transcript, config: ProtocolConfig, omega_sq: float | None) -> dict:
    """Empirical statistics of a session next to their closed forms."""
    summary: dict = {"rounds": len(transcript), "on_rounds": transcript.n_on, "off_rounds": transcript.n_off}
    if transcript.n_on >= 2:
        xb, pb = extract_on_pairs(transcript)
        var_b = empirical_error_variance(np.vstack([xb, pb]))
        i_ab = empirical_mi(xb, config.signal_var) + empirical_mi(pb, config.signal_var)
        emp = {"sigma_B_sq": var_b, "I_AB": i_ab}
        if transcript.eve is not None and transcript.eve.alpha_estimate is not None:
            xe, pe = extract_eve_pairs(transcript)
            emp["sigma_E_sq"] = empirical_error_variance(np.vstack([xe, pe]))
            emp["I_AE"] = empirical_mi(xe, config.signal_var) + empirical_mi(pe, config.signal_var)
            emp["key_rate_gap"] = emp["I_AB"] - emp["I_AE"]
            emp["secure"] = bool(emp["key_rate_gap"] >= 0)
        summary["empirical"] = emp
        if omega_sq is not None:
            report = build_report(config.signal_var, omega_sq)
            summary["closed_form"] = report.to_dict()
            m = 2 * transcript.n_on
            checks = {"sigma_B_sq": _variance_check(var_b, sigma_B_sq(omega_sq), m)}
            if "sigma_E_sq" in emp:
                checks["sigma_E_sq"] = _variance_check(emp["sigma_E_sq"], sigma_E_sq(omega_sq), m)
            summary["checks"] = checks
    if transcript.n_off >= 2:
        est = estimate_channel_noise(transcript)
        noise = {"forward": est.forward, "backward": est.backward, "total": est.total}
        if omega_sq is not None:
            noise["expected_total"] = sigma_ch_sq(omega_sq)
        noise["below_threshold"] = bool(est.total <= threshold_closed_form()[0])
        summary["noise_estimation"] = noise
    return summary


def cmd_simulate(
    rounds=10**5,
    signal_var=100.0,
    reference_var=1000.0,
    omega_sq=0.5,
    off_probability=0.1,
    seed=0,
    out_path="run",
    workers=1,
    strategy="bs_combine",
    attack=True,
    forward_noise=0.0,
    backward_noise=0.0,
    manifest=None,
    out=None,
):
    out = out or sys.stdout
    config = ProtocolConfig(signal_var, reference_var, off_probability, rounds, seed)
    if attack:
        hook = as_channel_hook(AttackConfig(omega_sq, strategy=Strategy(strategy)))
        channel = ChannelModel(attack=hook)
    else:
        channel = ChannelModel(forward_noise, backward_noise)
    transcript = run_session(config, channel, workers=workers)
    summary = simulate_summary(transcript, config, omega_sq if attack else None)
    summary["manifest"] = manifest

    outdir = Path(out_path)
    outdir.mkdir(parents=True, exist_ok=True)
    write_transcript(outdir / "transcript.csv", transcript, manifest)
    (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    emp = summary.get("empirical", {})
    for key in ("sigma_B_sq", "sigma_E_sq", "I_AB", "I_AE"):
        if key in emp:
            line = f"{key}: empirical {fmt(emp[key])}"
            if "closed_form" in summary:
                line += f"  closed form {fmt(summary['closed_form'][key])}"
            if key in summary.get("checks", {}):
                line += "  ok" if summary["checks"][key]["within_tolerance"] else "  OUT OF TOLERANCE"
            print(line, file=out)
    if "noise_estimation" in summary:
        ne = summary["noise_estimation"]
        print(f"noise estimate: forward {fmt(ne['forward'])} backward {fmt(ne['backward'])} total {fmt(ne['total'])}", file=out)
    print(f"wrote {outdir / 'transcript.csv'} and {outdir / 'summary.json'}", file=out)
    return summary


def cmd_threshold(tolerance: float = 1e-12, out=None):
    out = out or sys.stdout
    closed, _ = threshold_closed_form()
    if tolerance < FLOAT_RESOLUTION:
        msg = f"tolerance {tolerance:g} is below double-precision resolution near the root; result is float-limited"
        warnings.warn(msg)
        print(f"warning: {msg}", file=out)
    numeric = threshold_numeric(tolerance)
    print(f"{fmt(closed)} (closed) / {fmt(numeric)} (numeric) / baseline {fmt(ONE_WAY_THRESHOLD)}", file=out)
    print(f"difference {abs(closed - numeric):.3e}", file=out)
    return closed, numeric


def cmd_ppt_scan(grid, out=None):
    out = out or sys.stdout
    print("sigma_sq\tpt_min_symplectic_eigenvalue\tseparable", file=out)
    rows = []
    for s in grid:
        nu = pt_min_symplectic_eigenvalue(gqcm_joint_cm(float(s)))
        sep = nu >= 0.5 - PHYSICALITY_TOL
        rows.append((float(s), nu, sep))
        print(f"{fmt(s)}\t{fmt(nu)}\t{'separable' if sep else 'entangled'}", file=out)
    all_sep = all(r[2] for r in rows)
    print(f"# all separable: {all_sep}", file=out)
    return rows


# -- argument handling ----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twoway-qkd", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("--replay", metavar="FILE", help="re-run the command recorded in a summary JSON or transcript CSV")
    sub = p.add_subparsers(dest="command")

    a = sub.add_parser("analyze", help="closed-form table over omega^2")
    a.add_argument("--grid", type=positive_grid, default="0.25:1.5:6", help="omega^2 range start:stop:count[:log] (default 0.25:1.5:6)")
    a.add_argument("--signal-var", type=float, default=100.0, help="Alice's modulation variance (default 100)")
    a.add_argument("--svg", help="write an SVG chart of I_AB, I_AE vs omega^2")

    s = sub.add_parser("simulate", help="Monte Carlo session under the attack")
    s.add_argument("--rounds", type=int, default=10**5, help="number of rounds (default 100000)")
    s.add_argument("--signal-var", type=float, default=100.0, help="default 100")
    s.add_argument("--reference-var", type=float, default=1000.0, help="default 1000")
    s.add_argument("--omega-sq", type=float, default=0.5, help="backward cloner noise (default 0.5)")
    s.add_argument("--off-probability", type=float, default=0.1, help="probability c of an OFF round (default 0.1)")
    s.add_argument("--seed", type=int, default=_default_seed(), help=f"default 0, or ${SEED_ENV}")
    s.add_argument("--out", default="run", help="output directory (default ./run)")
    s.add_argument("--workers", type=int, default=1, help="worker threads; output does not depend on it")
    s.add_argument("--strategy", choices=[m.value for m in Strategy], default="bs_combine")
    s.add_argument("--no-attack", action="store_true", help="plain noisy channel instead of the attack")
    s.add_argument("--forward-noise", type=float, default=0.0, help="plain channel only")
    s.add_argument("--backward-noise", type=float, default=0.0, help="plain channel only")

    t = sub.add_parser("threshold", help="closed-form vs numeric threshold")
    t.add_argument("--tolerance", type=float, default=1e-12)

    q = sub.add_parser("ppt-scan", help="separability of the cloner output state")
    q.add_argument("--grid", type=positive_grid, default="1e-3:1e3:100:log", help="sigma^2 range (default 1e-3:1e3:100:log)")
    return p


_CONFIG_KEYS = {
    "analyze": ["grid", "signal_var"],
    "simulate": [
        "rounds", "signal_var", "reference_var", "omega_sq", "off_probability", "seed",
        "workers", "strategy", "no_attack", "forward_noise", "backward_noise", "out",
    ],
    "threshold": ["tolerance"],
    "ppt-scan": ["grid"],
}


def _config_of(args) -> dict:
    cfg = {}
    for k in _CONFIG_KEYS[args.command]:
        v = getattr(args, k)
        cfg[k] = v.tolist() if isinstance(v, np.ndarray) else v
    return cfg


def dispatch(command: str, cfg: dict, out=None, extra=None):
    out = out or sys.stdout
    manifest = make_manifest(command, cfg, cfg.get("seed"))
    extra = extra or {}
    if command == "analyze":
        cmd_analyze(np.asarray(cfg["grid"], float), cfg["signal_var"], extra.get("svg"), out, manifest)
    elif command == "simulate":
        cmd_simulate(
            rounds=cfg["rounds"],
            signal_var=cfg["signal_var"],
            reference_var=cfg["reference_var"],
            omega_sq=cfg["omega_sq"],
            off_probability=cfg["off_probability"],
            seed=cfg["seed"],
            out_path=cfg["out"],
            workers=cfg["workers"],
            strategy=cfg["strategy"],
            attack=not cfg["no_attack"],
            forward_noise=cfg["forward_noise"],
            backward_noise=cfg["backward_noise"],
            manifest=manifest,
            out=out,
        )
    elif command == "threshold":
        cmd_threshold(cfg["tolerance"], out)
    elif command == "ppt-scan":
        cmd_ppt_scan(np.asarray(cfg["grid"], float), out)
    else:
        raise ValueError(f"unknown command {command!r}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.replay:
            m = load_manifest(args.replay)
            dispatch(m["command"], m["config"])
        elif args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        else:
            dispatch(args.command, _config_of(args), extra={"svg": getattr(args, "svg", None)})
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except AssertionError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
