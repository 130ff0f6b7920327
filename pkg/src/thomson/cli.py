"""Command-line entry point: ``thomson <subcommand> [options]``."""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import checks
from .config import ConfigError, parse_config
from .dynamics import (
    deg90_threshold_gamma,
    drift_cancel_gamma,
    dressed_momentum,
    flat_circle,
    kinematics,
    trajectory,
    beta_hat_track,
    validity_params,
)
from .scan import compute_map, write_csv, write_heatmap
from .units import C

POLMAP_CHANNELS = ("pol1", "pol2", "approx_pol1", "approx_pol2")

ORACLE_TOL = 1e-4
VELOCITY_TOL = 1e-6
POSITION_TOL = 1e-5
FREQUENCY_TOL = 1e-6
SHAPE_TOL = 0.002


def _g(x):
    return format(float(x), ".17g")


def _verdict(ok):
    return "PASS" if ok else "FAIL"


def _write_rows(path: Path, header, rows):
    text = ",".join(header) + "\n" + "".join(",".join(_g(x) for x in r) + "\n" for r in rows)
    path.write_text(text, encoding="utf-8")
    return path


def _chi_samples(s, per_period):
    lo, hi = s.chi_support
    n = max(2, math.ceil((hi - lo) / s.pulse.wavelength * per_period))
    return np.linspace(lo, hi, n + 1)


def cmd_trajectory(cfg, args):
    s = cfg.scenario()
    chi = _chi_samples(s, args.per_period)
    k = kinematics(chi, s)
    r = trajectory(chi, s)
    t = (chi + r[:, 2]) / C
    header = ["chi", "t", "x", "y", "z", "beta_x", "beta_y", "beta_z", "betadot_x", "betadot_y", "betadot_z"]
    rows = np.column_stack([chi, t, r, k.beta, k.beta_dot])
    path = _write_rows(_outdir(cfg) / f"trajectory_{s.digest()}.csv", header, rows)
    print(path)
    return 0


def cmd_betatrack(cfg, args):
    s = cfg.scenario()
    chi = _chi_samples(s, args.per_period)
    theta, phi = beta_hat_track(chi, s)
    rows = np.column_stack([chi, theta / math.pi, phi / math.pi])
    path = _write_rows(_outdir(cfg) / f"betatrack_{s.digest()}.csv", ["chi", "theta_over_pi", "phi_over_pi"], rows)
    print(path)
    return 0


def derived_report(cfg) -> str:
    s = cfg.scenario()
    fc = flat_circle(s)
    q = dressed_momentum(s)
    y, xi = validity_params(s)
    lines = [
        f"scenario {s.digest()}",
        f"eta = {cfg.eta}  gamma = {cfg.gamma}  geometry = {cfg.geometry}  omega_L = {cfg.omega_au} au",
        f"R0 = {fc.r0:.6f}",
        f"Z0 = {fc.z0:.6f}",
        f"Theta0 = {fc.theta0 / math.pi:.6f} pi  (atan2(R0, Z0))",
        f"Theta0_printed = {fc.theta0_printed / math.pi:.6f} pi  (arccos(Z0/R0))",
        "q0 = ({:.6f}, {:.6f}, {:.6f}, {:.6f}) mc".format(*(q / C)),
        f"y_tilde = {y:.6g}",
        f"xi = {xi:.6g}",
        f"gamma_drift = {drift_cancel_gamma(cfg.eta):.6f}",
        f"gamma_deg90_threshold = {deg90_threshold_gamma(cfg.eta):.6f}",
    ]
    return "\n".join(lines) + "\n"


def cmd_derived(cfg, args):
    report = derived_report(cfg)
    (_outdir(cfg) / f"derived_{cfg.scenario().digest()}.txt").write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return 0


def _run_map(cfg, channels):
    s = cfg.scenario()
    maps = compute_map(s, cfg.grid(), channels)
    out = _outdir(cfg)
    for m in maps:
        print(write_csv(m, out / f"{m.file_stem()}.csv"))
        print(write_heatmap(m, out / f"{m.file_stem()}.pgm", cfg.clip_ln))
    bad = int((~maps[0].converged_mask).sum())
    if bad:
        print(f"{bad} cells did not converge", file=sys.stderr)
    return 0 if bad == 0 else 1


def cmd_map(cfg, args):
    return _run_map(cfg, cfg.channels)


def cmd_polmap(cfg, args):
    return _run_map(cfg, POLMAP_CHANNELS)


def cmd_oracle(cfg, args):
    s = cfg.scenario()
    kin = checks.kinematics_report(s)
    rad = checks.oracle_report(s, n_dirs=args.n_dirs, seed=args.seed)
    ok_v = kin["velocity_rel_err"] <= VELOCITY_TOL
    ok_r = kin["position_rel_err"] <= POSITION_TOL
    ok_w = rad["max_rel_dev"] <= ORACLE_TOL and rad["converged"]
    print(f"velocity max rel deviation {kin['velocity_rel_err']:.3e} (<= {VELOCITY_TOL:g}) {_verdict(ok_v)}")
    print(f"position max rel deviation {kin['position_rel_err']:.3e} (<= {POSITION_TOL:g}) {_verdict(ok_r)}")
    print(f"dW/dOmega max rel deviation {rad['max_rel_dev']:.3e} over {args.n_dirs} directions "
          f"(<= {ORACLE_TOL:g}) {_verdict(ok_w)}")
    return 0 if ok_v and ok_r and ok_w else 1


def cmd_scalecheck(cfg, args):
    s = cfg.scenario()
    fs = checks.frequency_scaling(s, n_dirs=args.n_dirs, seed=args.seed)
    sh = checks.shape_scaling(cfg.eta, 45.0, cfg.eta / 2, 22.5)
    ok_f = fs["max_rel_dev"] <= FREQUENCY_TOL and fs["converged"]
    ok_s = sh["diff_over_pi"] < SHAPE_TOL
    print(f"frequency ratio {np.mean(fs['ratio']):.6f} (max rel dev from 2: {fs['max_rel_dev']:.2e}) {_verdict(ok_f)}")
    print(f"shape Theta0 {sh['theta0_a'] / math.pi:.6f} pi vs {sh['theta0_b'] / math.pi:.6f} pi "
          f"(diff {sh['diff_over_pi']:.2e} pi < {SHAPE_TOL}) {_verdict(ok_s)}")
    return 0 if ok_f and ok_s else 1


COMMANDS = {
    "trajectory": cmd_trajectory,
    "betatrack": cmd_betatrack,
    "derived": cmd_derived,
    "map": cmd_map,
    "polmap": cmd_polmap,
    "oracle": cmd_oracle,
    "scalecheck": cmd_scalecheck,
}


def _outdir(cfg) -> Path:
    out = Path(cfg.outdir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value file; flags override its entries")
    common.add_argument("--out", dest="outdir", help="output directory")
    common.add_argument("--eta", help="dimensionless intensity |e|A0/mc")
    common.add_argument("--gamma", help="initial Lorentz factor")
    common.add_argument("--geometry", choices=("headon", "deg90", "custom"))
    common.add_argument("--direction", help="unit vector 'x,y,z' for geometry custom")
    common.add_argument("--tau", help="wing intensity FWHM in laser periods")
    common.add_argument("--nc", dest="n_c", help="flat-top length in laser periods")
    common.add_argument("--phi0", help="carrier-envelope phase in units of pi")
    common.add_argument("--omega-au", dest="omega_au", help="laser frequency in atomic units")
    common.add_argument("--grid", help="WxH = n_phi x n_theta cells, e.g. 361x181")
    common.add_argument("--channels", help="comma list of " + ", ".join(
        ("total", "pol1", "pol2", "approx_total", "approx_pol1", "approx_pol2")))
    common.add_argument("--tol", help="relative quadrature tolerance")

    parser = argparse.ArgumentParser(
        prog="thomson",
        description="Nonlinear Thomson scattering of a circularly polarized pulse. "
        "Angles in configs and flags (phi0) are in units of pi. "
        "THOMSON_THREADS caps the worker count.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("trajectory", "betatrack"):
            p.add_argument("--per-period", type=int, default=64, help="chi samples per laser period")
        if name in ("oracle", "scalecheck"):
            p.add_argument("--n-dirs", type=int, default=20 if name == "oracle" else 50)
            p.add_argument("--seed", type=int, default=0)
    return parser


def load_config(args):
    text = args.config.read_text(encoding="utf-8") if args.config else ""
    overrides = {k: getattr(args, k) for k in
                 ("outdir", "eta", "gamma", "geometry", "direction", "tau", "n_c", "phi0", "omega_au",
                  "channels", "tol")}
    if args.grid:
        try:
            w, h = args.grid.lower().split("x")
        except ValueError:
            raise ConfigError(f"--grid expects WxH, got {args.grid!r}") from None
        overrides["n_phi"], overrides["n_theta"] = w, h
    return parse_config(text, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, args)
    except (ValueError, RuntimeError) as exc:
        print(f"{args.command} failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
