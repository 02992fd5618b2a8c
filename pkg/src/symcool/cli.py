"""Scenario runner: parses configs, executes named experiments, writes CSV.

Exit codes: 0 ok, 2 validation failure, 3 numeric failure, 4 fit failure
(the latter only aborts under --strict). Outputs are plain CSV with a header
row naming columns and SI units, plus a manifest.json listing every output
with the hash of the config that produced it. Re-running a scenario with
the same inputs reproduces byte-identical files.
"""

import argparse
import csv
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import analysis, coupling, dynamics, lattice, optomech, scenarios
from .configio import ConfigError, in_hz, load_config, parse_value, resolve_path
from .params import CONSTANTS, validate

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERIC = 3
EXIT_FIT = 4


def _parse_seeds(text):
    if ".." in text:
        a, b = text.split("..", 1)
        return list(range(int(a), int(b) + 1))
    return [int(s) for s in text.split(",") if s]


def _fmt(value):
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path, header, columns):
    """Header names carry units, e.g. 't [s]'. Columns are equal-length arrays."""
    rows = zip(*columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def read_csv_columns(path):
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = [[] for _ in header]
        for row in reader:
            for i, v in enumerate(row):
                cols[i].append(float(v))
    return header, [np.array(c) for c in cols]


class _Run:
    """Collects outputs and writes the manifest at the end of a command."""

    def __init__(self, args, command):
        self.command = command
        self.out_dir = args.out
        os.makedirs(self.out_dir, exist_ok=True)
        self.config_path = None
        self.config_sha = None
        if getattr(args, "config", None):
            self.config_path = resolve_path(args.config)
            with open(self.config_path, "rb") as fh:
                self.config_sha = hashlib.sha256(fh.read()).hexdigest()
        self.overrides = list(getattr(args, "set", []) or [])
        self.seeds = getattr(args, "seed_list", None)
        self.outputs = []

    def path(self, name):
        self.outputs.append(name)
        return os.path.join(self.out_dir, name)

    def finish(self):
        manifest = {
            "command": self.command,
            "config": os.path.basename(self.config_path) if self.config_path else None,
            "config_sha256": self.config_sha,
            "overrides": self.overrides,
            "seeds": self.seeds,
            "outputs": sorted(self.outputs),
        }
        with open(os.path.join(self.out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _load_validated(args):
    config = load_config(args.config, args.set or [])
    report = validate(config)
    if not report.ok:
        print("config validation failed:", file=sys.stderr)
        print(str(report), file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)
    return config


def cmd_spectrum(args):
    config = _load_validated(args)
    run = _Run(args, "spectrum")
    model = scenarios.cavity_model(config)
    lam = config.cavity.lam
    xs = np.linspace(0.0, lam / 2, args.x_points)
    w_ref = 2 * math.pi * CONSTANTS.c / lam
    grid = np.linspace(w_ref - 0.55 * model.omega_FSR, w_ref + 0.55 * model.omega_FSR,
                       args.omega_points)
    rows_x, rows_w, rows_t = [], [], []
    for x in xs:
        trans = model.transmission(grid, x)
        rows_x.append(np.full_like(grid, x))
        rows_w.append(grid)
        rows_t.append(trans)
    write_csv(run.path("transmission.csv"),
              ["x_m [m]", "omega [rad/s]", "transmission [1]"],
              [np.concatenate(rows_x), np.concatenate(rows_w), np.concatenate(rows_t)])

    omegas, kappas = model.track_branch(xs)
    write_csv(run.path("summary.csv"),
              ["x_m [m]", "omega_c [rad/s]", "G [rad/s/m]", "finesse [1]", "kappa [rad/s]"],
              [xs, omegas, model.dispersive_coupling(xs),
               model.omega_FSR / kappas, kappas])
    run.finish()
    return EXIT_OK


def cmd_lattice(args):
    config = _load_validated(args)
    run = _Run(args, "lattice")
    field = lattice.lattice_field(config.lattice, config.budget)
    gamma_sc = lattice.scattering_rate(0.0, 0.0, field, config.lattice)
    print(f"V0      = {field.V0:.6e} J  ({field.V0 / scenarios.CONSTANTS.hbar / (2 * math.pi) / 1e6:+.3f} MHz * h)")
    print(f"V_d     = {field.V_d:.6e} J")
    print(f"V_m     = {field.V_m:.6e} J")
    print(f"Omega_a(0) = {in_hz(field.Omega_a0) / 1e3:.2f} kHz")
    print(f"Gamma_sc   = {gamma_sc:.4e} 1/s")
    print(f"P_r/P0     = {field.Pr_over_P0:.4f} (measured reference {lattice.MEASURED_PR_OVER_P0})")
    r_grid = np.linspace(0, 2 * config.lattice.w0, args.r_points)
    write_csv(run.path("trap_frequency.csv"),
              ["r [m]", "Omega_a [rad/s]"],
              [r_grid, lattice.trap_frequency(r_grid, field, config.lattice)])
    run.finish()
    return EXIT_OK


def cmd_cool(args):
    config = _load_validated(args)
    run = _Run(args, "cool")
    seeds = args.seed_list
    try:
        res = scenarios.run_cool(config, seeds=seeds, with_atoms=not args.no_atoms,
                                 decay_in_b=args.decay, keep_series=args.per_seed)
    except dynamics.IntegrationUnstable as exc:
        print(f"integration failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_csv(run.path("temperature.csv"),
              ["t [s]", "T_mean [K]", "T_sem [K]"],
              [res.t, res.T_mean, res.T_sem])
    if args.per_seed:
        dec = max(1, args.decimate)
        for ts in res.per_seed:
            write_csv(run.path(f"trajectory_seed{ts.seed}.csv"),
                      ["t [s]", "x_m [m]", "x_a [m]"],
                      [ts.t[::dec], ts.x_m[::dec], ts.x_a[::dec]])
    write_csv(run.path("summary.csv"),
              ["steady_T [K]", "decay_rate [1/s]", "min_window_T [K]",
               "expected_T [K]", "expected_gamma_tot [1/s]"],
              [[res.steady_T], [res.decay_rate], [res.min_window_T],
               [res.setup.T_expected], [res.setup.gamma_tot_b]])
    print(f"steady T = {res.steady_T:.3f} K  (formula {res.setup.T_expected:.3f} K)")
    print(f"initial decay rate = {res.decay_rate:.1f} 1/s  (calibrated {res.setup.gamma_tot_b:.1f})")
    run.finish()
    return EXIT_OK


def cmd_step_scan(args):
    config = _load_validated(args)
    run = _Run(args, "step-scan")
    p0, omega_a0, rates = scenarios.step_scan(
        config, finesse=args.finesse, g_prefactor=args.g_prefactor)
    write_csv(run.path("step_scan.csv"),
              ["P0 [W]", "Omega_a0 [rad/s]", "Gamma_sym_int [1/s]"],
              [p0, omega_a0, rates])
    run.finish()
    return EXIT_OK


def cmd_detuning_scan(args):
    config = _load_validated(args)
    run = _Run(args, "detuning-scan")
    deltas = [parse_value(tok) for tok in args.deltas.split(",") if tok.strip()]
    if len(deltas) < 2 and not args.allow_single:
        print("need at least 2 detunings (or --allow-single)", file=sys.stderr)
        return EXIT_VALIDATION
    curves = scenarios.detuning_scan(config, deltas, n_points=args.points)
    col_d, col_p, col_w, col_g = [], [], [], []
    for delta, p0, omega_a0, rates in curves:
        col_d.append(np.full_like(p0, delta))
        col_p.append(p0)
        col_w.append(omega_a0)
        col_g.append(rates)
    write_csv(run.path("gamma_sym_vs_power.csv"),
              ["Delta_LA [rad/s]", "P0 [W]", "Gamma_sym [1/s]"],
              [np.concatenate(col_d), np.concatenate(col_p), np.concatenate(col_g)])
    write_csv(run.path("gamma_sym_vs_frequency.csv"),
              ["Delta_LA [rad/s]", "Omega_a0 [rad/s]", "Gamma_sym [1/s]"],
              [np.concatenate(col_d), np.concatenate(col_w), np.concatenate(col_g)])
    run.finish()
    return EXIT_OK


def cmd_calibrate(args):
    run = _Run(args, "calibrate")
    if not args.forward:
        print("only --forward mode is implemented; fitting lives in fit-calibration",
              file=sys.stderr)
        return EXIT_VALIDATION
    p = np.linspace(0.0, args.p_max, args.points)
    p, t = scenarios.calibrate_forward(args.alpha, args.beta, args.T0,
                                       args.gamma_m, p)
    write_csv(run.path("calibration_forward.csv"),
              ["P_tot [W]", "T_opt [K]"], [p, t])
    run.finish()
    return EXIT_OK


def cmd_psd(args):
    run = _Run(args, "psd")
    header, cols = read_csv_columns(args.input)
    t, x = cols[0], cols[1]
    series = dynamics.TimeSeries(dt=float(t[1] - t[0]), x_m=x,
                                 x_a=np.zeros_like(x), seed=0)
    try:
        psd = analysis.estimate_psd(series, segment_length=args.segment_length,
                                    window=args.window)
    except ValueError as exc:
        print(f"psd failed: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_csv(run.path("psd.csv"),
              ["omega [rad/s]", "S_x [m^2/Hz]"], [psd.omega, psd.S_x])
    run.finish()
    return EXIT_OK


def cmd_fit_calibration(args):
    run = _Run(args, "fit-calibration")
    _, cols = read_csv_columns(args.input)
    fit = analysis.fit_calibration(cols[0], cols[1], args.gamma_m)
    write_csv(run.path("calibration_fit.csv"),
              ["parameter", "value", "uncertainty"],
              [fit.names, fit.values, fit.uncertainties])
    print(f"alpha = {fit['alpha']:.6e} +- {fit.uncertainty('alpha'):.2e} 1/(s W)")
    print(f"beta  = {fit['beta']:.6e} +- {fit.uncertainty('beta'):.2e} K/W^2")
    print(f"T0    = {fit['T0']:.4f} +- {fit.uncertainty('T0'):.2g} K")
    run.finish()
    if not fit.converged:
        print(f"fit did not converge: {fit.diagnostic}", file=sys.stderr)
        if args.strict:
            return EXIT_FIT
    return EXIT_OK


def cmd_fit_step(args):
    config = _load_validated(args)
    run = _Run(args, "fit-step")
    _, cols = read_csv_columns(args.input)
    m = config.membrane
    scen = config.scenario.get("fig3", {})
    fixed = {"Omega_m": m.Omega_m, "Gamma_a": config.atoms.Gamma_a,
             "eta2": config.budget.eta2, "t2": config.budget.t2,
             "M_eff": m.M_eff, "finesse": args.finesse or scen.get("finesse", 140.0),
             "r_m": config.r_m, "w0": config.lattice.w0, "R_a": config.atoms.R_a,
             "g_prefactor": scen.get("g_prefactor", 1.0)}
    fit = analysis.fit_step_model(cols[0], cols[1], fixed)
    write_csv(run.path("step_fit.csv"),
              ["parameter", "value", "uncertainty"],
              [fit.names, fit.values, fit.uncertainties])
    print(f"n_a = {fit['n_a']:.4e} +- {fit.uncertainty('n_a'):.2e} atoms/m^3")
    run.finish()
    if not fit.converged:
        print(f"fit did not converge: {fit.diagnostic}", file=sys.stderr)
        if args.strict:
            return EXIT_FIT
    return EXIT_OK


def cmd_groundstate(args):
    config = _load_validated(args)
    run = _Run(args, "groundstate")
    rep = scenarios.groundstate_report(config)
    names = list(rep.keys())
    write_csv(run.path("groundstate.csv"), ["quantity", "value"],
              [names, [rep[k] for k in names]])
    print(f"g            = {rep['g']:.4e} 1/s  (N_r = {rep['N_r']:.3e})")
    print(f"cooperativity C = {rep['cooperativity']:.4e}")
    print(f"n_bath       = {rep['n_bath']:.4e}")
    print("criterion C > n_bath:", "satisfied" if rep["satisfied"] else "NOT satisfied")
    print(f"literature steady-state phonon number n_ss = {rep['n_ss_literature']}"
          " (quantum calculation, not computed here)")
    run.finish()
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="symcool",
                                     description="membrane sympathetic-cooling scenarios")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="config file (name resolved via $SYMCOOL_CONFIG_DIR or ./configs)")
            p.add_argument("--set", action="append", default=[], metavar="SEC.KEY=VAL",
                           help="override a config value (repeatable)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--strict", action="store_true",
                       help="exit nonzero on fit non-convergence")

    p = sub.add_parser("spectrum", help="cavity transmission and finesse map")
    common(p)
    p.add_argument("--x-points", type=int, default=33)
    p.add_argument("--omega-points", type=int, default=2001)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("lattice", help="lattice depth, trap frequency, scattering")
    common(p)
    p.add_argument("--r-points", type=int, default=101)
    p.set_defaults(func=cmd_lattice)

    p = sub.add_parser("cool", help="three-phase cooling replay")
    common(p)
    p.add_argument("--figure", default="2a", choices=["2a"])
    p.add_argument("--seeds", default="1..20")
    p.add_argument("--no-atoms", action="store_true")
    p.add_argument("--decay", action="store_true",
                   help="include molasses atom loss during the resonant phase")
    p.add_argument("--per-seed", action="store_true")
    p.add_argument("--decimate", type=int, default=64,
                   help="per-seed trajectory decimation factor")
    p.set_defaults(func=cmd_cool)

    p = sub.add_parser("step-scan", help="Gamma_sym_int vs lattice power")
    common(p)
    p.add_argument("--finesse", type=float, default=None)
    p.add_argument("--g-prefactor", type=float, default=None)
    p.set_defaults(func=cmd_step_scan)

    p = sub.add_parser("detuning-scan", help="step curves for several detunings")
    common(p)
    p.add_argument("--deltas", required=True,
                   help="comma-separated detunings, e.g. '-4 GHz,-8 GHz'")
    p.add_argument("--points", type=int, default=80)
    p.add_argument("--allow-single", action="store_true")
    p.set_defaults(func=cmd_detuning_scan)

    p = sub.add_parser("calibrate", help="forward calibration model")
    common(p, config=False)
    p.add_argument("--forward", action="store_true")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--T0", type=float, required=True)
    p.add_argument("--gamma-m", type=float, required=True)
    p.add_argument("--p-max", type=float, default=12e-3)
    p.add_argument("--points", type=int, default=25)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("psd", help="Welch PSD of a time-series CSV")
    common(p, config=False)
    p.add_argument("--input", required=True)
    p.add_argument("--segment-length", type=int, required=True)
    p.add_argument("--window", default="hann", choices=list(analysis.WINDOWS))
    p.set_defaults(func=cmd_psd)

    p = sub.add_parser("fit-calibration", help="fit the T_opt(P_tot) model")
    common(p, config=False)
    p.add_argument("--input", required=True)
    p.add_argument("--gamma-m", type=float, required=True)
    p.set_defaults(func=cmd_fit_calibration)

    p = sub.add_parser("fit-step", help="fit the ensemble step model (n_a free)")
    common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--finesse", type=float, default=None)
    p.set_defaults(func=cmd_fit_step)

    p = sub.add_parser("groundstate", help="cooperativity vs bath occupation")
    common(p)
    p.set_defaults(func=cmd_groundstate)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "seeds"):
        args.seed_list = _parse_seeds(args.seeds)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (dynamics.IntegrationUnstable, dynamics.GridCoverageError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
