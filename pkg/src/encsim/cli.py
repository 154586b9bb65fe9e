"""Command-line front end.

Subcommands:
  simulate   run an experiment from a config file or shipped preset
  presets    list the shipped presets or run one
  analyze    density evolution, thresholds, condition checks, energy grids
  bounds     evaluate the closed-form bound battery to text / bounds.csv
  code       sample codes, inspect them, convert to/from alist files

The master seed resolves as: --seed flag, else the ENCODED_SIM_SEED
environment variable, else the config file's seed.
"""

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import analysis, ldpc, runner
from .noise import EnergyModel, NoiseSpec

SEED_ENV = "ENCODED_SIM_SEED"

_PRESET_DIR = os.path.join(os.path.dirname(__file__), "presets")


def preset_names():
    return sorted(os.path.splitext(f)[0] for f in os.listdir(_PRESET_DIR)
                  if f.endswith(".toml"))


def preset_path(name):
    path = os.path.join(_PRESET_DIR, name + ".toml")
    if not os.path.exists(path):
        raise runner.ConfigError(
            f"unknown preset {name!r} (available: {', '.join(preset_names())})")
    return path


def _resolve_seed(args):
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(SEED_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise runner.ConfigError(
                f"{SEED_ENV}={env!r} is not an integer") from None
    return None


def _default_workers():
    return min(os.cpu_count() or 1, 8)


# ---------------------------------------------------------------------------
# simulate / presets

def cmd_simulate(args):
    if args.preset:
        path = preset_path(args.preset)
    elif args.config:
        path = args.config
    else:
        raise runner.ConfigError("simulate needs --config PATH or --preset NAME")
    overrides = {"trials": args.trials, "seed": _resolve_seed(args)}
    config = runner.parse_config(path, smoke=args.smoke, overrides=overrides)
    out_dir = args.out or config.name + ("-smoke" if args.smoke else "")
    workers = args.workers if args.workers is not None else _default_workers()
    summary = runner.run_experiment(config, out_dir, workers=workers,
                                    plot=not args.no_plot)
    finals = [e for e in summary if e["stage"] == "final"]
    for entry in finals:
        print(f"{entry['scheme']}: final mean BER {entry['mean_ber']:.6g} "
              f"(block error rate {entry['block_error_rate']:.3g}, "
              f"ops/bit {entry['ops_per_bit']:.6g})")
    print(f"wrote trials.csv, summary.csv, bounds.csv"
          f"{'' if args.no_plot else ', report.png'} in {out_dir}")
    return 0


def cmd_presets(args):
    if args.action == "list":
        for name in preset_names():
            config = runner.parse_config(preset_path(name))
            print(f"{name}: {config.provenance or '(no description)'}")
        return 0
    args.preset = args.name
    args.config = None
    return cmd_simulate(args)


# ---------------------------------------------------------------------------
# analyze

def _noise_from_args(args):
    return NoiseSpec(p_and=args.p_and, p_xor=args.p_xor, p_maj=args.p_maj)


def cmd_analyze_de(args):
    params = analysis.DEParams(d_v=args.dv, d_c=args.dc, p_xor=args.p_xor,
                               p_maj=args.p_maj, p0=args.p0,
                               tie_rule=args.tie_rule)
    p0 = args.p0 if args.p0 is not None else analysis.p_reg(
        args.p_xor, args.dt, analysis.p_thr(args.dv, args.dc, args.dt))
    traj, converged = analysis.de_trajectory(p0, params, iters=args.iters)
    writer = csv.writer(args_out_handle(args))
    writer.writerow(["iteration", "error_probability"])
    for i, p in enumerate(traj):
        writer.writerow([i, repr(p)])
    print(f"# start {traj[0]:.8g}, end {traj[-1]:.8g}, "
          f"converged={converged} in {len(traj) - 1} iterations",
          file=sys.stderr)
    return 0


def cmd_analyze_thresholds(args):
    pt = analysis.p_thr(args.dv, args.dc, args.dt)
    rep = analysis.BoundReport(name="decoding-threshold",
                               inputs=dict(d_v=args.dv, d_c=args.dc,
                                           d_T=args.dt))
    rep.values["p_thr"] = pt
    rep.values["p_reg"] = analysis.p_reg(args.p_xor, args.dt, pt)
    rep.values["p_maj_bound"] = pt
    rep.values["p_xor_bound"] = (args.dt + 1) / args.dc * pt
    rep.values["p_and_bound"] = (args.dt + 1) / args.dt * pt
    print(rep.to_text())
    return 0


def cmd_analyze_check(args):
    rep = analysis.check_thm1(_noise_from_args(args), args.dv, args.dc,
                              args.dt, args.l, args.n)
    print(rep.to_text())
    return 0 if rep["all_pass"] else 1


def cmd_analyze_energy(args):
    model = EnergyModel(kind=args.model, c=args.c)
    grid = np.logspace(math.log10(args.p_tar_min), math.log10(args.p_tar_max),
                       args.points)
    writer = csv.writer(args_out_handle(args))
    writer.writerow(["p_tar", "uncoded", "tree_coded", "voltage_scaled"])
    for p_tar in grid:
        rep = analysis.corollary1_scaling(model, args.n, args.k, args.l,
                                          float(p_tar))
        writer.writerow([repr(float(p_tar)), repr(rep["uncoded"]),
                         repr(rep["tree_coded"]),
                         repr(rep["voltage_scaled"])])
    return 0


def cmd_analyze_schedule(args):
    L_vs = analysis.l_vs(args.p_tar, args.alpha0, args.theta,
                         variant=args.variant)
    lam = analysis.lambda_first_phase(args.alpha0, args.theta, args.dc, args.rate)
    rep = analysis.BoundReport(
        name="voltage-schedule",
        inputs=dict(p_tar=args.p_tar, alpha0=args.alpha0, theta=args.theta,
                    d_c=args.dc, R=args.rate, variant=args.variant))
    rep.values["L_vs"] = L_vs
    rep.values["first_phase_lambda"] = lam
    for i in (1, L_vs):
        rep.values[f"lambda_stage_{i}"] = analysis.lambda_schedule(
            i, args.alpha0, args.theta, args.dc, args.rate)
    print(rep.to_text())
    return 0


def args_out_handle(args):
    if getattr(args, "out", None):
        return open(args.out, "w", newline="")
    return sys.stdout


# ---------------------------------------------------------------------------
# bounds

def cmd_bounds(args):
    reports = []
    ls = analysis.lambda_star(args.eps)
    rep = analysis.BoundReport(name="doubling-deviation-exponent",
                               inputs=dict(eps=args.eps))
    rep.values["lambda_star"] = ls
    reports.append(rep)
    reports.append(analysis.thm4_lower_bound(args.l, args.k, args.d,
                                             args.eps, args.p_tar))
    reports.append(analysis.thm6_codelength(args.l, args.p_tar, ls, K=args.k))
    rep = analysis.BoundReport(name="uncoded-baseline",
                               inputs=dict(L=args.l, p_and=args.p_and,
                                           p_xor=args.p_xor, p_tar=args.p_tar))
    rep.values["ber"] = analysis.uncoded_ber(args.l, args.p_and, args.p_xor)
    for kind in ("exponential", "polynomial", "subexponential"):
        model = EnergyModel(kind=kind, c=args.c)
        rep.values[f"energy_bound_{kind}"] = analysis.uncoded_energy_bound(
            model, args.l, args.p_tar)
    reports.append(rep)
    if args.alpha0 is not None and args.theta is not None:
        reports.append(analysis.thm3_blocks(args.n, args.l, args.ds, args.dc,
                                            args.rate, args.alpha0, args.theta))
        rep = analysis.BoundReport(
            name="voltage-schedule",
            inputs=dict(p_tar=args.p_tar, alpha0=args.alpha0, theta=args.theta))
        rep.values["L_vs"] = analysis.l_vs(args.p_tar, args.alpha0, args.theta)
        reports.append(rep)

    for rep in reports:
        print(rep.to_text())
        print()
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "bounds.csv")
        with open(path, "w", newline="") as fh:
            fh.write(f"# encsim bounds schema v{runner.SCHEMA_VERSION}\n")
            writer = csv.writer(fh)
            writer.writerow(["scheme", "report", "quantity", "value"])
            for rep in reports:
                for row in rep.to_rows():
                    writer.writerow(["-", row["report"], row["quantity"],
                                     runner._fmt(row["value"])])
        print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------
# code

def cmd_code(args):
    if args.action == "sample":
        spec = ldpc.sample_code(args.n, args.dv, args.dc, seed=args.seed or 0,
                                forbid_4cycles=not args.allow_4cycles,
                                girth_cap=args.girth_cap)
        ldpc.write_alist(args.out, spec.H)
        print(f"N={spec.N} P={spec.P} K={spec.K} girth={spec.girth_text()} "
              f"-> {args.out}")
        if args.manifest:
            ldpc.write_manifest(args.manifest, spec)
            print(f"manifest -> {args.manifest}")
        return 0
    # inspect
    H = ldpc.read_alist(args.path)
    graph = ldpc.graph_from_H(H)
    spec = ldpc.build_code(graph, girth_cap=args.girth_cap)
    print(f"N={spec.N} P={spec.P} K={spec.K} d_v={graph.d_v} d_c={graph.d_c} "
          f"girth={spec.girth_text()}")
    for entry in ldpc.check_assumptions(spec, D=args.fan_in, L=args.l,
                                        d_T=args.dt):
        print(f"  [{entry.status}] {entry.name}: {entry.detail}")
    if args.a3_alpha0 is not None:
        rep = ldpc.empirical_a3_check(spec, args.a3_alpha0, args.a3_theta,
                                      trials=args.a3_trials)
        print(f"  error-reduction screen: weight {rep.weight}, "
              f"{rep.samples} patterns"
              f"{' (exhaustive)' if rep.exhaustive else ''}, "
              f"min reduction {rep.min_reduction:.4f} vs theta "
              f"{rep.theta} -> {'pass' if rep.passed else 'fail'}")
    return 0


# ---------------------------------------------------------------------------
# parser

def build_parser():
    parser = argparse.ArgumentParser(
        prog="encsim",
        description="Simulator and analysis toolkit for binary linear "
                    "transforms computed with unreliable gates.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_sim_flags(p):
        p.add_argument("--seed", type=int, default=None,
                       help=f"master seed (overrides {SEED_ENV} and config)")
        p.add_argument("--trials", type=int, default=None)
        p.add_argument("--workers", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--smoke", action="store_true",
                       help="apply the config's scaled-down [smoke] variant")
        p.add_argument("--no-plot", action="store_true",
                       help="skip the report.png rendering")

    p = sub.add_parser("simulate", help="run an experiment")
    p.add_argument("--config", default=None, help="TOML experiment config")
    p.add_argument("--preset", default=None, help="shipped preset name")
    add_sim_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("presets", help="list or run shipped presets")
    p.add_argument("action", choices=["list", "run"])
    p.add_argument("name", nargs="?", default=None)
    add_sim_flags(p)
    p.set_defaults(func=cmd_presets)

    p = sub.add_parser("analyze", help="closed-form analysis front end")
    asub = p.add_subparsers(dest="analysis", required=True)

    q = asub.add_parser("de", help="density-evolution trajectory CSV")
    q.add_argument("--dv", type=int, required=True)
    q.add_argument("--dc", type=int, required=True)
    q.add_argument("--dt", type=int, default=2)
    q.add_argument("--p-xor", type=float, default=0.0)
    q.add_argument("--p-maj", type=float, default=0.0)
    q.add_argument("--p0", type=float, default=None,
                   help="start point (default: worst-case register error)")
    q.add_argument("--iters", type=int, default=200)
    q.add_argument("--tie-rule", choices=["random-tie", "original"],
                   default="random-tie")
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_analyze_de)

    q = asub.add_parser("thresholds", help="decoding threshold block")
    q.add_argument("--dv", type=int, required=True)
    q.add_argument("--dc", type=int, required=True)
    q.add_argument("--dt", type=int, default=2)
    q.add_argument("--p-xor", type=float, default=0.0)
    q.set_defaults(func=cmd_analyze_thresholds)

    q = asub.add_parser("check", help="tree-scheme sufficient conditions")
    q.add_argument("--dv", type=int, required=True)
    q.add_argument("--dc", type=int, required=True)
    q.add_argument("--dt", type=int, default=2)
    q.add_argument("--l", type=int, required=True)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--p-and", type=float, default=0.0)
    q.add_argument("--p-xor", type=float, default=0.0)
    q.add_argument("--p-maj", type=float, default=0.0)
    q.set_defaults(func=cmd_analyze_check)

    q = asub.add_parser("energy", help="per-bit energy scaling grid CSV")
    q.add_argument("--model", choices=["exponential", "polynomial",
                                       "subexponential"], required=True)
    q.add_argument("--c", type=float, default=1.0)
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--l", type=int, required=True)
    q.add_argument("--p-tar-min", type=float, default=1e-12)
    q.add_argument("--p-tar-max", type=float, default=1e-3)
    q.add_argument("--points", type=int, default=19)
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_analyze_energy)

    q = asub.add_parser("schedule", help="two-phase voltage schedule")
    q.add_argument("--p-tar", type=float, required=True)
    q.add_argument("--alpha0", type=float, required=True)
    q.add_argument("--theta", type=float, required=True)
    q.add_argument("--dc", type=int, default=8)
    q.add_argument("--rate", type=float, default=0.5)
    q.add_argument("--variant", choices=["main-text", "appendix-f"],
                   default="main-text")
    q.set_defaults(func=cmd_analyze_schedule)

    p = sub.add_parser("bounds", help="evaluate the closed-form bound battery")
    p.add_argument("--l", type=int, default=1000)
    p.add_argument("--k", type=int, default=1000)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--d", type=int, default=2, help="gate fan-in bound")
    p.add_argument("--ds", type=int, default=2)
    p.add_argument("--dc", type=int, default=8)
    p.add_argument("--rate", type=float, default=0.5)
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--p-tar", type=float, default=1e-6)
    p.add_argument("--p-and", type=float, default=0.001)
    p.add_argument("--p-xor", type=float, default=0.001)
    p.add_argument("--c", type=float, default=1.0)
    p.add_argument("--alpha0", type=float, default=None)
    p.add_argument("--theta", type=float, default=None)
    p.add_argument("--out", default=None, help="directory for bounds.csv")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("code", help="sample / inspect codes, alist I/O")
    csub = p.add_subparsers(dest="action", required=True)
    q = csub.add_parser("sample")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--dv", type=int, required=True)
    q.add_argument("--dc", type=int, required=True)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out", required=True, help="alist output path")
    q.add_argument("--manifest", default=None)
    q.add_argument("--allow-4cycles", action="store_true")
    q.add_argument("--girth-cap", type=int, default=16)
    q.set_defaults(func=cmd_code)
    q = csub.add_parser("inspect")
    q.add_argument("path", help="alist file")
    q.add_argument("--girth-cap", type=int, default=16)
    q.add_argument("--fan-in", type=int, default=16)
    q.add_argument("--l", type=int, default=None)
    q.add_argument("--dt", type=int, default=None)
    q.add_argument("--a3-alpha0", type=float, default=None)
    q.add_argument("--a3-theta", type=float, default=0.3)
    q.add_argument("--a3-trials", type=int, default=200)
    q.set_defaults(func=cmd_code)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "presets" and args.action == "run" and not args.name:
        parser.error("presets run needs a preset name")
    try:
        return args.func(args)
    except (runner.ConfigError, ldpc.SamplerError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
