"""Command-line interface: ``risdetect <subcommand> [options]``.

Every subcommand resolves a configuration (profile, then ``--config`` file,
then ``--set`` and the shortcut flags), writes its CSV output under
``--out`` and stores the resolved configuration next to it.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from . import experiments as ex
from .detection import min_prob_detection

SHORTCUTS = {
    # flag dest -> (section, key)
    "ptx": ("scenario", "tx_power_dbm"),
    "k_db": ("scenario", "k_factor_db"),
    "alpha": ("scenario", "alpha_deg"),
    "dy": ("scenario", "width_y"),
    "rho": ("optimizer", "penalty_rho"),
    "max_iters": ("optimizer", "max_iters"),
    "nu": ("optimizer", "convergence_nu"),
    "trials": ("montecarlo", "trials"),
}


def _parse_set(items):
    """``section.key=value`` pairs into a nested override mapping (values parsed as YAML)."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise SystemExit(f"--set expects key=value, got {item!r}")
        key, val = item.split("=", 1)
        node = out
        *parents, leaf = key.strip().split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = yaml.safe_load(val)
    return out


def resolve_config(args):
    if args.config:
        cfg = ex.ExperimentConfig.load(args.config, args.profile)
    else:
        cfg = ex.ExperimentConfig.profile(args.profile or "table1")
    over = _parse_set(args.set)
    for dest, (sec, key) in SHORTCUTS.items():
        val = getattr(args, dest, None)
        if val is not None:
            over.setdefault(sec, {})[key] = val
    if args.seed is not None:
        over["seed"] = args.seed
    if args.workers is not None:
        over["workers"] = args.workers
    if args.out is not None:
        over["out"] = str(args.out)
    if getattr(args, "objectives", None):
        over["objectives"] = args.objectives
    if getattr(args, "variable", None):
        over.setdefault("sweep", {})["variable"] = args.variable
    if getattr(args, "values", None):
        over.setdefault("sweep", {})["values"] = args.values
    if getattr(args, "u_cells", None) is not None:
        sc = ex.Scenario.from_dict(cfg.data["scenario"]).with_(u_cells=args.u_cells)
        over.setdefault("scenario", {})["uy_count"] = sc.geom.uy_count
    return cfg.with_overrides(over) if over else cfg


def _design_from_args(args, cfg, scenario):
    if args.design:
        return ex.read_design(args.design), {"status": "loaded"}
    design, info = ex.build_design(args.objective, scenario, cfg.mm_config())
    return design, info


def cmd_optimize(args, cfg, out_dir):
    sc = cfg.scenario()
    design, info = ex.build_design(args.objective, sc, cfg.mm_config())
    ex.write_design(out_dir / f"design_{args.objective}.csv", design)
    if "trace" in info:
        info["trace"].to_csv(out_dir / f"trace_{args.objective}.csv")
    pd, i = min_prob_detection(design, sc.statistics, sc.params)
    print(f"{args.objective}: min P_D = {pd:.6f} at location {i}; "
          f"rho = {info['rho']}, iterations = {info['iters']}, "
          f"rank-one ratio = {info['rank_ratio']:.6f}, status = {info['status']}")


def cmd_evaluate(args, cfg, out_dir):
    sc = cfg.scenario()
    design, _ = _design_from_args(args, cfg, sc)
    rows = ex.evaluate_design(design, sc)
    ex.write_csv(out_dir / "evaluate.csv", ["location", "x", "y", "z", "pd"], rows)
    pd, i = min_prob_detection(design, sc.statistics, sc.params)
    print(f"min P_D = {pd:.6f} at location {i}")


def cmd_pattern(args, cfg, out_dir):
    sc = cfg.scenario()
    design, _ = _design_from_args(args, cfg, sc)
    rows = ex.export_pattern(cfg, design, sc)
    name = "pattern_" + (Path(args.design).stem if args.design else args.objective)
    path = ex.write_csv(out_dir / f"{name}.csv", ["y", "z", "gain_db"], rows)
    print(f"wrote {len(rows)} grid points to {path}")


def cmd_sweep(args, cfg, out_dir):
    rows, timings = ex.run_sweep(cfg)
    path = ex.write_sweep(out_dir, cfg, rows, timings)
    bad = [r for r in rows if r["status"] != "ok"]
    print(f"wrote {len(rows)} rows to {path}" + (f"; {len(bad)} with status != ok" if bad else ""))


def cmd_montecarlo(args, cfg, out_dir):
    sc = cfg.scenario()
    design, _ = _design_from_args(args, cfg, sc)
    rows = ex.run_montecarlo(cfg, design, sc)
    cols = ["location", "pd", "pd_empirical", "pfa", "pfa_empirical", "trials", "band",
            "within_band"]
    ex.write_csv(out_dir / "montecarlo.csv", cols, rows)
    inside = sum(r["within_band"] for r in rows)
    print(f"{inside}/{len(rows)} locations within the 3-sigma band")


def cmd_accuracy(args, cfg, out_dir):
    rows = ex.run_accuracy(cfg)
    ex.write_csv(out_dir / "accuracy.csv", ["k_db", "eps_j1", "loc_j1", "eps_j2", "loc_j2"], rows)
    for r in rows:
        print(f"K = {r['k_db']:g} dB: eps(J1) = {r['eps_j1']:.4f}, eps(J2) = {r['eps_j2']:.4f}")


COMMANDS = {
    "optimize": (cmd_optimize, "optimize one design and write its phases and MM trace"),
    "evaluate": (cmd_evaluate, "per-location detection probability of a design"),
    "pattern": (cmd_pattern, "reflection-gain grid of a design"),
    "sweep": (cmd_sweep, "minimum detection probability over a parameter sweep"),
    "montecarlo": (cmd_montecarlo, "simulated detector vs analytic detection probability"),
    "accuracy": (cmd_accuracy, "relative error of the detection approximations vs K"),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("configuration")
    g.add_argument("--profile", choices=ex.PROFILES, default=None,
                   help="built-in defaults (table1 unless the config file names one)")
    g.add_argument("--config", type=Path, help="YAML file overriding profile keys")
    g.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                   help="override any config key, e.g. optimizer.max_iters=50")
    g.add_argument("--seed", type=int)
    g.add_argument("--out", type=Path, help="output directory")
    g.add_argument("--workers", type=int, help="parallel sweep points")
    g.add_argument("--ptx", type=float, help="transmit power in dBm")
    g.add_argument("--k-db", dest="k_db", type=float, help="Rician K-factor in dB")
    g.add_argument("--alpha", type=float, help="scatterer angle offset in degrees")
    g.add_argument("--dy", type=float, help="coverage width along y in metres")
    g.add_argument("--u-cells", dest="u_cells", type=int, help="number of RIS cells")
    g.add_argument("--rho", help="penalty factor or 'auto'")
    g.add_argument("--max-iters", dest="max_iters", type=int)
    g.add_argument("--nu", type=float, help="MM convergence threshold")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="risdetect", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    objectives = ["j1", "j2", "j3", "quadratic"]
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_, description=help_)
        if name in ("optimize", "evaluate", "pattern", "montecarlo"):
            p.add_argument("--objective", choices=objectives, default="j1")
        if name in ("evaluate", "pattern", "montecarlo"):
            p.add_argument("--design", type=Path, help="phases CSV from `optimize`")
        if name == "montecarlo":
            p.add_argument("--trials", type=int)
        if name == "sweep":
            p.add_argument("--variable", choices=sorted(ex.SWEEP_VARIABLES))
            p.add_argument("--values", type=float, nargs="+")
            p.add_argument("--objectives", nargs="+", choices=objectives)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "rho", None) not in (None, "auto"):
        args.rho = float(args.rho)
    try:
        cfg = resolve_config(args)
    except (KeyError, ValueError, TypeError) as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    out_dir = Path(cfg.data["out"])
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.command != "sweep":
        cfg.save(out_dir / f"{args.command}.config.yaml")
    COMMANDS[args.command][0](args, cfg, out_dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
