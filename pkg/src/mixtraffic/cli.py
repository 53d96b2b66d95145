"""Command-line entry point (``mixtraffic <command>``)."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiments as ex

log = logging.getLogger("mixtraffic")

FD_COMMANDS = {"heterogeneity": "heterogeneity", "t-penetration": "t_penetration",
               "rl-penetration": "rl_penetration", "fuel": "fuel_comparison"}


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML config file")
    p.add_argument("--preset", choices=sorted(ex.PRESETS), help="desk or paper scale")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", type=Path, default=Path("results"))
    p.add_argument("--workers", type=int, help="parallel workers for scenario compositions")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixtraffic",
                                     description="RL car following in mixed traffic")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a policy and write its reward curve")
    _common(p)
    p.add_argument("--episodes", type=int, help="override trainer episodes")

    for name in FD_COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} scenario")
        _common(p)
        p.add_argument("--policy", type=Path, help="policy.npz from 'train'")

    p = sub.add_parser("fd", help="fundamental diagram from trajectory CSV files")
    _common(p)
    p.add_argument("files", nargs="+", type=Path)

    p = sub.add_parser("ngsim-extract", help="car-following events from an NGSIM-layout CSV")
    _common(p)
    p.add_argument("ngsim", type=Path, nargs="?", help="defaults to the shipped fixture")

    p = sub.add_parser("replay", help="re-run a result folder and compare tables")
    p.add_argument("result_dir", type=Path)
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _config(args) -> ex.ExperimentConfig:
    over = {"seed": args.seed, "workers": getattr(args, "workers", None)}
    policy = getattr(args, "policy", None)
    if policy is not None:
        over["policy"] = str(policy)
    cfg = ex.load_config(args.config, args.preset, **over)
    episodes = getattr(args, "episodes", None)
    if episodes:
        cfg = cfg.replace(trainer=cfg.trainer.replace(episodes=episodes))
    if cfg.policy is None and args.command in FD_COMMANDS:
        default = args.out_dir / "train" / "policy.npz"
        if default.exists():
            cfg = cfg.replace(policy=str(default))
    return cfg


def _cmd_train(args) -> int:
    cfg = _config(args)
    out = args.out_dir / "train"

    def progress(ep, st):
        if ep % 10 == 0:
            log.info("episode %d reward %.1f steps %d", ep, st.total_reward, st.steps)

    _, table, metrics = ex.run_train(cfg, out, progress)
    ok, share = ex.learning_check(table.column("raw_reward"))
    print(f"policy: {out / 'policy.npz'}")
    print(f"learning share {share:.3f}; evaluation {json.dumps(metrics)}")
    return 0


def _cmd_scenario(args) -> int:
    cfg = _config(args)
    name = FD_COMMANDS[args.command]
    out = args.out_dir / args.command
    table = ex.run_scenario(name, cfg, out)
    summary = out / "summary.csv"
    print((summary if summary.exists() else out / "results.csv").read_text(), end="")
    print(f"written to {out} (fingerprint {table.fingerprint})")
    return 0


def _cmd_fd(args) -> int:
    from .edie import fd_curve, fd_summary
    from .io import read_trajectories
    from .plotting import plot_fd_overlay

    cfg = _config(args)
    trajs = []
    for f in args.files:
        trajs.extend(read_trajectories(f).values())
    curve = fd_curve(trajs, cfg.fd)
    s = fd_summary(curve)
    out = args.out_dir / "fd"
    fp = ex.fingerprint(cfg, "fd", {"files": [str(f) for f in args.files]})
    ex.ResultTable("fd", ["v_star", "mean_k", "mean_q", "n_regions"], curve.rows(),
                   cfg.seed, fp).to_csv(out / "fd_curve.csv")
    plot_fd_overlay({"fd": curve}, out / "fd.png")
    print(f"capacity {s.capacity:.1f} veh/h at {s.optimal_density:.2f} veh/km (v* {s.v_star:g} km/h)")
    return 0


def _cmd_extract(args) -> int:
    from .io import CfCriteria, ParseReport, extract_cf_events, parse_ngsim, split_train_test, write_event_index

    cfg = _config(args)
    src = args.ngsim or ex.FIXTURE
    rep = ParseReport()
    vehicles = parse_ngsim(src, report=rep)
    fd = cfg.fuel_data
    events = extract_cf_events(vehicles, CfCriteria(fd.min_duration, fd.max_gap))
    out = args.out_dir / "ngsim"
    write_event_index(out / "events.csv", events)
    if events:
        tr, te = split_train_test(events, fd.ratio, fd.split_seed)
        write_event_index(out / "train_events.csv", tr)
        write_event_index(out / "test_events.csv", te)
        print(f"{len(vehicles)} vehicles, {rep.skipped} rows skipped, {len(events)} events "
              f"({len(tr)} train / {len(te)} test)")
    else:
        print(f"{len(vehicles)} vehicles, {rep.skipped} rows skipped, no events")
    return 0


def _cmd_replay(args) -> int:
    stored, fresh = ex.replay(args.result_dir)
    same = stored == fresh
    print("identical" if same else "DIFFERENT")
    return 0 if same else 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"train": _cmd_train, "fd": _cmd_fd, "ngsim-extract": _cmd_extract,
                "replay": _cmd_replay}
    try:
        return handlers.get(args.command, _cmd_scenario)(args)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
