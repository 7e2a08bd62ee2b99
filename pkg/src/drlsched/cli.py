"""Command-line entry point: ``drlsched {train,baseline,eval,plot}``."""
import argparse
import logging
import os
import sys

from .agent import load_checkpoint, save_checkpoint
from .errors import ConfigError, ContractViolation, TrainingDiverged
from .harness import (
    RunConfig,
    dump_run_config,
    emit_results,
    evaluate_vs_pf,
    load_run_config,
    plot_csv,
    run,
    run_episodes,
)
from .sched import SchedulerKind

log = logging.getLogger("drlsched")

EXIT_CONFIG = 2
EXIT_DIVERGED = 3
EXIT_CONTRACT = 4


def _load_config(args, **overrides):
    if args.config:
        return load_run_config(args.config, **overrides)
    return RunConfig.from_dict({k: v for k, v in overrides.items() if v is not None})


def cmd_train(args):
    cfg = _load_config(
        args, method=args.method, seeds=args.seeds, out_dir=args.out,
        n_envs=args.n_envs, total_updates=args.total_updates,
    )
    os.makedirs(cfg.out_dir, exist_ok=True)
    dump_run_config(cfg, os.path.join(cfg.out_dir, "config.yaml"))
    ckpt_dir = os.path.join(cfg.out_dir, "checkpoints")
    logs = run(cfg, checkpoint_dir=ckpt_dir)
    os.makedirs(ckpt_dir, exist_ok=True)
    for lg in logs:
        for k, agent in enumerate(lg.agents):
            suffix = f"_agent{k}" if len(lg.agents) > 1 else ""
            save_checkpoint(agent, os.path.join(ckpt_dir, f"seed{lg.seed}{suffix}.npz"))
    paths = emit_results(logs, cfg.out_dir, plot=not args.no_plot)
    for lg in logs:
        for e in lg.evals[-len(lg.agents):]:
            print(f"seed {lg.seed} agent {e.agent} update {e.update_count}: "
                  f"tp_diff {e.tp_diff:+.4f} jfi_diff {e.jfi_diff:+.4f}")
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_baseline(args):
    cfg = _load_config(args)
    seeds = tuple(args.seeds) if args.seeds else cfg.eval_seeds
    ttis = args.ttis or cfg.eval_ttis
    stats = run_episodes(SchedulerKind(args.scheduler), cfg.sim, seeds, ttis)
    print("seed,throughput_bits_per_tti,jfi")
    for s in stats:
        print(f"{s.seed},{s.throughput:.3f},{s.jfi:.6f}")
    return 0


def cmd_eval(args):
    cfg = _load_config(args)
    agent = load_checkpoint(args.checkpoint)
    if agent.state_dim != 2 * cfg.sim.n_ue:
        raise ConfigError(
            f"checkpoint expects {agent.state_dim // 2} UEs but the config has {cfg.sim.n_ue}"
        )
    seeds = tuple(args.seeds) if args.seeds else None
    rec = evaluate_vs_pf(agent, cfg, eval_seeds=seeds)
    print("eval_seed,tp_diff,jfi_diff")
    for s, tp, jfi in rec.per_seed:
        print(f"{s},{tp:+.6f},{jfi:+.6f}")
    print(f"aggregate,{rec.tp_diff:+.6f},{rec.jfi_diff:+.6f}")
    return 0


def cmd_plot(args):
    print(f"wrote {plot_csv(args.csv, args.out)}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="drlsched", description="DRL downlink scheduling experiments")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train an agent and write results")
    t.add_argument("--method", required=True, choices=("direct", "dual", "expert"))
    t.add_argument("--config", help="YAML run config")
    t.add_argument("--seeds", type=int, nargs="+")
    t.add_argument("--out", help="output directory")
    t.add_argument("--n-envs", type=int)
    t.add_argument("--total-updates", type=int)
    t.add_argument("--no-plot", action="store_true")
    t.set_defaults(func=cmd_train)

    b = sub.add_parser("baseline", help="run a conventional scheduler")
    b.add_argument("--scheduler", required=True, choices=("pf", "maxci", "rr"))
    b.add_argument("--config")
    b.add_argument("--seeds", type=int, nargs="+")
    b.add_argument("--ttis", type=int)
    b.set_defaults(func=cmd_baseline)

    e = sub.add_parser("eval", help="evaluate a checkpoint against PF")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--config")
    e.add_argument("--seeds", type=int, nargs="+")
    e.set_defaults(func=cmd_eval)

    pl = sub.add_parser("plot", help="plot a results CSV")
    pl.add_argument("--csv", required=True)
    pl.add_argument("--out")
    pl.set_defaults(func=cmd_plot)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except TrainingDiverged as exc:
        log.error("training diverged: %s", exc)
        return EXIT_DIVERGED
    except (ContractViolation, OSError) as exc:
        log.error("%s", exc)
        return EXIT_CONTRACT


if __name__ == "__main__":
    sys.exit(main())
