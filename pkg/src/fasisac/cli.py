"""Command-line front end.

Verbs: run, sweep, baseline, train, eval, validate-config. Exit codes: 0 success,
1 configuration error, 2 every scenario failed, 3 some rows failed.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bcd import fpa_baseline
from .beamforming import OPTIMAL, design_beamformer
from .channel import channel_vector, communication_rate, target_matrices
from .config import ConfigError, ExperimentConfig, dump_config, validate
from .ddpg import DdpgAgent, OuNoise, ReplayBuffer, run_episodes
from .environment import FasIsacEnv, action_dim, state_dim
from .errors import ConfigurationError
from .nn import load_checkpoint, save_checkpoint
from .sweep import (_scenario, csv_text, derive_seed, emit_results, run_one, run_sweep,
                    ResultTable)

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED, EXIT_PARTIAL = 0, 1, 2, 3


def _load(args) -> ExperimentConfig:
    if args.config:
        exp = ExperimentConfig.from_file(args.config)
        raw = exp.data
    else:
        raw = validate({})
    overrides = getattr(args, "set", None) or []
    if overrides:
        raw = json.loads(json.dumps(raw))
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not KEY=VALUE", "--set")
            key, text = item.split("=", 1)
            section, _, name = key.partition(".")
            if section not in raw or name not in raw[section]:
                raise ConfigError("unknown key", "--set", path=key)
            raw[section][name] = yaml.safe_load(text)
        raw = validate(raw, "--set")
    return ExperimentConfig(raw)


def _exit_for(rows) -> int:
    bad = sum(r.status != "ok" for r in rows)
    if bad == 0:
        return EXIT_OK
    return EXIT_ALL_FAILED if bad == len(rows) else EXIT_PARTIAL


def _print_rows(rows):
    sys.stdout.write(csv_text(rows))


def _emit(exp, table, out):
    if out is None:
        _print_rows(table.rows)
        return
    out_cfg = exp.data["output"]
    written = emit_results(table, out, out_cfg["formats"], out_cfg["record_wall_time"])
    for kind, path in written.items():
        print(f"wrote {kind}: {path}", file=sys.stderr)


def cmd_validate(args) -> int:
    exp = _load(args)
    print(f"ok {exp.hash}")
    if args.dump:
        sys.stdout.write(dump_config(exp.data))
    return EXIT_OK


def cmd_run(args) -> int:
    exp = _load(args)
    snrs = exp.sweep["snr_db"]
    if args.snr_index >= len(snrs):
        raise ConfigError(f"snr index {args.snr_index} out of range for {snrs}", "--snr-index")
    rows = run_one(exp, args.scenario_id, args.snr_index, args.methods or None, args.num_targets)
    _emit(exp, ResultTable(exp.data, rows, exp.hash), args.out)
    return _exit_for(rows)


def _sweep(args, methods=None) -> int:
    exp = _load(args)

    def progress(rows):
        if args.verbose:
            for r in rows:
                print(f"scenario {r.scenario_id} snr {r.snr_db:g} {r.method}: "
                      f"{r.rate:.4f} [{r.status}]", file=sys.stderr)

    table = run_sweep(exp, methods or args.methods or None, args.workers, args.num_targets, progress)
    _emit(exp, table, args.out)
    return _exit_for(table.rows)


def cmd_sweep(args) -> int:
    return _sweep(args)


def cmd_baseline(args) -> int:
    return _sweep(args, ["fpa"])


def _fpa_start(exp, scenario_id, snr_index, num_targets=None):
    snr = exp.sweep["snr_db"][snr_index]
    sc = _scenario(exp, scenario_id, snr, num_targets)
    rng = np.random.default_rng(derive_seed(exp.sweep["master_seed"], scenario_id, 1 + snr_index))
    base = fpa_baseline(sc, exp.bcd_config(), rng)
    return sc, base, rng


def cmd_train(args) -> int:
    """Train the positioning agent against the FPA covariance of one scenario."""
    exp = _load(args)
    sc, base, rng = _fpa_start(exp, args.scenario_id, args.snr_index)
    if base.status != OPTIMAL:
        print(f"scenario {args.scenario_id}: beamforming {base.status}", file=sys.stderr)
        return EXIT_ALL_FAILED
    bcfg = exp.bcd_config()
    n = base.best_layout.num_antennas
    agent = DdpgAgent(state_dim(n), action_dim(n), sc.action_bound, bcfg.agent, rng)
    buffer = ReplayBuffer(agent.state_dim, agent.action_dim, bcfg.agent.buffer_capacity)
    noise = OuNoise(agent.action_dim, bcfg.agent.ou_xi, bcfg.agent.ou_sigma_start * sc.action_bound)
    env = FasIsacEnv(sc, base.best_covariance, base.best_layout, bcfg.reward, bcfg.steps_per_episode)
    log = run_episodes(agent, env, args.episodes, bcfg.steps_per_episode, rng, buffer, noise)
    meta = {"config": exp.data, "config_hash": exp.hash, "scenario_id": args.scenario_id,
            "snr_index": args.snr_index, "episodes": args.episodes,
            "train_steps": log.train_steps, "best_reward": float(log.best_reward),
            "version": __version__}
    save_checkpoint(args.out, agent.networks(), agent.optimizers(), meta)
    for e in log.episodes:
        print(f"episode {e.episode}: return {e.episode_return:.4f} best rate {e.best_rate:.4f}",
              file=sys.stderr)
    print(f"wrote checkpoint: {args.out}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(args) -> int:
    """Greedy rollout of a trained actor, then a fresh beamforming solve at its best layout."""
    networks, _, meta = load_checkpoint(args.checkpoint)
    exp = ExperimentConfig(validate(meta["config"], str(args.checkpoint)))
    sid = meta["scenario_id"] if args.scenario_id is None else args.scenario_id
    j = meta["snr_index"] if args.snr_index is None else args.snr_index
    sc, base, rng = _fpa_start(exp, sid, j)
    if base.status != OPTIMAL:
        print(f"scenario {sid}: beamforming {base.status}", file=sys.stderr)
        return EXIT_ALL_FAILED
    bcfg = exp.bcd_config()
    actor = networks["actor"]
    env = FasIsacEnv(sc, base.best_covariance, base.best_layout, bcfg.reward, bcfg.steps_per_episode)
    state = env.reset()
    best_r, best_layout = env.evaluate(env.start_layout)[0], env.start_layout.copy()
    for _ in range(bcfg.steps_per_episode):
        res = env.step(actor(state))
        if res.reward > best_r:
            best_r, best_layout = res.reward, res.layout
        state = res.next_state
    _, cov1, rep = design_beamformer(channel_vector(best_layout, sc), target_matrices(best_layout, sc),
                                     sc.p_max, sc.gamma, sc.noise_power, rng, bcfg.solver)
    rate = (communication_rate(channel_vector(best_layout, sc), cov1, sc.noise_power)
            if rep.status == OPTIMAL else None)
    out = {"scenario_id": sid, "snr_db": exp.sweep["snr_db"][j], "fpa_rate": base.best_rate,
           "policy_rate": rate, "status": rep.status, "best_reward": best_r,
           "bs_positions": best_layout.bs_positions.tolist(),
           "ut_position": best_layout.ut_position.tolist()}
    print(json.dumps(out, indent=2))
    return EXIT_OK if rep.status == OPTIMAL else EXIT_ALL_FAILED


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fasisac", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("-c", "--config", type=Path, help="YAML experiment config (defaults if omitted)")
        sp.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="override one config value (repeatable)")
        if out:
            sp.add_argument("-o", "--out", type=Path, help="output directory (CSV to stdout if omitted)")

    sp = sub.add_parser("validate-config", help="check a config file and print its hash")
    common(sp, out=False)
    sp.add_argument("--dump", action="store_true", help="print the defaults-filled config")
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("run", help="one scenario at one SNR")
    common(sp)
    sp.add_argument("--scenario-id", type=int, default=0)
    sp.add_argument("--snr-index", type=int, default=0, help="index into sweep.snr_db")
    sp.add_argument("--methods", nargs="+", choices=["fpa", "fas_bcd_drl"])
    sp.add_argument("--num-targets", type=int)
    sp.set_defaults(func=cmd_run)

    for name, func, hlp in (("sweep", cmd_sweep, "all scenarios x SNR points"),
                            ("baseline", cmd_baseline, "fixed-array baseline only")):
        sp = sub.add_parser(name, help=hlp)
        common(sp)
        sp.add_argument("--workers", type=int)
        sp.add_argument("--num-targets", type=int)
        sp.add_argument("-v", "--verbose", action="store_true")
        if name == "sweep":
            sp.add_argument("--methods", nargs="+", choices=["fpa", "fas_bcd_drl"])
        sp.set_defaults(func=func)

    sp = sub.add_parser("train", help="train the positioning agent, write a checkpoint")
    common(sp, out=False)
    sp.add_argument("--scenario-id", type=int, default=0)
    sp.add_argument("--snr-index", type=int, default=0)
    sp.add_argument("--episodes", type=int, default=10)
    sp.add_argument("-o", "--out", type=Path, required=True, help="checkpoint path")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="evaluate a checkpoint's greedy policy")
    sp.add_argument("checkpoint", type=Path)
    sp.add_argument("--scenario-id", type=int)
    sp.add_argument("--snr-index", type=int)
    sp.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", None) is not None and args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigurationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ALL_FAILED


if __name__ == "__main__":
    sys.exit(main())
