"""Command-line entry point: train, eval, compare, export-default-config.

Every run directory gets the fully-resolved config, a manifest with the
config hash and timestamps, per-epoch CSV logs and policy checkpoints, so
any result can be reproduced from (config_hash, seed).

Exit codes: 0 success, 2 config error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .config import ConfigError
from .env import FeederEnv, randomize_scenario, run_episode
from .optimizer import AdamState
from .policy import evaluate, load_checkpoint, save_checkpoint
from .trainer import RngStream, train

LOG_HEADER = "epoch,mean_reward,reward_std,g_norm,theta_norm,wall_ms"
EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_log(path: Path, reports) -> None:
    lines = [LOG_HEADER]
    for r in reports:
        lines.append(f"{r.epoch},{r.mean_reward!r},{r.reward_std!r},"
                     f"{r.g_norm!r},{r.theta_norm!r},{r.wall_ms}")
    path.write_text("\n".join(lines) + "\n")


def _resolve_config(args) -> dict:
    cfg = cfgmod.load_config(args.config) if args.config else cfgmod.default_config()
    if getattr(args, "attack", None):
        cfg["attack"]["kind"] = args.attack
    if getattr(args, "policy", None):
        cfg["policy"]["kind"] = args.policy
    if getattr(args, "seed", None) is not None:
        cfg["train"]["seed"] = args.seed
    if getattr(args, "epochs", None) is not None:
        cfg["train"]["epochs"] = args.epochs
    if getattr(args, "algo", None):
        cfg["train"]["algorithm"] = args.algo
    cfgmod.apply_overrides(cfg, getattr(args, "set", None))
    return cfgmod.validate_config(cfg)


def _train_one(cfg: dict, algorithm: str, seed: int, out: Path,
               epochs: int | None = None):
    """Run one training cell into ``out``; returns (reports, ckpt_path)."""
    model = cfgmod.build_model(cfg)
    bands = cfgmod.build_bands(cfg)
    env_params = cfgmod.build_env_params(cfg)
    tconf = cfgmod.build_train_config(cfg, algorithm=algorithm, seed=seed,
                                      epochs=epochs)
    policy = cfgmod.build_policy(cfg)
    chash = cfgmod.config_hash(cfg)
    out.mkdir(parents=True, exist_ok=True)

    def factory(stream):
        return FeederEnv(model, randomize_scenario(stream, bands), env_params)

    ckpt_path = out / "checkpoint.json"

    def checkpoint_fn(epoch, pol, stats, adam: AdamState):
        save_checkpoint(out / f"checkpoint-{epoch + 1:04d}.json", pol, stats,
                        config_hash=chash, adam=adam.as_dict())

    policy, stats, reports = train(tconf, factory, policy,
                                   checkpoint_fn=checkpoint_fn)
    save_checkpoint(ckpt_path, policy, stats, config_hash=chash)
    _write_log(out / "log.csv", reports)
    return reports, ckpt_path


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    algorithm = cfg["train"]["algorithm"]
    seed = int(cfg["train"]["seed"])
    chash = cfgmod.config_hash(cfg)
    run_id = f"{algorithm}-{cfg['attack']['kind']}-s{seed}-{chash[:8]}"
    out = Path(args.out) if args.out else Path("runs") / run_id
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", cfg)
    manifest = {
        "run_id": run_id,
        "config_hash": chash,
        "seed": seed,
        "algorithm": algorithm,
        "started": _utcnow(),
        "finished": None,
        "status": "running",
        "artifacts": {"config": "config.json", "log": "log.csv",
                      "checkpoint": "checkpoint.json"},
    }
    _write_json(out / "manifest.json", manifest)
    try:
        reports, _ = _train_one(cfg, algorithm, seed, out)
    except Exception:
        manifest["status"] = "failed"
        manifest["finished"] = _utcnow()
        _write_json(out / "manifest.json", manifest)
        traceback.print_exc()
        return EXIT_RUNTIME
    manifest["status"] = "completed"
    manifest["finished"] = _utcnow()
    _write_json(out / "manifest.json", manifest)
    final = reports[-1].mean_reward if reports else float("nan")
    print(f"run {run_id}: {len(reports)} epochs, final mean reward {final:.1f}")
    print(f"artifacts in {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    params, stats, meta = load_checkpoint(args.checkpoint)
    model = cfgmod.build_model(cfg)
    env_params = cfgmod.build_env_params(cfg)
    bands = cfgmod.build_bands(cfg)
    if params.obs_dim != 9 or params.act_dim != 3:
        raise ConfigError(f"checkpoint policy dimensions "
                          f"{params.obs_dim}x{params.act_dim} do not match "
                          f"the 9x3 environment interface")
    scenario = randomize_scenario(RngStream.root(args.scenario_seed), bands)
    if args.compromised is not None:
        scenario = replace(scenario, compromised_fraction=args.compromised)
    out = Path(args.out) if args.out else Path("evals") / (
        f"{cfg['attack']['kind']}-s{args.scenario_seed}")
    out.mkdir(parents=True, exist_ok=True)

    def policy_action(obs):
        return evaluate(params, stats, obs)

    trace, summary = run_episode(model, scenario, env_params,
                                 action_fn=policy_action)
    base_trace, base_summary = run_episode(model, scenario, env_params)
    trace.to_csv(out / "trace.csv")
    base_trace.to_csv(out / "baseline_trace.csv")
    rows = ["metric,policy,baseline"]
    for key in sorted(summary):
        rows.append(f"{key},{summary[key]!r},{base_summary[key]!r}")
    (out / "summary.csv").write_text("\n".join(rows) + "\n")
    _write_json(out / "scenario.json", {
        "attack_kind": scenario.attack_kind,
        "compromised_fraction": scenario.compromised_fraction,
        "load_scale": scenario.load_scale,
        "solar_scale": scenario.solar_scale,
        "regulator_phase": scenario.regulator_phase,
        "scenario_seed": args.scenario_seed,
        "checkpoint_config_hash": meta.get("config_hash", ""),
    })
    print(f"scenario: {scenario.attack_kind} attack, "
          f"{scenario.compromised_fraction:.0%} compromised")
    for key in ("max_vi", "max_vo", "attack_max_vi", "attack_max_vo",
                "mean_reward", "total_curtailment_kwh"):
        print(f"  {key:22s} policy {summary[key]:10.4f}   "
              f"baseline {base_summary[key]:10.4f}")
    print(f"artifacts in {out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if not algos or not seeds:
        raise ConfigError("compare needs at least one algorithm and one seed")
    for algo in algos:
        if algo not in cfgmod.ALGORITHMS:
            raise ConfigError(f"unknown algorithm {algo!r}")
    chash = cfgmod.config_hash(cfg)
    out = Path(args.out) if args.out else Path("runs") / f"compare-{chash[:8]}"
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "config.json", cfg)
    curves: dict[str, list] = {}
    failed = []
    for algo in algos:
        for seed in seeds:
            cell = out / "cells" / f"{algo}-s{seed}"
            try:
                reports, _ = _train_one(cfg, algo, seed, cell)
            except Exception as exc:
                failed.append({"algorithm": algo, "seed": seed,
                               "error": str(exc)})
                print(f"warning: cell {algo} seed {seed} failed and is "
                      f"excluded: {exc}", file=sys.stderr)
                continue
            curves.setdefault(algo, []).append(
                [r.mean_reward for r in reports])
    lines = ["epoch,algo,mean,std"]
    for algo in algos:
        runs = curves.get(algo)
        if not runs:
            continue
        arr = np.array(runs)
        for epoch in range(arr.shape[1]):
            col = arr[:, epoch]
            lines.append(f"{epoch},{algo},{col.mean()!r},{col.std()!r}")
    (out / "comparison.csv").write_text("\n".join(lines) + "\n")
    _write_json(out / "manifest.json", {
        "run_id": out.name,
        "config_hash": chash,
        "algorithms": algos,
        "seeds": seeds,
        "failed_cells": failed,
        "finished": _utcnow(),
        "status": "completed" if not failed else "completed_with_failures",
        "artifacts": {"comparison": "comparison.csv", "config": "config.json"},
    })
    print(f"comparison over {algos} x {len(seeds)} seeds in {out}")
    return EXIT_OK


def cmd_export_default_config(args) -> int:
    text = json.dumps(cfgmod.default_config(), indent=2, sort_keys=True) + "\n"
    if args.out and args.out != "-":
        Path(args.out).write_text(text)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gridars",
        description="Derivative-free policy search for smart-inverter "
                    "voltage-attack defense")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (defaults built in)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key, e.g. train.alpha=0.01")
    common.add_argument("--attack", choices=["oscillation", "imbalance"],
                        help="attack kind (overrides attack.kind)")

    p = sub.add_parser("train", parents=[common], help="train one policy")
    p.add_argument("--algo", choices=list(cfgmod.ALGORITHMS))
    p.add_argument("--policy", choices=["linear", "mlp"])
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--out", help="run directory (default runs/<run_id>)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common],
                       help="evaluate a checkpoint on one scenario, with a "
                            "zero-action baseline alongside")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--scenario-seed", type=int, default=0)
    p.add_argument("--compromised", type=float,
                   help="pin the compromised capacity fraction")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", parents=[common],
                       help="train a grid of (algorithm, seed) cells and "
                            "emit per-epoch mean/std reward")
    p.add_argument("--algos", required=True,
                   help="comma-separated algorithms (rs,ars,adam-ars)")
    p.add_argument("--seeds", required=True, help="comma-separated seeds")
    p.add_argument("--epochs", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("export-default-config",
                       help="write the built-in default config as JSON")
    p.add_argument("--out", help="path or - for stdout")
    p.set_defaults(func=cmd_export_default_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception:
        traceback.print_exc()
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
