"""Config file handling: defaults, overrides, validation, hashing, builders.

The fully-resolved config is a plain nested dict (JSON on disk). Every run
artifact embeds the config hash so results can be traced back to the exact
settings that produced them.
"""

from __future__ import annotations

import copy
import hashlib
import json

import numpy as np

from .env import (AttackTemplates, EnvParams, FeederModel, ScenarioBands,
                  build_feeder)
from .policy import PolicyParams
from .trainer import TrainConfig

__all__ = [
    "ConfigError", "default_config", "load_config", "apply_overrides",
    "validate_config", "config_hash", "build_model", "build_env_params",
    "build_bands", "build_train_config", "build_policy", "algorithm_flags",
    "ALGORITHMS",
]

ALGORITHMS = ("rs", "ars", "adam-ars")

DEFAULT_CONFIG = {
    "feeder": {
        "n_nodes": 10,
        "horizon": 700,
        "load_kw": 40.0,
        "r_pu_per_mw": 0.16,
        "x_pu_per_mvar": 0.10,
        "regulator_asymmetry": 1.07,
        "v_source": 1.025,
        "load_q_ratio": 0.1,
        "load_shape_amplitude": 0.015,
        "solar_shape_amplitude": 0.012,
    },
    "inverter": {
        "eta": [0.95, 0.995, 1.005, 1.12, 1.16],
        "tau_measure_s": 1.5,
        "tau_output_s": 2.0,
        "oversize": 1.1,
    },
    "observer": {
        "hp_cutoff_hz": 0.1,
        "lp_cutoff_hz": 0.0016,
        "gain": 400.0,
    },
    "reward": {
        "sigma_u": 300.0,
        "sigma_y": 300.0,
        "sigma_a": 0.5,
        "sigma_0": 1.0,
        "sigma_p": 1.0,
    },
    "attack": {
        "kind": "imbalance",
        "start": 200,
        "end": 450,
        "oscillation_eta": [0.9997, 0.9998, 0.9999, 1.0001, 1.30],
        "imbalance_eta": [
            [0.85, 0.88, 0.90, 0.93, 1.30],
            [1.07, 1.10, 1.14, 1.17, 1.25],
            [0.95, 0.995, 1.005, 1.12, 1.16],
        ],
        "imbalance_ramp_steps": 120,
    },
    "scenario": {
        "compromised_min": 0.1,
        "compromised_max": 0.4,
        "load_scale_min": 0.95,
        "load_scale_max": 1.05,
        "solar_scale_min": 0.93,
        "solar_scale_max": 1.05,
    },
    "env": {
        "action_period": 20,
        "dt_s": 1.0,
    },
    "policy": {
        "kind": "mlp",
        "hidden": [16, 16],
        "action_bound": 0.1,
    },
    "train": {
        "algorithm": "adam-ars",
        "n_directions": 16,
        "top_directions": 8,
        "nu": 0.03,
        "alpha": None,
        "alpha_by_algorithm": {"rs": 0.01, "ars": 0.01, "adam-ars": 0.02},
        "epochs": 80,
        "episodes": 2,
        "seed": 0,
        "beta1": 0.9,
        "beta2": 0.999,
        "lambda_adam": 1e-8,
        "checkpoint_every": 10,
    },
}


class ConfigError(Exception):
    """Invalid or unreadable configuration (exit code 2 at the CLI)."""


def default_config() -> dict:
    return copy.deepcopy(DEFAULT_CONFIG)


def load_config(path) -> dict:
    """Read a JSON config file and merge it over the defaults.

    Unknown keys are rejected so typos fail loudly.
    """
    try:
        with open(path) as fh:
            user = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(user, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    cfg = default_config()
    _merge(cfg, user, path="")
    return cfg


def _merge(base: dict, user: dict, path: str) -> None:
    for key, value in user.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key: {where}")
        if isinstance(base[key], dict) and key != "alpha_by_algorithm":
            if not isinstance(value, dict):
                raise ConfigError(f"{where}: expected an object")
            _merge(base[key], value, where)
        else:
            base[key] = value


def apply_overrides(cfg: dict, overrides) -> dict:
    """Apply ``section.key=value`` strings; values parse as JSON, falling
    back to a bare string."""
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        dotted, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = cfg
        parts = dotted.split(".")
        for part in parts[:-1]:
            if not isinstance(node, dict) or part not in node:
                raise ConfigError(f"unknown config key: {dotted}")
            node = node[part]
        if not isinstance(node, dict) or parts[-1] not in node:
            raise ConfigError(f"unknown config key: {dotted}")
        node[parts[-1]] = value
    return cfg


def _require(cond: bool, where: str, message: str, problems: list) -> None:
    if not cond:
        problems.append(f"{where}: {message}")


def validate_config(cfg: dict) -> dict:
    """Field-level validation; raises ConfigError listing every problem."""
    p: list[str] = []
    f = cfg["feeder"]
    _require(int(f["n_nodes"]) >= 2, "feeder.n_nodes", "need at least 2 nodes", p)
    _require(f["horizon"] >= 1, "feeder.horizon", "must be positive", p)
    for key in ("load_kw", "r_pu_per_mw", "x_pu_per_mvar", "v_source"):
        _require(f[key] > 0, f"feeder.{key}", "must be positive", p)
    inv = cfg["inverter"]
    eta = inv["eta"]
    _require(len(eta) == 5, "inverter.eta", "needs 5 breakpoints", p)
    if len(eta) == 5:
        _require(eta[0] < eta[1] <= eta[2] < eta[3] < eta[4], "inverter.eta",
                 "breakpoints must satisfy e1 < e2 <= e3 < e4 < e5", p)
    _require(inv["oversize"] >= 1.0, "inverter.oversize", "must be >= 1", p)
    for key in ("tau_measure_s", "tau_output_s"):
        _require(inv[key] > 0, f"inverter.{key}", "must be positive", p)
    obs = cfg["observer"]
    for key in ("hp_cutoff_hz", "lp_cutoff_hz", "gain"):
        _require(obs[key] > 0, f"observer.{key}", "must be positive", p)
    for key, value in cfg["reward"].items():
        _require(value >= 0, f"reward.{key}", "must be nonnegative", p)
    att = cfg["attack"]
    _require(att["kind"] in ("oscillation", "imbalance"), "attack.kind",
             "must be oscillation or imbalance", p)
    _require(0 <= att["start"] < att["end"] <= f["horizon"], "attack.start/end",
             "need 0 <= start < end <= feeder.horizon", p)
    sc = cfg["scenario"]
    _require(0 <= sc["compromised_min"] <= sc["compromised_max"] <= 1,
             "scenario.compromised_min/max", "need 0 <= min <= max <= 1", p)
    _require(0 < sc["load_scale_min"] <= sc["load_scale_max"],
             "scenario.load_scale_min/max", "need 0 < min <= max", p)
    _require(0 < sc["solar_scale_min"] <= sc["solar_scale_max"],
             "scenario.solar_scale_min/max", "need 0 < min <= max", p)
    env = cfg["env"]
    _require(env["action_period"] >= 1, "env.action_period", "must be >= 1", p)
    _require(env["dt_s"] > 0, "env.dt_s", "must be positive", p)
    pol = cfg["policy"]
    _require(pol["kind"] in ("linear", "mlp"), "policy.kind",
             "must be linear or mlp", p)
    _require(pol["action_bound"] > 0, "policy.action_bound", "must be positive", p)
    tr = cfg["train"]
    _require(tr["algorithm"] in ALGORITHMS, "train.algorithm",
             f"must be one of {ALGORITHMS}", p)
    _require(tr["n_directions"] >= 1, "train.n_directions", "must be >= 1", p)
    _require(1 <= tr["top_directions"] <= tr["n_directions"],
             "train.top_directions", "need 1 <= b <= N", p)
    _require(tr["nu"] > 0, "train.nu", "must be positive", p)
    if tr["alpha"] is not None:
        _require(tr["alpha"] > 0, "train.alpha", "must be positive", p)
    _require(tr["epochs"] >= 0, "train.epochs", "must be >= 0", p)
    _require(tr["episodes"] >= 1, "train.episodes", "must be >= 1", p)
    if p:
        raise ConfigError("invalid config:\n  " + "\n  ".join(p))
    return cfg


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def algorithm_flags(name: str) -> dict:
    """Trainer flags implied by an algorithm name.

    Plain random search drops all three augmentations: no state
    normalization, no top-direction selection (handled by b=N upstream) and
    plain central-difference scaling instead of reward-std scaling.
    """
    if name == "rs":
        return {"optimizer": "sgd", "normalize_obs": False,
                "scale_by_reward_std": False}
    if name == "ars":
        return {"optimizer": "sgd", "normalize_obs": True,
                "scale_by_reward_std": True}
    if name == "adam-ars":
        return {"optimizer": "adam", "normalize_obs": True,
                "scale_by_reward_std": True}
    raise ConfigError(f"unknown algorithm {name!r}")


def build_model(cfg: dict) -> FeederModel:
    f = cfg["feeder"]
    return build_feeder(
        n_nodes=int(f["n_nodes"]), horizon=int(f["horizon"]),
        load_kw=float(f["load_kw"]), r_pu_per_mw=float(f["r_pu_per_mw"]),
        x_pu_per_mvar=float(f["x_pu_per_mvar"]),
        regulator_asymmetry=float(f["regulator_asymmetry"]),
        v_source=(float(f["v_source"]),) * 3,
        load_q_ratio=float(f["load_q_ratio"]),
        load_shape_amplitude=float(f["load_shape_amplitude"]),
        solar_shape_amplitude=float(f["solar_shape_amplitude"]))


def build_env_params(cfg: dict) -> EnvParams:
    inv, obs, rew = cfg["inverter"], cfg["observer"], cfg["reward"]
    att, env, pol = cfg["attack"], cfg["env"], cfg["policy"]
    templates = AttackTemplates(
        oscillation_eta=np.asarray(att["oscillation_eta"], dtype=float),
        imbalance_eta=np.asarray(att["imbalance_eta"], dtype=float),
        imbalance_ramp_steps=int(att["imbalance_ramp_steps"]))
    return EnvParams(
        action_period=int(env["action_period"]), dt=float(env["dt_s"]),
        default_eta=tuple(float(e) for e in inv["eta"]),
        tau_measure=float(inv["tau_measure_s"]),
        tau_output=float(inv["tau_output_s"]), oversize=float(inv["oversize"]),
        hp_cutoff=float(obs["hp_cutoff_hz"]), lp_cutoff=float(obs["lp_cutoff_hz"]),
        vo_gain=float(obs["gain"]), sigma_u=float(rew["sigma_u"]),
        sigma_y=float(rew["sigma_y"]), sigma_a=float(rew["sigma_a"]),
        sigma_0=float(rew["sigma_0"]), sigma_p=float(rew["sigma_p"]),
        action_bound=float(pol["action_bound"]), templates=templates)


def build_bands(cfg: dict, attack_kind: str | None = None) -> ScenarioBands:
    sc, att, f = cfg["scenario"], cfg["attack"], cfg["feeder"]
    return ScenarioBands(
        compromised_min=float(sc["compromised_min"]),
        compromised_max=float(sc["compromised_max"]),
        load_scale_min=float(sc["load_scale_min"]),
        load_scale_max=float(sc["load_scale_max"]),
        solar_scale_min=float(sc["solar_scale_min"]),
        solar_scale_max=float(sc["solar_scale_max"]),
        attack_kind=attack_kind or att["kind"],
        attack_start=int(att["start"]), attack_end=int(att["end"]),
        horizon=int(f["horizon"]))


def resolve_alpha(cfg: dict, algorithm: str) -> float:
    tr = cfg["train"]
    if tr["alpha"] is not None:
        return float(tr["alpha"])
    table = tr["alpha_by_algorithm"]
    if algorithm not in table:
        raise ConfigError(f"train.alpha_by_algorithm has no entry for "
                          f"{algorithm!r} and train.alpha is null")
    return float(table[algorithm])


def build_train_config(cfg: dict, algorithm: str | None = None,
                       seed: int | None = None,
                       epochs: int | None = None) -> TrainConfig:
    tr = cfg["train"]
    algorithm = algorithm or tr["algorithm"]
    if algorithm not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {algorithm!r}")
    flags = algorithm_flags(algorithm)
    n = int(tr["n_directions"])
    b = n if algorithm == "rs" else int(tr["top_directions"])
    return TrainConfig(
        n_directions=n, top_directions=b, nu=float(tr["nu"]),
        alpha=resolve_alpha(cfg, algorithm),
        horizon=int(cfg["feeder"]["horizon"]),
        epochs=int(tr["epochs"] if epochs is None else epochs),
        seed=int(tr["seed"] if seed is None else seed),
        episodes_per_iteration=int(tr["episodes"]),
        beta1=float(tr["beta1"]), beta2=float(tr["beta2"]),
        lam=float(tr["lambda_adam"]),
        checkpoint_every=int(tr["checkpoint_every"]),
        **flags)


def build_policy(cfg: dict) -> PolicyParams:
    pol = cfg["policy"]
    return PolicyParams.zeros(pol["kind"], obs_dim=9, act_dim=3,
                              hidden=tuple(int(h) for h in pol["hidden"]),
                              action_bound=float(pol["action_bound"]))
