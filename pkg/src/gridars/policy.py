"""Linear and small-MLP control policies plus the running state normalizer.

Policies map a normalized observation vector to a bounded per-phase
curve-offset action. Parameters live in a single flat vector so the
random-search trainer can perturb them without knowing the architecture.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "PolicyParams", "NormalizerStats", "evaluate", "perturb", "update_stats",
    "save_checkpoint", "load_checkpoint", "CHECKPOINT_MAGIC", "CHECKPOINT_VERSION",
]

CHECKPOINT_MAGIC = "gridars-policy"
CHECKPOINT_VERSION = 1

DEFAULT_HIDDEN = (16, 16)
DEFAULT_ACTION_BOUND = 0.1


def _theta_size(kind: str, shape: tuple[int, ...]) -> int:
    if kind == "linear":
        return shape[0] * shape[1]
    # dense layers with biases
    return sum((fi + 1) * fo for fi, fo in zip(shape[:-1], shape[1:]))


@dataclass
class PolicyParams:
    """Flat parameter vector plus the metadata needed to interpret it.

    ``shape`` lists layer widths: ``(obs_dim, act_dim)`` for a linear policy,
    ``(obs_dim, h1, h2, act_dim)`` for the MLP. All outputs are confined to
    ``[-action_bound, +action_bound]`` componentwise.
    """

    kind: str                      # "linear" | "mlp"
    theta: np.ndarray
    shape: tuple[int, ...]
    action_bound: float = DEFAULT_ACTION_BOUND

    def __post_init__(self):
        if self.kind not in ("linear", "mlp"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        self.theta = np.asarray(self.theta, dtype=float)
        self.shape = tuple(int(s) for s in self.shape)
        expected = _theta_size(self.kind, self.shape)
        if self.theta.ndim != 1 or self.theta.size != expected:
            raise ValueError(f"theta has {self.theta.size} entries, "
                             f"shape {self.shape} requires {expected}")
        if self.action_bound <= 0:
            raise ValueError("action_bound must be positive")

    @classmethod
    def zeros(cls, kind: str, obs_dim: int, act_dim: int,
              hidden: tuple[int, ...] = DEFAULT_HIDDEN,
              action_bound: float = DEFAULT_ACTION_BOUND) -> "PolicyParams":
        """Fresh all-zero policy (outputs zero for any observation)."""
        shape = (obs_dim, act_dim) if kind == "linear" else (obs_dim, *hidden, act_dim)
        return cls(kind=kind, theta=np.zeros(_theta_size(kind, shape)),
                   shape=shape, action_bound=action_bound)

    @property
    def obs_dim(self) -> int:
        return self.shape[0]

    @property
    def act_dim(self) -> int:
        return self.shape[-1]

    @property
    def dim(self) -> int:
        return self.theta.size


@dataclass
class NormalizerStats:
    """Running per-component mean/variance of every state seen in training.

    Variance is the population variance of the full history. A fresh
    instance (count == 0) normalizes to identity, matching a zero-mean,
    unit-covariance initialization.
    """

    count: int
    mean: np.ndarray
    var: np.ndarray
    var_floor: float = 1e-8

    @classmethod
    def zeros(cls, dim: int, var_floor: float = 1e-8) -> "NormalizerStats":
        return cls(count=0, mean=np.zeros(dim), var=np.ones(dim),
                   var_floor=var_floor)

    @property
    def var_floored(self) -> np.ndarray:
        """Variance with the numerical floor applied (used for whitening)."""
        return np.maximum(self.var, self.var_floor)

    def normalize(self, x: np.ndarray) -> np.ndarray:
        if self.count == 0:
            return np.asarray(x, dtype=float)
        return (np.asarray(x, dtype=float) - self.mean) / np.sqrt(self.var_floored)


def update_stats(stats: NormalizerStats, states: np.ndarray) -> NormalizerStats:
    """Absorb a batch of states into the running statistics.

    Equivalent (up to floating-point associativity) to recomputing batch
    mean and population variance over the full history. Returns a new
    instance; ``stats`` is unmodified.
    """
    states = np.atleast_2d(np.asarray(states, dtype=float))
    if states.shape[0] == 0:
        return stats
    if states.shape[1] != stats.mean.size:
        raise ValueError(f"state dimension {states.shape[1]} does not match "
                         f"normalizer dimension {stats.mean.size}")
    n_b = states.shape[0]
    mean_b = states.mean(axis=0)
    m2_b = ((states - mean_b) ** 2).sum(axis=0)
    if stats.count == 0:
        return replace(stats, count=n_b, mean=mean_b, var=m2_b / n_b)
    # parallel (Chan) merge of the two moment sets
    n_a = stats.count
    n = n_a + n_b
    delta = mean_b - stats.mean
    mean = stats.mean + delta * (n_b / n)
    m2 = stats.var * n_a + m2_b + delta ** 2 * (n_a * n_b / n)
    return replace(stats, count=n, mean=mean, var=m2 / n)


def _mlp_forward(params: PolicyParams, x: np.ndarray) -> np.ndarray:
    h = x
    offset = 0
    sizes = list(zip(params.shape[:-1], params.shape[1:]))
    for i, (fi, fo) in enumerate(sizes):
        w = params.theta[offset:offset + fi * fo].reshape(fo, fi)
        offset += fi * fo
        b = params.theta[offset:offset + fo]
        offset += fo
        h = w @ h + b
        h = np.tanh(h)  # hidden and output both tanh; output scaled below
    return h


def evaluate(params: PolicyParams, stats: NormalizerStats,
             obs: np.ndarray) -> np.ndarray:
    """Compute the bounded action for one observation.

    The observation is whitened with ``stats`` first. Linear policies
    hard-clamp the matrix product; the MLP squashes through tanh and scales,
    so either way every component lies in ``[-action_bound, +action_bound]``.
    """
    obs = np.asarray(obs, dtype=float)
    if obs.shape != (params.obs_dim,):
        raise ValueError(f"observation shape {obs.shape} does not match "
                         f"policy input dimension {params.obs_dim}")
    x = stats.normalize(obs)
    if params.kind == "linear":
        w = params.theta.reshape(params.act_dim, params.obs_dim)
        return np.clip(w @ x, -params.action_bound, params.action_bound)
    return params.action_bound * _mlp_forward(params, x)


def perturb(params: PolicyParams, delta: np.ndarray, nu: float,
            sign: int) -> PolicyParams:
    """Return a copy with ``theta + sign * nu * delta``; the input is unchanged."""
    delta = np.asarray(delta, dtype=float)
    if delta.shape != params.theta.shape:
        raise ValueError(f"delta length {delta.size} does not match "
                         f"theta length {params.theta.size}")
    if nu < 0:
        raise ValueError("nu must be nonnegative")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return replace(params, theta=params.theta + sign * nu * delta)


def save_checkpoint(path, params: PolicyParams, stats: NormalizerStats,
                    config_hash: str = "", adam: dict | None = None) -> None:
    """Write a self-describing policy checkpoint (JSON, versioned)."""
    record = {
        "magic": CHECKPOINT_MAGIC,
        "format_version": CHECKPOINT_VERSION,
        "kind": params.kind,
        "shape": list(params.shape),
        "action_bound": params.action_bound,
        "theta": params.theta.tolist(),
        "normalizer": {
            "count": stats.count,
            "mean": stats.mean.tolist(),
            "var": stats.var.tolist(),
            "var_floor": stats.var_floor,
        },
        "config_hash": config_hash,
        "adam": adam,
    }
    with open(path, "w") as fh:
        json.dump(record, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_checkpoint(path) -> tuple[PolicyParams, NormalizerStats, dict]:
    """Read a checkpoint; returns ``(params, stats, meta)``.

    ``meta`` carries ``config_hash`` and the serialized optimizer state (if
    any). Raises ValueError on unknown magic or version.
    """
    with open(path) as fh:
        record = json.load(fh)
    if record.get("magic") != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a policy checkpoint")
    if record.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version "
                         f"{record.get('format_version')}")
    params = PolicyParams(kind=record["kind"],
                          theta=np.asarray(record["theta"], dtype=float),
                          shape=tuple(record["shape"]),
                          action_bound=float(record["action_bound"]))
    nz = record["normalizer"]
    stats = NormalizerStats(count=int(nz["count"]),
                            mean=np.asarray(nz["mean"], dtype=float),
                            var=np.asarray(nz["var"], dtype=float),
                            var_floor=float(nz["var_floor"]))
    meta = {"config_hash": record.get("config_hash", ""),
            "adam": record.get("adam")}
    return params, stats, meta
