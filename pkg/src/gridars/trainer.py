"""Outer policy-search loop: antithetic rollouts, top-b selection, scaled update.

One iteration samples N Gaussian directions, evaluates the 2N perturbed
policies (several episodes each), forms a reward-scaled finite-difference
gradient from the best b directions, and applies either an adaptive-moment
or a plain gradient-ascent step. Observation statistics used for whitening
are frozen for the whole iteration and refreshed from all visited states
afterwards.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .optimizer import AdamState, adam_ascent_step, sgd_ascent_step
from .policy import NormalizerStats, PolicyParams, evaluate, perturb, update_stats

__all__ = [
    "RngStream", "TrainConfig", "IterationReport",
    "sample_directions", "estimate_gradient", "rs_gradient", "rollout", "train",
]

# numeric namespaces for RNG sub-streams (kept distinct so adding draws in
# one place never shifts another)
_NS_DIRECTIONS = 0
_NS_ENV = 1


@dataclass(frozen=True)
class RngStream:
    """Keyed, order-independent random stream.

    Children are addressed by integer key tuples, so the k-th direction or
    the (direction, episode) environment draw is identical no matter in
    which order rollouts execute.
    """

    key: tuple[int, ...]

    @classmethod
    def root(cls, seed: int) -> "RngStream":
        return cls((int(seed),))

    def child(self, *suffix: int) -> "RngStream":
        return RngStream(self.key + tuple(int(s) for s in suffix))

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence(self.key))


@dataclass
class TrainConfig:
    """Hyperparameters of one training run."""

    n_directions: int = 8          # N, perturbation directions per iteration
    top_directions: int = 4        # b <= N, directions kept in the update
    nu: float = 0.03               # exploration noise scale
    alpha: float = 0.05            # step size, applied once inside the optimizer
    horizon: int = 700             # cap on steps per rollout
    epochs: int = 80
    seed: int = 0
    optimizer: str = "adam"        # "adam" | "sgd"
    episodes_per_iteration: int = 1
    normalize_obs: bool = True
    scale_by_reward_std: bool = True   # False -> plain 1/(2*nu) random search scaling
    beta1: float = 0.9
    beta2: float = 0.999
    lam: float = 1e-8
    checkpoint_every: int = 0      # epochs between checkpoint callbacks; 0 disables

    def __post_init__(self):
        if self.n_directions < 1:
            raise ValueError("n_directions must be >= 1")
        if not 1 <= self.top_directions <= self.n_directions:
            raise ValueError("top_directions must satisfy 1 <= b <= N")
        if self.nu <= 0 or self.alpha <= 0:
            raise ValueError("nu and alpha must be positive")
        if self.horizon < 1 or self.epochs < 0 or self.episodes_per_iteration < 1:
            raise ValueError("horizon/epochs/episodes out of range")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class IterationReport:
    epoch: int
    mean_reward: float
    reward_std: float
    g_norm: float
    theta_norm: float
    wall_ms: int


def sample_directions(stream: RngStream, n: int, dim: int) -> list[np.ndarray]:
    """Draw n standard-normal direction vectors from keyed sub-streams.

    Direction k always comes from child stream k, independent of how many
    other directions are drawn or in which order they are consumed.
    """
    return [stream.child(k).generator().standard_normal(dim) for k in range(n)]


def _check_pair_rewards(pairs) -> None:
    for k, (r_plus, r_minus, _) in enumerate(pairs):
        if not (np.isfinite(r_plus) and np.isfinite(r_minus)):
            raise ValueError(f"non-finite reward for direction {k}: "
                             f"(+{r_plus!r}, -{r_minus!r})")


def estimate_gradient(pairs, b: int) -> np.ndarray:
    """Reward-scaled finite-difference ascent direction from the top b pairs.

    Pairs are (r_plus, r_minus, delta) per direction. They are ranked by
    max(r_plus, r_minus); the best b contribute (r_plus - r_minus) * delta,
    and the sum is divided by b times the population standard deviation of
    the 2b retained rewards. Degenerate (zero-spread) rewards give a zero
    vector rather than a division blowup.
    """
    if len(pairs) == 0:
        raise ValueError("pairs must be nonempty")
    if not 1 <= b <= len(pairs):
        raise ValueError(f"b={b} out of range for {len(pairs)} pairs")
    _check_pair_rewards(pairs)
    scores = np.array([max(rp, rm) for rp, rm, _ in pairs])
    # stable order: by descending score, ties by original index
    order = np.lexsort((np.arange(len(pairs)), -scores))[:b]
    retained = np.array([[pairs[i][0], pairs[i][1]] for i in order])
    sigma_r = retained.std()  # population std of the 2b rewards
    dim = np.asarray(pairs[0][2]).size
    if sigma_r < 1e-12:
        return np.zeros(dim)
    g = np.zeros(dim)
    for i in order:
        r_plus, r_minus, delta = pairs[i]
        g += (r_plus - r_minus) * np.asarray(delta, dtype=float)
    return g / (b * sigma_r)


def rs_gradient(pairs, nu: float) -> np.ndarray:
    """Plain mini-batch central-difference estimate (no sorting, no reward
    scaling): mean over all pairs of (r_plus - r_minus) / (2 nu) * delta."""
    if len(pairs) == 0:
        raise ValueError("pairs must be nonempty")
    _check_pair_rewards(pairs)
    g = np.zeros(np.asarray(pairs[0][2]).size)
    for r_plus, r_minus, delta in pairs:
        g += (r_plus - r_minus) / (2.0 * nu) * np.asarray(delta, dtype=float)
    return g / len(pairs)


def rollout(env, params: PolicyParams, stats: NormalizerStats,
            horizon: int) -> tuple[float, np.ndarray]:
    """Run one episode; returns (cumulative reward, states fed to the policy)."""
    obs = env.reset()
    states = []
    total = 0.0
    for _ in range(horizon):
        states.append(np.asarray(obs, dtype=float))
        action = evaluate(params, stats, obs)
        obs, reward, done = env.step(action)
        total += reward
        if done:
            break
    return total, np.array(states)


def train(config: TrainConfig, env_factory, policy: PolicyParams,
          checkpoint_fn=None):
    """Run the full search loop.

    Args:
        config: hyperparameters; the run is fully deterministic in
            ``config.seed``.
        env_factory: callable mapping an ``RngStream`` to a fresh episode
            environment (scenario randomization happens inside the factory,
            keyed by the stream, so both perturbation signs of a direction
            see identical scenarios).
        policy: starting parameters; not modified.
        checkpoint_fn: optional callable ``(epoch, policy, stats, adam_state)``
            invoked every ``config.checkpoint_every`` epochs.

    Returns:
        ``(policy, stats, reports)`` with one IterationReport per epoch.
    """
    stats = NormalizerStats.zeros(policy.obs_dim)
    identity = NormalizerStats.zeros(policy.obs_dim)
    adam = AdamState.zeros(policy.dim, beta1=config.beta1, beta2=config.beta2,
                           lam=config.lam)
    root = RngStream.root(config.seed)
    reports: list[IterationReport] = []

    for epoch in range(config.epochs):
        t0 = time.perf_counter()
        eval_stats = stats if config.normalize_obs else identity
        deltas = sample_directions(root.child(epoch, _NS_DIRECTIONS),
                                   config.n_directions, policy.dim)
        pairs = []
        state_batches = []
        epoch_rewards = []
        for k, delta in enumerate(deltas):
            mean_by_sign = []
            for sign_code, sign in ((0, 1), (1, -1)):
                perturbed = perturb(policy, delta, config.nu, sign)
                episode_rewards = []
                for e in range(config.episodes_per_iteration):
                    # scenario stream shared by all directions and both signs
                    # of an epoch: rollouts differ only through the policy
                    env_stream = root.child(epoch, _NS_ENV, e)
                    try:
                        env = env_factory(env_stream)
                        reward, states = rollout(env, perturbed, eval_stats,
                                                 config.horizon)
                    except Exception as exc:
                        raise RuntimeError(
                            f"rollout failed at epoch {epoch}, direction {k}, "
                            f"sign {sign:+d}, episode {e}") from exc
                    episode_rewards.append(reward)
                    epoch_rewards.append(reward)
                    state_batches.append(states)
                mean_by_sign.append(float(np.mean(episode_rewards)))
            pairs.append((mean_by_sign[0], mean_by_sign[1], delta))

        if config.scale_by_reward_std:
            g = estimate_gradient(pairs, config.top_directions)
        else:
            g = rs_gradient(pairs, config.nu)

        if config.optimizer == "adam":
            theta, adam = adam_ascent_step(adam, policy.theta, g, config.alpha)
        else:
            theta = sgd_ascent_step(policy.theta, g, config.alpha)
        policy = replace(policy, theta=theta)

        if config.normalize_obs:
            stats = update_stats(stats, np.concatenate(state_batches))

        wall_ms = int(round((time.perf_counter() - t0) * 1000))
        rewards = np.array(epoch_rewards)
        reports.append(IterationReport(
            epoch=epoch,
            mean_reward=float(rewards.mean()),
            reward_std=float(rewards.std()),
            g_norm=float(np.linalg.norm(g)),
            theta_norm=float(np.linalg.norm(policy.theta)),
            wall_ms=wall_ms,
        ))
        if checkpoint_fn is not None and config.checkpoint_every > 0 \
                and (epoch + 1) % config.checkpoint_every == 0:
            checkpoint_fn(epoch, policy, stats, adam)

    return policy, stats, reports
