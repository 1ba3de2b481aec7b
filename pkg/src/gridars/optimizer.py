"""Adaptive-moment and plain gradient steps used by the policy-search loop."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

__all__ = ["AdamState", "adam_step", "adam_ascent_step", "sgd_ascent_step"]


@dataclass
class AdamState:
    """First/second moment accumulators for the adaptive update.

    ``j`` is the 1-based index of the next step to be applied, so the bias
    correction of the first call divides by ``1 - beta**1``.
    """

    m: np.ndarray
    v: np.ndarray
    j: int = 1
    beta1: float = 0.9
    beta2: float = 0.999
    lam: float = 1e-8

    @classmethod
    def zeros(cls, dim: int, beta1: float = 0.9, beta2: float = 0.999,
              lam: float = 1e-8) -> "AdamState":
        return cls(m=np.zeros(dim), v=np.zeros(dim), j=1,
                   beta1=beta1, beta2=beta2, lam=lam)

    def as_dict(self) -> dict:
        return {"m": self.m.tolist(), "v": self.v.tolist(), "j": self.j,
                "beta1": self.beta1, "beta2": self.beta2, "lam": self.lam}

    @classmethod
    def from_dict(cls, d: dict) -> "AdamState":
        return cls(m=np.asarray(d["m"], dtype=float),
                   v=np.asarray(d["v"], dtype=float), j=int(d["j"]),
                   beta1=float(d["beta1"]), beta2=float(d["beta2"]),
                   lam=float(d["lam"]))


def _check_gradient(g: np.ndarray, theta: np.ndarray) -> None:
    if g.shape != theta.shape:
        raise ValueError(f"gradient length {g.shape} does not match "
                         f"parameter length {theta.shape}")
    if not np.all(np.isfinite(g)):
        bad = np.flatnonzero(~np.isfinite(g))
        raise ValueError(f"non-finite gradient components at indices {bad.tolist()}")


def adam_step(state: AdamState, theta: np.ndarray, g: np.ndarray,
              alpha: float) -> tuple[np.ndarray, AdamState]:
    """One descent step ``theta - alpha * mhat / (sqrt(vhat) + lam)``.

    Args:
        state: moment accumulators; not modified, an updated copy is returned.
        theta: current parameter vector.
        g: gradient at ``theta`` (descent direction convention).
        alpha: step size, applied exactly once here.

    Returns:
        ``(theta_new, state_new)``. Deterministic in all inputs.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    theta = np.asarray(theta, dtype=float)
    g = np.asarray(g, dtype=float)
    _check_gradient(g, theta)
    if state.m.shape != theta.shape:
        raise ValueError("optimizer state dimension does not match theta")

    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * g * g
    mhat = m / (1.0 - state.beta1 ** state.j)
    vhat = v / (1.0 - state.beta2 ** state.j)
    theta_new = theta - alpha * mhat / (np.sqrt(vhat) + state.lam)
    return theta_new, replace(state, m=m, v=v, j=state.j + 1)


def adam_ascent_step(state: AdamState, theta: np.ndarray, g: np.ndarray,
                     alpha: float) -> tuple[np.ndarray, AdamState]:
    """Ascent wrapper: negates ``g`` so reward-maximizing callers can pass
    their estimate unchanged."""
    return adam_step(state, theta, -np.asarray(g, dtype=float), alpha)


def sgd_ascent_step(theta: np.ndarray, g: np.ndarray, alpha: float) -> np.ndarray:
    """Plain gradient ascent ``theta + alpha * g``."""
    theta = np.asarray(theta, dtype=float)
    g = np.asarray(g, dtype=float)
    _check_gradient(g, theta)
    return theta + alpha * g
