"""Attack-intensity signals: oscillation energy and phase-imbalance metric.

The oscillation observer is a high-pass filter, a squaring element with a
positive gain, and a low-pass filter in series; its output grows with the
amplitude of voltage oscillations and rejects DC. The imbalance metric is
the largest per-phase deviation from the three-phase mean, normalized by
that mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .inverter import lowpass_gain

__all__ = ["VoFilterState", "vo_step", "vi_metric",
           "HP_CUTOFF_HZ", "LP_CUTOFF_HZ", "VO_GAIN"]

HP_CUTOFF_HZ = 0.1
# slow enough that the reading integrates oscillation energy over the attack
# rather than tracking instantaneous amplitude
LP_CUTOFF_HZ = 0.0016
VO_GAIN = 400.0


def _cutoff_tau(cutoff_hz: float) -> float:
    return 1.0 / (2.0 * math.pi * cutoff_hz)


@dataclass
class VoFilterState:
    """State of the oscillation-energy cascade.

    ``hp_state`` is the internal low-pass whose complement realizes the
    high-pass; ``lp_state`` is the smoothed squared output (the vo reading,
    nonnegative by construction). Fields broadcast, so arrays track several
    signals at once.
    """

    hp_state: np.ndarray | float = 0.0
    lp_state: np.ndarray | float = 0.0
    c: float = VO_GAIN
    hp_cutoff: float = HP_CUTOFF_HZ
    lp_cutoff: float = LP_CUTOFF_HZ

    @classmethod
    def at_rest(cls, v0=0.0, c: float = VO_GAIN, hp_cutoff: float = HP_CUTOFF_HZ,
                lp_cutoff: float = LP_CUTOFF_HZ) -> "VoFilterState":
        """State settled at a constant input level (vo reading zero)."""
        v0 = np.asarray(v0, dtype=float)
        return cls(hp_state=v0.copy(), lp_state=np.zeros_like(v0),
                   c=c, hp_cutoff=hp_cutoff, lp_cutoff=lp_cutoff)


def vo_step(state: VoFilterState, v, dt: float):
    """Advance the cascade one tick; returns ``(new_state, vo)`` with vo >= 0."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    k_h = lowpass_gain(_cutoff_tau(state.hp_cutoff), dt)
    k_l = lowpass_gain(_cutoff_tau(state.lp_cutoff), dt)
    v = np.asarray(v, dtype=float)
    hp_state = state.hp_state + k_h * (v - state.hp_state)
    dv = v - hp_state
    lp_state = state.lp_state + k_l * (state.c * dv * dv - state.lp_state)
    new_state = VoFilterState(hp_state=hp_state, lp_state=lp_state, c=state.c,
                              hp_cutoff=state.hp_cutoff, lp_cutoff=state.lp_cutoff)
    return new_state, lp_state


def hp_power_gain(hp_cutoff: float, freq_hz: float, dt: float) -> float:
    """|H|^2 of the discrete high-pass at ``freq_hz`` (oracle for tests and
    calibration; the scaled steady-state vo of a passband sinusoid of
    amplitude A is c * A^2 * gain / 2)."""
    k_h = lowpass_gain(_cutoff_tau(hp_cutoff), dt)
    z = np.exp(2j * math.pi * freq_hz * dt)
    h = (1.0 - k_h) * (1.0 - 1.0 / z) / (1.0 - (1.0 - k_h) / z)
    return float(abs(h) ** 2)


def vi_metric(va, vb, vc):
    """Largest per-phase deviation from the mean voltage, per unit of mean.

    Accepts scalars or same-shape arrays of phase-voltage magnitudes;
    raises on nonpositive inputs (a broken power-flow result upstream).
    """
    va = np.asarray(va, dtype=float)
    vb = np.asarray(vb, dtype=float)
    vc = np.asarray(vc, dtype=float)
    if np.any(va <= 0) or np.any(vb <= 0) or np.any(vc <= 0):
        raise ValueError("phase voltages must be positive")
    vbar = (va + vb + vc) / 3.0
    dev = np.maximum(np.abs(vbar - va),
                     np.maximum(np.abs(vbar - vb), np.abs(vbar - vc)))
    return dev / vbar
