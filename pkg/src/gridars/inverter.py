"""Per-phase smart-inverter dynamics: droop curves behind first-order filters.

The measured grid voltage passes through a low-pass filter, the watt
setpoint is computed first (watt precedence), the leftover apparent-power
capacity feeds the VAR curve, and both setpoints pass through output
low-pass filters before injection.

All functions broadcast: scalar fields model one inverter, array fields a
whole bank (e.g. nodes x phases), with identical per-element semantics.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["VVWCurve", "InverterState", "vv_setpoint", "vw_setpoint", "step",
           "lowpass_gain", "TAU_MEASURE_S", "TAU_OUTPUT_S", "DEFAULT_ETA"]

TAU_MEASURE_S = 1.5   # measurement low-pass time constant
TAU_OUTPUT_S = 2.0    # output low-pass time constant
DEFAULT_ETA = (0.95, 0.995, 1.005, 1.12, 1.16)

OFFSET_LIMIT = 0.1


def lowpass_gain(tau: float, dt: float) -> float:
    """Per-step blend factor of the unity-DC-gain first-order low-pass
    y <- (1-k) y + k u with k = dt / (tau + dt)."""
    return dt / (tau + dt)


@dataclass
class VVWCurve:
    """Five-breakpoint droop curve plus the uniform offset applied to it.

    ``eta`` holds the voltage breakpoints along the last axis; the curve is
    non-increasing, so eta1 < eta2 <= eta3 < eta4 < eta5 must hold. The
    offset translates all five breakpoints together and is confined to the
    action range.
    """

    eta: np.ndarray          # (..., 5) per-unit voltage breakpoints
    offset: np.ndarray | float = 0.0

    def __post_init__(self):
        self.eta = np.asarray(self.eta, dtype=float)
        if self.eta.shape[-1] != 5:
            raise ValueError("eta must have 5 breakpoints along the last axis")
        e = self.eta
        ok = (e[..., 0] < e[..., 1]) & (e[..., 1] <= e[..., 2]) \
            & (e[..., 2] < e[..., 3]) & (e[..., 3] < e[..., 4])
        if not np.all(ok):
            raise ValueError("breakpoints must satisfy "
                             "eta1 < eta2 <= eta3 < eta4 < eta5")
        if np.any(np.abs(np.asarray(self.offset)) > OFFSET_LIMIT + 1e-12):
            raise ValueError(f"offset outside [-{OFFSET_LIMIT}, {OFFSET_LIMIT}]")

    def shifted(self, index: int):
        """Breakpoint ``index`` (0-based) with the offset applied."""
        return self._edges()[index]

    def _edges(self):
        # shifted breakpoints, computed once per curve object
        edges = getattr(self, "_edge_cache", None)
        if edges is None:
            edges = tuple(self.eta[..., i] + self.offset for i in range(5))
            self._edge_cache = edges
        return edges


def _ramp(v, lo, hi):
    # 0 below lo, 1 above hi, linear in between
    return np.minimum(np.maximum((v - lo) / (hi - lo), 0.0), 1.0)


def vv_setpoint(curve: VVWCurve, v_meas, q_capacity):
    """VAR setpoint: +q_capacity below the first breakpoint, zero across
    the dead band, -q_capacity beyond the fourth; linear in between."""
    e1, e2, e3, e4, _ = curve._edges()
    frac = (1.0 - _ramp(v_meas, e1, e2)) - _ramp(v_meas, e3, e4)
    return q_capacity * frac


def vw_setpoint(curve: VVWCurve, v_meas, p_avail):
    """Watt setpoint: full availability below the fourth breakpoint, ramping
    to full curtailment at the fifth."""
    _, _, _, e4, e5 = curve._edges()
    return p_avail * (1.0 - _ramp(v_meas, e4, e5))


@dataclass
class InverterState:
    """Filter outputs plus the ratings that bound them.

    Injected power always satisfies p_out^2 + q_out^2 <= s_rating^2 and
    0 <= p_out <= p_avail.
    """

    v_meas: np.ndarray | float       # measured (filtered) voltage, pu
    p_out: np.ndarray | float        # injected active power, kW
    q_out: np.ndarray | float        # injected reactive power, kVAR
    s_rating: np.ndarray | float     # apparent-power rating, kVA
    p_avail: np.ndarray | float      # instantaneous solar availability, kW

    @classmethod
    def at_rest(cls, s_rating, p_avail, v0=1.0) -> "InverterState":
        shape = np.broadcast(np.asarray(s_rating), np.asarray(p_avail)).shape
        z = np.zeros(shape) if shape else 0.0
        v = np.full(shape, float(v0)) if shape else float(v0)
        return cls(v_meas=v, p_out=z, q_out=z, s_rating=s_rating, p_avail=p_avail)


def step(state: InverterState, curve: VVWCurve, v_grid, dt: float,
         tau_measure: float = TAU_MEASURE_S,
         tau_output: float = TAU_OUTPUT_S):
    """Advance one tick; returns ``(new_state, p_out, q_out)``.

    Watt precedence: the watt setpoint is computed first and the remaining
    capacity sqrt(s^2 - u_p^2) bounds the VAR curve, so the capacity circle
    cannot be violated. Both output filters share coefficients, which keeps
    the filtered pair inside the circle as well.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    k_m = lowpass_gain(tau_measure, dt)
    k_o = lowpass_gain(tau_output, dt)
    v_meas = state.v_meas + k_m * (np.asarray(v_grid, dtype=float) - state.v_meas)
    u_p = vw_setpoint(curve, v_meas, state.p_avail)
    q_avail = np.sqrt(np.maximum(0.0, state.s_rating ** 2 - u_p ** 2))
    u_q = vv_setpoint(curve, v_meas, q_avail)
    p_out = np.minimum(np.maximum(state.p_out + k_o * (u_p - state.p_out), 0.0),
                       state.p_avail)
    q_out = state.q_out + k_o * (u_q - state.q_out)
    new_state = InverterState(v_meas=v_meas, p_out=p_out, q_out=q_out,
                              s_rating=state.s_rating, p_avail=state.p_avail)
    return new_state, p_out, q_out
