"""Episodic multi-phase feeder environment with attackable smart inverters.

A reduced radial feeder is modeled by per-phase linear voltage sensitivities
v = v_source + R p + X q. Every node hosts a three-phase group of DER
inverters; a scenario-chosen subset is compromised and driven by attack
curve templates inside the attack window, while the defender policy shifts
the remaining inverters' droop curves per phase. The per-step reward
penalizes the worst imbalance and oscillation reading over all nodes,
action changes and magnitudes, and active-power curtailment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _fastpath as _fast
from .inverter import (DEFAULT_ETA, TAU_MEASURE_S, TAU_OUTPUT_S, InverterState,
                       VVWCurve, step as inverter_step)
from .observer import (HP_CUTOFF_HZ, LP_CUTOFF_HZ, VO_GAIN, VoFilterState,
                       vi_metric, vo_step)

__all__ = [
    "FeederModel", "Scenario", "ScenarioBands", "AttackTemplates", "EnvParams",
    "Observation", "EpisodeTrace", "FeederEnv", "build_feeder",
    "randomize_scenario", "run_episode", "TRACE_COLUMNS", "PHASES",
]

PHASES = ("a", "b", "c")
OBS_DIM = 9
ACT_DIM = 3

TRACE_COLUMNS = ("t", "va", "vb", "vc", "u_worst", "y_worst",
                 "ta_0", "tb_0", "tc_0",
                 "qouta_total", "qoutb_total", "qoutc_total")

# attack curve templates (calibrated; see demos/05_calibrate_feeder.py)
OSCILLATION_ETA = (0.9997, 0.9998, 0.9999, 1.0001, 1.30)
IMBALANCE_ETA = (
    (0.85, 0.88, 0.90, 0.93, 1.30),   # phase a shifted low: hard VAR absorption
    (1.07, 1.10, 1.14, 1.17, 1.25),   # phase b shifted high: hard VAR injection
    DEFAULT_ETA,                       # phase c untouched
)


@dataclass
class FeederModel:
    """Immutable linearized feeder: shared by all environment instances.

    Sensitivities are per-phase (3, n, n) matrices in pu voltage per MW /
    per MVAr; the asymmetric phase (canonically phase a) is permuted to the
    scenario's regulator phase by the environment. Profiles are MW per
    node-phase over the episode horizon.
    """

    n_nodes: int
    sensitivity_r: np.ndarray        # (3, n, n), pu per MW
    sensitivity_x: np.ndarray        # (3, n, n), pu per MVAr
    v_source: np.ndarray             # (3,), pu
    base_load: np.ndarray            # (horizon, n, 3), MW
    base_solar: np.ndarray           # (horizon, n, 3), MW
    load_q_ratio: float = 0.2        # constant-power-factor reactive share

    def __post_init__(self):
        self.sensitivity_r = np.asarray(self.sensitivity_r, dtype=float)
        self.sensitivity_x = np.asarray(self.sensitivity_x, dtype=float)
        self.v_source = np.asarray(self.v_source, dtype=float)
        n = self.n_nodes
        for name, s in (("sensitivity_r", self.sensitivity_r),
                        ("sensitivity_x", self.sensitivity_x)):
            if s.shape != (3, n, n):
                raise ValueError(f"{name} must have shape (3, {n}, {n})")
            if np.any(s < 0):
                raise ValueError(f"{name} must be entrywise nonnegative")
            for phi in range(3):
                if not np.allclose(s[phi], s[phi].T):
                    raise ValueError(f"{name} phase {phi} is not symmetric")
                if np.linalg.eigvalsh(s[phi]).min() < -1e-9:
                    raise ValueError(f"{name} phase {phi} is not PSD")

    @property
    def horizon(self) -> int:
        return self.base_load.shape[0]


@dataclass
class Scenario:
    """One episode's randomized conditions."""

    compromised_fraction: float = 0.3
    attack_kind: str = "imbalance"       # "oscillation" | "imbalance"
    attack_start: int = 200
    attack_end: int = 450
    horizon: int = 700
    load_scale: float = 1.0
    solar_scale: float = 1.0
    regulator_phase: int = 0             # index into PHASES
    seed: int = 0

    def __post_init__(self):
        if self.attack_kind not in ("oscillation", "imbalance"):
            raise ValueError(f"unknown attack kind {self.attack_kind!r}")
        if not self.attack_start < self.attack_end <= self.horizon:
            raise ValueError("need attack_start < attack_end <= horizon")
        if not 0.0 <= self.compromised_fraction <= 1.0:
            raise ValueError("compromised_fraction outside [0, 1]")
        if self.regulator_phase not in (0, 1, 2):
            raise ValueError("regulator_phase must be 0, 1 or 2")


@dataclass
class ScenarioBands:
    """Randomization bands for training scenarios."""

    compromised_min: float = 0.1
    compromised_max: float = 0.4
    load_scale_min: float = 0.95
    load_scale_max: float = 1.05
    solar_scale_min: float = 0.93
    solar_scale_max: float = 1.05
    attack_kind: str = "imbalance"
    attack_start: int = 200
    attack_end: int = 450
    horizon: int = 700


def randomize_scenario(stream, bands: ScenarioBands | None = None) -> Scenario:
    """Draw one scenario from the configured bands, deterministic per stream.

    Scale factors and the compromised capacity fraction are uniform in
    their bands, the regulator phase uniform over the three phases.
    """
    bands = bands or ScenarioBands()
    rng = stream.generator()
    load_scale = rng.uniform(bands.load_scale_min, bands.load_scale_max)
    solar_scale = rng.uniform(bands.solar_scale_min, bands.solar_scale_max)
    fraction = rng.uniform(bands.compromised_min, bands.compromised_max)
    regulator_phase = int(rng.integers(0, 3))
    seed = int(rng.integers(0, 2 ** 62))
    return Scenario(compromised_fraction=fraction, attack_kind=bands.attack_kind,
                    attack_start=bands.attack_start, attack_end=bands.attack_end,
                    horizon=bands.horizon, load_scale=load_scale,
                    solar_scale=solar_scale, regulator_phase=regulator_phase,
                    seed=seed)


@dataclass
class AttackTemplates:
    """Calibrated attacker curve shapes.

    The oscillation template is a near-vertical VAR relay engaged at full
    strength immediately; the imbalance template creeps from the default
    curve to the extreme over ``imbalance_ramp_steps`` (a stealthy
    escalation rather than a step change).
    """

    oscillation_eta: np.ndarray = field(
        default_factory=lambda: np.asarray(OSCILLATION_ETA, dtype=float))
    imbalance_eta: np.ndarray = field(
        default_factory=lambda: np.asarray(IMBALANCE_ETA, dtype=float))
    imbalance_ramp_steps: int = 120


@dataclass
class EnvParams:
    """Environment knobs shared across scenarios (from the config file)."""

    action_period: int = 20        # steps between new curve offsets
    dt: float = 1.0
    default_eta: tuple = DEFAULT_ETA
    tau_measure: float = TAU_MEASURE_S
    tau_output: float = TAU_OUTPUT_S
    oversize: float = 1.1          # inverter kVA rating over peak solar kW
    hp_cutoff: float = HP_CUTOFF_HZ
    lp_cutoff: float = LP_CUTOFF_HZ
    vo_gain: float = VO_GAIN
    sigma_u: float = 300.0         # imbalance weight
    sigma_y: float = 300.0         # oscillation weight
    sigma_a: float = 0.5           # per-phase action-change penalty
    sigma_0: float = 1.0           # per-phase action-magnitude penalty
    sigma_p: float = 1.0           # curtailment penalty weight
    action_bound: float = 0.1
    templates: AttackTemplates = field(default_factory=AttackTemplates)
    v_guard: tuple = (0.8, 1.2)


@dataclass
class Observation:
    """Named view of the 9-component observation vector."""

    vi: float
    vo: float
    q_avail_nom: float
    a_prev: np.ndarray      # (3,)
    v_phase: np.ndarray     # (3,)

    def as_vector(self) -> np.ndarray:
        return np.concatenate(([self.vi, self.vo, self.q_avail_nom],
                               self.a_prev, self.v_phase))

    @classmethod
    def from_vector(cls, x: np.ndarray) -> "Observation":
        x = np.asarray(x, dtype=float)
        if x.shape != (OBS_DIM,):
            raise ValueError(f"observation vector must have {OBS_DIM} entries")
        return cls(vi=float(x[0]), vo=float(x[1]), q_avail_nom=float(x[2]),
                   a_prev=x[3:6].copy(), v_phase=x[6:9].copy())


@dataclass
class EpisodeTrace:
    """Per-step record of the channels used by the episode plots."""

    data: np.ndarray  # (steps, 12) in TRACE_COLUMNS order

    def column(self, name: str) -> np.ndarray:
        return self.data[:, TRACE_COLUMNS.index(name)]

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            for row in self.data:
                fh.write(f"{int(row[0])}," +
                         ",".join(repr(float(x)) for x in row[1:]) + "\n")


def build_feeder(n_nodes: int = 10, horizon: int = 700,
                 load_kw: float = 40.0,
                 r_pu_per_mw: float = 0.16,
                 x_pu_per_mvar: float = 0.10,
                 regulator_asymmetry: float = 1.07,
                 v_source=(1.025, 1.025, 1.025),
                 load_q_ratio: float = 0.1,
                 load_shape_amplitude: float = 0.015,
                 solar_shape_amplitude: float = 0.012) -> FeederModel:
    """Construct the default chain feeder with smooth daily-ish profiles.

    Line segments are uniform, so the common-path sensitivity between nodes
    i and j is proportional to min(i, j) + 1. One phase (canonically a)
    carries the regulator asymmetry factor.
    """
    idx = np.arange(n_nodes)
    common_path = np.minimum(idx[:, None], idx[None, :]) + 1.0
    factors = np.array([regulator_asymmetry, 1.0, 1.0])
    sens_r = factors[:, None, None] * r_pu_per_mw * common_path
    sens_x = factors[:, None, None] * x_pu_per_mvar * common_path
    t = np.arange(horizon)
    load_shape = 1.0 + load_shape_amplitude * np.sin(2 * np.pi * t / horizon)
    solar_shape = 1.0 + solar_shape_amplitude * np.sin(
        2 * np.pi * t / horizon + np.pi / 3)
    base = load_kw / 1000.0
    base_load = base * np.broadcast_to(load_shape[:, None, None],
                                       (horizon, n_nodes, 3)).copy()
    base_solar = base * np.broadcast_to(solar_shape[:, None, None],
                                        (horizon, n_nodes, 3)).copy()
    return FeederModel(n_nodes=n_nodes, sensitivity_r=sens_r,
                       sensitivity_x=sens_x,
                       v_source=np.asarray(v_source, dtype=float),
                       base_load=base_load, base_solar=base_solar,
                       load_q_ratio=load_q_ratio)


def step_reward(params: EnvParams, vi_worst: float, vo_worst: float,
                changed_phases: int, action: np.ndarray,
                curtail_term: float) -> float:
    """Per-step reward: worst imbalance and oscillation readings, action
    change and magnitude penalties per phase, and the mean squared
    curtailment fraction over non-compromised units. Never positive."""
    return -(params.sigma_u * vi_worst
             + params.sigma_y * vo_worst
             + params.sigma_a * changed_phases
             + params.sigma_0 * float(np.abs(np.asarray(action)).sum())
             + params.sigma_p * curtail_term)


def _compromised_nodes(n_nodes: int, fraction: float, seed: int) -> np.ndarray:
    """Deterministic compromised-node subset covering ~fraction of capacity.

    All nodes host identical DER, so capacity fraction reduces to node
    count; the subset is a seeded shuffle prefix.
    """
    k = int(np.clip(round(fraction * n_nodes), 0, n_nodes))
    if k == 0:
        return np.zeros(0, dtype=int)
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 17)))
    return np.sort(rng.permutation(n_nodes)[:k])


class FeederEnv:
    """One rollout's worth of feeder, inverters, observers and bookkeeping.

    Instances share nothing mutable; construct one per rollout from the
    immutable FeederModel.
    """

    def __init__(self, model: FeederModel, scenario: Scenario,
                 params: EnvParams | None = None, fastpath: bool | None = None):
        self.model = model
        self.scenario = scenario
        self.params = params or EnvParams()
        if fastpath is None:
            fastpath = _fast.step_kernel is not None
        elif fastpath and _fast.step_kernel is None:
            raise RuntimeError("fastpath requested but numba is unavailable")
        self._use_fastpath = fastpath
        if scenario.horizon > model.horizon:
            raise ValueError(f"scenario horizon {scenario.horizon} exceeds "
                             f"profile length {model.horizon}")
        n = model.n_nodes
        # permute which phase carries the sensitivity asymmetry
        roll = scenario.regulator_phase
        self._sens_r = np.roll(model.sensitivity_r, roll, axis=0)
        self._sens_x = np.roll(model.sensitivity_x, roll, axis=0)
        # (3, n, 2n) stacked sensitivities for a single batched matmul
        self._sens = np.concatenate([self._sens_r, self._sens_x], axis=2)
        self.compromised = _compromised_nodes(n, scenario.compromised_fraction,
                                              scenario.seed)
        self.defender_mask = np.ones(n, dtype=bool)
        self.defender_mask[self.compromised] = False
        self._defender_units = np.broadcast_to(self.defender_mask[:, None],
                                               (n, 3)).astype(float)
        self._n_units = 3 * int(np.count_nonzero(self.defender_mask))
        # hardware ratings follow nominal (unscaled) solar peaks
        peak_kw = model.base_solar.max(axis=0) * 1000.0
        self.s_rating = self.params.oversize * peak_kw          # (n, 3) kVA
        tpl = self.params.templates
        eta_default = np.broadcast_to(
            np.asarray(self.params.default_eta, dtype=float), (n, 3, 5)).copy()
        eta_attacked = eta_default.copy()
        if scenario.attack_kind == "oscillation":
            eta_attacked[self.compromised] = tpl.oscillation_eta
        else:
            eta_attacked[self.compromised] = tpl.imbalance_eta
        self._eta_default = eta_default
        self._eta_attacked = eta_attacked
        self.clip_warnings = 0
        self.reset()

    # -- episode control ---------------------------------------------------

    def reset(self) -> np.ndarray:
        """Restart the episode; returns the initial observation vector."""
        n = self.model.n_nodes
        sc = self.scenario
        pr = self.params
        self.t = 0
        self.a_applied = np.zeros(ACT_DIM)
        # per-episode series, precomputed once (kW / kVAR)
        H = sc.horizon
        self._p_avail = self.model.base_solar[:H] * (sc.solar_scale * 1000.0)
        self._p_load = self.model.base_load[:H] * (sc.load_scale * 1000.0)
        self._q_load = self.model.load_q_ratio * self._p_load
        head = np.sqrt(np.maximum(0.0, self.s_rating ** 2 - self._p_avail ** 2)) \
            / self.s_rating
        self._q_avail_nom = head[:, self.defender_mask, :].mean(axis=(1, 2)) \
            if self.defender_mask.any() else np.zeros(H)
        # curtailment term is skipped wherever availability is ~zero
        self._curtail_mask = self._defender_units[None] * (self._p_avail > 1e-9)
        self._inv_avail = 1.0 / np.maximum(self._p_avail, 1e-9)
        p_avail0 = self._p_avail[0]
        # start at the mid-day operating point: full solar output, no VARs,
        # voltages solved for those injections (no phantom startup step)
        self.inv = InverterState(v_meas=np.ones((n, 3)), p_out=p_avail0.copy(),
                                 q_out=np.zeros((n, 3)), s_rating=self.s_rating,
                                 p_avail=p_avail0)
        self.v = self._solve_voltage(p_avail0, np.zeros((n, 3)), 0)
        self.inv.v_meas = self.v.copy()
        self.vo_state = VoFilterState.at_rest(
            v0=self.v, c=pr.vo_gain, hp_cutoff=pr.hp_cutoff,
            lp_cutoff=pr.lp_cutoff)
        self.vo_nodes = np.zeros(n)
        self.vi_nodes = vi_metric(self.v[:, 0], self.v[:, 1], self.v[:, 2])
        self._vi_worst = float(self.vi_nodes.max())
        self._vo_worst = 0.0
        self._trace = np.zeros((H, len(TRACE_COLUMNS)))
        self.total_curtailment_kwh = 0.0
        self._q_out = np.zeros((n, 3))
        self._curve = None
        self._curve_key = None
        # filter gains and kernel scratch
        dt = pr.dt
        self._k_m = dt / (pr.tau_measure + dt)
        self._k_o = dt / (pr.tau_output + dt)
        self._k_h = dt / (1.0 / (2.0 * np.pi * pr.hp_cutoff) + dt)
        self._k_l = dt / (1.0 / (2.0 * np.pi * pr.lp_cutoff) + dt)
        self._out = np.zeros(_fast.OUT_SIZE)
        self._q_tot = np.zeros(3)
        self._v_worst = np.zeros(3)
        return self._observe()

    def _solve_voltage(self, p_out: np.ndarray, q_out: np.ndarray,
                       t: int) -> np.ndarray:
        inj = np.empty((3, 2 * self.model.n_nodes, 1))
        inj[:, :self.model.n_nodes, 0] = (p_out - self._p_load[t]).T
        inj[:, self.model.n_nodes:, 0] = (q_out - self._q_load[t]).T
        inj *= 1e-3
        return self.model.v_source[None, :] + (self._sens @ inj)[:, :, 0].T

    def attack_active(self, t: int) -> bool:
        return self.scenario.attack_start <= t < self.scenario.attack_end

    def _attack_strength(self, t: int) -> float:
        """0..1 interpolation between default and template curves for the
        compromised set. Oscillation engages instantly; the imbalance
        template ramps in over the configured escalation time."""
        if not self.attack_active(t):
            return 0.0
        if self.scenario.attack_kind == "oscillation":
            return 1.0
        ramp = max(int(self.params.templates.imbalance_ramp_steps), 1)
        return min(1.0, (t - self.scenario.attack_start + 1) / ramp)

    def apply_attack(self, t: int) -> VVWCurve:
        """Curve bank for step t: template curves (at the current escalation
        strength) for compromised inverters inside the attack window,
        defaults plus the held defender offset elsewhere. Rebuilt only when
        the strength moves or the action latches."""
        key = (self._attack_strength(t), self.a_applied.tobytes())
        if self._curve is None or key != self._curve_key:
            s = key[0]
            if s == 0.0:
                eta = self._eta_default
            elif s == 1.0:
                eta = self._eta_attacked
            else:
                eta = self._eta_default + s * (self._eta_attacked - self._eta_default)
            offset = np.where(self.defender_mask[:, None],
                              self.a_applied[None, :], 0.0)
            self._curve = VVWCurve(eta=eta, offset=offset)
            self._curve_key = key
        return self._curve

    def step(self, action) -> tuple[np.ndarray, float, bool]:
        """Advance one second; returns (observation, reward, done).

        The incoming action is latched only at action instants (every
        ``action_period`` steps) and held constant in between. Out-of-range
        components are clamped and counted.
        """
        sc = self.scenario
        pr = self.params
        if self.t >= sc.horizon:
            raise RuntimeError("episode is done")
        action = np.asarray(action, dtype=float).reshape(ACT_DIM)
        if np.any(np.abs(action) > pr.action_bound + 1e-12):
            self.clip_warnings += 1
            action = np.clip(action, -pr.action_bound, pr.action_bound)
        t = self.t
        prev_applied = self.a_applied
        if t % pr.action_period == 0:
            self.a_applied = action.copy()

        curve = self.apply_attack(t)
        if self._use_fastpath:
            vi_worst, vo_worst, curtail_term, curtail_kw, v_worst, q_tot = \
                self._advance_fast(t, curve)
        else:
            vi_worst, vo_worst, curtail_term, curtail_kw, v_worst, q_tot = \
                self._advance_reference(t, curve)
        self._vi_worst = vi_worst
        self._vo_worst = vo_worst
        self.total_curtailment_kwh += curtail_kw * pr.dt / 3600.0

        changed = int(np.count_nonzero(self.a_applied != prev_applied))
        reward = step_reward(pr, vi_worst, vo_worst, changed, self.a_applied,
                             curtail_term)

        self._trace[t, 0] = t
        self._trace[t, 1:4] = v_worst
        self._trace[t, 4] = vi_worst
        self._trace[t, 5] = vo_worst
        self._trace[t, 6:9] = self.a_applied
        self._trace[t, 9:12] = q_tot

        self.t += 1
        done = self.t >= sc.horizon
        return self._observe(), reward, done

    def _guard_error(self, t: int, vmin: float, vmax: float) -> RuntimeError:
        lo, hi = self.params.v_guard
        return RuntimeError(f"voltage left the ({lo}, {hi}) pu guard band "
                            f"at step {t} (range {vmin:.3f}..{vmax:.3f})")

    def _advance_fast(self, t: int, curve: VVWCurve):
        """One tick through the fused numba kernel (same arithmetic as the
        reference path; pinned by tests)."""
        e1, e2, e3, e4, e5 = curve._edges()
        inv = self.inv
        inv.p_avail = self._p_avail[t]
        out = self._out
        _fast.step_kernel(
            e1, e2, e3, e4, e5,
            self.v, inv.v_meas, inv.p_out, inv.q_out,
            self.vo_state.hp_state, self.vo_state.lp_state,
            self._p_avail[t], self._p_load[t], self._q_load[t],
            self._sens_r, self._sens_x, self.model.v_source,
            self._k_m, self._k_o, self._k_h, self._k_l, self.params.vo_gain,
            self.s_rating, self._inv_avail[t], self._curtail_mask[t],
            self.params.v_guard[0], self.params.v_guard[1],
            self.vi_nodes, self.vo_nodes, self._q_tot, self._v_worst, out)
        if out[_fast.OUT_OK] == 0.0:
            raise self._guard_error(t, out[_fast.OUT_VMIN], out[_fast.OUT_VMAX])
        self._q_out = inv.q_out
        curtail_term = out[_fast.OUT_CURTAIL] / max(self._n_units, 1)
        return (out[_fast.OUT_VI], out[_fast.OUT_VO], curtail_term,
                out[_fast.OUT_CURTAIL_KW], self._v_worst, self._q_tot)

    def _advance_reference(self, t: int, curve: VVWCurve):
        """One tick composed from the public inverter/observer operations."""
        pr = self.params
        p_avail = self._p_avail[t]                                     # kW
        self.inv.p_avail = p_avail
        self.inv, p_out, q_out = inverter_step(
            self.inv, curve, self.v, pr.dt,
            tau_measure=pr.tau_measure, tau_output=pr.tau_output)
        self._q_out = q_out

        v = self._solve_voltage(p_out, q_out, t)
        lo, hi = pr.v_guard
        vmin, vmax = v.min(), v.max()
        if vmin <= lo or vmax >= hi:
            raise self._guard_error(t, vmin, vmax)
        self.v = v

        self.vo_state, vo_phase = vo_step(self.vo_state, v, pr.dt)
        self.vo_nodes = vo_phase.max(axis=1)
        # same formula as observer.vi_metric, inlined for the hot loop
        vbar = v.mean(axis=1)
        self.vi_nodes = np.abs(v - vbar[:, None]).max(axis=1) / vbar

        curtail_frac = (1.0 - p_out * self._inv_avail[t]) * self._curtail_mask[t]
        curtail_term = float((curtail_frac * curtail_frac).sum()) \
            / max(self._n_units, 1)
        curtail_kw = float(((p_avail - p_out) * self._defender_units).sum())
        worst = int(np.argmax(np.abs(v - 1.0).max(axis=1)))
        return (float(self.vi_nodes.max()), float(self.vo_nodes.max()),
                curtail_term, curtail_kw, v[worst], q_out.sum(axis=0))

    def trace(self) -> EpisodeTrace:
        return EpisodeTrace(data=self._trace[:self.t].copy())

    # -- observation assembly ----------------------------------------------

    def _observe(self) -> np.ndarray:
        obs = np.empty(OBS_DIM)
        obs[0] = self._vi_worst
        obs[1] = self._vo_worst
        obs[2] = self._q_avail_nom[min(self.t, self.scenario.horizon - 1)]
        obs[3:6] = self.a_applied
        obs[6:9] = self.v[-1]   # deepest node's phase voltages
        return obs


def run_episode(model: FeederModel, scenario: Scenario,
                params: EnvParams | None = None, action_fn=None):
    """Roll one full episode; zero actions when no policy is supplied.

    Returns ``(trace, summary)`` where summary holds the episode maxima of
    the two attack metrics (overall and inside the attack window), the mean
    per-step reward, and total defender curtailment in kWh.
    """
    env = FeederEnv(model, scenario, params)
    obs = env.reset()
    total = 0.0
    for _ in range(scenario.horizon):
        action = np.zeros(ACT_DIM) if action_fn is None else action_fn(obs)
        obs, reward, done = env.step(action)
        total += reward
    trace = env.trace()
    u = trace.column("u_worst")
    y = trace.column("y_worst")
    window = slice(scenario.attack_start, scenario.attack_end)
    summary = {
        "max_vi": float(u.max()),
        "max_vo": float(y.max()),
        "attack_max_vi": float(u[window].max()),
        "attack_max_vo": float(y[window].max()),
        "mean_reward": total / scenario.horizon,
        "total_curtailment_kwh": env.total_curtailment_kwh,
        "clip_warnings": env.clip_warnings,
    }
    return trace, summary
