import numpy as np
import pytest

from gridars.inverter import (InverterState, VVWCurve, lowpass_gain, step,
                              vv_setpoint, vw_setpoint)

ETA = np.array([0.95, 0.98, 1.02, 1.05, 1.08])


def curve(offset=0.0, eta=ETA):
    return VVWCurve(eta=np.asarray(eta, dtype=float), offset=offset)


class TestVoltVar:
    def test_dead_band(self):
        assert vv_setpoint(curve(), 1.00, 10.0) == 0.0

    def test_full_injection_at_first_breakpoint(self):
        assert vv_setpoint(curve(), 0.95, 10.0) == pytest.approx(10.0)
        assert vv_setpoint(curve(), 0.90, 10.0) == pytest.approx(10.0)

    def test_midpoint_interpolation(self):
        assert vv_setpoint(curve(), 0.965, 10.0) == pytest.approx(5.0)

    def test_full_absorption_beyond_fourth(self):
        assert vv_setpoint(curve(), 1.05, 10.0) == pytest.approx(-10.0)
        assert vv_setpoint(curve(), 1.20, 10.0) == pytest.approx(-10.0)

    def test_continuity_at_breakpoints(self):
        c = curve()
        for v in ETA:
            below = vv_setpoint(c, v - 1e-9, 10.0)
            above = vv_setpoint(c, v + 1e-9, 10.0)
            assert abs(below - above) < 1e-6


class TestVoltWatt:
    def test_plateau(self):
        assert vw_setpoint(curve(), 1.00, 40.0) == pytest.approx(40.0)
        assert vw_setpoint(curve(), 1.05, 40.0) == pytest.approx(40.0)

    def test_midpoint(self):
        assert vw_setpoint(curve(), 1.065, 40.0) == pytest.approx(20.0)

    def test_full_curtailment(self):
        assert vw_setpoint(curve(), 1.08, 40.0) == pytest.approx(0.0)
        assert vw_setpoint(curve(), 1.30, 40.0) == pytest.approx(0.0)


class TestCurveProperties:
    def test_monotone_non_increasing(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            gaps = rng.uniform(0.005, 0.06, size=4)
            gaps[1] = max(gaps[1], 0.0)  # eta2 <= eta3 allowed to touch
            eta = 0.9 + np.concatenate([[0.0], np.cumsum(gaps)])
            c = curve(eta=eta, offset=rng.uniform(-0.1, 0.1))
            sweep = np.linspace(0.8, 1.3, 400)
            q = vv_setpoint(c, sweep, 10.0)
            p = vw_setpoint(c, sweep, 40.0)
            assert np.all(np.diff(q) <= 1e-12)
            assert np.all(np.diff(p) <= 1e-12)

    def test_translation_equivariance_exact_for_dyadic_values(self):
        # with breakpoints, voltages and shifts all exactly representable,
        # the shifted evaluation is bitwise identical
        eta = np.array([0.9375, 0.96875, 1.0, 1.0625, 1.09375])
        c0 = curve(eta=eta, offset=0.0)
        for shift in (0.0625, -0.03125, 0.09375):
            c1 = curve(eta=eta, offset=shift)
            for v in (0.9375, 0.953125, 1.0, 1.03125, 1.25):
                assert vv_setpoint(c1, v + shift, 7.0) == \
                    vv_setpoint(c0, v, 7.0)
                assert vw_setpoint(c1, v + shift, 40.0) == \
                    vw_setpoint(c0, v, 40.0)

    def test_translation_equivariance_general(self):
        rng = np.random.default_rng(1)
        c0 = curve()
        for _ in range(30):
            shift = rng.uniform(-0.1, 0.1)
            v = rng.uniform(0.85, 1.25)
            c1 = curve(offset=shift)
            assert vv_setpoint(c1, v + shift, 5.0) == \
                pytest.approx(vv_setpoint(c0, v, 5.0), abs=1e-9)

    def test_invalid_ordering_rejected(self):
        with pytest.raises(ValueError, match="breakpoints"):
            VVWCurve(eta=np.array([0.98, 0.95, 1.02, 1.05, 1.08]))
        with pytest.raises(ValueError, match="breakpoints"):
            VVWCurve(eta=np.array([0.95, 0.98, 1.02, 1.02, 1.08]))

    def test_offset_outside_action_range_rejected(self):
        with pytest.raises(ValueError, match="offset"):
            VVWCurve(eta=ETA, offset=0.2)


class TestStep:
    def test_measurement_filter_converges(self):
        state = InverterState.at_rest(44.0, 40.0, v0=1.0)
        for _ in range(200):
            state, _, _ = step(state, curve(), 1.03, 1.0)
        assert abs(state.v_meas - 1.03) < 1e-6

    def test_headroom_with_ten_percent_oversize(self):
        # s = 1.1 p_peak and full watt output leaves sqrt(1.21-1) p_peak of VARs
        p_peak = 40.0
        state = InverterState.at_rest(1.1 * p_peak, p_peak, v0=1.0)
        for _ in range(300):
            state, p, q = step(state, curve(), 1.0, 1.0)
        assert p == pytest.approx(p_peak, rel=1e-6)
        expected_q = p_peak * np.sqrt(1.1 ** 2 - 1.0)
        seen = vv_setpoint(curve(), 0.95,
                           np.sqrt(state.s_rating ** 2 - p ** 2))
        assert seen == pytest.approx(expected_q, rel=1e-6)
        assert expected_q == pytest.approx(0.458 * p_peak, rel=2e-3)

    def test_full_capacity_to_vars_when_no_sun(self):
        state = InverterState.at_rest(44.0, 0.0, v0=0.94)
        for _ in range(300):
            state, p, q = step(state, curve(), 0.94, 1.0)
        assert p == 0.0
        assert q == pytest.approx(44.0, rel=1e-6)

    def test_capacity_circle_never_violated(self):
        rng = np.random.default_rng(2)
        state = InverterState.at_rest(44.0, 40.0, v0=1.0)
        c = curve()
        v = 1.0
        for t in range(500):
            v = float(np.clip(v + rng.normal() * 0.02, 0.85, 1.25))
            avail = float(rng.uniform(0.0, 40.0))
            state.p_avail = avail
            state, p, q = step(state, c, v, 1.0)
            assert p * p + q * q <= state.s_rating ** 2 + 1e-9
            assert 0.0 <= p <= avail + 1e-12

    def test_watt_precedence_limits_vars(self):
        state = InverterState.at_rest(44.0, 40.0, v0=1.0)
        c = curve()
        for v in np.linspace(0.9, 1.2, 100):
            state, p, q = step(state, c, float(v), 1.0)
            u_p = vw_setpoint(c, state.v_meas, state.p_avail)
            cap = np.sqrt(max(0.0, state.s_rating ** 2 - u_p ** 2))
            assert abs(vv_setpoint(c, state.v_meas, cap)) <= cap + 1e-12

    def test_vectorized_bank_matches_scalar_loop(self):
        rng = np.random.default_rng(3)
        n = 6
        eta = np.tile(ETA, (n, 1))
        offs = rng.uniform(-0.1, 0.1, size=n)
        bank_curve = VVWCurve(eta=eta, offset=offs)
        bank = InverterState.at_rest(np.full(n, 44.0), np.full(n, 40.0), v0=1.0)
        singles = [InverterState.at_rest(44.0, 40.0, v0=1.0) for _ in range(n)]
        for t in range(80):
            v = rng.uniform(0.9, 1.15, size=n)
            bank, pb, qb = step(bank, bank_curve, v, 1.0)
            for i in range(n):
                si_curve = VVWCurve(eta=ETA.copy(), offset=float(offs[i]))
                singles[i], p, q = step(singles[i], si_curve, float(v[i]), 1.0)
                assert p == pytest.approx(pb[i], abs=1e-12)
                assert q == pytest.approx(qb[i], abs=1e-12)


def test_lowpass_unity_dc_gain_and_stability():
    for tau in (0.5, 1.5, 2.0, 10.0):
        k = lowpass_gain(tau, 1.0)
        assert 0 < k < 1
        y = 0.0
        for _ in range(2000):
            y = (1 - k) * y + k * 1.0
        assert abs(y - 1.0) < 1e-9
        # bounded output for bounded alternating input
        y, peak = 0.0, 0.0
        for t in range(500):
            y = (1 - k) * y + k * (1.0 if t % 2 == 0 else -1.0)
            peak = max(peak, abs(y))
        assert peak <= 1.0 + 1e-12
