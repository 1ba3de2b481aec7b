"""Fused per-step simulation kernel (numba) for the feeder environment.

Implements exactly the arithmetic of one environment tick — inverter bank,
linear voltage solve, oscillation/imbalance observers, curtailment — in one
compiled loop. The pure-numpy reference path in ``env`` stays authoritative;
a test pins the two together. Import failure (no numba) is tolerated: the
environment falls back to the reference path.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

# out-vector slots filled by the kernel
OUT_VI = 0          # worst imbalance over nodes
OUT_VO = 1          # worst oscillation reading over nodes
OUT_CURTAIL = 2     # sum over defender units of (1 - p/p_avail)^2
OUT_CURTAIL_KW = 3  # sum over defender units of (p_avail - p)
OUT_OK = 4          # 1.0 if the voltage guard held
OUT_VMIN = 5
OUT_VMAX = 6
OUT_SIZE = 7


def _kernel(e1, e2, e3, e4, e5,
            v, v_meas, p_out, q_out, hp, lp,
            p_avail, p_load, q_load,
            sens_r, sens_x, v_src,
            k_m, k_o, k_h, k_l, c_gain,
            s_rating, inv_avail, curtail_mask,
            guard_lo, guard_hi,
            vi_nodes, vo_nodes, q_tot, v_worst, out):
    n = v.shape[0]
    # inverter bank: measurement filter, watt precedence, output filters
    for i in range(n):
        for ph in range(3):
            vm = v_meas[i, ph] + k_m * (v[i, ph] - v_meas[i, ph])
            v_meas[i, ph] = vm
            r = (vm - e4[i, ph]) / (e5[i, ph] - e4[i, ph])
            if r < 0.0:
                r = 0.0
            elif r > 1.0:
                r = 1.0
            u_p = p_avail[i, ph] * (1.0 - r)
            cap2 = s_rating[i, ph] * s_rating[i, ph] - u_p * u_p
            if cap2 < 0.0:
                cap2 = 0.0
            q_cap = np.sqrt(cap2)
            r1 = (vm - e1[i, ph]) / (e2[i, ph] - e1[i, ph])
            if r1 < 0.0:
                r1 = 0.0
            elif r1 > 1.0:
                r1 = 1.0
            r2 = (vm - e3[i, ph]) / (e4[i, ph] - e3[i, ph])
            if r2 < 0.0:
                r2 = 0.0
            elif r2 > 1.0:
                r2 = 1.0
            u_q = q_cap * ((1.0 - r1) - r2)
            p = p_out[i, ph] + k_o * (u_p - p_out[i, ph])
            if p < 0.0:
                p = 0.0
            elif p > p_avail[i, ph]:
                p = p_avail[i, ph]
            p_out[i, ph] = p
            q_out[i, ph] += k_o * (u_q - q_out[i, ph])

    # linear feeder: v = v_src + R p_inj + X q_inj (MW / MVAr)
    vmin = 1e9
    vmax = -1e9
    for ph in range(3):
        for i in range(n):
            acc = v_src[ph]
            for j in range(n):
                acc += (sens_r[ph, i, j] * (p_out[j, ph] - p_load[j, ph])
                        + sens_x[ph, i, j] * (q_out[j, ph] - q_load[j, ph])) * 1e-3
            v[i, ph] = acc
            if acc < vmin:
                vmin = acc
            if acc > vmax:
                vmax = acc
    out[OUT_VMIN] = vmin
    out[OUT_VMAX] = vmax
    if vmin <= guard_lo or vmax >= guard_hi:
        out[OUT_OK] = 0.0
        return
    out[OUT_OK] = 1.0

    # observers and reward pieces
    vi_worst = 0.0
    vo_worst = 0.0
    dev_worst = -1.0
    worst = 0
    for i in range(n):
        vo_i = 0.0
        dev_i = 0.0
        vbar = 0.0
        for ph in range(3):
            h = hp[i, ph] + k_h * (v[i, ph] - hp[i, ph])
            hp[i, ph] = h
            dv = v[i, ph] - h
            l = lp[i, ph] + k_l * (c_gain * dv * dv - lp[i, ph])
            lp[i, ph] = l
            if l > vo_i:
                vo_i = l
            vbar += v[i, ph]
            d = v[i, ph] - 1.0
            if d < 0.0:
                d = -d
            if d > dev_i:
                dev_i = d
        vbar /= 3.0
        dvi = 0.0
        for ph in range(3):
            d = vbar - v[i, ph]
            if d < 0.0:
                d = -d
            if d > dvi:
                dvi = d
        vi_i = dvi / vbar
        vi_nodes[i] = vi_i
        vo_nodes[i] = vo_i
        if vi_i > vi_worst:
            vi_worst = vi_i
        if vo_i > vo_worst:
            vo_worst = vo_i
        if dev_i > dev_worst:
            dev_worst = dev_i
            worst = i
    out[OUT_VI] = vi_worst
    out[OUT_VO] = vo_worst
    for ph in range(3):
        v_worst[ph] = v[worst, ph]

    curtail = 0.0
    curtail_kw = 0.0
    for ph in range(3):
        q_tot[ph] = 0.0
    for i in range(n):
        for ph in range(3):
            q_tot[ph] += q_out[i, ph]
            m = curtail_mask[i, ph]
            if m != 0.0:
                frac = 1.0 - p_out[i, ph] * inv_avail[i, ph]
                curtail += frac * frac
                curtail_kw += p_avail[i, ph] - p_out[i, ph]
    out[OUT_CURTAIL] = curtail
    out[OUT_CURTAIL_KW] = curtail_kw


if njit is not None:
    step_kernel = njit(cache=True)(_kernel)
else:  # pragma: no cover
    step_kernel = None
