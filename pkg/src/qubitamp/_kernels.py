"""Compiled inner loops for trajectory integration.

Hot-path implementations of the fifteen-component equations of motion under
forward-Euler (optionally Euler-Maruyama with per-qubit noise) and classical
RK4 stepping. The drive sinusoids are evaluated by incremental phasor
rotation with an exact trig resynchronization every RESYNC absolute steps,
which keeps results bit-identical no matter how a run is split into chunks,
provided every chunk boundary falls on a RESYNC multiple.

Step indices, sample strides, and the divergence-check cadence are all
expressed in absolute step counts for the same reason.

All diagnostics travel through a small float array:
    diag[0]: running max of the squared component norm seen at cadence checks
    diag[1]: first absolute step at which the state went non-finite, else -1
"""

import numpy as np
from numba import njit

# Absolute-step period of exact phasor resynchronization. Chunk boundaries
# must be multiples of this for chunking-invariant results.
RESYNC = 4096


@njit(cache=True, nogil=True)
def euler_kernel(
    s, n_steps, n0, dt,
    d1, d2, g, gp1, gp2, gr1, gr2, zt1, zt2,
    a_pump, w_pump, a_weak, w_weak,
    sq2d_dt, noise,
    stride, rec, chan, k0,
    cadence, diag,
):
    """Advance the state n_steps forward-Euler steps starting at step n0.

    Args:
        s: length-15 state, updated in place.
        n_steps: steps to take in this call.
        n0: absolute index of the first step (0 for a fresh run).
        dt: step size.
        d1..zt2: static pair parameters (splittings, coupling, rates,
            thermal polarizations).
        a_pump, w_pump, a_weak, w_weak: two-tone drive.
        sq2d_dt: noise prefactor sqrt(2*D/dt); 0 disables the noise path.
        noise: standard normals, consumed as noise[2n], noise[2n+1] for
            local step n; may be empty when sq2d_dt == 0.
        stride: record the state every stride-th absolute step.
        rec: output array (n_channels, n_samples_total).
        chan: component indices to record per channel.
        k0: samples already recorded before this call.
        cadence: check finiteness/norm every cadence-th absolute step.
        diag: 2-element diagnostics array, see module docstring.

    Returns:
        Total samples recorded so far (k0 plus new ones).
    """
    s0, s1, s2 = s[0], s[1], s[2]
    s3, s4, s5 = s[3], s[4], s[5]
    s6, s7, s8 = s[6], s[7], s[8]
    s9, s10, s11 = s[9], s[10], s[11]
    s12, s13, s14 = s[12], s[13], s[14]
    tg = 2.0 * g
    gpp = gp1 + gp2
    t0 = n0 * dt
    cp = np.cos(w_pump * t0)
    sp = np.sin(w_pump * t0)
    dcp = np.cos(w_pump * dt)
    dsp = np.sin(w_pump * dt)
    cw = np.cos(w_weak * t0)
    sw = np.sin(w_weak * t0)
    dcw = np.cos(w_weak * dt)
    dsw = np.sin(w_weak * dt)
    use_noise = sq2d_dt != 0.0
    nch = chan.shape[0]
    k = k0
    for n in range(n_steps):
        det = a_pump * sp + a_weak * sw
        if use_noise:
            e1 = det + sq2d_dt * noise[2 * n]
            e2 = det + sq2d_dt * noise[2 * n + 1]
        else:
            e1 = det
            e2 = det
        d0 = d2 * s1 - gp2 * s0
        dd1 = -d2 * s0 + e2 * s2 - tg * s9 - gp2 * s1
        dd2 = -e2 * s1 + tg * s7 - gr2 * (s2 - zt2)
        d3 = d1 * s4 - gp1 * s3
        d4 = -d1 * s3 + e1 * s5 - tg * s10 - gp1 * s4
        d5 = -e1 * s4 + tg * s8 - gr1 * (s5 - zt1)
        d6 = d2 * s7 + d1 * s8 - gpp * s6
        d7 = -tg * s2 - d2 * s6 + d1 * s11 + e2 * s9 - gpp * s7
        d8 = -tg * s5 - d1 * s6 + d2 * s11 + e1 * s10 - gpp * s8
        d9 = tg * s1 - e2 * s7 + d1 * s12 - (gp1 + gr2) * s9
        d10 = tg * s4 - e1 * s8 + d2 * s13 - (gr1 + gp2) * s10
        d11 = -d1 * s7 - d2 * s8 + e2 * s12 + e1 * s13 - gpp * s11
        d12 = -d1 * s9 - e2 * s11 + e1 * s14 - (gp1 + gr2) * s12
        d13 = -d2 * s10 - e1 * s11 + e2 * s14 - (gr1 + gp2) * s13
        d14 = -e1 * s12 - e2 * s13 - (gr1 + gr2) * (s14 - zt1 * zt2)
        s0 += dt * d0
        s1 += dt * dd1
        s2 += dt * dd2
        s3 += dt * d3
        s4 += dt * d4
        s5 += dt * d5
        s6 += dt * d6
        s7 += dt * d7
        s8 += dt * d8
        s9 += dt * d9
        s10 += dt * d10
        s11 += dt * d11
        s12 += dt * d12
        s13 += dt * d13
        s14 += dt * d14
        m = n0 + n + 1
        if m % RESYNC == 0:
            tp = w_pump * (m * dt)
            cp = np.cos(tp)
            sp = np.sin(tp)
            tw = w_weak * (m * dt)
            cw = np.cos(tw)
            sw = np.sin(tw)
        else:
            cp, sp = cp * dcp - sp * dsp, sp * dcp + cp * dsp
            cw, sw = cw * dcw - sw * dsw, sw * dcw + cw * dsw
        if m % cadence == 0:
            q = (s0 * s0 + s1 * s1 + s2 * s2 + s3 * s3 + s4 * s4
                 + s5 * s5 + s6 * s6 + s7 * s7 + s8 * s8 + s9 * s9
                 + s10 * s10 + s11 * s11 + s12 * s12 + s13 * s13 + s14 * s14)
            if q > diag[0]:
                diag[0] = q
            if not np.isfinite(q):
                diag[1] = m
                break
        if m % stride == 0:
            s[0], s[1], s[2] = s0, s1, s2
            s[3], s[4], s[5] = s3, s4, s5
            s[6], s[7], s[8] = s6, s7, s8
            s[9], s[10], s[11] = s9, s10, s11
            s[12], s[13], s[14] = s12, s13, s14
            for c in range(nch):
                rec[c, k] = s[chan[c]]
            k += 1
    s[0], s[1], s[2] = s0, s1, s2
    s[3], s[4], s[5] = s3, s4, s5
    s[6], s[7], s[8] = s6, s7, s8
    s[9], s[10], s[11] = s9, s10, s11
    s[12], s[13], s[14] = s12, s13, s14
    return k


@njit(cache=True, inline="always")
def _deriv(s, e1, e2, d1, d2, tg, gp1, gp2, gr1, gr2, zt1, zt2, out):
    gpp = gp1 + gp2
    out[0] = d2 * s[1] - gp2 * s[0]
    out[1] = -d2 * s[0] + e2 * s[2] - tg * s[9] - gp2 * s[1]
    out[2] = -e2 * s[1] + tg * s[7] - gr2 * (s[2] - zt2)
    out[3] = d1 * s[4] - gp1 * s[3]
    out[4] = -d1 * s[3] + e1 * s[5] - tg * s[10] - gp1 * s[4]
    out[5] = -e1 * s[4] + tg * s[8] - gr1 * (s[5] - zt1)
    out[6] = d2 * s[7] + d1 * s[8] - gpp * s[6]
    out[7] = -tg * s[2] - d2 * s[6] + d1 * s[11] + e2 * s[9] - gpp * s[7]
    out[8] = -tg * s[5] - d1 * s[6] + d2 * s[11] + e1 * s[10] - gpp * s[8]
    out[9] = tg * s[1] - e2 * s[7] + d1 * s[12] - (gp1 + gr2) * s[9]
    out[10] = tg * s[4] - e1 * s[8] + d2 * s[13] - (gr1 + gp2) * s[10]
    out[11] = -d1 * s[7] - d2 * s[8] + e2 * s[12] + e1 * s[13] - gpp * s[11]
    out[12] = -d1 * s[9] - e2 * s[11] + e1 * s[14] - (gp1 + gr2) * s[12]
    out[13] = -d2 * s[10] - e1 * s[11] + e2 * s[14] - (gr1 + gp2) * s[13]
    out[14] = -e1 * s[12] - e2 * s[13] - (gr1 + gr2) * (s[14] - zt1 * zt2)


@njit(cache=True, nogil=True)
def rk4_kernel(
    s, n_steps, n0, dt,
    d1, d2, g, gp1, gp2, gr1, gr2, zt1, zt2,
    a_pump, w_pump, a_weak, w_weak,
    stride, rec, chan, k0,
    cadence, diag,
):
    """Advance the state n_steps classical RK4 steps (deterministic only).

    Same conventions as euler_kernel; the drive phasors advance in
    half-steps so the midpoint stage drive is exact.
    """
    y = s.copy()
    k1 = np.zeros(15)
    k2 = np.zeros(15)
    k3 = np.zeros(15)
    k4 = np.zeros(15)
    tmp = np.zeros(15)
    tg = 2.0 * g
    t0 = n0 * dt
    hp = 0.5 * dt * w_pump
    hw = 0.5 * dt * w_weak
    cp = np.cos(w_pump * t0)
    sp = np.sin(w_pump * t0)
    cw = np.cos(w_weak * t0)
    sw = np.sin(w_weak * t0)
    dcp = np.cos(hp)
    dsp = np.sin(hp)
    dcw = np.cos(hw)
    dsw = np.sin(hw)
    nch = chan.shape[0]
    k = k0
    for n in range(n_steps):
        e_a = a_pump * sp + a_weak * sw
        cp, sp = cp * dcp - sp * dsp, sp * dcp + cp * dsp
        cw, sw = cw * dcw - sw * dsw, sw * dcw + cw * dsw
        e_b = a_pump * sp + a_weak * sw
        cp, sp = cp * dcp - sp * dsp, sp * dcp + cp * dsp
        cw, sw = cw * dcw - sw * dsw, sw * dcw + cw * dsw
        e_c = a_pump * sp + a_weak * sw
        m = n0 + n + 1
        if m % RESYNC == 0:
            tp = w_pump * (m * dt)
            cp = np.cos(tp)
            sp = np.sin(tp)
            tw = w_weak * (m * dt)
            cw = np.cos(tw)
            sw = np.sin(tw)

        _deriv(y, e_a, e_a, d1, d2, tg, gp1, gp2, gr1, gr2, zt1, zt2, k1)
        for i in range(15):
            tmp[i] = y[i] + 0.5 * dt * k1[i]
        _deriv(tmp, e_b, e_b, d1, d2, tg, gp1, gp2, gr1, gr2, zt1, zt2, k2)
        for i in range(15):
            tmp[i] = y[i] + 0.5 * dt * k2[i]
        _deriv(tmp, e_b, e_b, d1, d2, tg, gp1, gp2, gr1, gr2, zt1, zt2, k3)
        for i in range(15):
            tmp[i] = y[i] + dt * k3[i]
        _deriv(tmp, e_c, e_c, d1, d2, tg, gp1, gp2, gr1, gr2, zt1, zt2, k4)
        for i in range(15):
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        if m % cadence == 0:
            q = 0.0
            for i in range(15):
                q += y[i] * y[i]
            if q > diag[0]:
                diag[0] = q
            if not np.isfinite(q):
                diag[1] = m
                break
        if m % stride == 0:
            for c in range(nch):
                rec[c, k] = y[chan[c]]
            k += 1
    for i in range(15):
        s[i] = y[i]
    return k
