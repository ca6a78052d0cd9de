"""
Compiled fixed-step RK4 loops.

Device parameters arrive packed in a float64 array so one compiled function
serves every device kind:

    PHI_TANH   [S_W, atanh(m0), K_phi]
    IDEAL      [R_mid, dR, q0]
    HYSTERON   [H_c, tau, k_H, K_phi, R_w]

The update is the same classical RK4 combination as ``simulator.rk4_step``;
tests check the two agree to rounding.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

PHI_TANH = 0
IDEAL = 1
HYSTERON = 2

# status codes returned by the circuit loop
OK = 0
ERR_POSITIVITY = 1

R_FLOOR = 1e-15


@njit(cache=True)
def _sech2(x):
    e = math.exp(-2.0 * abs(x))
    return 4.0 * e / ((1.0 + e) * (1.0 + e))


@njit(cache=True)
def _resistance(kind, dp, q):
    if kind == PHI_TANH:
        return dp[2] / dp[0] * _sech2(q / dp[0] + dp[1])
    return dp[0] + dp[1] * math.tanh(q / dp[2])


@njit(cache=True)
def _hysteron_rate(m, H, H_c, tau):
    if abs(H) < H_c:
        return 0.0
    return (math.copysign(1.0, H) - m) / tau


@njit(cache=True)
def _pwl(tb, vb, t):
    n = tb.shape[0]
    if t <= tb[0]:
        return vb[0]
    if t >= tb[n - 1]:
        return vb[n - 1]
    i = 0
    while i + 1 < n and tb[i + 1] <= t:
        i += 1
    return vb[i] + (vb[i + 1] - vb[i]) * (t - tb[i]) / (tb[i + 1] - tb[i])


@njit(cache=True)
def _loop_current(v, m, dp, tol, max_iters, out):
    """Solve v = R_w I + K_phi * rate(m, k_H I) for I.

    Fixed-point iteration first. The iteration only fails to settle when v lies
    in the jump of the rate at the threshold; there the consistent solution
    pins |I| at the threshold current and the EMF absorbs the remainder
    (sliding mode). Returns True when the fallback was needed.
    """
    H_c = dp[0]
    tau = dp[1]
    k_H = dp[2]
    K = dp[3]
    R_w = dp[4]
    I = v / R_w
    for _ in range(max_iters):
        dm = _hysteron_rate(m, k_H * I, H_c, tau)
        I_new = (v - K * dm) / R_w
        if abs(I_new - I) <= tol * max(1.0, abs(I)):
            out[0] = I_new
            out[1] = dm
            return False
        I = I_new
    I = math.copysign(H_c / k_H, v)
    out[0] = I
    out[1] = (v - R_w * I) / K
    return True


@njit(cache=True)
def _circuit_rhs(kind, dp, tb, vb, C, tol, max_iters, t, q, m, vc, out, scratch):
    """Series source-device-capacitor loop. Fills out = [dq, dm, dvc]; also
    scratch[0] = I. Returns (status, fallback)."""
    v = _pwl(tb, vb, t) - vc
    fallback = False
    if kind == HYSTERON:
        fallback = _loop_current(v, m, dp, tol, max_iters, scratch)
        I = scratch[0]
        dm = scratch[1]
    else:
        R = _resistance(kind, dp, q)
        if not R >= R_FLOOR:
            return ERR_POSITIVITY, False
        I = v / R
        dm = 0.0
    out[0] = I
    out[1] = dm
    out[2] = I / C
    scratch[0] = I
    scratch[1] = dm
    return OK, fallback


@njit(cache=True)
def run_circuit(kind, dp, tb, vb, C, tol, max_iters, q0, m0, vc0, dt, n, stride):
    """Integrate the test circuit for n steps.

    Returns (status, fail_step, fallback_steps, samples, final) where samples has
    rows [t, q, m, vc, I, dm] every ``stride`` steps and final = [t, q, m, vc].
    """
    n_samples = n // stride + 1
    samples = np.empty((n_samples, 6))
    final = np.empty(4)
    y = np.array([q0, m0, vc0])
    k1 = np.empty(3)
    k2 = np.empty(3)
    k3 = np.empty(3)
    k4 = np.empty(3)
    scratch = np.empty(2)
    fallback_steps = 0
    h = 0.5 * dt
    for step in range(n + 1):
        t = step * dt
        status, fb1 = _circuit_rhs(kind, dp, tb, vb, C, tol, max_iters, t, y[0], y[1], y[2], k1, scratch)
        if status != OK:
            return status, step, fallback_steps, samples, final
        if step % stride == 0:
            j = step // stride
            samples[j, 0] = t
            samples[j, 1] = y[0]
            samples[j, 2] = y[1]
            samples[j, 3] = y[2]
            samples[j, 4] = scratch[0]
            samples[j, 5] = scratch[1]
        if step == n:
            break
        status, fb2 = _circuit_rhs(kind, dp, tb, vb, C, tol, max_iters, t + h,
                                   y[0] + h * k1[0], y[1] + h * k1[1], y[2] + h * k1[2], k2, scratch)
        if status != OK:
            return status, step, fallback_steps, samples, final
        status, fb3 = _circuit_rhs(kind, dp, tb, vb, C, tol, max_iters, t + h,
                                   y[0] + h * k2[0], y[1] + h * k2[1], y[2] + h * k2[2], k3, scratch)
        if status != OK:
            return status, step, fallback_steps, samples, final
        status, fb4 = _circuit_rhs(kind, dp, tb, vb, C, tol, max_iters, t + dt,
                                   y[0] + dt * k3[0], y[1] + dt * k3[1], y[2] + dt * k3[2], k4, scratch)
        if status != OK:
            return status, step, fallback_steps, samples, final
        if fb1 or fb2 or fb3 or fb4:
            fallback_steps += 1
        for i in range(3):
            y[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    final[0] = n * dt
    final[1] = y[0]
    final[2] = y[1]
    final[3] = y[2]
    return OK, -1, fallback_steps, samples, final


@njit(cache=True)
def _current_rhs(kind, dp, I0, omega, phase, t, m, out):
    I = I0 * math.sin(omega * t + phase)
    out[0] = I
    if kind == HYSTERON:
        out[1] = _hysteron_rate(m, dp[2] * I, dp[0], dp[1])
    else:
        out[1] = 0.0
    return I


@njit(cache=True)
def run_current_driven(kind, dp, I0, omega, phase, q0, m0, dt, n, stride):
    """Integrate dq/dt = I(t) (and dm/dt for the hysteron) for n steps.

    Returns (samples, final) with sample rows [t, q, m, I, dm]."""
    n_samples = n // stride + 1
    samples = np.empty((n_samples, 5))
    final = np.empty(3)
    q = q0
    m = m0
    k1 = np.empty(2)
    k2 = np.empty(2)
    k3 = np.empty(2)
    k4 = np.empty(2)
    h = 0.5 * dt
    for step in range(n + 1):
        t = step * dt
        I = _current_rhs(kind, dp, I0, omega, phase, t, m, k1)
        if step % stride == 0:
            j = step // stride
            samples[j, 0] = t
            samples[j, 1] = q
            samples[j, 2] = m
            samples[j, 3] = I
            samples[j, 4] = k1[1]
        if step == n:
            break
        _current_rhs(kind, dp, I0, omega, phase, t + h, m + h * k1[1], k2)
        _current_rhs(kind, dp, I0, omega, phase, t + h, m + h * k2[1], k3)
        _current_rhs(kind, dp, I0, omega, phase, t + dt, m + dt * k3[1], k4)
        q = q + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        m = m + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
    final[0] = n * dt
    final[1] = q
    final[2] = m
    return samples, final
