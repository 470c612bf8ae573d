"""Compiled inner loops for surrogate-risk evaluation and Adam.

Base losses are addressed by the integer codes of ``losses.PHI_CODES``.
Every risk is written as ``sum_{i,k} w_le[i,k] phi(b_k - a_i) + w_gt[i,k] phi(a_i - b_k)``.
"""

import math

import numpy as np
from numba import njit

LOGI, HING, RAMP, SMHI, SQHI, EXPO, ABSO, SQUA = range(8)


@njit(cache=True)
def phi_val(code, s, u):
    if code == LOGI:
        if u > 0:
            return math.log1p(math.exp(-u))
        return -u + math.log1p(math.exp(u))
    if code == HING:
        return 1.0 - u if u < 1.0 else 0.0
    if code == RAMP:
        h = 1.0 - u if u < 1.0 else 0.0
        return h if h < s else s
    if code == SMHI:
        if u <= 0.0:
            return 1.0 - 2.0 * u
        h = 1.0 - u if u < 1.0 else 0.0
        return h * h
    if code == SQHI:
        h = 1.0 - u if u < 1.0 else 0.0
        return h * h
    if code == EXPO:
        return math.exp(-u)
    if code == ABSO:
        return abs(1.0 - u)
    return (1.0 - u) * (1.0 - u)


@njit(cache=True)
def phi_der(code, s, u):
    if code == LOGI:
        if u > 0:
            e = math.exp(-u)
            return -e / (1.0 + e)
        return -1.0 / (1.0 + math.exp(u))
    if code == HING:
        return -1.0 if u < 1.0 else 0.0
    if code == RAMP:
        return -1.0 if (u < 1.0 and u > 1.0 - s) else 0.0
    if code == SMHI:
        if u <= 0.0:
            return -2.0
        return -2.0 * (1.0 - u) if u < 1.0 else 0.0
    if code == SQHI:
        return -2.0 * (1.0 - u) if u < 1.0 else 0.0
    if code == EXPO:
        return -math.exp(-u)
    if code == ABSO:
        if u > 1.0:
            return 1.0
        if u < 1.0:
            return -1.0
        return 0.0
    return -2.0 * (1.0 - u)


@njit(cache=True)
def risk_and_grad(code, s, a, b, w_le, w_gt, ga, gb):
    """Weighted risk; writes d/da into ``ga`` and d/db into ``gb``."""
    n, m = w_le.shape
    total = 0.0
    for k in range(m):
        gb[k] = 0.0
    for i in range(n):
        ai = a[i]
        g = 0.0
        for k in range(m):
            wl = w_le[i, k]
            wg = w_gt[i, k]
            if wl != 0.0:
                u = b[k] - ai
                total += wl * phi_val(code, s, u)
                d = wl * phi_der(code, s, u)
                g -= d
                gb[k] += d
            if wg != 0.0:
                u = ai - b[k]
                total += wg * phi_val(code, s, u)
                d = wg * phi_der(code, s, u)
                g += d
                gb[k] -= d
        ga[i] = g
    return total


@njit(cache=True)
def risk_only(code, s, a, b, w_le, w_gt):
    n, m = w_le.shape
    total = 0.0
    for i in range(n):
        for k in range(m):
            if w_le[i, k] != 0.0:
                total += w_le[i, k] * phi_val(code, s, b[k] - a[i])
            if w_gt[i, k] != 0.0:
                total += w_gt[i, k] * phi_val(code, s, a[i] - b[k])
    return total


@njit(cache=True)
def bias_from_theta(theta, ordered, b):
    """b_1 = 0; ordered: b_{k+1} = b_k + c_k^2, otherwise free b_2..b_{K-1}."""
    b[0] = 0.0
    for k in range(theta.size):
        if ordered:
            b[k + 1] = b[k] + theta[k] * theta[k]
        else:
            b[k + 1] = theta[k]


@njit(cache=True)
def theta_grad(theta, ordered, gb, gt):
    m = gb.size
    if ordered:
        acc = 0.0
        # d b_j / d c_k = 2 c_k for j > k
        for k in range(m - 2, -1, -1):
            acc += gb[k + 1]
            gt[k] = 2.0 * theta[k] * acc
    else:
        for k in range(m - 1):
            gt[k] = gb[k + 1]


@njit(cache=True)
def _adam_update(params, grads, mom, vel, step, lr, beta1, beta2, eps):
    c1 = 1.0 - beta1 ** step
    c2 = 1.0 - beta2 ** step
    for j in range(params.size):
        g = grads[j]
        mom[j] = beta1 * mom[j] + (1.0 - beta1) * g
        vel[j] = beta2 * vel[j] + (1.0 - beta2) * g * g
        params[j] -= lr * (mom[j] / c1) / (math.sqrt(vel[j] / c2) + eps)


@njit(cache=True)
def adam_full_batch(code, s, w_le, w_gt, a, theta, ordered, T, lr_base, lr_e0, lr_e1,
                    beta1, beta2, eps, trace_every):
    """Full-batch Adam over (a, theta) for T epochs at lr = lr_base^(e0 + e1 t / T).

    Returns (final risk, trace of risks every ``trace_every`` epochs); the
    final risk is NaN if the iterates stopped being finite.
    """
    n = a.size
    m = theta.size + 1
    p = n + theta.size
    params = np.empty(p)
    params[:n] = a
    params[n:] = theta
    grads = np.zeros(p)
    mom = np.zeros(p)
    vel = np.zeros(p)
    b = np.empty(m)
    ga = np.empty(n)
    gb = np.empty(m)
    gt = np.empty(theta.size)
    n_trace = (T + trace_every - 1) // trace_every
    trace = np.empty(n_trace)
    ti = 0
    val = 0.0
    for t in range(T):
        bias_from_theta(params[n:], ordered, b)
        val = risk_and_grad(code, s, params[:n], b, w_le, w_gt, ga, gb)
        if not math.isfinite(val):
            a[:] = params[:n]
            theta[:] = params[n:]
            return math.nan, trace[:ti]
        if t % trace_every == 0:
            trace[ti] = val
            ti += 1
        theta_grad(params[n:], ordered, gb, gt)
        grads[:n] = ga
        grads[n:] = gt
        lr = lr_base ** (lr_e0 + lr_e1 * t / T)
        _adam_update(params, grads, mom, vel, t + 1, lr, beta1, beta2, eps)
    a[:] = params[:n]
    theta[:] = params[n:]
    bias_from_theta(theta, ordered, b)
    val = risk_only(code, s, a, b, w_le, w_gt)
    return val, trace[:ti]


@njit(cache=True)
def sample_weights(at, y, m, k):
    """(w_le, w_gt) for a single observed label y (1-based) at threshold k (0-based)."""
    if at:
        return (1.0 if k + 1 >= y else 0.0), (1.0 if k + 1 < y else 0.0)
    return (1.0 if k + 1 == y else 0.0), (1.0 if k + 2 == y else 0.0)


@njit(cache=True)
def empirical_risk(code, s, at, a, b, idx, y):
    m = b.size
    total = 0.0
    for j in range(idx.size):
        ai = a[idx[j]]
        for k in range(m):
            wl, wg = sample_weights(at, y[j], m, k)
            if wl != 0.0:
                total += phi_val(code, s, b[k] - ai)
            if wg != 0.0:
                total += phi_val(code, s, ai - b[k])
    return total / idx.size


@njit(cache=True)
def adam_minibatch_epoch(code, s, at, params, n_a, ordered, idx, y, order, batch,
                         mom, vel, step, lr, beta1, beta2, eps):
    """One epoch of mini-batch Adam over a table of 1DT values; returns the step count."""
    m = params.size - n_a + 1
    b = np.empty(m)
    grads = np.zeros(params.size)
    gb = np.empty(m)
    gt = np.empty(m - 1)
    n = order.size
    for start in range(0, n, batch):
        stop = min(start + batch, n)
        cnt = stop - start
        bias_from_theta(params[n_a:], ordered, b)
        grads[:] = 0.0
        gb[:] = 0.0
        for r in range(start, stop):
            j = order[r]
            ia = idx[j]
            ai = params[ia]
            for k in range(m):
                wl, wg = sample_weights(at, y[j], m, k)
                if wl != 0.0:
                    d = phi_der(code, s, b[k] - ai) / cnt
                    grads[ia] -= d
                    gb[k] += d
                if wg != 0.0:
                    d = phi_der(code, s, ai - b[k]) / cnt
                    grads[ia] += d
                    gb[k] -= d
        theta_grad(params[n_a:], ordered, gb, gt)
        grads[n_a:] = gt
        step += 1
        _adam_update(params, grads, mom, vel, step, lr, beta1, beta2, eps)
    return step
