"""Compiled inner loops for the mean-field solver.

All kernels take the network in CSR form:

    h, w            biases (N,), edge weights (E,) in (child, parent) order
    p_ptr, p_idx    parents of i are p_idx[p_ptr[i]:p_ptr[i+1]], weights w[same]
    c_ptr, c_idx,   children of j are c_idx[c_ptr[j]:c_ptr[j+1]],
    c_edge          with weights w[c_edge[same]]

plus the mean-field state ``mu`` (N,), ``xi`` (N,) and a boolean ``hidden`` mask.
"""

import math

import numpy as np
from numba import njit

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
ROOT_FTOL = 1e-13
ROOT_MAXIT = 200


@njit(cache=True)
def log_bern_mgf(mu, a):
    """ln(1 - mu + mu e^a), i.e. ln E[e^{a S}] for S ~ Bernoulli(mu)."""
    if mu == 0.0 or a == 0.0:
        return 0.0
    if mu == 1.0:
        return a
    if a > 0.0:
        return a + math.log(mu + (1.0 - mu) * math.exp(-a))
    return math.log1p(mu * math.expm1(a))


@njit(cache=True)
def logaddexp(a, b):
    if a == -np.inf and b == -np.inf:
        return -np.inf
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@njit(cache=True)
def log_sigmoid(x):
    if x >= 0.0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@njit(cache=True)
def sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def entropy(mu):
    s = 0.0
    if mu > 0.0:
        s -= mu * math.log(mu)
    if mu < 1.0:
        s -= (1.0 - mu) * math.log1p(-mu)
    return s


@njit(cache=True)
def mean_input(i, h, w, p_ptr, p_idx, mu):
    """<z_i> = h_i + sum_j J_ij mu_j."""
    s = h[i]
    for e in range(p_ptr[i], p_ptr[i + 1]):
        s += w[e] * mu[p_idx[e]]
    return s


@njit(cache=True)
def log_moment(i, t, h, w, p_ptr, p_idx, mu):
    """ln <e^{t z_i}> under independent Bernoulli parents, as a sum of logs."""
    s = t * h[i]
    for e in range(p_ptr[i], p_ptr[i + 1]):
        s += log_bern_mgf(mu[p_idx[e]], t * w[e])
    return s


@njit(cache=True)
def log_moment_sum(i, xi_i, h, w, p_ptr, p_idx, mu):
    """ln <e^{-xi z_i} + e^{(1-xi) z_i}>."""
    return logaddexp(log_moment(i, -xi_i, h, w, p_ptr, p_idx, mu),
                     log_moment(i, 1.0 - xi_i, h, w, p_ptr, p_idx, mu))


@njit(cache=True)
def xi_objective(i, x, m_i, h, w, p_ptr, p_idx, mu):
    return x * m_i + log_moment_sum(i, x, h, w, p_ptr, p_idx, mu)


@njit(cache=True)
def _ratio_term(log_weight, mu, a):
    """exp(log_weight) * (1 - e^a) / (1 - mu + mu e^a), evaluated in log space."""
    if a == 0.0:
        return 0.0
    if a < 0.0:
        log_num = math.log(-math.expm1(a))
        sign = 1.0
    else:
        log_num = a + math.log(-math.expm1(-a))
        sign = -1.0
    return sign * math.exp(log_weight + log_num - log_bern_mgf(mu, a))


@njit(cache=True)
def _tilted_mean(log_weight, mu, a):
    """exp(log_weight) * mu e^a / (1 - mu + mu e^a)."""
    if mu == 0.0:
        return 0.0
    return math.exp(log_weight + math.log(mu) + a - log_bern_mgf(mu, a))


@njit(cache=True)
def kappa_from_logs(la, lb, mu_j, xi_i, w_ij):
    """K_ij given the two log-moments of child i and the parent mean mu_j."""
    log_phi = log_sigmoid(lb - la)
    log_one_minus_phi = log_sigmoid(la - lb)
    return (_ratio_term(log_one_minus_phi, mu_j, -xi_i * w_ij)
            + _ratio_term(log_phi, mu_j, (1.0 - xi_i) * w_ij))


@njit(cache=True)
def kappa(i, e, h, w, p_ptr, p_idx, mu, xi):
    """K_ij for the edge e = (i, j)."""
    la = log_moment(i, -xi[i], h, w, p_ptr, p_idx, mu)
    lb = log_moment(i, 1.0 - xi[i], h, w, p_ptr, p_idx, mu)
    return kappa_from_logs(la, lb, mu[p_idx[e]], xi[i], w[e])


@njit(cache=True)
def golden_xi(i, m_i, tol, h, w, p_ptr, p_idx, mu):
    """Golden-section minimum of the xi objective over [0, 1], endpoints included."""
    a = 0.0
    b = 1.0
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = xi_objective(i, c, m_i, h, w, p_ptr, p_idx, mu)
    fd = xi_objective(i, d, m_i, h, w, p_ptr, p_idx, mu)
    while b - a > tol:
        if fc < fd:
            b = d
            d = c
            fd = fc
            c = b - INV_PHI * (b - a)
            fc = xi_objective(i, c, m_i, h, w, p_ptr, p_idx, mu)
        else:
            a = c
            c = d
            fc = fd
            d = a + INV_PHI * (b - a)
            fd = xi_objective(i, d, m_i, h, w, p_ptr, p_idx, mu)
    if fc < fd:
        x, fx = c, fc
    else:
        x, fx = d, fd
    f0 = xi_objective(i, 0.0, m_i, h, w, p_ptr, p_idx, mu)
    if f0 < fx:
        x, fx = 0.0, f0
    f1 = xi_objective(i, 1.0, m_i, h, w, p_ptr, p_idx, mu)
    if f1 < fx:
        x, fx = 1.0, f1
    return x, fx


@njit(cache=True)
def xi_update_node(i, tol, h, w, p_ptr, p_idx, mu, xi):
    m_i = mean_input(i, h, w, p_ptr, p_idx, mu)
    f_old = xi_objective(i, xi[i], m_i, h, w, p_ptr, p_idx, mu)
    x, fx = golden_xi(i, m_i, tol, h, w, p_ptr, p_idx, mu)
    # golden section may land a hair off a flat or already-optimal value
    if fx <= f_old:
        xi[i] = x


@njit(cache=True)
def xi_pass(tol, h, w, p_ptr, p_idx, mu, xi):
    for i in range(h.shape[0]):
        xi_update_node(i, tol, h, w, p_ptr, p_idx, mu, xi)


@njit(cache=True)
def bound_terms(h, w, p_ptr, p_idx, mu, xi, hidden):
    """(quadratic, bias, xi-linear, log-moment, entropy) parts of the bound."""
    n = h.shape[0]
    quad = 0.0
    bias = 0.0
    xi_lin = 0.0
    logmom = 0.0
    ent = 0.0
    for i in range(n):
        field = 0.0
        for e in range(p_ptr[i], p_ptr[i + 1]):
            field += w[e] * mu[p_idx[e]]
        quad += mu[i] * field
        bias += h[i] * mu[i]
        xi_lin += xi[i] * (field + h[i])
        logmom += log_moment_sum(i, xi[i], h, w, p_ptr, p_idx, mu)
        if hidden[i]:
            ent += entropy(mu[i])
    return quad, bias, xi_lin, logmom, ent


@njit(cache=True)
def _log_moment_without(k, skip, t, h, w, p_ptr, p_idx, mu):
    s = t * h[k]
    for e in range(p_ptr[k], p_ptr[k + 1]):
        if p_idx[e] != skip:
            s += log_bern_mgf(mu[p_idx[e]], t * w[e])
    return s


@njit(cache=True)
def _blanket_slope(x, c0, n_ch, la_rest, lb_rest, a_arr, b_arr, xi_ch, w_ch):
    """dL/dmu_i expressed in logit units: effective input minus logit(mu_i)."""
    m = sigmoid(x)
    g = c0
    for q in range(n_ch):
        la = la_rest[q] + log_bern_mgf(m, a_arr[q])
        lb = lb_rest[q] + log_bern_mgf(m, b_arr[q])
        g += kappa_from_logs(la, lb, m, xi_ch[q], w_ch[q])
    return g - x


@njit(cache=True)
def _local_objective(m, c0, n_ch, la_rest, lb_rest, a_arr, b_arr):
    """Terms of the bound that depend on mu_i alone."""
    val = m * c0 + entropy(m)
    for q in range(n_ch):
        la = la_rest[q] + log_bern_mgf(m, a_arr[q])
        lb = lb_rest[q] + log_bern_mgf(m, b_arr[q])
        val -= logaddexp(la, lb)
    return val


@njit(cache=True)
def mu_update_node(i, h, w, p_ptr, p_idx, c_ptr, c_idx, c_edge, mu, xi):
    """Solve the fixed-point equation for mu_i with every other parameter fixed.

    The children's K terms depend on mu_i itself, so the equation is solved
    self-consistently by bracketed root finding in logit space. The root is
    accepted only if it does not lower the bound.
    """
    c0 = mean_input(i, h, w, p_ptr, p_idx, mu)
    n_ch = c_ptr[i + 1] - c_ptr[i]
    la_rest = np.empty(n_ch)
    lb_rest = np.empty(n_ch)
    a_arr = np.empty(n_ch)
    b_arr = np.empty(n_ch)
    xi_ch = np.empty(n_ch)
    w_ch = np.empty(n_ch)
    for q in range(n_ch):
        k = c_idx[c_ptr[i] + q]
        wk = w[c_edge[c_ptr[i] + q]]
        c0 += wk * (mu[k] - xi[k])
        la_rest[q] = _log_moment_without(k, i, -xi[k], h, w, p_ptr, p_idx, mu)
        lb_rest[q] = _log_moment_without(k, i, 1.0 - xi[k], h, w, p_ptr, p_idx, mu)
        a_arr[q] = -xi[k] * wk
        b_arr[q] = (1.0 - xi[k]) * wk
        xi_ch[q] = xi[k]
        w_ch[q] = wk

    old = mu[i]
    if old <= 0.0:
        x0 = -40.0
    elif old >= 1.0:
        x0 = 40.0
    else:
        x0 = math.log(old) - math.log1p(-old)
        x0 = min(max(x0, -40.0), 40.0)

    f0 = _blanket_slope(x0, c0, n_ch, la_rest, lb_rest, a_arr, b_arr, xi_ch, w_ch)
    if f0 == 0.0:
        root = x0
    else:
        # expand a bracket in the uphill direction; the slope is bounded so this ends
        direction = 1.0 if f0 > 0.0 else -1.0
        step = 1.0
        xa, fa = x0, f0
        xb = x0 + direction * step
        fb = _blanket_slope(xb, c0, n_ch, la_rest, lb_rest, a_arr, b_arr, xi_ch, w_ch)
        it = 0
        while fb * direction > 0.0 and it < 200:
            xa, fa = xb, fb
            step *= 2.0
            xb = x0 + direction * step
            fb = _blanket_slope(xb, c0, n_ch, la_rest, lb_rest, a_arr, b_arr, xi_ch, w_ch)
            it += 1
        # Illinois false position on [xa, xb], fa and fb of opposite sign
        root = xb
        side = 0
        for _ in range(ROOT_MAXIT):
            if fb == 0.0:
                root = xb
                break
            xc = (fa * xb - fb * xa) / (fa - fb)
            fc = _blanket_slope(xc, c0, n_ch, la_rest, lb_rest, a_arr, b_arr, xi_ch, w_ch)
            root = xc
            if abs(fc) <= ROOT_FTOL or abs(xb - xa) <= 1e-15 * (1.0 + abs(xc)):
                break
            if fc * fb > 0.0:
                xb, fb = xc, fc
                if side == -1:
                    fa *= 0.5
                side = -1
            else:
                xa, fa = xc, fc
                if side == 1:
                    fb *= 0.5
                side = 1

    new = sigmoid(root)
    if (_local_objective(new, c0, n_ch, la_rest, lb_rest, a_arr, b_arr)
            < _local_objective(old, c0, n_ch, la_rest, lb_rest, a_arr, b_arr)):
        return old
    return new


@njit(cache=True)
def mu_sweep(h, w, p_ptr, p_idx, c_ptr, c_idx, c_edge, mu, xi, hidden):
    """One asynchronous pass over hidden nodes in ascending index; returns max |dmu|."""
    delta = 0.0
    for i in range(h.shape[0]):
        if hidden[i]:
            new = mu_update_node(i, h, w, p_ptr, p_idx, c_ptr, c_idx, c_edge, mu, xi)
            d = abs(new - mu[i])
            if d > delta:
                delta = d
            mu[i] = new
    return delta


@njit(cache=True)
def phi(i, h, w, p_ptr, p_idx, mu, xi):
    la = log_moment(i, -xi[i], h, w, p_ptr, p_idx, mu)
    lb = log_moment(i, 1.0 - xi[i], h, w, p_ptr, p_idx, mu)
    return sigmoid(lb - la)


@njit(cache=True)
def weight_gradient(i, e, h, w, p_ptr, p_idx, mu, xi):
    """Partial derivative of the bound in the weight of edge e = (i, j)."""
    la = log_moment(i, -xi[i], h, w, p_ptr, p_idx, mu)
    lb = log_moment(i, 1.0 - xi[i], h, w, p_ptr, p_idx, mu)
    mu_j = mu[p_idx[e]]
    x = xi[i]
    return (-(x - mu[i]) * mu_j
            + x * _tilted_mean(log_sigmoid(la - lb), mu_j, -x * w[e])
            - (1.0 - x) * _tilted_mean(log_sigmoid(lb - la), mu_j, (1.0 - x) * w[e]))


@njit(cache=True)
def all_gradients(h, w, p_ptr, p_idx, mu, xi):
    """Gradients of the bound for every bias and every edge weight."""
    n = h.shape[0]
    gh = np.empty(n)
    gw = np.empty(w.shape[0])
    for i in range(n):
        la = log_moment(i, -xi[i], h, w, p_ptr, p_idx, mu)
        lb = log_moment(i, 1.0 - xi[i], h, w, p_ptr, p_idx, mu)
        log_phi = log_sigmoid(lb - la)
        log_1mphi = log_sigmoid(la - lb)
        x = xi[i]
        gh[i] = mu[i] - math.exp(log_phi)
        for e in range(p_ptr[i], p_ptr[i + 1]):
            mu_j = mu[p_idx[e]]
            gw[e] = (-(x - mu[i]) * mu_j
                     + x * _tilted_mean(log_1mphi, mu_j, -x * w[e])
                     - (1.0 - x) * _tilted_mean(log_phi, mu_j, (1.0 - x) * w[e]))
    return gh, gw
