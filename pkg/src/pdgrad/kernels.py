"""Compiled inner loops for the randomized solver on structured instances.

Two instance families get a fused per-run kernel (the whole iteration loop
runs inside one compiled function):

* dense quadratic stacks   f_i(x) = 1/2 x'Q_i x + b_i'x + c_i
* block tridiagonal family f_i supported on block i with an O(n~) matvec

Everything else (arbitrary gradient oracles) goes through the generic
Python loop in :mod:`pdgrad.rpdg`, which implements the identical update
rules and consumes the identical sampling stream.

With ``PDGRAD_NO_NUMBA=1`` these kernels run un-jitted (pure numpy);
``bench/bench_kernels.py`` compares the two paths.
"""

import numpy as np

from ._accel import maybe_njit, pick_index, uniform01

SET_ALL = 0
SET_BOX = 1
SET_BALL = 2

RESUM_PERIOD = 4096


@maybe_njit
def prox_into(a, anchor, mu, eta, lam1, set_kind, lo, hi, center, radius, out):
    """Composite prox step: minimize <a,x> + lam1*|x|_1 + (mu+eta)/2 |x|^2 - eta*<anchor,x>.

    Coordinate-wise soft threshold plus clamping for boxes; Euclidean ball
    handled by projecting the unconstrained minimizer (requires lam1 == 0,
    enforced by the callers).
    """
    n = a.shape[0]
    denom = mu + eta
    for j in range(n):
        v = eta * anchor[j] - a[j]
        if lam1 > 0.0:
            if v > lam1:
                v -= lam1
            elif v < -lam1:
                v += lam1
            else:
                v = 0.0
        x = v / denom
        if set_kind == SET_BOX:
            if x < lo[j]:
                x = lo[j]
            elif x > hi[j]:
                x = hi[j]
        out[j] = x
    if set_kind == SET_BALL:
        d2 = 0.0
        for j in range(n):
            d2 += (out[j] - center[j]) ** 2
        d = np.sqrt(d2)
        if d > radius:
            s = radius / d
            for j in range(n):
                out[j] = center[j] + s * (out[j] - center[j])


@maybe_njit
def rpdg_dense_quad(
    qs,
    bs,
    qsum,
    bsum,
    csum,
    mu,
    hlam1,
    hlin,
    hconst,
    set_kind,
    lo,
    hi,
    center,
    radius,
    tau,
    eta,
    alpha,
    probs,
    cum,
    x0,
    k_max,
    seed,
    x_star,
    has_star,
    record_obj,
):
    """Full randomized primal-dual run on a dense quadratic stack.

    Returns (x_k, x_bar, dist, obj, obj_erg, g, y) where dist[t-1] is
    1/2 |x^t - x*|^2 (NaN when no x* given), obj / obj_erg the composite
    objective at x^t and at the weighted running mean (NaN when not
    recorded), g the aggregated gradient and y the (m, n) dual memory.
    """
    m = qs.shape[0]
    n = x0.shape[0]
    x_prev = x0.copy()
    x_pp = x0.copy()
    xu = np.empty((m, n))
    y = np.empty((m, n))
    for i in range(m):
        for j in range(n):
            xu[i, j] = x0[j]
        yi = np.dot(qs[i], x0)
        for j in range(n):
            y[i, j] = yi[j] + bs[i, j]
    g = np.zeros(n)
    for i in range(m):
        for j in range(n):
            g[j] += y[i, j]
    x_bar = x0.copy()
    r_erg = 0.0
    dist = np.full(k_max, np.nan)
    obj = np.full(k_max, np.nan)
    obj_erg = np.full(k_max, np.nan)
    x_new = np.empty(n)
    a = np.empty(n)
    for t in range(1, k_max + 1):
        u = uniform01(seed, t)
        it = pick_index(cum, u)
        xt = alpha * (x_prev - x_pp) + x_prev
        xu_new = (xt + tau * xu[it]) / (1.0 + tau)
        y_new = np.dot(qs[it], xu_new) + bs[it]
        pinv = 1.0 / probs[it]
        for j in range(n):
            a[j] = g[j] + pinv * (y_new[j] - y[it, j]) + hlin[j]
        prox_into(a, x_prev, mu, eta, hlam1, set_kind, lo, hi, center, radius, x_new)
        for j in range(n):
            g[j] += y_new[j] - y[it, j]
            xu[it, j] = xu_new[j]
            y[it, j] = y_new[j]
        if t % RESUM_PERIOD == 0:
            for j in range(n):
                g[j] = 0.0
            for i in range(m):
                for j in range(n):
                    g[j] += y[i, j]
        r_erg = r_erg * alpha + 1.0
        w = 1.0 / r_erg
        for j in range(n):
            x_bar[j] = (1.0 - w) * x_bar[j] + w * x_new[j]
        if has_star:
            d2 = 0.0
            for j in range(n):
                d2 += (x_new[j] - x_star[j]) ** 2
            dist[t - 1] = 0.5 * d2
        if record_obj:
            obj[t - 1] = _dense_objective(
                qsum, bsum, csum, mu, hlam1, hlin, hconst, x_new
            )
            obj_erg[t - 1] = _dense_objective(
                qsum, bsum, csum, mu, hlam1, hlin, hconst, x_bar
            )
        for j in range(n):
            x_pp[j] = x_prev[j]
            x_prev[j] = x_new[j]
    return x_prev, x_bar, dist, obj, obj_erg, g, y


@maybe_njit
def _dense_objective(qsum, bsum, csum, mu, hlam1, hlin, hconst, x):
    qx = np.dot(qsum, x)
    val = csum + hconst
    for j in range(x.shape[0]):
        val += 0.5 * x[j] * qx[j] + bsum[j] * x[j] + hlin[j] * x[j]
        val += 0.5 * mu * x[j] * x[j]
        if hlam1 > 0.0:
            val += hlam1 * abs(x[j])
    return val


@maybe_njit
def _tridiag_block_grad(xb, kappa, scale, out):
    """out = scale * (A xb - e1) with A = tridiag(-1, 2, -1), A[-1,-1] = kappa."""
    nt = xb.shape[0]
    if nt == 1:
        out[0] = scale * (kappa * xb[0] - 1.0)
        return
    out[0] = scale * (2.0 * xb[0] - xb[1] - 1.0)
    for j in range(1, nt - 1):
        out[j] = scale * (-xb[j - 1] + 2.0 * xb[j] - xb[j + 1])
    out[nt - 1] = scale * (-xb[nt - 2] + kappa * xb[nt - 1])


@maybe_njit
def _tridiag_objective(x, m, nt, kappa, scale, mu):
    """Sum over blocks of scale*(1/2 xb'A xb - xb[0]) plus mu/2 |x|^2."""
    val = 0.0
    for i in range(m):
        o = i * nt
        quad = 0.0
        if nt == 1:
            quad = kappa * x[o] * x[o]
        else:
            quad = 2.0 * x[o] * x[o] - 2.0 * x[o] * x[o + 1]
            for j in range(1, nt - 1):
                quad += 2.0 * x[o + j] * x[o + j] - 2.0 * x[o + j] * x[o + j + 1]
            quad += kappa * x[o + nt - 1] * x[o + nt - 1]
        val += scale * (0.5 * quad - x[o])
    for j in range(m * nt):
        val += 0.5 * mu * x[j] * x[j]
    return val


@maybe_njit
def rpdg_tridiag(
    m,
    nt,
    kappa,
    scale,
    mu,
    tau,
    eta,
    alpha,
    probs,
    cum,
    x0,
    k_max,
    seed,
    x_star,
    has_star,
    record_obj,
):
    """Full randomized primal-dual run on the block tridiagonal family.

    Component i only touches block i, so dual memory stores one block per
    component. Unconstrained, h = 0. Returns the same tuple layout as
    :func:`rpdg_dense_quad` with y of shape (m, nt).
    """
    n = m * nt
    x_prev = x0.copy()
    x_pp = x0.copy()
    xu = np.empty((m, nt))
    y = np.empty((m, nt))
    for i in range(m):
        for j in range(nt):
            xu[i, j] = x0[i * nt + j]
        _tridiag_block_grad(xu[i], kappa, scale, y[i])
    g = np.zeros(n)
    for i in range(m):
        for j in range(nt):
            g[i * nt + j] = y[i, j]
    x_bar = x0.copy()
    r_erg = 0.0
    dist = np.full(k_max, np.nan)
    obj = np.full(k_max, np.nan)
    obj_erg = np.full(k_max, np.nan)
    x_new = np.empty(n)
    xu_new = np.empty(nt)
    y_new = np.empty(nt)
    denom = mu + eta
    for t in range(1, k_max + 1):
        u = uniform01(seed, t)
        it = pick_index(cum, u)
        o = it * nt
        # extrapolated point, then the sampled component's dual block
        for j in range(nt):
            xtj = alpha * (x_prev[o + j] - x_pp[o + j]) + x_prev[o + j]
            xu_new[j] = (xtj + tau * xu[it, j]) / (1.0 + tau)
        _tridiag_block_grad(xu_new, kappa, scale, y_new)
        pinv = 1.0 / probs[it]
        # unconstrained Euclidean prox: x = (eta*x_prev - a) / (mu + eta)
        for j in range(n):
            x_new[j] = (eta * x_prev[j] - g[j]) / denom
        for j in range(nt):
            dy = y_new[j] - y[it, j]
            x_new[o + j] = (eta * x_prev[o + j] - g[o + j] - pinv * dy) / denom
            g[o + j] += dy
            xu[it, j] = xu_new[j]
            y[it, j] = y_new[j]
        if t % RESUM_PERIOD == 0:
            for i in range(m):
                for j in range(nt):
                    g[i * nt + j] = y[i, j]
        r_erg = r_erg * alpha + 1.0
        w = 1.0 / r_erg
        for j in range(n):
            x_bar[j] = (1.0 - w) * x_bar[j] + w * x_new[j]
        if has_star:
            d2 = 0.0
            for j in range(n):
                d2 += (x_new[j] - x_star[j]) ** 2
            dist[t - 1] = 0.5 * d2
        if record_obj:
            obj[t - 1] = _tridiag_objective(x_new, m, nt, kappa, scale, mu)
            obj_erg[t - 1] = _tridiag_objective(x_bar, m, nt, kappa, scale, mu)
        for j in range(n):
            x_pp[j] = x_prev[j]
            x_prev[j] = x_new[j]
    return x_prev, x_bar, dist, obj, obj_erg, g, y
