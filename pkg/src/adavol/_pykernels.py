"""Pure-Python implementations of the hot loops.

Every function here has an identical twin in ``_kernels.pyx``; the two are
kept operation-for-operation aligned so results agree to rounding. Arrays
passed as outputs are filled in place.
"""

import math

import numpy as np

VAR_FLOOR = 1e-12

# layout of the scalar block carried by an AdaVol state
T, MEAN, VAR, PRED_V, BATCH_COUNT = range(5)


def project_capped_simplex(v, cap):
    """Euclidean projection of ``v`` onto ``{x >= 0, sum(x) <= cap}``."""
    v = [float(a) for a in v]
    w = [a if a > 0.0 else 0.0 for a in v]
    if sum(w) <= cap:
        return w
    u = sorted(v, reverse=True)
    css = 0.0
    tau = 0.0
    for j, uj in enumerate(u, start=1):
        css += uj
        t = (css - cap) / j
        if uj - t > 0.0:
            tau = t
    return [a - tau if a - tau > 0.0 else 0.0 for a in v]


def simulate_path(z, omega, alpha, beta, v0, out_x, out_v):
    p, q = len(alpha), len(beta)
    alpha = [float(a) for a in alpha]
    beta = [float(b) for b in beta]
    x2lag = [v0] * p
    vlag = [v0] * q
    for t in range(len(z)):
        if t == 0:
            v = v0
        else:
            v = omega
            for i in range(p):
                v += alpha[i] * x2lag[i]
            for j in range(q):
                v += beta[j] * vlag[j]
        x = math.sqrt(v) * z[t]
        out_x[t] = x
        out_v[t] = v
        if p:
            x2lag.insert(0, x * x)
            x2lag.pop()
        if q:
            vlag.insert(0, v)
            vlag.pop()


def qml_objective(x, level, alpha, beta, vte, x2_init, v_init, grad_out=None, v_out=None):
    """Run the variance filter over ``x`` and return the summed QL loss.

    ``level`` is omega in the full parameterization and gamma^2 under
    variance targeting. Gradients are with respect to (omega, alpha, beta)
    or (alpha, beta) respectively.
    """
    p, q = len(alpha), len(beta)
    alpha = [float(a) for a in alpha]
    beta = [float(b) for b in beta]
    off = 0 if vte else 1
    d = p + q + off
    want_grad = grad_out is not None
    x2lag = [float(x2_init)] * p
    vlag = [float(v_init)] * q
    dvlag = [[0.0] * d for _ in range(q)]
    grad = [0.0] * d
    total = 0.0
    for t in range(len(x)):
        v = level
        if vte:
            for i in range(p):
                v += alpha[i] * (x2lag[i] - level)
            for j in range(q):
                v += beta[j] * (vlag[j] - level)
        else:
            for i in range(p):
                v += alpha[i] * x2lag[i]
            for j in range(q):
                v += beta[j] * vlag[j]
        if v < VAR_FLOOR:
            v = VAR_FLOOR
        xt = float(x[t])
        x2 = xt * xt
        total += 0.5 * (x2 / v + math.log(v))
        if v_out is not None:
            v_out[t] = v
        if want_grad:
            dv = [0.0] * d
            if not vte:
                dv[0] = 1.0
            for i in range(p):
                dv[off + i] = x2lag[i] - level if vte else x2lag[i]
            for j in range(q):
                dv[off + p + j] = vlag[j] - level if vte else vlag[j]
            for j in range(q):
                bj = beta[j]
                lag = dvlag[j]
                for k in range(d):
                    dv[k] += bj * lag[k]
            coef = (v - x2) / (2.0 * v * v)
            for k in range(d):
                grad[k] += dv[k] * coef
            if q:
                dvlag.insert(0, dv)
                dvlag.pop()
        if p:
            x2lag.insert(0, x2)
            x2lag.pop()
        if q:
            vlag.insert(0, v)
            vlag.pop()
    if want_grad:
        for k in range(d):
            grad_out[k] = grad[k]
    return total


def adavol_pass(x, theta, accum, scal, lag_x2, lag_v, lag_dv, pred_dv, batch_g,
                eta, margin, alt_mean, minibatch, stop_tol, stop_window,
                traj_out, pred_out, var_out):
    """Fold AdaVol updates over ``x``; state arrays are updated in place.

    Returns the number of observations consumed (less than ``len(x)`` only
    when the early-stop rule fires).
    """
    p, q = lag_x2.shape[0], lag_v.shape[0]
    d = p + q
    cap = 1.0 - margin
    th = [float(a) for a in theta]
    G = [float(a) for a in accum]
    x2lag = [float(a) for a in lag_x2]
    vlag = [float(a) for a in lag_v]
    dvlag = [[float(a) for a in row] for row in lag_dv]
    pdv = [float(a) for a in pred_dv]
    bg = [float(a) for a in batch_g]
    t = int(scal[T])
    mean = float(scal[MEAN])
    var = float(scal[VAR])
    pred_v = float(scal[PRED_V])
    bcount = int(scal[BATCH_COUNT])
    n = len(x)
    done = n
    for i in range(n):
        xt = float(x[i])
        x2 = xt * xt
        t += 1
        if alt_mean:
            mean = t / (t + 1.0) * mean + xt / (t + 1.0)
            dev = xt - mean
            var = (t - 1.0) / t * var + dev * dev / t
        else:
            delta = xt - mean
            mean += delta / t
            var = ((t - 1.0) * var + delta * (xt - mean)) / t
        if t == 1:
            v = x2
            dv = [0.0] * d
        else:
            v = pred_v
            dv = pdv
        if v < VAR_FLOOR:
            v = VAR_FLOOR
        coef = (v - x2) / (2.0 * v * v)
        for k in range(d):
            bg[k] += dv[k] * coef
        bcount += 1
        if bcount == minibatch:
            step = [0.0] * d
            for k in range(d):
                g = bg[k] / minibatch
                G[k] += g * g
                step[k] = th[k] - eta * g / math.sqrt(G[k])
                bg[k] = 0.0
            bcount = 0
            th = project_capped_simplex(step, cap)
        if p:
            x2lag.insert(0, x2)
            x2lag.pop()
        if q:
            vlag.insert(0, v)
            vlag.pop()
            dvlag.insert(0, list(dv))
            dvlag.pop()
        g2 = var if var > VAR_FLOOR else VAR_FLOOR
        nx = t if t < p else p
        nv = t if t < q else q
        pv = g2
        pdv = [0.0] * d
        for k in range(nx):
            dev = x2lag[k] - g2
            pv += th[k] * dev
            pdv[k] = dev
        for j in range(nv):
            dev = vlag[j] - g2
            pv += th[p + j] * dev
            pdv[p + j] = dev
        for j in range(q):
            bj = th[p + j]
            lag = dvlag[j]
            for k in range(d):
                pdv[k] += bj * lag[k]
        if pv < VAR_FLOOR:
            pv = VAR_FLOOR
        pred_v = pv
        for k in range(d):
            traj_out[i, k] = th[k]
        pred_out[i] = pred_v
        var_out[i] = var
        if stop_tol > 0.0 and i >= stop_window:
            gap = 0.0
            for k in range(d):
                gap = max(gap, abs(traj_out[i, k] - traj_out[i - stop_window, k]))
            if gap < stop_tol:
                done = i + 1
                break
    theta[:] = th
    accum[:] = G
    lag_x2[:] = x2lag
    lag_v[:] = vlag
    if q:
        lag_dv[:, :] = np.asarray(dvlag, dtype=float).reshape(q, d)
    pred_dv[:] = pdv
    batch_g[:] = bg
    scal[T] = t
    scal[MEAN] = mean
    scal[VAR] = var
    scal[PRED_V] = pred_v
    scal[BATCH_COUNT] = bcount
    return done
