# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops; mirrors ``_pykernels`` operation for operation."""

from libc.math cimport sqrt, log, fabs
from libc.stdlib cimport malloc, free
from libc.string cimport memcpy, memset

import numpy as np

cdef double VAR_FLOOR = 1e-12

cdef enum:
    T = 0
    MEAN = 1
    VAR = 2
    PRED_V = 3
    BATCH_COUNT = 4


cdef void _project(double* v, Py_ssize_t d, double cap, double* out, double* work) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s = 0.0, css = 0.0, tau = 0.0, t, key
    for i in range(d):
        out[i] = v[i] if v[i] > 0.0 else 0.0
        s += out[i]
    if s <= cap:
        return
    # descending insertion sort into work
    for i in range(d):
        key = v[i]
        j = i - 1
        while j >= 0 and work[j] < key:
            work[j + 1] = work[j]
            j -= 1
        work[j + 1] = key
    for j in range(d):
        css += work[j]
        t = (css - cap) / (j + 1)
        if work[j] - t > 0.0:
            tau = t
    for i in range(d):
        out[i] = v[i] - tau if v[i] - tau > 0.0 else 0.0


cdef inline void _shift(double* buf, Py_ssize_t n, double value) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(n - 1, 0, -1):
        buf[i] = buf[i - 1]
    if n > 0:
        buf[0] = value


def project_capped_simplex(v, double cap):
    cdef double[::1] vv = np.ascontiguousarray(v, dtype=np.float64)
    cdef Py_ssize_t d = vv.shape[0]
    out = np.empty(d, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double* work = <double*> malloc((d + 1) * sizeof(double))
    if d > 0:
        _project(&vv[0], d, cap, &ov[0], work)
    free(work)
    return [float(a) for a in out]


def simulate_path(const double[::1] z, double omega, const double[::1] alpha,
                  const double[::1] beta, double v0, double[::1] out_x, double[::1] out_v):
    cdef Py_ssize_t p = alpha.shape[0], q = beta.shape[0], n = z.shape[0]
    cdef Py_ssize_t t, i, j
    cdef double v, x
    cdef double* x2lag = <double*> malloc((p + 1) * sizeof(double))
    cdef double* vlag = <double*> malloc((q + 1) * sizeof(double))
    for i in range(p):
        x2lag[i] = v0
    for j in range(q):
        vlag[j] = v0
    with nogil:
        for t in range(n):
            if t == 0:
                v = v0
            else:
                v = omega
                for i in range(p):
                    v += alpha[i] * x2lag[i]
                for j in range(q):
                    v += beta[j] * vlag[j]
            x = sqrt(v) * z[t]
            out_x[t] = x
            out_v[t] = v
            _shift(x2lag, p, x * x)
            _shift(vlag, q, v)
    free(x2lag)
    free(vlag)


def qml_objective(const double[::1] x, double level, const double[::1] alpha,
                  const double[::1] beta, bint vte, double x2_init, double v_init,
                  double[::1] grad_out=None, double[::1] v_out=None):
    cdef Py_ssize_t p = alpha.shape[0], q = beta.shape[0], n = x.shape[0]
    cdef Py_ssize_t off = 0 if vte else 1
    cdef Py_ssize_t d = p + q + off
    cdef bint want_grad = grad_out is not None
    cdef bint want_v = v_out is not None
    cdef Py_ssize_t t, i, j, k
    cdef double v, xt, x2, coef, bj, total = 0.0
    cdef double* x2lag = <double*> malloc((p + 1) * sizeof(double))
    cdef double* vlag = <double*> malloc((q + 1) * sizeof(double))
    cdef double* dvlag = <double*> malloc((q * d + 1) * sizeof(double))
    cdef double* dv = <double*> malloc((d + 1) * sizeof(double))
    cdef double* grad = <double*> malloc((d + 1) * sizeof(double))
    for i in range(p):
        x2lag[i] = x2_init
    for j in range(q):
        vlag[j] = v_init
    memset(dvlag, 0, (q * d + 1) * sizeof(double))
    memset(grad, 0, (d + 1) * sizeof(double))
    with nogil:
        for t in range(n):
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
            xt = x[t]
            x2 = xt * xt
            total += 0.5 * (x2 / v + log(v))
            if want_v:
                v_out[t] = v
            if want_grad:
                if not vte:
                    dv[0] = 1.0
                for i in range(p):
                    dv[off + i] = x2lag[i] - level if vte else x2lag[i]
                for j in range(q):
                    dv[off + p + j] = vlag[j] - level if vte else vlag[j]
                for j in range(q):
                    bj = beta[j]
                    for k in range(d):
                        dv[k] += bj * dvlag[j * d + k]
                coef = (v - x2) / (2.0 * v * v)
                for k in range(d):
                    grad[k] += dv[k] * coef
                if q > 0:
                    for j in range(q - 1, 0, -1):
                        memcpy(&dvlag[j * d], &dvlag[(j - 1) * d], d * sizeof(double))
                    memcpy(dvlag, dv, d * sizeof(double))
            _shift(x2lag, p, x2)
            _shift(vlag, q, v)
    if want_grad:
        for k in range(d):
            grad_out[k] = grad[k]
    free(x2lag)
    free(vlag)
    free(dvlag)
    free(dv)
    free(grad)
    return total


def adavol_pass(const double[::1] x, double[::1] theta, double[::1] accum, double[::1] scal,
                double[::1] lag_x2, double[::1] lag_v, double[:, ::1] lag_dv,
                double[::1] pred_dv, double[::1] batch_g,
                double eta, double margin, bint alt_mean, Py_ssize_t minibatch,
                double stop_tol, Py_ssize_t stop_window,
                double[:, ::1] traj_out, double[::1] pred_out, double[::1] var_out):
    cdef Py_ssize_t p = lag_x2.shape[0], q = lag_v.shape[0]
    cdef Py_ssize_t d = p + q
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, j, k, nx, nv, done = n
    cdef double cap = 1.0 - margin
    cdef long t = <long> scal[T]
    cdef long bcount = <long> scal[BATCH_COUNT]
    cdef double mean = scal[MEAN], var = scal[VAR], pred_v = scal[PRED_V]
    cdef double xt, x2, delta, dev, v, coef, g, g2, pv, bj, gap
    cdef double* dv = <double*> malloc((d + 1) * sizeof(double))
    cdef double* step = <double*> malloc((d + 1) * sizeof(double))
    cdef double* work = <double*> malloc((d + 1) * sizeof(double))
    cdef double* dvlag = <double*> malloc((q * d + 1) * sizeof(double))
    for j in range(q):
        for k in range(d):
            dvlag[j * d + k] = lag_dv[j, k]
    with nogil:
        for i in range(n):
            xt = x[i]
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
                for k in range(d):
                    dv[k] = 0.0
            else:
                v = pred_v
                for k in range(d):
                    dv[k] = pred_dv[k]
            if v < VAR_FLOOR:
                v = VAR_FLOOR
            coef = (v - x2) / (2.0 * v * v)
            for k in range(d):
                batch_g[k] += dv[k] * coef
            bcount += 1
            if bcount == minibatch:
                for k in range(d):
                    g = batch_g[k] / minibatch
                    accum[k] += g * g
                    step[k] = theta[k] - eta * g / sqrt(accum[k])
                    batch_g[k] = 0.0
                bcount = 0
                _project(step, d, cap, &theta[0], work)
            _shift(&lag_x2[0] if p > 0 else NULL, p, x2)
            if q > 0:
                _shift(&lag_v[0], q, v)
                for j in range(q - 1, 0, -1):
                    memcpy(&dvlag[j * d], &dvlag[(j - 1) * d], d * sizeof(double))
                memcpy(dvlag, dv, d * sizeof(double))
            g2 = var if var > VAR_FLOOR else VAR_FLOOR
            nx = t if t < p else p
            nv = t if t < q else q
            pv = g2
            for k in range(d):
                pred_dv[k] = 0.0
            for k in range(nx):
                dev = lag_x2[k] - g2
                pv += theta[k] * dev
                pred_dv[k] = dev
            for j in range(nv):
                dev = lag_v[j] - g2
                pv += theta[p + j] * dev
                pred_dv[p + j] = dev
            for j in range(q):
                bj = theta[p + j]
                for k in range(d):
                    pred_dv[k] += bj * dvlag[j * d + k]
            if pv < VAR_FLOOR:
                pv = VAR_FLOOR
            pred_v = pv
            for k in range(d):
                traj_out[i, k] = theta[k]
            pred_out[i] = pred_v
            var_out[i] = var
            if stop_tol > 0.0 and i >= stop_window:
                gap = 0.0
                for k in range(d):
                    if fabs(traj_out[i, k] - traj_out[i - stop_window, k]) > gap:
                        gap = fabs(traj_out[i, k] - traj_out[i - stop_window, k])
                if gap < stop_tol:
                    done = i + 1
                    break
    for j in range(q):
        for k in range(d):
            lag_dv[j, k] = dvlag[j * d + k]
    scal[T] = t
    scal[MEAN] = mean
    scal[VAR] = var
    scal[PRED_V] = pred_v
    scal[BATCH_COUNT] = bcount
    free(dv)
    free(step)
    free(work)
    free(dvlag)
    return done
