# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled versions of the kernels in ``_pykernels``; same signatures and semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, sqrt, pow

cnp.import_array()

cdef double _SERIES_CUTOFF = 1e-2


def silu(z):
    z = np.ascontiguousarray(z, dtype=np.float64)
    out = np.empty_like(z)
    sig = np.empty_like(z)
    cdef double[::1] zf = z.reshape(-1)
    cdef double[::1] of = out.reshape(-1)
    cdef double[::1] sf = sig.reshape(-1)
    cdef Py_ssize_t i, n = zf.shape[0]
    cdef double s
    with nogil:
        for i in range(n):
            s = 1.0 / (1.0 + exp(-zf[i]))
            sf[i] = s
            of[i] = zf[i] * s
    return out, sig


def silu_backward(dout, z, sig):
    dout = np.ascontiguousarray(dout, dtype=np.float64)
    z = np.ascontiguousarray(z, dtype=np.float64)
    sig = np.ascontiguousarray(sig, dtype=np.float64)
    out = np.empty_like(z)
    cdef double[::1] df = dout.reshape(-1)
    cdef double[::1] zf = z.reshape(-1)
    cdef double[::1] sf = sig.reshape(-1)
    cdef double[::1] of = out.reshape(-1)
    cdef Py_ssize_t i, n = zf.shape[0]
    with nogil:
        for i in range(n):
            of[i] = df[i] * sf[i] * (1.0 + zf[i] * (1.0 - sf[i]))
    return out


def adam_update(double[::1] p, const double[::1] g, double[::1] m, double[::1] v,
                double lr, double beta1, double beta2, double eps, long step):
    cdef Py_ssize_t i, n = p.shape[0]
    cdef double c1 = 1.0 - pow(beta1, <double>step)
    cdef double c2 = 1.0 - pow(beta2, <double>step)
    cdef double gi, mhat, vhat
    with nogil:
        for i in range(n):
            gi = g[i]
            m[i] = beta1 * m[i] + (1.0 - beta1) * gi
            v[i] = beta2 * v[i] + (1.0 - beta2) * gi * gi
            mhat = m[i] / c1
            vhat = v[i] / c2
            p[i] -= lr * mhat / (sqrt(vhat) + eps)


def ema_update(double[::1] shadow, const double[::1] p, double decay):
    cdef Py_ssize_t i, n = shadow.shape[0]
    cdef double w = 1.0 - decay
    with nogil:
        if decay == 0.0:
            for i in range(n):
                shadow[i] = p[i]
        else:
            for i in range(n):
                shadow[i] += w * (p[i] - shadow[i])


cdef inline double _rate(double s, double bmin, double k) nogil:
    return -log1p(-(bmin + s * k))


cdef inline double _neg_log_abar(double t, double bmin, double k) nogil:
    cdef double m = 1.0 - (bmin + 0.5 * k * t)
    cdef double r = 0.5 * k * t / m
    cdef double r2 = r * r
    cdef double s
    if r < _SERIES_CUTOFF:
        s = r2 * (1.0 / 6.0 + r2 * (1.0 / 20.0 + r2 * (1.0 / 42.0 + r2 * (1.0 / 72.0))))
    else:
        s = -((1.0 + r) * log1p(r) - (1.0 - r) * log1p(-r) - 2.0 * r) / (2.0 * r)
    return t * (-log(m) + s)


cdef inline void _drift(const double* x, double* out, Py_ssize_t D, double s,
                        const double* mu, double sigma2, double bmin, double k) nogil:
    cdef double lam = _rate(s, bmin, k)
    cdef double abar = exp(-_neg_log_abar(s, bmin, k))
    cdef double var = abar * sigma2 + (1.0 - abar)
    cdef double sa = sqrt(abar)
    cdef Py_ssize_t d
    for d in range(D):
        out[d] = -0.5 * lam * (x[d] - (x[d] - sa * mu[d]) / var)


def neg_log_alpha_bar(t, double beta_min, double beta_max, double T):
    arr = np.ascontiguousarray(t, dtype=np.float64)
    out = np.empty_like(arr)
    cdef double[::1] tf = arr.reshape(-1)
    cdef double[::1] of = out.reshape(-1)
    cdef double k = (beta_max - beta_min) / T
    cdef Py_ssize_t i
    with nogil:
        for i in range(tf.shape[0]):
            of[i] = _neg_log_abar(tf[i], beta_min, k)
    if np.ndim(t) == 0:
        return float(out)
    return out


def rk4_vp_gaussian(x, t_start, mu, double sigma2, double beta_min, double beta_max,
                    double T, long n_steps):
    cdef double[:, ::1] X = np.array(x, dtype=np.float64, order="C", copy=True)
    cdef const double[::1] ts = np.ascontiguousarray(t_start, dtype=np.float64)
    cdef const double[::1] MU = np.ascontiguousarray(mu, dtype=np.float64)
    cdef Py_ssize_t M = X.shape[0], D = X.shape[1]
    cdef double k = (beta_max - beta_min) / T
    cdef double[:, ::1] work = np.empty((5, D), dtype=np.float64)
    cdef double* k1 = &work[0, 0]
    cdef double* k2 = &work[1, 0]
    cdef double* k3 = &work[2, 0]
    cdef double* k4 = &work[3, 0]
    cdef double* tmp = &work[4, 0]
    cdef Py_ssize_t i, j, d
    cdef double h, s, s_next
    cdef double* xi
    with nogil:
        for i in range(M):
            xi = &X[i, 0]
            h = -(ts[i] / n_steps)
            s = ts[i]
            for j in range(n_steps):
                _drift(xi, k1, D, s, &MU[0], sigma2, beta_min, k)
                for d in range(D):
                    tmp[d] = xi[d] + 0.5 * h * k1[d]
                _drift(tmp, k2, D, s + 0.5 * h, &MU[0], sigma2, beta_min, k)
                for d in range(D):
                    tmp[d] = xi[d] + 0.5 * h * k2[d]
                _drift(tmp, k3, D, s + 0.5 * h, &MU[0], sigma2, beta_min, k)
                s_next = ts[i] * (1.0 - (j + 1.0) / n_steps)
                for d in range(D):
                    tmp[d] = xi[d] + h * k3[d]
                _drift(tmp, k4, D, s_next, &MU[0], sigma2, beta_min, k)
                for d in range(D):
                    xi[d] += (h / 6.0) * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d])
                s = s_next
    return np.asarray(X)
