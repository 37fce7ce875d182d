# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: analytic displacement elements, displaced-parity
Wigner grid, and the Dormand-Prince 5(4) integrator over a CSR Liouvillian.

Call signatures match ``optofock._kernels_py``.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, sqrt, lgamma, fabs, pow as cpow, M_PI

cnp.import_array()

ctypedef double complex cplx


cdef inline cplx _ipow(cplx z, int k) noexcept nogil:
    cdef cplx r = 1.0
    cdef int i
    for i in range(k):
        r = r * z
    return r


def displacement_block(alpha, int nrows, int ncols):
    cdef cplx a = complex(alpha)
    cdef double x = a.real * a.real + a.imag * a.imag
    cdef cnp.ndarray[cplx, ndim=2] out = np.zeros((nrows, ncols), dtype=complex)
    cdef int nmax = nrows if nrows > ncols else ncols
    cdef int k, j, m
    cdef double lp, lc, ln_, logmag, mag, absa
    cdef cplx ph, ph_lo, ph_hi
    if x == 0.0:
        for j in range(min(nrows, ncols)):
            out[j, j] = 1.0
        return out
    absa = sqrt(x)
    ph = a / absa
    with nogil:
        for k in range(nmax):
            ph_lo = _ipow(ph, k)
            ph_hi = _ipow(-ph.conjugate(), k)
            lp = 0.0
            lc = 1.0
            for j in range(nmax - k):
                if j > 0:
                    ln_ = ((2 * j - 1 + k - x) * lc - (j - 1 + k) * lp) / j
                    lp = lc
                    lc = ln_
                m = j + k
                logmag = -0.5 * x + 0.5 * (lgamma(j + 1.0) - lgamma(m + 1.0)) + 0.5 * k * log(x)
                mag = exp(logmag) * lc
                if m < nrows and j < ncols:
                    out[m, j] = mag * ph_lo
                if k > 0 and j < nrows and m < ncols:
                    out[j, m] = mag * ph_hi
    return out


def wigner_parity(rho, alphas):
    cdef cnp.ndarray[cplx, ndim=2] r = np.ascontiguousarray(rho, dtype=complex)
    cdef cnp.ndarray[cplx, ndim=1] al = np.ascontiguousarray(np.ravel(alphas), dtype=complex)
    cdef Py_ssize_t npts = al.shape[0]
    cdef int d = r.shape[0]
    cdef cnp.ndarray[double, ndim=1] w = np.zeros(npts, dtype=float)
    # coef[j, k] = sqrt(j! / (j + k)!)
    lg = np.array([lgamma(i + 1.0) for i in range(2 * d)])
    idx = np.arange(d)
    cdef double[:, ::1] coef = np.exp(0.5 * (lg[idx][:, None] - lg[idx[:, None] + idx[None, :]]))
    cdef Py_ssize_t p
    cdef int k, j, m
    cdef double x, lp, lc, ln_, mag, acc, sgn_n, sgn_m, base, rk
    cdef cplx beta, ph, ph_lo, ph_hi, phc
    with nogil:
        for p in range(npts):
            beta = 2.0 * al[p]
            x = beta.real * beta.real + beta.imag * beta.imag
            acc = 0.0
            if x == 0.0:
                for j in range(d):
                    acc += (r[j, j].real) * (1.0 if j % 2 == 0 else -1.0)
                w[p] = acc / M_PI
                continue
            base = exp(-0.5 * x)
            ph = beta / sqrt(x)
            phc = -ph.conjugate()
            ph_lo = 1.0
            ph_hi = 1.0
            rk = 1.0
            for k in range(d):
                lp = 0.0
                lc = 1.0
                for j in range(d - k):
                    if j > 0:
                        ln_ = ((2 * j - 1 + k - x) * lc - (j - 1 + k) * lp) / j
                        lp = lc
                        lc = ln_
                    m = j + k
                    mag = base * rk * coef[j, k] * lc
                    sgn_n = 1.0 if j % 2 == 0 else -1.0
                    acc += (r[j, m] * mag * ph_lo).real * sgn_n
                    if k > 0:
                        sgn_m = 1.0 if m % 2 == 0 else -1.0
                        acc += (r[m, j] * mag * ph_hi).real * sgn_m
                ph_lo = ph_lo * ph
                ph_hi = ph_hi * phc
                rk = rk * sqrt(x)
            w[p] = acc / M_PI
    return w


cdef inline void _csr_mv(const cplx[::1] data, const int[::1] ind, const int[::1] ptr,
                         const cplx[::1] v, cplx[::1] out, Py_ssize_t n) noexcept nogil:
    cdef Py_ssize_t i, jj
    cdef cplx s
    for i in range(n):
        s = 0.0
        for jj in range(ptr[i], ptr[i + 1]):
            s = s + data[jj] * v[ind[jj]]
        out[i] = s


cdef double[7][7] A_
cdef double[7] E_
A_[1][:] = [1 / 5., 0, 0, 0, 0, 0, 0]
A_[2][:] = [3 / 40., 9 / 40., 0, 0, 0, 0, 0]
A_[3][:] = [44 / 45., -56 / 15., 32 / 9., 0, 0, 0, 0]
A_[4][:] = [19372 / 6561., -25360 / 2187., 64448 / 6561., -212 / 729., 0, 0, 0]
A_[5][:] = [9017 / 3168., -355 / 33., 46732 / 5247., 49 / 176., -5103 / 18656., 0, 0]
A_[6][:] = [35 / 384., 0, 500 / 1113., 125 / 192., -2187 / 6784., 11 / 84., 0]
E_[:] = [71 / 57600., 0, -71 / 16695., 71 / 1920., -17253 / 339200., 22 / 525., -1 / 40.]


def dopri5(L, y0, t_eval, double rtol, double atol, long max_steps, double h0):
    L = L.tocsr()
    cdef const cplx[::1] data = np.ascontiguousarray(L.data, dtype=complex)
    cdef const int[::1] ind = np.ascontiguousarray(L.indices, dtype=np.int32)
    cdef const int[::1] ptr = np.ascontiguousarray(L.indptr, dtype=np.int32)
    cdef cnp.ndarray[double, ndim=1] te = np.ascontiguousarray(t_eval, dtype=float)
    cdef Py_ssize_t n = L.shape[0]
    cdef Py_ssize_t n_out = te.shape[0]
    cdef cnp.ndarray[cplx, ndim=2] Y = np.empty((n_out, n), dtype=complex)
    cdef cplx[::1] y = np.array(y0, dtype=complex)
    cdef cplx[::1] ys = np.empty(n, dtype=complex)
    cdef cplx[:, ::1] k = np.empty((7, n), dtype=complex)
    cdef cplx[:, ::1] Yv = Y
    cdef Py_ssize_t i, s, j, out_i = 1
    cdef long n_steps = 0, n_rej = 0
    cdef double t = te[0], target, h, h_try, en, sc, fac, d0, d1, ay, ayn
    cdef cplx e
    cdef bint last
    cdef int status = 0
    for i in range(n):
        Yv[0, i] = y[i]
    _csr_mv(data, ind, ptr, y, k[0], n)
    if h0 > 0:
        h = h0
    else:
        d0 = 0.0
        d1 = 0.0
        for i in range(n):
            sc = atol + rtol * abs(y[i])
            d0 += abs(y[i] / sc) ** 2
            d1 += abs(k[0, i] / sc) ** 2
        d0 = sqrt(d0 / n)
        d1 = sqrt(d1 / n)
        h = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        if te[n_out - 1] - t > 0 and h > te[n_out - 1] - t:
            h = te[n_out - 1] - t
    with nogil:
        while out_i < n_out:
            target = te[out_i]
            if n_steps + n_rej >= max_steps:
                status = 2
                break
            last = False
            if t + h >= target:
                h_try = target - t
                last = True
            else:
                h_try = h
            if h_try <= 1e-14 * (fabs(t) if fabs(t) > 1.0 else 1.0):
                if last:
                    t = target
                    for i in range(n):
                        Yv[out_i, i] = y[i]
                    out_i += 1
                    continue
                status = 1
                break
            for s in range(1, 7):
                for i in range(n):
                    e = y[i]
                    for j in range(s):
                        if A_[s][j] != 0.0:
                            e = e + h_try * A_[s][j] * k[j, i]
                    ys[i] = e
                _csr_mv(data, ind, ptr, ys, k[s], n)
            en = 0.0
            for i in range(n):
                e = 0.0
                for j in range(7):
                    if E_[j] != 0.0:
                        e = e + E_[j] * k[j, i]
                e = e * h_try
                ay = abs(y[i])
                ayn = abs(ys[i])
                sc = atol + rtol * (ay if ay > ayn else ayn)
                en += (e.real * e.real + e.imag * e.imag) / (sc * sc)
            en = sqrt(en / n)
            if en <= 1.0:
                t = target if last else t + h_try
                for i in range(n):
                    y[i] = ys[i]
                    k[0, i] = k[6, i]
                n_steps += 1
                if last:
                    for i in range(n):
                        Yv[out_i, i] = y[i]
                    out_i += 1
                if en == 0.0:
                    fac = 5.0
                else:
                    fac = 0.9 * cpow(en, -0.2)
                    fac = 5.0 if fac > 5.0 else (0.2 if fac < 0.2 else fac)
                if (not last) or fac < 1.0:
                    h = h_try * fac
            else:
                n_rej += 1
                fac = 0.9 * cpow(en, -0.2)
                h = h_try * (0.2 if fac < 0.2 else fac)
    return Y, n_steps, n_rej, status
