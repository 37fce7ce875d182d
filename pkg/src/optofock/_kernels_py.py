"""Pure numpy implementations of the hot kernels.

These mirror ``_kernels.pyx`` call for call and are used when the compiled
extension is unavailable (or when ``OPTOFOCK_PURE_PYTHON=1``).
"""

from math import lgamma

import numpy as np
import scipy.sparse as sp

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_E = np.array(
    [
        71 / 57600,
        0.0,
        -71 / 16695,
        71 / 1920,
        -17253 / 339200,
        22 / 525,
        -1 / 40,
    ]
)


def _log_prefactor(m, n, x):
    # log of sqrt(n!/m!) * |alpha|^(m-n) * exp(-x/2), m >= n, x = |alpha|^2
    k = m - n
    out = -0.5 * x + 0.5 * (lgamma(n + 1) - lgamma(m + 1))
    if k:
        with np.errstate(divide="ignore"):
            out = out + 0.5 * k * np.log(x)
    return out


def displacement_block(alpha, nrows, ncols):
    """Rows ``0..nrows-1`` and columns ``0..ncols-1`` of D(alpha), analytic form."""
    alpha = complex(alpha)
    x = abs(alpha) ** 2
    out = np.zeros((nrows, ncols), dtype=complex)
    if x == 0.0:
        k = min(nrows, ncols)
        out[np.arange(k), np.arange(k)] = 1.0
        return out
    phase = alpha / abs(alpha)
    nmax = max(nrows, ncols)
    for k in range(nmax):
        # L_j^{(k)}(x) for j = 0, 1, ...
        l_prev, l_cur = 0.0, 1.0
        for j in range(nmax - k):
            if j > 0:
                l_prev, l_cur = l_cur, ((2 * j - 1 + k - x) * l_cur - (j - 1 + k) * l_prev) / j
            mag = np.exp(_log_prefactor(j + k, j, x)) * l_cur
            # lower triangle: <j+k|D|j>
            if j + k < nrows and j < ncols:
                out[j + k, j] = mag * phase**k
            # upper triangle: <j|D|j+k> = (-conj(alpha))^k ... form
            if k and j < nrows and j + k < ncols:
                out[j, j + k] = mag * (-phase.conjugate()) ** k
    return out


def wigner_parity(rho, alphas):
    """Displaced-parity Wigner function (1/pi) Tr[rho D(2a) P] at each point a."""
    rho = np.asarray(rho, dtype=complex)
    alphas = np.asarray(alphas, dtype=complex).ravel()
    d = rho.shape[0]
    beta = 2.0 * alphas
    x = np.abs(beta) ** 2
    absb = np.sqrt(x)
    phase = np.where(absb > 0, beta / np.where(absb > 0, absb, 1.0), 1.0)
    with np.errstate(divide="ignore"):
        logx = np.where(x > 0, np.log(np.where(x > 0, x, 1.0)), -np.inf)
    lg = np.array([lgamma(i + 1) for i in range(d)])
    sign = (-1.0) ** np.arange(d)
    w = np.zeros(alphas.shape, dtype=float)
    for k in range(d):
        l_prev = np.zeros_like(x)
        l_cur = np.ones_like(x)
        ph_lo = phase**k
        ph_hi = (-phase.conjugate()) ** k
        for j in range(d - k):
            if j > 0:
                l_prev, l_cur = l_cur, ((2 * j - 1 + k - x) * l_cur - (j - 1 + k) * l_prev) / j
            logmag = -0.5 * x + 0.5 * (lg[j] - lg[j + k])
            if k:
                logmag = logmag + 0.5 * k * logx
            mag = np.exp(logmag) * l_cur
            m, n = j + k, j
            # element <m|D|n> pairs with rho[n, m] and parity of n
            acc = rho[n, m] * mag * ph_lo * sign[n]
            if k:
                # element <n|D|m> pairs with rho[m, n] and parity of m
                acc = acc + rho[m, n] * mag * ph_hi * sign[m]
            w += acc.real
    return w / np.pi


def dopri5(L, y0, t_eval, rtol, atol, max_steps, h0):
    """Adaptive Dormand-Prince 5(4) for dy/dt = L y, landing exactly on ``t_eval``.

    Returns ``(Y, n_steps, n_rejected, status)``; status 0 ok, 1 step-size
    collapse, 2 step budget exhausted.
    """
    L = sp.csr_matrix(L)
    y = np.array(y0, dtype=complex)
    t_eval = np.asarray(t_eval, dtype=float)
    n_out = t_eval.size
    Y = np.empty((n_out, y.size), dtype=complex)
    Y[0] = y
    t = t_eval[0]
    span = t_eval[-1] - t
    h = h0 if h0 > 0 else _initial_step(L, y, rtol, atol, span)
    k = np.empty((7, y.size), dtype=complex)
    k[0] = L @ y
    n_steps = n_rej = 0
    out_i = 1
    while out_i < n_out:
        target = t_eval[out_i]
        if n_steps + n_rej >= max_steps:
            return Y, n_steps, n_rej, 2
        last = False
        if t + h >= target:
            h_try = target - t
            last = True
        else:
            h_try = h
        if h_try <= 1e-14 * max(1.0, abs(t)):
            if last:
                t = target
                Y[out_i] = y
                out_i += 1
                continue
            return Y, n_steps, n_rej, 1
        for s in range(1, 7):
            ys = y.copy()
            for j, a in enumerate(_A[s]):
                if a:
                    ys += h_try * a * k[j]
            k[s] = L @ ys
        y_new = ys  # stage 7 argument is the 5th-order solution (FSAL)
        err = h_try * (_E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = np.sqrt(np.mean(np.abs(err / scale) ** 2))
        if en <= 1.0:
            t = target if last else t + h_try
            y = y_new
            k[0] = k[6]
            n_steps += 1
            if last:
                Y[out_i] = y
                out_i += 1
            fac = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en**-0.2))
            if not last or fac < 1.0:
                h = h_try * fac
        else:
            n_rej += 1
            h = h_try * max(0.2, 0.9 * en**-0.2)
    return Y, n_steps, n_rej, 0


def _initial_step(L, y, rtol, atol, span):
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean(np.abs(y / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs((L @ y) / scale) ** 2))
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    return min(h, span) if span > 0 else h
