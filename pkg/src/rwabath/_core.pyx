# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops. Signatures mirror :mod:`rwabath._fallback`."""
import numpy as np
cimport numpy as cnp

cnp.import_array()

from libc.math cimport cos, sin

cdef extern from "complex.h" nogil:
    double cabs(double complex)


def volterra_scalar(const double complex[:, ::1] kt, double h, Py_ssize_t n_steps,
                    double tol, int max_sweeps):
    """Trapezoid predictor-corrector for a batch of scalar equations
    ``v' = -int_0^t k(t-s) v(s) ds``, ``v(0) = 1``. ``kt[b, m] = k_b(m h)``;
    lags beyond ``kt.shape[1] - 1`` are treated as zero.

    Returns ``(v, status)``; ``status`` is 0 on success, ``n+1`` when the
    corrector failed to contract at step ``n``.
    """
    cdef Py_ssize_t nb = kt.shape[0], nl = kt.shape[1] - 1
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] v_arr = np.zeros((nb, n_steps + 1), dtype=np.complex128)
    cdef double complex[:, ::1] v = v_arr
    cdef Py_ssize_t b, n, m, m0, sweep
    cdef double complex fn, hn1, vo, vn, k0, acc
    cdef double diff, prev
    cdef int status = 0
    cdef int ok
    with nogil:
        for b in range(nb):
            v[b, 0] = 1.0
            k0 = kt[b, 0]
            fn = 0.0
            for n in range(n_steps):
                acc = 0.0
                if n + 1 <= nl:
                    acc = 0.5 * kt[b, n + 1] * v[b, 0]
                m0 = n + 1 - nl
                if m0 < 1:
                    m0 = 1
                for m in range(m0, n + 1):
                    acc = acc + kt[b, n + 1 - m] * v[b, m]
                hn1 = -h * acc
                vo = v[b, n] + h * fn
                prev = -1.0
                ok = 0
                for sweep in range(max_sweeps):
                    vn = v[b, n] + 0.5 * h * (fn + hn1 - 0.5 * h * k0 * vo)
                    diff = cabs(vn - vo)
                    vo = vn
                    if diff <= tol * (1.0 + cabs(vn)):
                        ok = 1
                        break
                    if prev >= 0.0 and diff > 0.5 * prev:
                        break
                    prev = diff
                if not ok:
                    status = <int>(n + 1)
                    break
                v[b, n + 1] = vo
                fn = hn1 - 0.5 * h * k0 * vo
            if status:
                break
    return v_arr, status


def volterra_dense(const double complex[:, :, ::1] kt, double h, Py_ssize_t n_steps,
                   double tol, int max_sweeps):
    """Matrix version of :func:`volterra_scalar`: ``kt[m]`` is the ``N x N``
    table ``G(m h) exp(i H m h)``."""
    cdef Py_ssize_t nl = kt.shape[0] - 1, nd = kt.shape[1]
    cdef cnp.ndarray[cnp.complex128_t, ndim=3] v_arr = np.zeros((n_steps + 1, nd, nd), dtype=np.complex128)
    cdef double complex[:, :, ::1] v = v_arr
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] fn_a = np.zeros((nd, nd), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] hn_a = np.zeros((nd, nd), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] vo_a = np.zeros((nd, nd), dtype=np.complex128)
    cdef cnp.ndarray[cnp.complex128_t, ndim=2] vn_a = np.zeros((nd, nd), dtype=np.complex128)
    cdef double complex[:, ::1] fn = fn_a, hn1 = hn_a, vo = vo_a, vn = vn_a
    cdef Py_ssize_t n, m, m0, i, j, k, sweep, lag
    cdef double complex acc, wgt
    cdef double diff, prev, vmax
    cdef int status = 0
    cdef int ok
    with nogil:
        for i in range(nd):
            v[0, i, i] = 1.0
        for n in range(n_steps):
            for i in range(nd):
                for j in range(nd):
                    hn1[i, j] = 0.0
            m0 = n + 1 - nl
            if m0 < 0:
                m0 = 0
            for m in range(m0, n + 1):
                lag = n + 1 - m
                wgt = 0.5 if m == 0 else 1.0
                for i in range(nd):
                    for k in range(nd):
                        acc = wgt * kt[lag, i, k]
                        if acc == 0:
                            continue
                        for j in range(nd):
                            hn1[i, j] = hn1[i, j] + acc * v[m, k, j]
            for i in range(nd):
                for j in range(nd):
                    hn1[i, j] = -h * hn1[i, j]
                    vo[i, j] = v[n, i, j] + h * fn[i, j]
            prev = -1.0
            ok = 0
            for sweep in range(max_sweeps):
                diff = 0.0
                vmax = 0.0
                for i in range(nd):
                    for j in range(nd):
                        acc = 0.0
                        for k in range(nd):
                            acc = acc + kt[0, i, k] * vo[k, j]
                        vn[i, j] = v[n, i, j] + 0.5 * h * (fn[i, j] + hn1[i, j] - 0.5 * h * acc)
                for i in range(nd):
                    for j in range(nd):
                        if cabs(vn[i, j] - vo[i, j]) > diff:
                            diff = cabs(vn[i, j] - vo[i, j])
                        if cabs(vn[i, j]) > vmax:
                            vmax = cabs(vn[i, j])
                        vo[i, j] = vn[i, j]
                if diff <= tol * (1.0 + vmax):
                    ok = 1
                    break
                if prev >= 0.0 and diff > 0.5 * prev:
                    break
                prev = diff
            if not ok:
                status = <int>(n + 1)
                break
            for i in range(nd):
                for j in range(nd):
                    v[n + 1, i, j] = vo[i, j]
            for i in range(nd):
                for j in range(nd):
                    acc = 0.0
                    for k in range(nd):
                        acc = acc + kt[0, i, k] * vo[k, j]
                    fn[i, j] = hn1[i, j] - 0.5 * h * acc
    return v_arr, status


def filon_inflow(const double complex[:, ::1] v, const double[:, ::1] delta,
                 const double[:, ::1] weight, const double complex[:, ::1] w0,
                 const double complex[:, ::1] w1, double h,
                 const cnp.int64_t[::1] out_idx):
    """Accumulate ``c_j(t, q) = int_0^t v_j(u) exp(-i delta[j,q] u) du`` with
    the piecewise-linear Filon rule and return, at each ``out_idx``,
    ``out[r, k, j] = sum_q weight[r, q] |c_j(q)|^2``.
    """
    cdef Py_ssize_t ni = v.shape[0], nt = v.shape[1] - 1, nq = delta.shape[1]
    cdef Py_ssize_t nr = weight.shape[0], nout = out_idx.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] out_arr = np.zeros((nr, nout, ni), dtype=np.float64)
    cdef double[:, :, ::1] out = out_arr
    # split real and imaginary parts so the inner loop is plain real arithmetic
    cdef cnp.ndarray[cnp.float64_t, ndim=2] cr_a = np.zeros((ni, nq)), ci_a = np.zeros((ni, nq))
    cdef cnp.ndarray[cnp.float64_t, ndim=2] pr_a = np.ones((ni, nq)), pi_a = np.zeros((ni, nq))
    st = np.exp(-1j * np.asarray(delta) * h)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] sr_a = np.ascontiguousarray(st.real)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] si_a = np.ascontiguousarray(st.imag)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ar_a = np.ascontiguousarray(np.asarray(w0).real)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ai_a = np.ascontiguousarray(np.asarray(w0).imag)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] br_a = np.ascontiguousarray(np.asarray(w1).real)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bi_a = np.ascontiguousarray(np.asarray(w1).imag)
    cdef double *cr
    cdef double *ci
    cdef double *pr
    cdef double *pim
    cdef double *sr
    cdef double *si
    cdef double *ar
    cdef double *ai
    cdef double *br
    cdef double *bi
    cdef const double *wr
    cdef Py_ssize_t i, n, q, k, r
    cdef double vr0, vi0, vr1, vi1, xr, xi, tr, ti, acc, ang
    with nogil:
        k = 0
        for n in range(nt + 1):
            while k < nout and out_idx[k] == n:
                for r in range(nr):
                    wr = &weight[r, 0]
                    for i in range(ni):
                        cr = &cr_a[i, 0]
                        ci = &ci_a[i, 0]
                        acc = 0.0
                        for q in range(nq):
                            acc = acc + wr[q] * (cr[q] * cr[q] + ci[q] * ci[q])
                        out[r, k, i] = acc
                k = k + 1
            if n == nt or k >= nout:
                break
            for i in range(ni):
                vr0 = v[i, n].real
                vi0 = v[i, n].imag
                vr1 = v[i, n + 1].real
                vi1 = v[i, n + 1].imag
                cr = &cr_a[i, 0]
                ci = &ci_a[i, 0]
                pr = &pr_a[i, 0]
                pim = &pi_a[i, 0]
                sr = &sr_a[i, 0]
                si = &si_a[i, 0]
                ar = &ar_a[i, 0]
                ai = &ai_a[i, 0]
                br = &br_a[i, 0]
                bi = &bi_a[i, 0]
                for q in range(nq):
                    # x = w0 v_n + w1 v_{n+1}
                    xr = ar[q] * vr0 - ai[q] * vi0 + br[q] * vr1 - bi[q] * vi1
                    xi = ar[q] * vi0 + ai[q] * vr0 + br[q] * vi1 + bi[q] * vr1
                    cr[q] = cr[q] + pr[q] * xr - pim[q] * xi
                    ci[q] = ci[q] + pr[q] * xi + pim[q] * xr
                    tr = pr[q] * sr[q] - pim[q] * si[q]
                    ti = pr[q] * si[q] + pim[q] * sr[q]
                    pr[q] = tr
                    pim[q] = ti
            if (n + 1) % 512 == 0:
                # re-anchor the running phase to stop round-off drift
                for i in range(ni):
                    for q in range(nq):
                        ang = -delta[i, q] * (n + 1) * h
                        pr_a[i, q] = cos(ang)
                        pi_a[i, q] = sin(ang)
    return out_arr
