# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: cut-crossing detection and fiber-carrying random walks."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, atan2, hypot, floor, M_PI, isfinite

cnp.import_array()


cdef inline double _wrap(double a) noexcept nogil:
    # angle reduced to (-pi, pi]
    return a - 2 * M_PI * floor((a + M_PI) / (2 * M_PI))


cdef inline int _segment(double z0r, double z0i, double z1r, double z1i, double b0r, double b0i,
                         double[:] dr, double[:] di, double[:] lengths, int *sign) noexcept nogil:
    """Crossed cut index, -1 for none, -2 for several."""
    cdef Py_ssize_t j
    cdef int found = -1
    cdef double x0r = z0r - b0r, x0i = z0i - b0i, x1r = z1r - b0r, x1i = z1i - b0i
    cdef double u0, v0, u1, v1, ux
    cdef bint l0, l1
    for j in range(dr.shape[0]):
        u0 = x0r * dr[j] + x0i * di[j]
        v0 = -x0r * di[j] + x0i * dr[j]
        u1 = x1r * dr[j] + x1i * di[j]
        v1 = -x1r * di[j] + x1i * dr[j]
        l0 = v0 >= 0
        l1 = v1 >= 0
        if l0 == l1:
            continue
        ux = u0 - v0 * (u1 - u0) / (v1 - v0)
        if ux > 0 and ux < lengths[j]:
            if found != -1:
                return -2
            found = <int>j
            sign[0] = 1 if l0 else -1
    return found


def segment_crossings(zr, zi, double b0r, double b0i, dr, di, lengths):
    cdef double[:] zr_ = np.ascontiguousarray(zr, dtype=np.float64)
    cdef double[:] zi_ = np.ascontiguousarray(zi, dtype=np.float64)
    cdef double[:] dr_ = np.ascontiguousarray(dr, dtype=np.float64)
    cdef double[:] di_ = np.ascontiguousarray(di, dtype=np.float64)
    cdef double[:] ln_ = np.ascontiguousarray(lengths, dtype=np.float64)
    cdef Py_ssize_t n = zr_.shape[0] - 1 if zr_.shape[0] > 0 else 0
    idx = np.empty(n, dtype=np.int64)
    sgn = np.zeros(n, dtype=np.int64)
    cdef long long[:] idx_ = idx
    cdef long long[:] sgn_ = sgn
    cdef Py_ssize_t s
    cdef int sg = 0
    cdef int r
    for s in range(n):
        sg = 0
        r = _segment(zr_[s], zi_[s], zr_[s + 1], zi_[s + 1], b0r, b0i, dr_, di_, ln_, &sg)
        idx_[s] = r
        sgn_[s] = sg if r >= 0 else 0
    return idx, sgn


cdef inline void _slerp(double *a, double *b, double t, double *out) noexcept nogil:
    cdef double n
    out[0] = (1 - t) * a[0] + t * b[0]
    out[1] = (1 - t) * a[1] + t * b[1]
    out[2] = (1 - t) * a[2] + t * b[2]
    n = sqrt(out[0] * out[0] + out[1] * out[1] + out[2] * out[2])
    out[0] /= n
    out[1] /= n
    out[2] /= n


cdef inline bint _near(double *X, double b0r, double b0i, double R) noexcept nogil:
    cdef double den = 1 - X[2]
    return hypot(X[0] - b0r * den, X[1] - b0i * den) <= R * den


cdef int _crossings(double *X0, double *X1, double b0r, double b0i, double[:] dr, double[:] di,
                    double[:] lengths, double R, int depth, int *out_j, int *out_s, int n_out,
                    int cap) noexcept nogil:
    """Append the ordered crossings of one step; returns the new count."""
    cdef bint n0 = _near(X0, b0r, b0i, R)
    cdef bint n1 = _near(X1, b0r, b0i, R)
    cdef int sg = 0
    cdef int r
    cdef Py_ssize_t j
    cdef int k
    cdef double mid[3]
    cdef double P[3]
    cdef double Q[3]
    cdef double a0, a1, delta, rel0, rel1, den0, den1
    if n0 and n1:
        den0 = 1 - X0[2]
        den1 = 1 - X1[2]
        r = _segment(X0[0] / den0, X0[1] / den0, X1[0] / den1, X1[1] / den1, b0r, b0i, dr, di, lengths, &sg)
        if r == -1:
            return n_out
        if r >= 0 or depth > 12:
            if r >= 0 and n_out < cap:
                out_j[n_out] = r
                out_s[n_out] = sg
                return n_out + 1
            return n_out
        _slerp(X0, X1, 0.5, mid)
        n_out = _crossings(X0, mid, b0r, b0i, dr, di, lengths, R, depth + 1, out_j, out_s, n_out, cap)
        return _crossings(mid, X1, b0r, b0i, dr, di, lengths, R, depth + 1, out_j, out_s, n_out, cap)
    if not n0 and not n1:
        den0 = 1 - X0[2]
        den1 = 1 - X1[2]
        a0 = atan2(X0[1] - b0i * den0, X0[0] - b0r * den0)
        a1 = atan2(X1[1] - b0i * den1, X1[0] - b0r * den1)
        delta = _wrap(a1 - a0)
        for j in range(dr.shape[0]):
            if isfinite(lengths[j]):
                continue
            rel0 = _wrap(a0 - atan2(di[j], dr[j]))
            rel1 = rel0 + delta
            if n_out < cap:
                if rel0 >= 0 and rel1 < 0:
                    out_j[n_out] = <int>j
                    out_s[n_out] = 1
                    n_out += 1
                elif rel0 < 0 and rel1 >= 0:
                    out_j[n_out] = <int>j
                    out_s[n_out] = -1
                    n_out += 1
        return n_out
    for k in range(8):
        _slerp(X0, X1, k / 8.0, P)
        _slerp(X0, X1, (k + 1) / 8.0, Q)
        den0 = 1 - P[2]
        den1 = 1 - Q[2]
        sg = 0
        r = _segment(P[0] / den0, P[1] / den0, Q[0] / den1, Q[1] / den1, b0r, b0i, dr, di, lengths, &sg)
        if r >= 0 and n_out < cap:
            out_j[n_out] = r
            out_s[n_out] = sg
            n_out += 1
    return n_out


def walk(X, Y, noise, double sigma, double b0r, double b0i, dr, di, lengths, double R,
         mats, inv, Py_ssize_t record_start, Py_ssize_t record_every):
    cdef double[:, :] X_ = np.array(X, dtype=np.float64, order="C")
    cdef double complex[:, :] Y_ = np.array(Y, dtype=np.complex128, order="C")
    cdef double[:, :, :] G = np.ascontiguousarray(noise, dtype=np.float64)
    cdef double[:] dr_ = np.ascontiguousarray(dr, dtype=np.float64)
    cdef double[:] di_ = np.ascontiguousarray(di, dtype=np.float64)
    cdef double[:] ln_ = np.ascontiguousarray(lengths, dtype=np.float64)
    cdef double complex[:, :, :] M = np.ascontiguousarray(mats, dtype=np.complex128)
    cdef double complex[:, :, :] Mi = np.ascontiguousarray(inv, dtype=np.complex128)
    cdef Py_ssize_t S = G.shape[0], W = G.shape[1]
    cdef Py_ssize_t n_rec = len(range(record_start, S, record_every))
    rec = np.empty((W, n_rec, 2), dtype=np.complex128)
    cdef double complex[:, :, :] rec_ = rec
    cdef Py_ssize_t s, w, c, k
    cdef long long crossings = 0
    cdef double x0[3]
    cdef double x1[3]
    cdef double g0, g1, g2, dot, nrm
    cdef int js[64]
    cdef int ss[64]
    cdef int n
    cdef double complex p, q, a, b, cc, d
    with nogil:
        for w in range(W):
            x0[0] = X_[w, 0]
            x0[1] = X_[w, 1]
            x0[2] = X_[w, 2]
            k = 0
            for s in range(S):
                g0 = G[s, w, 0]
                g1 = G[s, w, 1]
                g2 = G[s, w, 2]
                dot = g0 * x0[0] + g1 * x0[1] + g2 * x0[2]
                g0 = g0 - dot * x0[0]
                g1 = g1 - dot * x0[1]
                g2 = g2 - dot * x0[2]
                x1[0] = x0[0] + sigma * g0
                x1[1] = x0[1] + sigma * g1
                x1[2] = x0[2] + sigma * g2
                nrm = sqrt(x1[0] * x1[0] + x1[1] * x1[1] + x1[2] * x1[2])
                x1[0] /= nrm
                x1[1] /= nrm
                x1[2] /= nrm
                n = _crossings(x0, x1, b0r, b0i, dr_, di_, ln_, R, 0, js, ss, 0, 64)
                for c in range(n):
                    if ss[c] == 1:
                        a = M[js[c], 0, 0]; b = M[js[c], 0, 1]; cc = M[js[c], 1, 0]; d = M[js[c], 1, 1]
                    else:
                        a = Mi[js[c], 0, 0]; b = Mi[js[c], 0, 1]; cc = Mi[js[c], 1, 0]; d = Mi[js[c], 1, 1]
                    p = a * Y_[w, 0] + b * Y_[w, 1]
                    q = cc * Y_[w, 0] + d * Y_[w, 1]
                    nrm = sqrt(p.real * p.real + p.imag * p.imag + q.real * q.real + q.imag * q.imag)
                    Y_[w, 0] = p / nrm
                    Y_[w, 1] = q / nrm
                crossings += n
                x0[0] = x1[0]
                x0[1] = x1[1]
                x0[2] = x1[2]
                if s >= record_start and (s - record_start) % record_every == 0:
                    rec_[w, k, 0] = Y_[w, 0]
                    rec_[w, k, 1] = Y_[w, 1]
                    k += 1
            X_[w, 0] = x0[0]
            X_[w, 1] = x0[1]
            X_[w, 2] = x0[2]
    return np.asarray(X_), np.asarray(Y_), rec, int(crossings)
