"""Pure numpy versions of the compiled kernels (same signatures, same results)."""
from __future__ import annotations

import numpy as np


def segment_crossings(zr, zi, b0r, b0i, dr, di, lengths):
    """Cut crossings of the polygon with vertices zr + i zi.

    Cut j is the segment from the basepoint b0 in the unit direction
    (dr[j], di[j]) of length lengths[j] (``inf`` for a ray).  For segment
    s (from vertex s to s + 1) the result holds the crossed cut index, -1
    when no cut is crossed and -2 when two or more are; ``sign`` is +1 for a
    crossing from the left of the cut (seen from the basepoint) to its
    right and -1 for the opposite direction.
    """
    zr = np.asarray(zr, float)
    zi = np.asarray(zi, float)
    dr = np.asarray(dr, float)
    di = np.asarray(di, float)
    lengths = np.asarray(lengths, float)
    xr = zr - b0r
    xi = zi - b0i
    # coordinates along (u) and across (v) each cut, shape (n_points, n_cuts)
    u = xr[:, None] * dr[None, :] + xi[:, None] * di[None, :]
    v = -xr[:, None] * di[None, :] + xi[:, None] * dr[None, :]
    left = v >= 0
    u0, u1, v0, v1 = u[:-1], u[1:], v[:-1], v[1:]
    change = left[:-1] != left[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ux = u0 - v0 * (u1 - u0) / (v1 - v0)
    hit = change & (ux > 0) & (ux < lengths[None, :])
    n_hit = hit.sum(axis=1)
    idx = np.where(n_hit == 1, hit.argmax(axis=1), -1)
    idx = np.where(n_hit > 1, -2, idx)
    rows = np.arange(len(idx))
    sgn = np.where(left[:-1][rows, np.maximum(idx, 0)], 1, -1)
    sgn = np.where(idx >= 0, sgn, 0)
    return idx.astype(np.int64), sgn.astype(np.int64)


def _chart_offset(X, b0r, b0i):
    """(x + i y) - b0 (1 - h): the chart vector z - b0 scaled by 1 - h > 0."""
    return X[..., 0] - b0r * (1 - X[..., 2]), X[..., 1] - b0i * (1 - X[..., 2])


def _slerp(X0, X1, t):
    P = (1 - t) * X0 + t * X1
    return P / np.linalg.norm(P, axis=-1, keepdims=True)


def _to_chart(X):
    den = 1 - X[..., 2]
    return X[..., 0] / den, X[..., 1] / den


def _crossings_between(X0, X1, b0r, b0i, dr, di, lengths, R, depth=0):
    """Ordered (cut, sign) crossings of a short step between two sphere points.

    Both endpoints near the basepoint: straight chart segment.  Both far:
    only rays can be crossed and the step is an angular sweep around the
    basepoint.  Mixed: split the step along the great circle.
    """
    o0 = _chart_offset(X0, b0r, b0i)
    o1 = _chart_offset(X1, b0r, b0i)
    n0 = np.hypot(*o0) <= R * (1 - X0[2])
    n1 = np.hypot(*o1) <= R * (1 - X1[2])
    if n0 and n1:
        z0, z1 = _to_chart(X0), _to_chart(X1)
        idx, sgn = segment_crossings([z0[0], z1[0]], [z0[1], z1[1]], b0r, b0i, dr, di, lengths)
        if idx[0] == -1:
            return []
        if idx[0] >= 0 or depth > 12:
            return [(int(idx[0]), int(sgn[0]))] if idx[0] >= 0 else []
        mid = _slerp(X0, X1, 0.5)
        return (_crossings_between(X0, mid, b0r, b0i, dr, di, lengths, R, depth + 1)
                + _crossings_between(mid, X1, b0r, b0i, dr, di, lengths, R, depth + 1))
    if not n0 and not n1:
        a0 = np.arctan2(o0[1], o0[0])
        delta = np.angle(np.exp(1j * (np.arctan2(o1[1], o1[0]) - a0)))
        out = []
        for j in range(len(dr)):
            if np.isfinite(lengths[j]):
                continue
            rel0 = np.angle(np.exp(1j * (a0 - np.arctan2(di[j], dr[j]))))
            rel1 = rel0 + delta
            if rel0 >= 0 > rel1:
                out.append((j, 1))
            elif rel0 < 0 <= rel1:
                out.append((j, -1))
        return out
    out = []
    pts = [_slerp(X0, X1, t) for t in np.linspace(0, 1, 9)]
    for P, Q in zip(pts[:-1], pts[1:]):
        z0, z1 = _to_chart(P), _to_chart(Q)
        idx, sgn = segment_crossings([z0[0], z1[0]], [z0[1], z1[1]], b0r, b0i, dr, di, lengths)
        if idx[0] >= 0:
            out.append((int(idx[0]), int(sgn[0])))
    return out


def walk(X, Y, noise, sigma, b0r, b0i, dr, di, lengths, R, mats, inv, record_start, record_every):
    """Spherical random walks carrying a fiber point through the cut system.

    X: (W, 3) unit vectors, Y: (W, 2) homogeneous fiber coordinates,
    noise: (S, W, 3) standard normals.  Returns the final X, Y, the recorded
    fiber coordinates (W, n_rec, 2) and the number of crossings.
    """
    X = np.array(X, float)
    Y = np.array(Y, complex)
    S, W = noise.shape[0], noise.shape[1]
    n_rec = len(range(record_start, S, record_every))
    rec = np.empty((W, n_rec, 2), complex)
    crossings = 0
    lengths = np.asarray(lengths, float)
    rays = ~np.isfinite(lengths)
    phis = np.arctan2(di, dr)
    k = 0
    for s in range(S):
        g = noise[s]
        g = g - np.sum(g * X, axis=1, keepdims=True) * X
        X1 = X + sigma * g
        X1 /= np.linalg.norm(X1, axis=1, keepdims=True)
        o0 = _chart_offset(X, b0r, b0i)
        o1 = _chart_offset(X1, b0r, b0i)
        near0 = np.hypot(*o0) <= R * (1 - X[:, 2])
        near1 = np.hypot(*o1) <= R * (1 - X1[:, 2])
        both_near = near0 & near1
        both_far = ~near0 & ~near1
        hits = []  # (walker indices, cut, sign) applied in order for single crossings
        # near: one vectorized segment test per cut
        w = np.flatnonzero(both_near)
        if len(w):
            den0 = 1 - X[w, 2]
            den1 = 1 - X1[w, 2]
            u0 = o0[0][w][:, None] / den0[:, None] * dr + o0[1][w][:, None] / den0[:, None] * di
            v0 = -o0[0][w][:, None] / den0[:, None] * di + o0[1][w][:, None] / den0[:, None] * dr
            u1 = o1[0][w][:, None] / den1[:, None] * dr + o1[1][w][:, None] / den1[:, None] * di
            v1 = -o1[0][w][:, None] / den1[:, None] * di + o1[1][w][:, None] / den1[:, None] * dr
            l0, l1 = v0 >= 0, v1 >= 0
            with np.errstate(divide="ignore", invalid="ignore"):
                ux = u0 - v0 * (u1 - u0) / (v1 - v0)
            hit = (l0 != l1) & (ux > 0) & (ux < lengths)
            nh = hit.sum(axis=1)
            one = nh == 1
            j = hit.argmax(axis=1)
            if one.any():
                ww, jj = w[one], j[one]
                hits.append((ww, jj, np.where(l0[one, jj], 1, -1)))
            for i in np.flatnonzero(nh > 1):
                for jj, sg in _crossings_between(X[w[i]], X1[w[i]], b0r, b0i, dr, di, lengths, R):
                    hits.append((np.array([w[i]]), np.array([jj]), np.array([sg])))
        w = np.flatnonzero(both_far)
        if len(w) and rays.any():
            a0 = np.arctan2(o0[1][w], o0[0][w])
            delta = np.angle(np.exp(1j * (np.arctan2(o1[1][w], o1[0][w]) - a0)))
            for j in np.flatnonzero(rays):
                rel0 = np.angle(np.exp(1j * (a0 - phis[j])))
                rel1 = rel0 + delta
                plus = (rel0 >= 0) & (rel1 < 0)
                minus = (rel0 < 0) & (rel1 >= 0)
                for mask, sg in ((plus, 1), (minus, -1)):
                    if mask.any():
                        hits.append((w[mask], np.full(mask.sum(), j), np.full(mask.sum(), sg)))
        for i in np.flatnonzero(~both_near & ~both_far):
            for jj, sg in _crossings_between(X[i], X1[i], b0r, b0i, dr, di, lengths, R):
                hits.append((np.array([i]), np.array([jj]), np.array([sg])))
        for ww, jj, sg in hits:
            crossings += len(ww)
            M = np.where((sg == 1)[:, None, None], mats[jj], inv[jj])
            p = M[:, 0, 0] * Y[ww, 0] + M[:, 0, 1] * Y[ww, 1]
            q = M[:, 1, 0] * Y[ww, 0] + M[:, 1, 1] * Y[ww, 1]
            nrm = np.sqrt(np.abs(p) ** 2 + np.abs(q) ** 2)
            Y[ww, 0] = p / nrm
            Y[ww, 1] = q / nrm
        X = X1
        if s >= record_start and (s - record_start) % record_every == 0:
            rec[:, k] = Y
            k += 1
    return X, Y, rec, crossings
