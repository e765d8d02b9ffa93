"""Limit sets: orbit enumeration, invariant circles, box-counting dimension."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import Degenerate, InsufficientResolution, NoLoxodromicFound, PreconditionError
from .groups import GroupPresentation, reduced_words, syllable_matrix
from .moebius import INF, MoebiusMap, apply_array, chordal, fixed_points, from_sphere, to_sphere, to_zero_one_inf

DEDUP_TOL = 1e-6
FUCHSIAN_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class LimitSetSample:
    points: np.ndarray
    max_len: int
    dedup_tol: float
    group_hash: str
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def sphere(self) -> np.ndarray:
        return to_sphere(self.points)


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    scales: tuple
    counts: tuple
    residual: float
    intercept: float = 0.0

    def to_json(self) -> dict:
        return {"slope": self.slope, "residual": self.residual, "scales": list(self.scales),
                "counts": list(self.counts), "intercept": self.intercept}


@dataclass(frozen=True)
class CircleFit:
    normal: np.ndarray
    offset: float
    max_deviation: float
    fuchsian: bool

    def center_radius(self):
        """Circle in the plane chart as (center, radius), or None for a line."""
        n, c = self.normal, self.offset
        if abs(n[2] - c) < 1e-14:
            return None
        # plane n.X = c pulled back through stereographic projection
        center = complex(n[0], n[1]) / (c - n[2])
        r2 = abs(center) ** 2 + (n[2] + c) / (n[2] - c)
        return center, math.sqrt(max(r2, 0.0))

    def points(self, k: int = 3) -> np.ndarray:
        """k equally spaced points of the circle (in the plane chart)."""
        n = self.normal
        u = np.cross(n, [1.0, 0, 0] if abs(n[0]) < 0.9 else [0, 1.0, 0])
        u /= np.linalg.norm(u)
        v = np.cross(n, u)
        rho = math.sqrt(max(1 - self.offset ** 2, 0.0))
        ang = 2 * np.pi * np.arange(k) / k + 0.1
        X = self.offset * n + rho * (np.cos(ang)[:, None] * u + np.sin(ang)[:, None] * v)
        return from_sphere(X)

    def normalizer(self) -> MoebiusMap:
        """A map sending the fitted circle onto the extended real line."""
        return to_zero_one_inf(*self.points(3))

    def to_json(self) -> dict:
        cr = self.center_radius()
        return {"normal": self.normal.tolist(), "offset": self.offset, "max_deviation": self.max_deviation,
                "fuchsian": self.fuchsian,
                "circle": None if cr is None else {"center": [cr[0].real, cr[0].imag], "radius": cr[1]}}


def find_loxodromic(G: GroupPresentation, max_len: int = 8):
    """Shortest reduced word that is loxodromic, with its attracting fixed point."""
    for w in reduced_words(G.orders, max_len, limit=20000):
        M = MoebiusMap(syllable_matrix(G.generators, w))
        if M.is_identity() or M.classify() != "loxodromic":
            continue
        fps = fixed_points(M)
        attracting = min(fps, key=lambda p: abs(M.multiplier_at(p)))
        return w, attracting
    raise NoLoxodromicFound(f"no loxodromic word of length <= {max_len}")


def _quantize(points: np.ndarray, labels: np.ndarray, tol: float) -> np.ndarray:
    """Indices of one representative per (label, tolerance cell)."""
    X = to_sphere(points)
    keys = np.floor(X / tol).astype(np.int64)
    keys = np.column_stack([keys, labels])
    _, idx = np.unique(keys, axis=0, return_index=True)
    return np.sort(idx)


def dedup(points: np.ndarray, tol: float = DEDUP_TOL) -> np.ndarray:
    """Greedy merge so that kept points are pairwise at least tol apart."""
    X = to_sphere(points)
    tree = cKDTree(X)
    pairs = tree.query_pairs(tol, output_type="ndarray")
    if len(pairs) == 0:
        return points
    keep = np.ones(len(points), bool)
    # visiting pairs in index order keeps the earlier point of each cluster
    for i, j in pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]:
        if keep[i] and keep[j]:
            keep[j] = False
    return points[keep]


def enumerate_limit_points(G: GroupPresentation, max_len: int, seed_point=None,
                           dedup_tol: float = DEDUP_TOL) -> LimitSetSample:
    """Orbit of a limit point under all reduced words of length <= max_len.

    Words are grown by prepending syllables, so each level only needs the
    previous orbit points and their leading generator.  Points equal within
    the tolerance and sharing a leading generator have identical subtrees
    and are pruned.
    """
    if seed_point is None:
        _, seed_point = find_loxodromic(G)
    syl = [(g, p, G.generators[g].power(p).matrix) for g, p in _syllable_list(G)]
    pts = np.array([complex(seed_point)])
    lead = np.array([-1])
    length = np.array([0])
    levels = [pts]
    frontier = (pts, lead, length)
    while len(frontier[0]):
        fp, fl, fn = frontier
        new_p, new_l, new_n = [], [], []
        for g, p, m in syl:
            ok = (fl != g) & (fn + 1 <= max_len)
            if not ok.any():
                continue
            new_p.append(apply_array(m, fp[ok]))
            new_l.append(np.full(ok.sum(), g))
            new_n.append(fn[ok] + 1)
        if not new_p:
            break
        P, Lb, N = np.concatenate(new_p), np.concatenate(new_l), np.concatenate(new_n)
        keep = _quantize(P, Lb * 64 + N, dedup_tol)
        P, Lb, N = P[keep], Lb[keep], N[keep]
        levels.append(P)
        frontier = (P, Lb, N)
    allp = np.concatenate(levels)
    allp = allp[_quantize(allp, np.zeros(len(allp), np.int64), dedup_tol)]
    allp = dedup(allp, dedup_tol)
    return LimitSetSample(allp, max_len, dedup_tol, G.group_hash(), meta={"seed": [complex(seed_point).real, complex(seed_point).imag]})


def _syllable_list(G):
    from .groups import syllables

    return syllables(G.orders)


def hausdorff_distance(A: np.ndarray, B: np.ndarray) -> float:
    XA, XB = to_sphere(A), to_sphere(B)
    da, _ = cKDTree(XB).query(XA)
    db, _ = cKDTree(XA).query(XB)
    return float(max(da.max(), db.max()))


def invariance_defect(G: GroupPresentation, S: LimitSetSample, core_fraction: float = 1.0) -> float:
    """max over generators of the directed distance from g(S) to S.

    Only the directed distance is meaningful for a truncated orbit: the
    image of the outermost shell can leave the sample.
    """
    XS = cKDTree(S.sphere())
    worst = 0.0
    for g in G.generators:
        img = apply_array(g.matrix, S.points)
        d, _ = XS.query(to_sphere(img))
        worst = max(worst, float(np.quantile(d, core_fraction)))
    return worst


def fit_invariant_circle(points, tol: float = FUCHSIAN_TOL) -> CircleFit:
    """Least-squares plane section of the sphere through the lifted points."""
    pts = points.points if isinstance(points, LimitSetSample) else np.asarray(points, complex)
    if len(pts) < 10:
        raise PreconditionError("at least 10 points required")
    X = to_sphere(pts)
    if len(np.unique(np.round(X, 9), axis=0)) < 3:
        raise Degenerate("fewer than 3 distinct points")
    centroid = X.mean(axis=0)
    _, _, vt = np.linalg.svd(X - centroid, full_matrices=False)
    n = vt[-1]
    c = float(n @ centroid)
    if c < 0:
        n, c = -n, -c
    # angular distance to the circle {n.X = c}, converted to a chordal distance
    rho = math.acos(min(c, 1.0))
    ang = np.arccos(np.clip(X @ n, -1, 1))
    dev = 2 * np.sin(np.abs(ang - rho) / 2)
    maxdev = float(dev.max())
    return CircleFit(n, c, maxdev, maxdev < tol)


def real_line_deviation(points: np.ndarray, M: MoebiusMap) -> float:
    """max chordal-scaled |Im| of M(points): 2|Im z|/(1+|z|^2), 0 at infinity."""
    z = apply_array(M.matrix, points)
    fin = ~np.isinf(z)
    zf = z[fin]
    with np.errstate(over="ignore"):
        val = 2 * np.abs(zf.imag) / (1 + np.abs(zf) ** 2)
    return float(val.max()) if len(val) else 0.0


def normalize_three_points(pts: np.ndarray) -> MoebiusMap:
    """Send three well separated sample points to 0, 1, infinity."""
    X = to_sphere(pts)
    i0 = 0
    i1 = int(np.argmax(np.linalg.norm(X - X[i0], axis=1)))
    d = np.minimum(np.linalg.norm(X - X[i0], axis=1), np.linalg.norm(X - X[i1], axis=1))
    i2 = int(np.argmax(d))
    return to_zero_one_inf(pts[i0], pts[i2], pts[i1])


def _generic_frames(n: int, seed: int = 7):
    """Fixed random rotations and offsets of the counting grid."""
    from scipy.spatial.transform import Rotation

    rng = np.random.default_rng(seed)
    rots = Rotation.random(n, random_state=rng).as_matrix().reshape(n, 3, 3)
    return rots, rng.uniform(0, 1, (n, 3))


def box_counts(X: np.ndarray, scales, n_grids: int = 16) -> np.ndarray:
    """Mean number of occupied cubes of side s in R^3 for each scale s.

    Counts are averaged over ``n_grids`` grids in generic position.  A curve
    lying in a coordinate plane would otherwise split its boxes on rounding
    noise, and a single grid adds a sizeable lattice-alignment jitter.
    """
    rots, shifts = _generic_frames(n_grids)
    out = np.zeros(len(scales))
    for R, shift in zip(rots, shifts):
        Y = X @ R.T
        for k, s in enumerate(scales):
            keys = np.floor(Y / s + shift).astype(np.int64)
            out[k] += len(np.unique(keys, axis=0))
    return out / n_grids


def auto_scales(X: np.ndarray, n_scales: int = 8) -> np.ndarray:
    """Geometric window [10 * median nearest-neighbour spacing, diameter / 10]."""
    d, _ = cKDTree(X).query(X, k=2)
    spacing = float(np.median(d[:, 1]))
    diam = float(np.max(np.linalg.norm(X - X.mean(axis=0), axis=1)) * 2)
    lo, hi = 10 * spacing, diam / 10
    if lo >= hi:
        raise InsufficientResolution("sample too sparse for a scale window")
    return np.geomspace(hi, lo, n_scales)


def normalized_cloud(S) -> np.ndarray:
    pts = S.points if isinstance(S, LimitSetSample) else np.asarray(S, complex)
    M = normalize_three_points(pts)
    return to_sphere(apply_array(M.matrix, pts))


def box_dimension(S, scales=None, n_scales: int = 8) -> DimensionEstimate:
    """Slope of log N(s) against log(1/s); residual is the slope's standard error."""
    X = normalized_cloud(S)
    if scales is None:
        scales = auto_scales(X, n_scales)
    scales = np.asarray(sorted(scales, reverse=True), float)
    if len(scales) < 4:
        raise PreconditionError("at least 4 scales required")
    d, _ = cKDTree(X).query(X, k=2)
    if scales[-1] < np.median(d[:, 1]):
        raise InsufficientResolution("finest scale below the sample spacing")
    counts = box_counts(X, scales)
    if counts[-1] > 0.5 * len(X):
        raise InsufficientResolution("box counts saturate at the finest scale")
    x, y = np.log(1 / scales), np.log(counts)
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    r = y - A @ coef
    dof = max(len(x) - 2, 1)
    se = math.sqrt((r @ r / dof) / np.sum((x - x.mean()) ** 2))
    return DimensionEstimate(float(coef[0]), tuple(scales.tolist()), tuple(float(c) for c in counts), float(se), float(coef[1]))


def circle_points(n: int, center: complex = 0j, radius: float = 1.0) -> np.ndarray:
    return center + radius * np.exp(2j * np.pi * np.arange(n) / n)


def sample_to_csv_rows(points: np.ndarray):
    for z in points:
        if np.isinf(z):
            yield (0.0, 0.0, 1)
        else:
            yield (float(z.real), float(z.imag), 0)


__all__ = [
    "INF", "LimitSetSample", "DimensionEstimate", "CircleFit", "enumerate_limit_points", "fit_invariant_circle",
    "box_dimension", "hausdorff_distance", "invariance_defect", "find_loxodromic", "real_line_deviation", "chordal",
]
