"""Levi-flats of Riccati foliations: the closure of the saturated limit set.

Two realizations are provided.  In the suspension model the fiber
coordinate is single valued off the cuts and constant along leaves, so the
saturation of a limit set is computed exactly from crossing words.  In the
ODE model leaves are integrated numerically, which makes the lifting error
visible in the analyticity residual.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import NotElliptic, NotFuchsian, PreconditionError, TooFewSamples
from .limitset import DEDUP_TOL, LimitSetSample, box_dimension, dedup, fit_invariant_circle
from .moebius import INF, MoebiusMap, apply, chordal, is_inf, sending_to_zero_inf, to_sphere
from .riccati_ode import RiccatiODE, integrate_leaf, monodromy
from .suspension import BasePath, SuspensionData, crossing_word, lift_path

MIN_SLICE = 500


@dataclass(frozen=True, eq=False)
class LeviFlatCloud:
    base: np.ndarray
    fiber: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.base)

    def fiber_slice(self, x, tol: float = 1e-9) -> np.ndarray:
        return self.fiber[np.abs(self.base - complex(x)) <= tol]

    def csv_rows(self):
        yield ["re_x", "im_x", "re_y", "im_y", "y_infinite"]
        for x, y in zip(self.base, self.fiber):
            inf = bool(np.isinf(y))
            yield [x.real, x.imag, 0.0 if inf else y.real, 0.0 if inf else y.imag, int(inf)]


def _points(L) -> np.ndarray:
    return L.points if isinstance(L, LimitSetSample) else np.asarray(L, complex)


def path_grid(D: SuspensionData, n_radii: int = 3, n_angles: int = 8, winding: bool = True,
              margin: float = 0.05) -> list:
    """Paths from the basepoint to a polar grid of endpoints.

    Straight segments from the basepoint never cross a cut, so with
    ``winding`` each endpoint is also reached after one turn around every
    finite puncture, which changes the lift by a monodromy.
    """
    b0 = D.basepoint
    finite = [complex(p) for p in D.punctures if not is_inf(p)]
    R = max(abs(p - b0) for p in finite) if finite else 1.0
    paths = []
    for r in R * np.arange(1, n_radii + 1) / (n_radii + 0.5):
        for t in 2 * np.pi * (np.arange(n_angles) + 0.37) / n_angles:
            x = b0 + r * np.exp(1j * t)
            if min(abs(x - p) for p in finite) < margin:
                continue
            paths.append(BasePath(np.linspace(b0, x, 8)))
            if winding:
                for p in finite:
                    paths.append(_detour(b0, p, margin) + BasePath(np.linspace(b0, x, 8)))
    return paths


def local_grid(D: SuspensionData, i: int, radius: float = 0.1, n_radii: int = 3, n_angles: int = 8,
               winding: bool = True, margin: float = 0.05) -> list:
    """Paths from the basepoint to endpoints with |t| <= radius in the local coordinate of puncture i."""
    b0 = D.basepoint
    p = D.punctures[i]
    finite = [complex(q) for q in D.punctures if not is_inf(q)]
    paths = []
    for r in radius * np.arange(1, n_radii + 1) / (n_radii + 0.5):
        for a in 2 * np.pi * (np.arange(n_angles) + 0.37) / n_angles:
            t = r * np.exp(1j * a)
            x = 1 / t if is_inf(p) else complex(p) + t
            paths.append(BasePath(np.linspace(b0, x, 8)))
            if winding:
                for q in finite:
                    paths.append(_detour(b0, q, margin) + BasePath(np.linspace(b0, x, 8)))
    return paths


def _detour(b0: complex, p: complex, margin: float, n: int = 64) -> BasePath:
    """From b0 to near p beside the cut, once around p, and back."""
    d = p - b0
    rad = max(margin, 0.25 * abs(d))
    start = p - rad * d / abs(d) * np.exp(0.3j)
    a0 = np.angle(start - p)
    ring = p + rad * np.exp(1j * (a0 + 2 * np.pi * np.arange(n + 1) / n))
    ring[-1] = start
    return BasePath(np.concatenate([np.linspace(b0, start, 8), ring[1:], np.linspace(start, b0, 8)[1:]]))


def saturate(D: SuspensionData, L, grid=(), dedup_tol: float = DEDUP_TOL, margin: float = 1e-3) -> LeviFlatCloud:
    """Record (endpoint, lift of lambda) for every limit point and grid path."""
    pts = _points(L)
    base = [np.full(len(pts), D.basepoint)]
    fiber = [pts]
    for path in grid:
        end = complex(path.points[-1])
        if any(not is_inf(p) and abs(end - p) < margin for p in D.punctures):
            raise PreconditionError("grid endpoint within the margin of a puncture")
        M = MoebiusMap.identity()
        for j, s in crossing_word(D, path):
            M = (D.monodromies[j] if s > 0 else D.monodromies[j].inverse()) @ M
        base.append(np.full(len(pts), end))
        fiber.append(apply(M, pts))
    base, fiber = np.concatenate(base), np.concatenate(fiber)
    keep = _dedup_pairs(base, fiber, dedup_tol)
    meta = {"limit_depth": getattr(L, "max_len", None), "grid_paths": len(grid), "dedup_tol": dedup_tol}
    return LeviFlatCloud(base[keep], fiber[keep], meta)


def _dedup_pairs(base: np.ndarray, fiber: np.ndarray, tol: float) -> np.ndarray:
    """Indices kept after merging samples closer than tol in base and fiber (chordal)."""
    X = np.column_stack([to_sphere(base), to_sphere(fiber)])
    pairs = cKDTree(X).query_pairs(tol, output_type="ndarray")
    keep = np.ones(len(base), bool)
    for i, j in pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))] if len(pairs) else ():
        if keep[i] and keep[j]:
            keep[j] = False
    return keep


# ------------------------------------------------------------ local model

def _local_data(D: SuspensionData, i: int):
    e = D.exponents[i]
    if e.kind != "elliptic" or e.order == 0:
        raise NotElliptic(f"monodromy {i + 1} is not elliptic of finite order")
    fps = [f for f in _fixed(D.monodromies[i])]
    p = e.fixed_point
    q = next(f for f in fps if chordal(f, p) > 1e-12)
    return e, p, q


def _fixed(M):
    from .moebius import fixed_points

    return fixed_points(M)


def _local_coordinate(D: SuspensionData, i: int, x):
    """Coordinate on the base vanishing at puncture i (1/x at infinity)."""
    p = D.punctures[i]
    x = np.asarray(x, complex)
    return 1 / x if is_inf(p) else x - complex(p)


@dataclass(frozen=True)
class AccumulationReport:
    eps: tuple
    poincare_distance: tuple
    siegel_distance: tuple
    separation: float
    exponent: float
    fitted_exponent: float

    @property
    def decreasing(self) -> bool:
        d = self.poincare_distance
        return all(b < a for a, b in zip(d, d[1:]))

    def to_json(self) -> dict:
        return {"eps": list(self.eps), "poincare_distance": list(self.poincare_distance),
                "siegel_distance": list(self.siegel_distance), "separation": self.separation,
                "exponent": self.exponent, "fitted_exponent": self.fitted_exponent}


def accumulation_test(D: SuspensionData, i: int, L, eps0: float = 0.1, halvings: int = 8,
                      n_angles: int = 8) -> AccumulationReport:
    """Distances of the lifted limit set to the separatrix traces near fiber i.

    Near the fiber over p_i the foliation is linearized: with C sending the
    Poincare fixed point to 0 and the Siegel one to infinity, the leaf with
    cut-chart fiber value y reads w = t^a C(y) in the local base coordinate
    t, where a = n/m is the Poincare exponent.  This is single valued
    because crossing the cut multiplies C(y) by exp(2 pi i a).  The limit
    set is lifted to the fibers |t| = eps at several angles, and C is scaled
    so that the median of |C(lambda)| is 1.
    """
    e, p, q = _local_data(D, i)
    a = e.numerator / e.order
    pts = _points(L)
    C = sending_to_zero_inf(p, q)
    c = apply(C, pts)
    fin = np.isfinite(c) & (np.abs(c) > 0)
    scale = float(np.median(np.abs(c[fin]))) if fin.any() else 1.0
    C = MoebiusMap(np.diag([1 / scale, 1]).astype(complex)) @ C
    Cinv = C.inverse()
    cl = apply(C, pts)
    eps = eps0 * 0.5 ** np.arange(halvings + 1)
    ang = 2 * np.pi * (np.arange(n_angles) + 0.5) / n_angles
    dp, dq = [], []
    for r in eps:
        t = r * np.exp(1j * ang)
        w = (t[:, None] ** a) * cl[None, :]
        y = apply(Cinv, w.ravel())
        dp.append(float(np.min(chordal(y, p))))
        dq.append(float(np.min(chordal(y, q))))
    sep = float(chordal(p, q))
    slope = float(np.polyfit(np.log(eps), np.log(dp), 1)[0]) if min(dp) > 0 else math.inf
    return AccumulationReport(tuple(eps.tolist()), tuple(dp), tuple(dq), sep, a, slope)


def invariant_function(M: MoebiusMap, circle_points, order: int | None = None):
    """Psi = Cayley((C y)^m) with C a rotation chart sending the circle to |z| = 1.

    The invariant circle of the elliptic map M through ``circle_points`` is
    mapped into the extended real line, and Psi is invariant under M.
    Returns (Psi, C, m).
    """
    from .suspension import local_exponent

    e = local_exponent(M, order)
    if e.order == 0:
        raise NotElliptic("finite order elliptic map required")
    p = e.fixed_point
    q = next(f for f in _fixed(M) if chordal(f, p) > 1e-12)
    C = sending_to_zero_inf(p, q)
    r = np.abs(apply(C, np.asarray(circle_points, complex)))
    C = MoebiusMap(np.diag([1 / float(np.median(r)), 1]).astype(complex)) @ C
    m = e.order

    def psi(y):
        w = apply(C, np.asarray(y, complex)) ** m
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1j * (1 + w) / (1 - w)

    return psi, C, m


def real_residual(C: MoebiusMap, m: int, y) -> np.ndarray:
    """Chordal-scaled |Im Psi| = 2|Im Psi| / (1 + |Psi|^2) = |1 - |w|^2| / (1 + |w|^2).

    Here w = (C y)^m; the scaled form stays bounded where Psi has a pole.
    """
    w = np.abs(apply(C, np.asarray(y, complex))) ** (2 * m)
    with np.errstate(invalid="ignore"):
        out = np.abs(1 - w) / (1 + w)
    return np.where(np.isinf(w), 1.0, out)


def defining_function_residual(D: SuspensionData, i: int, cloud: LeviFlatCloud, radius: float = 0.1,
                               tol: float = 1e-6) -> float:
    """Max chordal-scaled |Im Psi| over cloud points with |t| <= radius near fiber i.

    In the cut chart leafwise transport to a nearby fiber is the identity
    unless the cut is crossed, and Psi is invariant under that crossing.
    """
    e, p, q = _local_data(D, i)
    base_fiber = cloud.fiber_slice(D.basepoint)
    fit = fit_invariant_circle(base_fiber, tol)
    if not fit.fuchsian:
        raise NotFuchsian(f"limit set deviates {fit.max_deviation:.2e} from a circle")
    _, C, m = invariant_function(D.monodromies[i], base_fiber, e.order)
    t = _local_coordinate(D, i, cloud.base)
    sel = np.abs(t) <= radius
    if not sel.any():
        raise TooFewSamples("no cloud points in the neighbourhood")
    return float(real_residual(C, m, cloud.fiber[sel]).max())


@dataclass(frozen=True)
class SliceReport:
    points: np.ndarray
    dimension: object

    def to_json(self) -> dict:
        return {"n": len(self.points), "dimension": self.dimension.to_json()}


def slice_and_dimension(cloud: LeviFlatCloud, x, tol: float = 1e-9, scales=None,
                        min_samples: int = MIN_SLICE) -> SliceReport:
    """Fiber slice at base point x and the box dimension of its trace."""
    pts = cloud.fiber_slice(x, tol)
    if len(pts) < min_samples:
        raise TooFewSamples(f"slice holds {len(pts)} < {min_samples} samples")
    return SliceReport(pts, box_dimension(pts, scales))


# ------------------------------------------------------------ ODE model

@dataclass(frozen=True, eq=False)
class OdeLeviFlat:
    """Levi-flat of a Riccati equation near one of its fibers.

    The reference fiber Sigma sits at distance ``radius`` from the chosen
    fiber p.  Monodromies based at Sigma are fitted from integrated loops,
    the limit set on Sigma is the orbit of the fixed points of a hyperbolic
    word, and cloud points are lifts of that set to fibers near p.
    """

    ode: RiccatiODE
    center: complex
    sigma: complex
    generators: tuple
    limit_points: np.ndarray
    psi_chart: MoebiusMap
    order: int
    rtol: float
    cloud: LeviFlatCloud
    circle_deviation: float

    def transport_to_sigma(self, x, y, winding: int = -1):
        return integrate_leaf(self.ode, _arc_path(self.center, x, self.sigma, winding), y, rtol=self.rtol)

    def residual(self) -> float:
        vals = [self.transport_to_sigma(x, y) for x, y in zip(self.cloud.base, self.cloud.fiber)]
        return float(real_residual(self.psi_chart, self.order, vals).max())


def _arc_path(center: complex, x0: complex, x1: complex, winding: int = 0, n_per_turn: int = 96) -> BasePath:
    """Radial move then an arc around center from x0 to x1 with extra full turns."""
    r0, r1 = abs(x0 - center), abs(x1 - center)
    a0, a1 = np.angle(x0 - center), np.angle(x1 - center)
    da = (a1 - a0 + np.pi) % (2 * np.pi) - np.pi + 2 * np.pi * winding
    n = max(8, int(abs(da) / (2 * np.pi) * n_per_turn) + 2)
    radial = center + np.linspace(r0, r1, 6) * np.exp(1j * a0)
    arc = center + r1 * np.exp(1j * (a0 + da * np.linspace(0, 1, n)))
    arc[-1] = x1
    return BasePath(np.concatenate([radial, arc[1:]]))


def _loop_around(center: complex, start: complex, other: complex, n: int = 96) -> BasePath:
    """Loop from start around ``other``: out along a segment, a circle, back."""
    d = start - other
    rad = 0.25 * min(abs(other - center), 1.0)
    touch = other + rad * d / abs(d)
    ring = other + rad * np.exp(1j * (np.angle(d) + 2 * np.pi * np.arange(n + 1) / n))
    ring[-1] = touch
    seg = np.linspace(start, touch, 12)
    return BasePath(np.concatenate([seg, ring[1:], seg[::-1][1:]]))


def _hyperbolic_word(A: MoebiusMap, B: MoebiusMap, max_len: int = 6) -> MoebiusMap:
    letters = [A, A.inverse(), B, B.inverse()]
    frontier = [MoebiusMap.identity()]
    for _ in range(max_len):
        nxt = []
        for W in frontier:
            for g in letters:
                V = g @ W
                tr = V.trace
                if abs(tr.imag) < 1e-3 * abs(tr) and abs(tr.real) > 2.05:
                    return V
                nxt.append(V)
        frontier = nxt[:200]
    raise PreconditionError("no hyperbolic word found")


def ode_leviflat(ode: RiccatiODE, fiber_index: int = 0, radius: float = 0.1, n_points: int = 24,
                 orbit_depth: int = 4, rtol: float = 1e-10, sigma_angle: float = 0.4, seed: int = 0) -> OdeLeviFlat:
    """Build the Levi-flat near a fiber of ``ode`` at lifting tolerance rtol."""
    fibers = ode.fibers()
    if len(fibers) < 2:
        raise PreconditionError("at least two finite fibers required")
    p = complex(fibers[fiber_index])
    other = complex(next(f for k, f in enumerate(fibers) if k != fiber_index))
    sigma = p + radius * np.exp(1j * sigma_angle)
    loop_p = _arc_path(p, sigma, sigma, winding=1)
    A = monodromy(ode, loop_p, rtol=rtol, seed=seed)
    B = monodromy(ode, _loop_around(p, sigma, other), rtol=rtol, seed=seed + 1)
    H = _hyperbolic_word(A, B)
    pts = list(_fixed(H))
    gens = [A, A.inverse(), B, B.inverse()]
    frontier = list(pts)
    for _ in range(orbit_depth):
        frontier = [apply(g, z) for z in frontier for g in gens]
        pts.extend(frontier)
    pts = dedup(np.array([complex(z) for z in pts]), 1e-9)
    fit = fit_invariant_circle(pts, 1e-4)
    if not fit.fuchsian:
        raise NotFuchsian(f"monodromy limit set deviates {fit.max_deviation:.2e} from a circle")
    _, C, m = invariant_function(A, pts)
    rng = np.random.default_rng(seed)
    chosen = pts[rng.choice(len(pts), size=min(n_points, len(pts)), replace=False)]
    xs = p + radius * rng.uniform(0.3, 1.0, len(chosen)) * np.exp(1j * rng.uniform(0, 2 * np.pi, len(chosen)))
    ys = [integrate_leaf(ode, _arc_path(p, sigma, x, 0), y, rtol=rtol) for x, y in zip(xs, chosen)]
    cloud = LeviFlatCloud(np.asarray(xs, complex), np.asarray(ys, complex),
                          {"rtol": rtol, "radius": radius, "sigma": [sigma.real, sigma.imag]})
    return OdeLeviFlat(ode, p, sigma, (A, B), pts, C, m, rtol, cloud, fit.max_deviation)


def residual_trend(ode: RiccatiODE, rtols=(1e-6, 1e-8, 1e-10), **kw) -> list:
    """Analyticity residual at each lifting tolerance."""
    return [ode_leviflat(ode, rtol=r, **kw).residual() for r in rtols]


def siegel_clearance(D: SuspensionData, cloud: LeviFlatCloud) -> float:
    """Smallest chordal distance from cloud fiber points to a Siegel fixed point, relative to separation."""
    worst = math.inf
    for i in range(D.k):
        try:
            e, p, q = _local_data(D, i)
        except NotElliptic:
            continue
        d = float(np.min(chordal(cloud.fiber, q)))
        worst = min(worst, d / float(chordal(p, q)))
    return worst


__all__ = ["LeviFlatCloud", "AccumulationReport", "SliceReport", "OdeLeviFlat", "saturate", "path_grid",
           "accumulation_test", "invariant_function", "real_residual", "defining_function_residual",
           "slice_and_dimension", "local_grid", "ode_leviflat", "residual_trend", "siegel_clearance"]
