"""Riccati foliations as monodromy data with exact path lifting.

The base sphere is cut along straight arcs joining a basepoint ``b0`` to
each puncture (a ray to infinity for a puncture at infinity).  The
complement of the cuts is simply connected, so the fiber coordinate is
single valued there, and crossing cut j from its left to its right (as
seen from ``b0``, i.e. counterclockwise around the puncture) applies M_j.

With this convention a small clockwise circle around ``b0`` meets the
cuts in the order 1, 2, ..., k and its holonomy is M_k ... M_1, which is
why the punctures must sit clockwise around ``b0`` in index order.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NotElliptic, PathTooCoarse, PositionsCollide, PreconditionError, RelationDrift
from .groups import GroupPresentation
from .kernels import segment_crossings
from .moebius import INF, MoebiusMap, apply, fixed_points, is_inf, multiplier_at, sending_to_zero_inf

RELATION_TOL = 1e-9
MAX_ORDER = 1000


def default_positions(k: int) -> list:
    """0, 1, infinity, then 4, 5, ... (the i-th puncture at i for i >= 4)."""
    base = [0j, 1 + 0j, INF]
    return base[:k] + [complex(i) for i in range(4, k + 1)]


def default_basepoint(positions) -> complex:
    finite = [complex(p) for p in positions if not is_inf(p)]
    if not finite:
        return 0j
    c = sum(finite) / len(finite)
    spread = max(abs(p - c) for p in finite)
    return c - 0.5j * max(spread, 1.0)


@dataclass(frozen=True)
class LocalExponent:
    """Exponent a with multiplier exp(2 pi i a) at the chosen fixed point."""

    value: complex
    fixed_point: complex
    order: int  # 0 for infinite order or non elliptic
    numerator: int  # n with a = n / order, 0 when not of finite order
    kind: str


@dataclass(frozen=True, eq=False)
class SuspensionData:
    punctures: tuple
    monodromies: tuple
    exponents: tuple
    basepoint: complex
    orders: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        k = len(self.punctures)
        if len(self.monodromies) != k:
            raise PreconditionError("one monodromy per puncture required")
        dirs, lengths = [], []
        for p in self.punctures:
            if is_inf(p):
                dirs.append(0j)
                lengths.append(math.inf)
            else:
                d = complex(p) - self.basepoint
                if abs(d) < 1e-12:
                    raise PositionsCollide("a puncture coincides with the basepoint")
                dirs.append(d / abs(d))
                lengths.append(abs(d))
        if any(is_inf(p) for p in self.punctures):
            j = next(i for i, p in enumerate(self.punctures) if is_inf(p))
            dirs[j] = _ray_direction(dirs, j)
        object.__setattr__(self, "_dirs", np.array(dirs, complex))
        object.__setattr__(self, "_lengths", np.array(lengths, float))
        _check_cyclic_order(self._dirs)

    @property
    def k(self) -> int:
        return len(self.punctures)

    @property
    def cut_directions(self) -> np.ndarray:
        return self._dirs.copy()

    @property
    def cut_lengths(self) -> np.ndarray:
        return self._lengths.copy()

    def product(self) -> MoebiusMap:
        """M_k ... M_1."""
        out = MoebiusMap.identity()
        for M in self.monodromies:
            out = M @ out
        return out

    def relation_residual(self) -> float:
        return self.product().distance(MoebiusMap.identity())

    def degree(self) -> int:
        """Degree of the induced foliation on the projective plane when every fiber is simple."""
        return self.k - 1

    def far_radius(self) -> float:
        """Radius around the basepoint containing every finite cut."""
        finite = self._lengths[np.isfinite(self._lengths)]
        return 4 * float(finite.max(initial=0.0)) + 1

    def to_json(self) -> dict:
        return {
            "punctures": [_pt_json(p) for p in self.punctures],
            "monodromies": [M.to_json() for M in self.monodromies],
            "exponents": [[complex(e.value).real, complex(e.value).imag] for e in self.exponents],
            "orders": list(self.orders),
            "basepoint": [self.basepoint.real, self.basepoint.imag],
        }

    @classmethod
    def from_json(cls, data: dict) -> "SuspensionData":
        pts = [_pt_from_json(p) for p in data["punctures"]]
        mons = [MoebiusMap.from_json(m) for m in data["monodromies"]]
        b0 = complex(*data["basepoint"])
        return from_monodromies(pts, mons, basepoint=b0, orders=data.get("orders"))


def _pt_json(p):
    return None if is_inf(p) else [complex(p).real, complex(p).imag]


def _pt_from_json(v):
    return INF if v is None else complex(*v)


def _ray_direction(dirs, j) -> complex:
    """Direction of the ray to infinity, between the neighbouring cuts in index order."""
    k = len(dirs)
    others = [i for i in range(k) if i != j]
    if not others:
        return 1j
    if len(others) == 1:
        return -dirs[others[0]]
    # clockwise order is 1, 2, ..., k: the ray sits clockwise after puncture j-1
    # and counterclockwise before puncture j+1 (cyclically)
    prev_d = dirs[(j - 1) % k]
    next_d = dirs[(j + 1) % k]
    a_prev = cmath.phase(prev_d)
    gap = (a_prev - cmath.phase(next_d)) % (2 * math.pi)
    if gap == 0:
        gap = 2 * math.pi
    return cmath.exp(1j * (a_prev - gap / 2))


def _check_cyclic_order(dirs) -> None:
    k = len(dirs)
    if k < 3:
        return
    ang = np.angle(dirs)
    order = np.argsort(-ang)  # clockwise
    start = int(np.flatnonzero(order == 0)[0])
    seq = np.roll(order, -start)
    if not np.array_equal(seq, np.arange(k)):
        raise PreconditionError(
            "punctures must lie clockwise around the basepoint in index order; choose another basepoint")


def local_exponent(M: MoebiusMap, order: int | None = None) -> LocalExponent:
    """Exponent of M at its Poincare fixed point.

    For an elliptic map of finite order m the multipliers at the two fixed
    points are exp(2 pi i n/m) and exp(2 pi i (m-n)/m); the Poincare point
    is the one with the smaller numerator n.
    """
    if M.is_identity():
        return LocalExponent(0j, INF, 1, 0, "identity")
    cls = M.classify()
    fps = fixed_points(M)
    if cls == "parabolic":
        return LocalExponent(0j, fps[0], 0, 0, "parabolic")
    cands = []
    for fp in fps:
        lam = multiplier_at(M, fp)
        a = cmath.log(lam) / (2j * math.pi)
        a = complex(a.real % 1.0, a.imag)
        cands.append((a, fp))
    if cls == "loxodromic":
        a, fp = min(cands, key=lambda c: (c[0].real, -c[0].imag))
        return LocalExponent(a, fp, 0, 0, "loxodromic")
    m = order or _elliptic_order(M)
    best = None
    for a, fp in cands:
        if m:
            n = round(a.real * m) % m
            if best is None or n < best[3]:
                best = (Fraction(n, m), fp, m, n)
        elif best is None or a.real < best[0].real:
            best = (a, fp, 0, 0)
    if m:
        frac, fp, m, n = best
        g = math.gcd(n, m)
        return LocalExponent(complex(n / m), fp, m // g, n // g, "elliptic")
    return LocalExponent(best[0], best[1], 0, 0, "elliptic")


def _elliptic_order(M: MoebiusMap, max_order: int = MAX_ORDER) -> int:
    a = cmath.acos(M.trace / 2).real / math.pi  # rotation angle / 2 pi
    for m in range(2, max_order + 1):
        if abs(a * m - round(a * m)) < 1e-9 and M.power(m).is_identity(1e-8):
            return m
    return 0


def from_monodromies(punctures, monodromies, basepoint=None, orders=None) -> SuspensionData:
    pts = [INF if is_inf(p) else complex(p) for p in punctures]
    _check_distinct(pts)
    b0 = default_basepoint(pts) if basepoint is None else complex(basepoint)
    mons = tuple(monodromies)
    if orders is None:
        orders = [0] * len(mons)
    exps = tuple(local_exponent(M, o or None) for M, o in zip(mons, orders))
    ords = tuple(e.order if e.kind == "elliptic" else 0 for e in exps)
    D = SuspensionData(tuple(pts), mons, exps, b0, ords)
    res = D.relation_residual()
    if res > RELATION_TOL:
        raise RelationDrift(f"product relation residual {res:.2e}")
    return D


def _check_distinct(pts) -> None:
    for i in range(len(pts)):
        for j in range(i):
            a, b = pts[i], pts[j]
            if (is_inf(a) and is_inf(b)) or (not is_inf(a) and not is_inf(b) and abs(a - b) < 1e-12):
                raise PositionsCollide(f"punctures {j + 1} and {i + 1} coincide")


def _closes(G: GroupPresentation) -> bool:
    """True when a relator is a product of all generators, each once."""
    k = G.rank
    return any(len(r) == k and sorted(abs(x) for x in r) == list(range(1, k + 1)) for r in G.relators)


def from_group(G: GroupPresentation, puncture_positions=None, basepoint=None) -> SuspensionData:
    """Suspension with holonomy group G.

    M_i is the i-th generator for i < k and M_k = (M_{k-1} ... M_1)^-1.
    When G already has a relator multiplying all generators (triangle and
    four-orbifold groups) the last generator is redundant and k equals the
    number of generators; otherwise k is one more.
    """
    gens = list(G.generators)
    closes = _closes(G)
    k = len(gens) if closes else len(gens) + 1
    if puncture_positions is None:
        puncture_positions = default_positions(k)
    if len(puncture_positions) != k:
        raise PreconditionError(f"{k} puncture positions required, got {len(puncture_positions)}")
    mons = gens[: k - 1]
    prod = MoebiusMap.identity()
    for M in mons:
        prod = M @ prod
    mons.append(prod.inverse())
    orders = list(G.orders[: k - 1]) + ([G.orders[k - 1]] if closes else [0])
    return from_monodromies(puncture_positions, mons, basepoint, orders)


def repeated_generator(xi: MoebiusMap, n: int, puncture_positions=None, basepoint=None) -> SuspensionData:
    """n + 1 punctures with M_1 = ... = M_n = xi and M_{n+1} = xi^-n."""
    if n < 1:
        raise PreconditionError("n >= 1 required")
    mons = [xi] * n + [xi.power(-n)]
    pts = default_positions(n + 1) if puncture_positions is None else puncture_positions
    return from_monodromies(pts, mons, basepoint)


# ------------------------------------------------------------------ paths

@dataclass(frozen=True, eq=False)
class BasePath:
    """Polygon in the base plane; consecutive vertices joined by straight segments."""

    points: np.ndarray
    closed: bool = False

    def __post_init__(self):
        pts = np.asarray(self.points, complex).ravel()
        if self.closed and len(pts) and pts[0] != pts[-1]:
            pts = np.append(pts, pts[0])
        object.__setattr__(self, "points", pts)

    def __add__(self, other: "BasePath") -> "BasePath":
        """Concatenation: this path, then ``other``."""
        if len(self.points) and len(other.points) and abs(self.points[-1] - other.points[0]) > 1e-12:
            raise PreconditionError("paths do not connect")
        return BasePath(np.concatenate([self.points, other.points[1:]]))

    def reversed(self) -> "BasePath":
        return BasePath(self.points[::-1].copy(), self.closed)


def circle_path(center, radius: float, n: int = 256, turns: int = 1, clockwise: bool = False,
                start_angle: float = 0.0) -> BasePath:
    sgn = -1 if clockwise else 1
    t = start_angle + sgn * 2 * np.pi * turns * np.arange(n * turns + 1) / n
    pts = complex(center) + radius * np.exp(1j * t)
    pts[-1] = pts[0]
    return BasePath(pts)


def standard_loop(D: SuspensionData, i: int, n: int = 256) -> BasePath:
    """Small counterclockwise circle around puncture i (0-based); around infinity a large clockwise circle."""
    p = D.punctures[i]
    if is_inf(p):
        R = D.far_radius()
        return circle_path(D.basepoint, R, n, clockwise=True)
    others = [abs(complex(q) - p) for j, q in enumerate(D.punctures) if j != i and not is_inf(q)]
    r = 0.25 * min(others + [abs(p - D.basepoint)])
    return circle_path(p, r, n)


def product_loop(D: SuspensionData, n: int = 512) -> BasePath:
    """Small clockwise circle around the basepoint: encloses every puncture on the sphere."""
    r = 0.25 * float(D._lengths[np.isfinite(D._lengths)].min(initial=1.0))
    return circle_path(D.basepoint, r, n, clockwise=True, start_angle=0.123)


def crossing_word(D: SuspensionData, path: BasePath) -> list:
    """Signed crossings (j, +-1) with 0-based cut index j, in path order."""
    pts = np.asarray(path.points, complex)
    if len(pts) < 2:
        return []
    _check_avoids(D, pts)
    idx, sgn = segment_crossings(pts.real, pts.imag, D.basepoint.real, D.basepoint.imag,
                                 D._dirs.real, D._dirs.imag, D._lengths)
    if (idx == -2).any():
        s = int(np.flatnonzero(idx == -2)[0])
        raise PathTooCoarse(f"segment {s} crosses more than one cut")
    return [(int(j), int(s)) for j, s in zip(idx, sgn) if j >= 0]


def _check_avoids(D, pts, tol: float = 1e-12) -> None:
    for p in D.punctures:
        if not is_inf(p) and np.min(np.abs(pts - p)) < tol:
            raise PreconditionError("path passes through a puncture")


def reduce_word(word) -> list:
    """Free reduction of a signed crossing word."""
    out = []
    for j, s in word:
        if out and out[-1] == (j, -s):
            out.pop()
        else:
            out.append((j, s))
    return out


def holonomy_of_loop(D: SuspensionData, loop: BasePath) -> MoebiusMap:
    """Composition of the crossed monodromies (first crossing acts first)."""
    pts = loop.points
    if len(pts) and abs(pts[0] - pts[-1]) > 1e-12:
        raise PreconditionError("loop is not closed")
    return holonomy_of_path(D, loop)


def holonomy_of_path(D: SuspensionData, path: BasePath) -> MoebiusMap:
    m = np.eye(2, dtype=complex)
    for j, s in crossing_word(D, path):
        M = D.monodromies[j] if s > 0 else D.monodromies[j].inverse()
        m = M.matrix @ m
    return MoebiusMap(m)


def lift_path(D: SuspensionData, path: BasePath, y0):
    """Endpoint of the lift of ``path`` starting at fiber point y0."""
    y = y0
    for j, s in crossing_word(D, path):
        M = D.monodromies[j] if s > 0 else D.monodromies[j].inverse()
        y = apply(M, y)
    return y


def fiber_eigenvalues(D: SuspensionData, i: int):
    """Eigenvalue ratios (Poincare point, Siegel point) on fiber i, as exact fractions."""
    e = D.exponents[i]
    if e.kind != "elliptic" or e.order == 0:
        raise NotElliptic(f"monodromy {i + 1} is not elliptic of finite order")
    r = Fraction(e.numerator, e.order)
    return r, -r


# ------------------------------------------------------------ invariant circles

@dataclass(frozen=True, eq=False)
class CircleFamily:
    """Circles C^-1({|z| = r}) invariant under an elliptic map."""

    conjugator: MoebiusMap
    fixed: tuple

    def circle(self, r: float, n: int = 100) -> np.ndarray:
        if not r > 0 or math.isinf(r):
            raise PreconditionError("radius must be finite and positive")
        z = r * np.exp(2j * np.pi * np.arange(n) / n)
        return apply(self.conjugator.inverse(), z)

    def radius_of(self, z) -> float:
        return float(abs(apply(self.conjugator, z)))


def invariant_circles(M: MoebiusMap) -> CircleFamily:
    if M.is_identity() or M.classify() != "elliptic":
        raise NotElliptic("invariant circle families need an elliptic map")
    p, q = fixed_points(M)
    return CircleFamily(sending_to_zero_inf(p, q), (p, q))


__all__ = [
    "SuspensionData", "BasePath", "LocalExponent", "from_group", "from_monodromies", "repeated_generator",
    "lift_path", "holonomy_of_loop", "holonomy_of_path", "crossing_word", "reduce_word", "fiber_eigenvalues",
    "invariant_circles", "standard_loop", "product_loop", "circle_path", "default_positions",
]
