"""Discrete groups: triangle groups, four-point orbifold groups, deformations."""
from __future__ import annotations

import cmath
import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import bisect

from .errors import LikelyIndiscrete, NoSolution, NotHyperbolic, PreconditionError, RelationDrift
from .moebius import MoebiusMap, chordal, elliptic_about

RELATION_TOL = 1e-9
DEFORMATION_RADIUS = 0.15


@dataclass(frozen=True, eq=False)
class GroupPresentation:
    """Generators, relator words and orbifold orders.

    A word is a tuple of signed 1-based generator indices read as a matrix
    product from left to right: ``(1, -2)`` is ``g1 @ g2^-1``.  ``orders[i]``
    is the order of generator i (0 when it has infinite order).
    """

    generators: tuple
    relators: tuple
    orders: tuple
    kind: str = "custom"
    meta: dict = field(default_factory=dict)

    @property
    def rank(self) -> int:
        return len(self.generators)

    def word(self, w) -> MoebiusMap:
        return evaluate_word(self.generators, w)

    def relator_residuals(self) -> list:
        return [self.word(r).distance(MoebiusMap.identity()) for r in self.relators]

    def max_relator_residual(self) -> float:
        return max(self.relator_residuals(), default=0.0)

    def group_hash(self) -> str:
        h = hashlib.sha256()
        for g in self.generators:
            h.update(np.round(g.matrix, 9).tobytes())
        h.update(repr(self.relators).encode())
        return h.hexdigest()[:16]

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "orders": list(self.orders),
            "relators": [list(r) for r in self.relators],
            "generators": [g.to_json() for g in self.generators],
            "meta": {k: _jsonable(v) for k, v in self.meta.items()},
        }

    @classmethod
    def from_json(cls, data: dict) -> "GroupPresentation":
        meta = dict(data.get("meta", {}))
        if isinstance(meta.get("t"), list):
            meta["t"] = complex(*meta["t"])
        return cls(
            generators=tuple(MoebiusMap.from_json(g) for g in data["generators"]),
            relators=tuple(tuple(r) for r in data["relators"]),
            orders=tuple(data["orders"]),
            kind=data.get("kind", "custom"),
            meta=meta,
        )


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def evaluate_word(generators, word) -> MoebiusMap:
    m = np.eye(2, dtype=complex)
    for letter in word:
        g = generators[abs(letter) - 1]
        m = m @ (g.matrix if letter > 0 else g.inverse().matrix)
    return MoebiusMap(m)


def check_signature(orders) -> None:
    orders = tuple(int(m) for m in orders)
    if any(m < 2 for m in orders):
        raise PreconditionError(f"orders must be >= 2, got {orders}")
    s = sum(1.0 / m for m in orders)
    bound = {3: 1.0, 4: 2.0}.get(len(orders))
    if bound is None:
        raise PreconditionError("signatures have three or four orders")
    if s >= bound - 1e-15:
        raise NotHyperbolic(f"sum of 1/m_i = {s:.6f} is not below {bound}")


# ---------------------------------------------------------------- disc geometry

def disc_distance(z, w) -> float:
    num = 2 * abs(z - w) ** 2
    return math.acosh(1 + num / ((1 - abs(z) ** 2) * (1 - abs(w) ** 2)))


def _to_origin(p):
    """Disc automorphism sending p to 0."""
    return lambda z: (z - p) / (1 - np.conj(p) * z)


def _from_origin(p):
    return lambda z: (z + p) / (1 + np.conj(p) * z)


def vertex_angle(v, p, q) -> float:
    """Angle at v between the geodesics vp and vq."""
    T = _to_origin(v)
    return abs(cmath.phase(T(p) / T(q)))


def triangle_group(m1: int, m2: int, m3: int) -> GroupPresentation:
    """Rotations by 2*pi/m_i about the vertices of a triangle with angles pi/m_i.

    The triangle sits in the unit disc with its first vertex at 0 and the
    vertices in counterclockwise order, which gives g1 g2 g3 = identity.
    """
    orders = (int(m1), int(m2), int(m3))
    check_signature(orders)
    al, be, ga = (math.pi / m for m in orders)
    # side lengths from the angle form of the hyperbolic law of cosines
    c = math.acosh((math.cos(ga) + math.cos(al) * math.cos(be)) / (math.sin(al) * math.sin(be)))
    b = math.acosh((math.cos(be) + math.cos(al) * math.cos(ga)) / (math.sin(al) * math.sin(ga)))
    verts = [0j, complex(math.tanh(c / 2)), math.tanh(b / 2) * cmath.exp(1j * al)]
    gens = tuple(_disc_rotation(v, 2 * math.pi / m) for v, m in zip(verts, orders))
    relators = ((1, 2, 3),) + tuple((i + 1,) * m for i, m in enumerate(orders))
    return GroupPresentation(gens, relators, orders, kind="triangle", meta={"vertices": [[v.real, v.imag] for v in verts]})


def _disc_rotation(v: complex, angle: float) -> MoebiusMap:
    mirror = complex(np.inf) if v == 0 else 1 / np.conj(v)
    return elliptic_about(v, mirror, angle)


# ------------------------------------------------------------ octagon groups

def _octagon_pieces(tau: float, orders):
    """Quadrilateral vertices, base length, base angles of the isosceles caps."""
    Q = [tau * 1j ** k for k in range(4)]
    theta_q = vertex_angle(Q[0], Q[1], Q[3])
    L = disc_distance(Q[0], Q[1])
    betas = [math.asin(math.cos(math.pi / m) / math.cosh(L / 2)) for m in orders]
    return Q, theta_q, L, betas


def octagon_area(tau: float, orders) -> float:
    """Hyperbolic area of the star octagon, by angle defects (Gauss-Bonnet)."""
    _, theta_q, _, betas = _octagon_pieces(tau, orders)
    quad = 2 * math.pi - 4 * theta_q
    caps = sum(math.pi - 2 * math.pi / m - 2 * b for m, b in zip(orders, betas))
    return quad + caps


def target_area(orders) -> float:
    return 2 * math.pi * (2 - sum(1.0 / m for m in orders))


def solve_area_parameter(orders, tol: float = 1e-10) -> float:
    """tau in (0,1) with octagon_area(tau) equal to the orbifold area."""
    orders = tuple(int(m) for m in orders)
    if len(orders) != 4:
        raise PreconditionError("four orders required")
    check_signature(orders)
    target = target_area(orders)
    f = lambda t: octagon_area(t, orders) - target
    lo, hi = 1e-9, 1 - 1e-9
    if not (f(lo) < 0 < f(hi)):
        raise NoSolution("area equation has no sign change on (0, 1)")
    tau = bisect(f, lo, hi, xtol=1e-16, rtol=1e-15, maxiter=400)
    if abs(f(tau)) > tol:
        raise NoSolution(f"area residual {abs(f(tau)):.2e} above {tol}")
    return tau


def _apex(Q0, Q1, L, m, direction):
    """Apex of the isosceles triangle on the geodesic side Q0 Q1."""
    T, Tinv = _to_origin(Q0), _from_origin(Q0)
    w = T(Q1)
    mid = Tinv(math.tanh(L / 4) * w / abs(w))
    h = math.asinh(math.tanh(L / 2) / math.tan(math.pi / m))
    r = math.tanh((2 * math.atanh(abs(mid)) + h) / 2)
    return r * direction


def four_orbifold_group(m1: int, m2: int, m3: int, m4: int) -> GroupPresentation:
    """Side pairings of the star octagon over the quadrilateral Q(tau).

    H_i rotates about the apex of the i-th cap by 2*pi/m_i and carries the
    quadrilateral vertex Q_i to Q_{i+1}; the vertex cycle gives
    H4 H3 H2 H1 = identity.
    """
    orders = (int(m1), int(m2), int(m3), int(m4))
    tau = solve_area_parameter(orders)
    Q, _, L, _ = _octagon_pieces(tau, orders)
    gens, apices = [], []
    for i, m in enumerate(orders):
        q0, q1 = Q[i], Q[(i + 1) % 4]
        A = _apex(q0, q1, L, m, cmath.exp(1j * (math.pi / 4 + i * math.pi / 2)))
        apices.append(A)
        cands = [_disc_rotation(A, s * 2 * math.pi / m) for s in (1, -1)]
        gens.append(min(cands, key=lambda g: chordal(g(q0), q1)))
    relators = ((4, 3, 2, 1),) + tuple((i + 1,) * m for i, m in enumerate(orders))
    meta = {"tau": tau, "apices": [[a.real, a.imag] for a in apices]}
    return GroupPresentation(tuple(gens), relators, orders, kind="four_orbifold", meta=meta)


# --------------------------------------------------------------- deformation

def _twist(A: MoebiusMap, s: complex) -> MoebiusMap:
    """exp(s/2) translation-rotation along the axis of A (commutes with A)."""
    w, P = np.linalg.eig(A.matrix)
    order = np.argsort(-np.abs(w))
    P = P[:, order]
    D = np.diag([cmath.exp(s / 2), cmath.exp(-s / 2)])
    return MoebiusMap(P @ D @ np.linalg.inv(P))


def _twisted_generators(base: GroupPresentation, s: complex):
    H1, H2, H3, H4 = base.generators
    C = _twist(H2 @ H1, s)
    Ci = C.inverse()
    return (C @ H1 @ Ci, C @ H2 @ Ci, H3, H4)


def trace_coordinate(gens) -> complex:
    """The deformation coordinate tr(H1 H3).

    tr(H3 H2) would be the obvious choice but it is stationary under the
    twist at the Fuchsian point, so it cannot parametrize the path.
    """
    return (gens[0] @ gens[2]).trace


def deform_group(G: GroupPresentation, t: complex, radius: float = DEFORMATION_RADIUS,
                 steps: int = 16, screen_depth: int = 3) -> GroupPresentation:
    """Move a four-orbifold group along a trace-constrained path.

    The first two generators are conjugated by an element commuting with
    H2 H1 (a complex twist along its axis), so every generator trace and the
    product relation are untouched.  The twist is solved so that the
    coordinate tr(H1 H3) moves by exactly ``t``.
    """
    t = complex(t)
    if G.kind not in ("four_orbifold", "deformed"):
        raise PreconditionError("deformations are defined for four-orbifold groups")
    if abs(t) > radius:
        raise PreconditionError(f"|t| = {abs(t)} exceeds the deformation radius {radius}")
    base = GroupPresentation.from_json(G.meta["base"]) if G.kind == "deformed" else G
    t0 = complex(G.meta.get("t", 0.0)) if G.kind == "deformed" else 0j
    y0 = trace_coordinate(base.generators)
    s = complex(G.meta.get("twist", 0.0)) if G.kind == "deformed" else 0j
    h = 1e-6
    for k in range(1, steps + 1):
        target = y0 + t0 + (t - t0) * k / steps
        for _ in range(50):
            f = trace_coordinate(_twisted_generators(base, s)) - target
            if abs(f) < 1e-14:
                break
            df = (trace_coordinate(_twisted_generators(base, s + h))
                  - trace_coordinate(_twisted_generators(base, s - h))) / (2 * h)
            if df == 0:
                raise RelationDrift("trace coordinate is critical along the twist")
            s -= f / df
    gens = _twisted_generators(base, s)
    out = GroupPresentation(gens, base.relators, base.orders, kind="deformed",
                            meta={"base": base.to_json(), "t": t, "twist": s,
                                  "coordinate": "tr(H1 H3)", "coordinate_note": "stand-in for a Teichmueller coordinate"})
    drift = out.max_relator_residual()
    if drift > 1e-8:
        raise RelationDrift(f"relator residual {drift:.2e}")
    trace_err = max(abs(abs(g.trace) - 2 * math.cos(math.pi / m)) for g, m in zip(gens, base.orders))
    if trace_err > 1e-9:
        raise RelationDrift(f"generator trace drift {trace_err:.2e}")
    if screen_depth > 0:
        rep = jorgensen_screen(out, screen_depth)
        if not rep["pass"]:
            raise LikelyIndiscrete(f"{rep['n_violations']} Jorgensen violations")
    return out


# -------------------------------------------------------------- word tables

def syllables(orders):
    """(generator index, power) pairs with powers reduced to a symmetric range."""
    out = []
    for i, m in enumerate(orders):
        if m and m > 0:
            powers = [p for p in range(-((m - 1) // 2), m // 2 + 1) if p != 0]
        else:
            powers = [1, -1]
        out.extend((i, p) for p in powers)
    return out


def reduced_words(orders, max_len: int, limit: int | None = None):
    """Reduced words as syllable tuples, in order of length 1..max_len.

    The length of a word is its number of syllables g_i^p, with p a nonzero
    power reduced modulo the order of g_i.  At most ``limit`` words.
    """
    syl = syllables(orders)
    frontier = [((), -1)]
    words = []
    for _ in range(max_len):
        nxt = []
        for w, last in frontier:
            for g, p in syl:
                if g == last:
                    continue
                nw = w + ((g, p),)
                words.append(nw)
                if limit is not None and len(words) >= limit:
                    return words
                nxt.append((nw, g))
        frontier = nxt
    return words


def syllable_matrix(generators, word) -> np.ndarray:
    m = np.eye(2, dtype=complex)
    for g, p in word:
        m = m @ generators[g].power(p).matrix
    return m


def word_matrices(G: GroupPresentation, max_len: int, limit: int | None = None) -> tuple:
    words = reduced_words(G.orders, max_len, limit)
    mats = np.array([syllable_matrix(G.generators, w) for w in words]) if words else np.zeros((0, 2, 2), complex)
    return words, mats


def jorgensen_screen(G: GroupPresentation, depth: int, max_words: int = 1500, tol: float = 1e-8) -> dict:
    """Check |tr^2 A - 4| + |tr[A,B] - 2| >= 1 over sampled word pairs.

    Pairs with a common fixed point (tr[A,B] = 2) generate elementary groups
    and are skipped.  Words are taken in order of increasing length.
    """
    words, mats = word_matrices(G, depth, max_words)
    tr = np.trace(mats, axis1=1, axis2=2)
    Af = mats.reshape(len(mats), 4)
    Bt = mats.transpose(0, 2, 1).reshape(len(mats), 4)
    trAB = Af @ Bt.T
    ta, tb = tr[:, None], tr[None, :]
    # Fricke identity for the commutator trace
    tr_comm = ta ** 2 + tb ** 2 + trAB ** 2 - ta * tb * trAB - 2
    elementary = np.abs(tr_comm - 2) < tol
    value = np.abs(ta ** 2 - 4) + np.abs(tr_comm - 2)
    bad = (~elementary) & (value < 1 - 1e-9)
    idx = np.argwhere(bad)
    tested = int((~elementary).sum())
    violations = [
        {"A": _word_str(words[i]), "B": _word_str(words[j]), "value": float(value[i, j])}
        for i, j in idx[:20]
    ]
    min_val = float(value[~elementary].min()) if tested else math.inf
    return {"pass": len(idx) == 0, "depth": depth, "n_words": len(words), "n_pairs": tested,
            "n_violations": int(len(idx)), "min_value": min_val, "violations": violations}


def _word_str(w) -> str:
    return " ".join(f"g{g + 1}^{p}" for g, p in w)


def perturb(G: GroupPresentation, noise: float, seed: int = 0) -> GroupPresentation:
    """Generators with additive complex Gaussian noise on the entries."""
    rng = np.random.default_rng(seed)
    gens = tuple(MoebiusMap(g.matrix + noise * (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))))
                 for g in G.generators)
    return GroupPresentation(gens, G.relators, tuple(0 for _ in gens), kind="custom", meta={"perturbed": noise})


def cyclic_group(generator: MoebiusMap, order: int = 0) -> GroupPresentation:
    rel = ((1,) * order,) if order else ()
    return GroupPresentation((generator,), rel, (order,), kind="cyclic")
