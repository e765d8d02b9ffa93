"""Moebius transformations acting on the Riemann sphere.

Points of the sphere are Python/numpy complex numbers; the point at
infinity is ``INF`` (any complex value with an infinite component is
treated as infinity).  Maps are stored as normalized SL(2,C) matrices and
compared up to sign.
"""
from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousClass, DegenerateAxis, IsIdentity, NotFixed

INF = complex(np.inf, 0.0)

CHORDAL_TOL = 1e-9
CLASS_TOL = 1e-8


def is_inf(z) -> bool:
    return cmath.isinf(complex(z))


def to_sphere(z) -> np.ndarray:
    """Stereographic lift of complex numbers (array-like) to the unit sphere in R^3.

    Returns an array of shape ``z.shape + (3,)``.  Infinite entries map to
    the north pole.  Large moduli are handled in the chart w = 1/z.
    """
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape + (3,))
    inf = np.isinf(z)
    small = ~inf & (np.abs(z) <= 1.0)
    big = ~inf & ~small
    zs = z[small]
    r2 = zs.real ** 2 + zs.imag ** 2
    out[small, 0] = 2 * zs.real / (1 + r2)
    out[small, 1] = 2 * zs.imag / (1 + r2)
    out[small, 2] = (r2 - 1) / (1 + r2)
    w = 1.0 / z[big]
    s2 = w.real ** 2 + w.imag ** 2
    out[big, 0] = 2 * w.real / (1 + s2)
    out[big, 1] = -2 * w.imag / (1 + s2)
    out[big, 2] = (1 - s2) / (1 + s2)
    out[inf] = (0.0, 0.0, 1.0)
    return out


def from_sphere(X) -> np.ndarray:
    """Inverse stereographic projection; the north pole maps to ``INF``."""
    X = np.asarray(X, dtype=float)
    X = X / np.linalg.norm(X, axis=-1, keepdims=True)
    x, y, h = X[..., 0], X[..., 1], X[..., 2]
    out = np.empty(X.shape[:-1], dtype=complex)
    north = h > 1 - 1e-15
    upper = (h > 0) & ~north
    lower = ~upper & ~north
    out[lower] = (x[lower] + 1j * y[lower]) / (1 - h[lower])
    # use the reciprocal chart near the north pole for accuracy
    w = (x[upper] - 1j * y[upper]) / (1 + h[upper])
    out[upper] = 1.0 / w
    out[north] = INF
    return out


def chordal(z, w):
    """Chordal distance on the unit sphere (values in [0, 2]), vectorized."""
    d = np.linalg.norm(to_sphere(z) - to_sphere(w), axis=-1)
    return float(d) if np.ndim(d) == 0 else d


def sphere_close(z, w, tol: float = CHORDAL_TOL) -> bool:
    return chordal(z, w) < tol


def _normalize(m: np.ndarray) -> np.ndarray:
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if det == 0:
        raise ValueError("singular matrix does not define a Moebius map")
    m = m / cmath.sqrt(det)
    tr = m[0, 0] + m[1, 1]
    if tr.real < 0 or (tr.real == 0 and tr.imag < 0):
        m = -m
    return m


@dataclass(frozen=True, eq=False)
class MoebiusMap:
    """z -> (az + b)/(cz + d) with ad - bc = 1 (sign fixed by Re(a+d) >= 0)."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _normalize(np.array(self.matrix, dtype=complex).reshape(2, 2))
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_entries(cls, a, b, c, d) -> "MoebiusMap":
        return cls(np.array([[a, b], [c, d]], dtype=complex))

    @classmethod
    def identity(cls) -> "MoebiusMap":
        return cls(np.eye(2, dtype=complex))

    @property
    def a(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def b(self) -> complex:
        return complex(self.matrix[0, 1])

    @property
    def c(self) -> complex:
        return complex(self.matrix[1, 0])

    @property
    def d(self) -> complex:
        return complex(self.matrix[1, 1])

    @property
    def trace(self) -> complex:
        return self.a + self.d

    def __matmul__(self, other: "MoebiusMap") -> "MoebiusMap":
        return MoebiusMap(self.matrix @ other.matrix)

    def inverse(self) -> "MoebiusMap":
        a, b, c, d = self.a, self.b, self.c, self.d
        return MoebiusMap(np.array([[d, -b], [-c, a]]))

    def power(self, k: int) -> "MoebiusMap":
        base = self if k >= 0 else self.inverse()
        return MoebiusMap(np.linalg.matrix_power(base.matrix, abs(k)))

    def conjugate_by(self, g: "MoebiusMap") -> "MoebiusMap":
        """g M g^-1."""
        return g @ self @ g.inverse()

    def __call__(self, z):
        return apply(self, z)

    def distance(self, other: "MoebiusMap") -> float:
        """Frobenius distance in PSL(2,C), i.e. minimized over the sign."""
        return float(min(np.linalg.norm(self.matrix - other.matrix), np.linalg.norm(self.matrix + other.matrix)))

    def is_identity(self, tol: float = 1e-10) -> bool:
        return self.distance(MoebiusMap.identity()) < tol

    def classify(self, tol: float = CLASS_TOL) -> str:
        return classify(self, tol)

    def fixed_points(self) -> list:
        return fixed_points(self)

    def multiplier_at(self, fp) -> complex:
        return multiplier_at(self, fp)

    def to_json(self) -> dict:
        return {"re": self.matrix.real.tolist(), "im": self.matrix.imag.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "MoebiusMap":
        return cls(np.array(data["re"]) + 1j * np.array(data["im"]))

    def __repr__(self):
        a, b, c, d = (np.round(x, 6) for x in (self.a, self.b, self.c, self.d))
        return f"MoebiusMap([[{a}, {b}], [{c}, {d}]])"


def compose(*maps: MoebiusMap) -> MoebiusMap:
    """compose(A, B, C) = A o B o C."""
    m = np.eye(2, dtype=complex)
    for g in maps:
        m = m @ g.matrix
    return MoebiusMap(m)


def apply(M: MoebiusMap, z):
    """Action on the sphere, scalar or array input."""
    if np.ndim(z) > 0:
        return apply_array(M.matrix, np.asarray(z, dtype=complex))
    z = complex(z)
    a, b, c, d = M.a, M.b, M.c, M.d
    if is_inf(z):
        return INF if c == 0 else a / c
    den = c * z + d
    if den == 0:
        return INF
    return (a * z + b) / den


def apply_array(m: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Vectorized action of the 2x2 matrix m; infinity in, infinity out."""
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    z = np.asarray(z, dtype=complex)
    inf = np.isinf(z)
    zf = np.where(inf, 0, z)
    num = np.where(inf, a, a * zf + b)
    den = np.where(inf, c, c * zf + d)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = num / den
    out[den == 0] = INF
    return out


def homogeneous_apply(m: np.ndarray, p: np.ndarray, q: np.ndarray):
    """Act on homogeneous coordinates (p : q), renormalized to unit length."""
    p2 = m[0, 0] * p + m[0, 1] * q
    q2 = m[1, 0] * p + m[1, 1] * q
    s = np.sqrt(np.abs(p2) ** 2 + np.abs(q2) ** 2)
    return p2 / s, q2 / s


def classify(M: MoebiusMap, tol: float = CLASS_TOL) -> str:
    """One of 'identity', 'elliptic', 'parabolic', 'loxodromic' (trace based)."""
    if M.is_identity():
        return "identity"
    t2 = M.trace ** 2
    if abs(t2 - 4) < tol:
        # borderline: the multiplier k ~ 1 + sqrt(tr^2 - 4) decides
        delta = cmath.sqrt(t2 - 4)
        if abs(delta) < 1e-6:
            return "parabolic"
        if abs(delta.real) > 10 * abs(delta.imag):
            return "loxodromic"
        if abs(delta.imag) > 10 * abs(delta.real):
            return "elliptic"
        raise AmbiguousClass(f"trace^2 = {t2} is within {tol} of 4")
    if abs(t2.imag) < tol and -tol <= t2.real < 4:
        return "elliptic"
    return "loxodromic"


def fixed_points(M: MoebiusMap) -> list:
    """Roots of c z^2 + (d - a) z - b = 0; a single point for parabolic maps."""
    if M.is_identity():
        raise IsIdentity("the identity fixes every point")
    a, b, c, d = M.a, M.b, M.c, M.d
    scale = float(np.linalg.norm(M.matrix))
    parabolic = classify(M) == "parabolic"
    if abs(c) < 1e-14 * scale:
        if parabolic:
            return [INF]
        return [INF, b / (d - a)]
    if parabolic:
        return [(a - d) / (2 * c)]
    s = cmath.sqrt(M.trace ** 2 - 4)
    u = a - d
    # pick the sign avoiding cancellation, recover the other root from the product
    top = u + s if abs(u + s) >= abs(u - s) else u - s
    z1 = top / (2 * c)
    z2 = -2 * b / top if top != 0 else (u - s) / (2 * c)
    return [z1, z2]


def multiplier_at(M: MoebiusMap, fp, tol: float = 1e-8) -> complex:
    """Derivative of M at its fixed point fp, in a chart where fp is finite."""
    if chordal(apply(M, fp), fp) > tol:
        raise NotFixed(f"{fp} is not fixed")
    if is_inf(fp):
        return 1.0 / M.a ** 2
    return 1.0 / (M.c * complex(fp) + M.d) ** 2


def sending_to_zero_inf(p, q) -> MoebiusMap:
    """A map C with C(p) = 0 and C(q) = infinity."""
    if is_inf(q):
        return MoebiusMap.from_entries(1, -p, 0, 1)
    if is_inf(p):
        return MoebiusMap.from_entries(0, 1, 1, -q)
    return MoebiusMap.from_entries(1, -p, 1, -q)


def elliptic_about(p, q, angle: float) -> MoebiusMap:
    """Rotation fixing p and q with multiplier exp(i*angle) at p."""
    if chordal(p, q) < CHORDAL_TOL:
        raise DegenerateAxis("axis endpoints coincide")
    C = sending_to_zero_inf(p, q)
    R = MoebiusMap.from_entries(cmath.exp(0.5j * angle), 0, 0, cmath.exp(-0.5j * angle))
    return C.inverse() @ R @ C


def to_zero_one_inf(z1, z2, z3) -> MoebiusMap:
    """The map sending (z1, z2, z3) to (0, 1, infinity)."""
    if is_inf(z1):
        return MoebiusMap.from_entries(0, z2 - z3, 1, -z3)
    if is_inf(z2):
        return MoebiusMap.from_entries(1, -z1, 1, -z3)
    if is_inf(z3):
        return MoebiusMap.from_entries(1, -z1, 0, z2 - z1)
    return MoebiusMap.from_entries(z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1))


def through_points(zs, ws) -> MoebiusMap:
    """The unique map with M(zs[j]) = ws[j], j = 0, 1, 2."""
    return to_zero_one_inf(*ws).inverse() @ to_zero_one_inf(*zs)


def commutator(A: MoebiusMap, B: MoebiusMap) -> MoebiusMap:
    return A @ B @ A.inverse() @ B.inverse()
