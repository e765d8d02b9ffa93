"""Coefficient-level Riccati foliations and homogeneous quadratic fields.

A Riccati foliation is given in the affine chart (x, y) by

    F(x) dy/dx = c0(x) + c1(x) y + c2(x) y^2,

polynomials stored as ascending coefficient arrays.  Invariant fibers are
the roots of F.  Homogeneous fields on C^3 induce foliations of the
projective plane; their singular points, invariant lines and degree are
computed numerically.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.polynomial import polynomial as P
from scipy.integrate import solve_ivp
from scipy.optimize import least_squares

from .errors import (NearSingularFiber, NonGenericLine, NonProjective, PreconditionError, RadialField,
                     SaddleNodeOnFiber, SingularSystem, SolverDidNotConverge, StepUnderflow)
from .moebius import INF, MoebiusMap, apply, chordal, is_inf, through_points
from .suspension import BasePath

RTOL = 1e-10
ATOL = 1e-12
SWITCH = 1.1  # chart switch at |y| > 1.1 or |1/y| > 1.1
FIBER_MARGIN = 1e-3


def _trim(c) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=complex))
    nz = np.flatnonzero(np.abs(c) > 0)
    return c[: nz[-1] + 1] if len(nz) else np.zeros(1, complex)


def _deg(c) -> int:
    c = _trim(c)
    return -1 if len(c) == 1 and c[0] == 0 else len(c) - 1


@dataclass(frozen=True, eq=False)
class RiccatiODE:
    F: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in ("F", "c0", "c1", "c2"):
            object.__setattr__(self, name, _trim(getattr(self, name)))
        if _deg(self.F) < 0:
            raise PreconditionError("F must not vanish identically")

    def rhs(self, x, y):
        """dy/dx."""
        return (P.polyval(x, self.c0) + P.polyval(x, self.c1) * y + P.polyval(x, self.c2) * y * y) / P.polyval(x, self.F)

    def rhs_inverted(self, x, w):
        """dw/dx in the chart w = 1/y."""
        return -(P.polyval(x, self.c0) * w * w + P.polyval(x, self.c1) * w + P.polyval(x, self.c2)) / P.polyval(x, self.F)

    def fibers(self) -> np.ndarray:
        """Finite invariant fibers (roots of F)."""
        if _deg(self.F) < 1:
            return np.zeros(0, complex)
        return P.polyroots(self.F)

    def is_simple(self, r, tol: float = 1e-8) -> bool:
        return abs(P.polyval(r, P.polyder(self.F))) > tol

    def to_json(self) -> dict:
        return {k: [[complex(v).real, complex(v).imag] for v in getattr(self, k)] for k in ("F", "c0", "c1", "c2")}

    @classmethod
    def from_json(cls, data: dict) -> "RiccatiODE":
        return cls(*[np.array([complex(*v) for v in data[k]]) for k in ("F", "c0", "c1", "c2")])


# -------------------------------------------------------------- families

def euler(a: complex) -> RiccatiODE:
    """dy/dx = a y / x, monodromy y -> exp(2 pi i a) y around 0."""
    return RiccatiODE(np.array([0, 1]), np.zeros(1), np.array([a]), np.zeros(1), meta={"family": "euler", "a": a})


def hypergeometric(m1: int, m2: int, m3: int) -> RiccatiODE:
    """Projectivized rank-2 Fuchsian system with poles 0, 1, infinity.

    The residues have eigenvalues +-1/(2 m_i), so the projective monodromy
    around each pole is a rotation of order m_i and the monodromy group is
    the (m1, m2, m3) triangle group.
    """
    t0, t1, ti = 1 / m1, 1 / m2, 1 / m3
    a = (ti ** 2 - t0 ** 2 - t1 ** 2 - 4) / (4 * t0)
    c = t1 ** 2 / 4 - a ** 2
    A0 = np.array([[t0 / 2, 0], [1, -t0 / 2]])
    A1 = np.array([[a, 1], [c, -a]])
    # F A(x) = A0 (x - 1) + A1 x
    def entry(i, j):
        return np.array([-A0[i, j], A0[i, j] + A1[i, j]])
    F = np.array([0, -1, 1])
    return RiccatiODE(F, entry(0, 1), entry(0, 0) - entry(1, 1), -entry(1, 0),
                      meta={"family": "hypergeometric", "orders": [m1, m2, m3]})


def with_exponents(roots, exponents, c1=None, c2=None) -> RiccatiODE:
    """Riccati equation with simple fibers at ``roots`` and prescribed exponents.

    With d = len(roots) - 1 the coefficients follow the template F monic of
    degree d + 1, c1 = x^d + lower terms, deg c2 <= d - 2 and deg c0 <= d,
    which makes the fiber over infinity regular and the induced foliation of
    the projective plane of degree d.  c0 is the interpolant making the
    tangent/transverse eigenvalue ratio at the fiber over r_j equal to
    +-exponents[j].
    """
    roots = np.asarray(roots, complex)
    k = len(roots)
    if k < 2:
        raise PreconditionError("at least two fibers required")
    d = k - 1
    F = P.polyfromroots(roots)
    if c1 is None:
        c1 = np.zeros(d + 1, complex)
        c1[d] = 1
    if c2 is None:
        c2 = np.array([1.0 + 0j]) if d >= 2 else np.zeros(1)
    c1, c2 = _trim(c1), _trim(c2)
    if _deg(c1) != d or abs(c1[-1] - 1) > 1e-14:
        raise PreconditionError(f"c1 must be x^{d} plus lower terms")
    if _deg(c2) > d - 2:
        raise PreconditionError(f"deg c2 must be at most {d - 2}")
    dF = P.polyder(F)
    vals = []
    for r, nu in zip(roots, exponents):
        s1, s2, f1 = P.polyval(r, c1), P.polyval(r, c2), P.polyval(r, dF)
        if abs(s2) < 1e-14:
            raise PreconditionError("c2 vanishes on a fiber; choose another c2")
        vals.append((s1 * s1 - (complex(nu) * f1) ** 2) / (4 * s2))
    # interpolating polynomial of degree <= d through the k = d + 1 values
    V = np.vander(roots, k, increasing=True)
    c0 = np.linalg.solve(V, np.array(vals))
    return RiccatiODE(F, c0, c1, c2, meta={"family": "template", "roots": roots.tolist(),
                                            "exponents": [complex(e) for e in exponents]})


# ------------------------------------------------------------ integration

def _check_path(ode: RiccatiODE, pts: np.ndarray, margin: float) -> None:
    roots = ode.fibers()
    if not len(roots) or len(pts) == 0:
        return
    # distance from each root to each segment of the polygon
    a, b = pts[:-1], pts[1:]
    for r in roots:
        if len(pts) == 1:
            dmin = abs(pts[0] - r)
        else:
            ab = b - a
            t = np.clip(np.real((r - a) * np.conj(ab)) / np.maximum(np.abs(ab) ** 2, 1e-300), 0, 1)
            dmin = float(np.min(np.abs(a + t * ab - r)))
        if dmin < margin:
            raise NearSingularFiber(f"path passes within {dmin:.2e} of the fiber over {r}")


def _integrate_segment(ode: RiccatiODE, xa: complex, xb: complex, chart: int, v: complex, rtol, atol):
    """Integrate from xa to xb; chart 0 holds y, chart 1 holds w = 1/y."""
    h = xb - xa
    s = 0.0
    switches = 0

    def f0(t, u):
        d = h * ode.rhs(xa + t * h, u[0] + 1j * u[1])
        return [d.real, d.imag]

    def f1(t, u):
        d = h * ode.rhs_inverted(xa + t * h, u[0] + 1j * u[1])
        return [d.real, d.imag]

    def leave(t, u):
        return math.hypot(u[0], u[1]) - SWITCH

    leave.terminal = True
    leave.direction = 1
    while s < 1.0:
        sol = solve_ivp(f0 if chart == 0 else f1, (s, 1.0), [v.real, v.imag], method="DOP853",
                        rtol=rtol, atol=atol, events=leave)
        if sol.status == -1:
            raise StepUnderflow(sol.message)
        u = sol.y[:, -1]
        v = complex(u[0], u[1])
        if sol.status == 1:
            s = float(sol.t_events[0][0])
            v = complex(*sol.y_events[0][0])
            chart, v = 1 - chart, 1 / v
            switches += 1
            if switches > 10000:
                raise StepUnderflow("chart switching does not terminate")
        else:
            s = 1.0
    return chart, v


def integrate_leaf(ode: RiccatiODE, path, y0, rtol: float = RTOL, atol: float = ATOL,
                   margin: float = FIBER_MARGIN):
    """Continue the leaf through (path[0], y0) along the polygon ``path``.

    The fiber coordinate is carried in the chart y while |y| <= 1.1 and in
    w = 1/y while |w| <= 1.1, switching at the first crossing.
    """
    pts = path.points if isinstance(path, BasePath) else np.asarray(path, complex)
    _check_path(ode, pts, margin)
    if is_inf(y0):
        chart, v = 1, 0j
    else:
        y0 = complex(y0)
        chart, v = (0, y0) if abs(y0) <= 1 else (1, 1 / y0)
    for xa, xb in zip(pts[:-1], pts[1:]):
        if xa == xb:
            continue
        chart, v = _integrate_segment(ode, complex(xa), complex(xb), chart, v, rtol, atol)
    if chart == 0:
        return v
    return INF if v == 0 else 1 / v


@dataclass(frozen=True)
class MonodromyFit:
    map: MoebiusMap
    check_residual: float
    inputs: tuple


def monodromy(ode: RiccatiODE, loop, rtol: float = RTOL, seed: int = 0, report: bool = False):
    """Moebius map of the closed loop, fitted through three lifted points.

    The points are the images of 0, 1, infinity under a seeded random
    Moebius shift; a fourth lifted point checks the fit.
    """
    rng = np.random.default_rng(seed)
    shift = MoebiusMap(np.eye(2) + 0.3 * (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))))
    zs = [apply(shift, z) for z in (0, 1, INF, -1 + 0.5j)]
    ws = [integrate_leaf(ode, loop, z, rtol=rtol) for z in zs]
    M = through_points(zs[:3], ws[:3])
    res = float(chordal(apply(M, zs[3]), ws[3]))
    if res > 1e-4:
        raise NonProjective(f"fourth-point residual {res:.2e}")
    if report:
        return MonodromyFit(M, res, tuple(zs))
    return M


# ------------------------------------------------------ homogeneous fields

class HPoly:
    """Homogeneous polynomial in (z1, z2, z3) as {(i, j, k): coefficient}."""

    def __init__(self, terms: dict, degree: int | None = None):
        self.terms = {tuple(e): complex(c) for e, c in terms.items() if c != 0}
        degs = {sum(e) for e in self.terms}
        if len(degs) > 1:
            raise PreconditionError("polynomial is not homogeneous")
        self.degree = degs.pop() if degs else (degree or 0)

    def __call__(self, Z) -> np.ndarray:
        Z = np.asarray(Z, complex)
        out = np.zeros(Z.shape[:-1], complex)
        for (i, j, k), c in self.terms.items():
            out = out + c * Z[..., 0] ** i * Z[..., 1] ** j * Z[..., 2] ** k
        return out

    def diff(self, axis: int) -> "HPoly":
        out = {}
        for e, c in self.terms.items():
            if e[axis] > 0:
                f = list(e)
                f[axis] -= 1
                out[tuple(f)] = out.get(tuple(f), 0) + c * e[axis]
        return HPoly(out, self.degree - 1)

    def to_json(self):
        return [[list(e), [c.real, c.imag]] for e, c in sorted(self.terms.items())]


@dataclass(frozen=True, eq=False)
class HomogeneousField:
    components: tuple
    alphas: tuple | None = None

    @property
    def degree(self) -> int:
        return max(c.degree for c in self.components)

    def __call__(self, Z) -> np.ndarray:
        return np.stack([c(Z) for c in self.components], axis=-1)

    def jacobian(self, Z) -> np.ndarray:
        Z = np.asarray(Z, complex)
        return np.stack([np.stack([c.diff(a)(Z) for a in range(3)], axis=-1) for c in self.components], axis=-2)

    def wedge_radial(self, Z) -> np.ndarray:
        """X(Z) x Z; vanishes exactly at the singular points."""
        return np.cross(self(Z), np.asarray(Z, complex))

    def to_json(self) -> dict:
        out = {"components": [c.to_json() for c in self.components]}
        if self.alphas is not None:
            out["alphas"] = [[complex(a).real, complex(a).imag] for a in self.alphas]
        return out


def _check_not_radial(X: HomogeneousField, seed: int = 0) -> None:
    rng = np.random.default_rng(seed)
    Z = rng.normal(size=(8, 3)) + 1j * rng.normal(size=(8, 3))
    W = X.wedge_radial(Z)
    scale = np.abs(X(Z)).max() * np.abs(Z).max()
    if np.abs(W).max() <= 1e-12 * max(scale, 1e-300):
        raise RadialField("field is a multiple of the radial field")


def halphen_field(a1: complex, a2: complex, a3: complex) -> HomogeneousField:
    """Quadratic Halphen field with parameters (a1, a2, a3)."""
    def comp(a, signs, own):
        # a z_own^2 + (1 - a)(s12 z1 z2 + s13 z1 z3 + s23 z2 z3)
        s12, s13, s23 = signs
        sq = [0, 0, 0]
        sq[own] = 2
        t = {tuple(sq): a, (1, 1, 0): (1 - a) * s12, (1, 0, 1): (1 - a) * s13, (0, 1, 1): (1 - a) * s23}
        return HPoly(t, 2)
    X = HomogeneousField((comp(a1, (1, 1, -1), 0), comp(a2, (1, -1, 1), 1), comp(a3, (-1, 1, 1), 2)),
                         alphas=(a1, a2, a3))
    _check_not_radial(X)
    return X


def alpha_from_orders(m1, m2, m3) -> tuple:
    """Solve a_i m_i = a1 + a2 + a3 - 2 for (a1, a2, a3)."""
    m = [Fraction(int(v)) for v in (m1, m2, m3)]
    # det(diag(m) - ones) = m1 m2 m3 (1 - sum 1/m_i)
    if sum(1 / v for v in m) == 1:
        raise SingularSystem("sum of 1/m_i equals 1")
    A = np.diag([float(v) for v in m]) - np.ones((3, 3))
    alpha = np.linalg.solve(A, -2 * np.ones(3))
    s = alpha.sum()
    if max(abs((s - 2) / alpha[i] - float(m[i])) for i in range(3)) > 1e-12 * max(float(v) for v in m):
        raise SingularSystem("round trip check failed")
    return tuple(float(a) for a in alpha)


def riccati_to_homogeneous(ode: RiccatiODE) -> HomogeneousField:
    """Homogeneous field on C^3 inducing the same foliation of the projective plane.

    The affine field F d/dx + (c0 + c1 y + c2 y^2) d/dy of degree D is
    written as V_≤d + g R with R the radial field; when the top degree part
    is radial (= g R, g of degree d = D - 1) the field is (P~, Q~, -g),
    otherwise (P~, Q~, 0) with d = D.
    """
    Pxy = {(i, 0): c for i, c in enumerate(ode.F)}
    Qxy = {}
    for power, coeffs in ((0, ode.c0), (1, ode.c1), (2, ode.c2)):
        for i, c in enumerate(coeffs):
            Qxy[(i, power)] = Qxy.get((i, power), 0) + c
    Pxy = {e: c for e, c in Pxy.items() if c != 0}
    Qxy = {e: c for e, c in Qxy.items() if c != 0}
    D = max(sum(e) for e in list(Pxy) + list(Qxy))
    Ptop = {e: c for e, c in Pxy.items() if sum(e) == D}
    Qtop = {e: c for e, c in Qxy.items() if sum(e) == D}
    g = None
    if all(e[0] >= 1 for e in Ptop):
        g_try = {(e[0] - 1, e[1]): c for e, c in Ptop.items()}
        q_from_g = {(e[0], e[1] + 1): c for e, c in g_try.items()}
        keys = set(q_from_g) | set(Qtop)
        if all(abs(q_from_g.get(k, 0) - Qtop.get(k, 0)) < 1e-13 for k in keys):
            g = g_try
    if g is not None:
        d = D - 1
        Pxy = {e: c for e, c in Pxy.items() if sum(e) <= d}
        Qxy = {e: c for e, c in Qxy.items() if sum(e) <= d}
        X3 = {(e[0], e[1], 0): -c for e, c in g.items()}
    else:
        d = D
        X3 = {}

    def hom(p):
        return {(e[0], e[1], d - e[0] - e[1]): c for e, c in p.items()}

    X = HomogeneousField((HPoly(hom(Pxy), d), HPoly(hom(Qxy), d), HPoly(X3, d)))
    _check_not_radial(X)
    return X


# ------------------------------------------------------- singular points

@dataclass(frozen=True)
class SingularPointReport:
    location: tuple
    eigenvalues: tuple
    kind: str

    @property
    def ratio(self) -> complex:
        l1, l2 = self.eigenvalues
        return l1 / l2 if l2 != 0 else complex(math.inf)

    def to_json(self) -> dict:
        return {"location": [[complex(z).real, complex(z).imag] for z in self.location],
                "eigenvalues": [[complex(z).real, complex(z).imag] for z in self.eigenvalues], "class": self.kind}


def classify_eigenvalues(l1: complex, l2: complex, tol: float = 1e-9) -> str:
    """Poincare: ratio in C minus the closed negative axis, real positive or not real.

    Returns 'degenerate', 'saddle-node', 'siegel', 'hyperbolic' (non-real
    ratio) or 'poincare' (positive real ratio).
    """
    s = max(abs(l1), abs(l2))
    if s < tol:
        return "degenerate"
    if min(abs(l1), abs(l2)) < tol * max(s, 1):
        return "saddle-node"
    r = l1 / l2
    if abs(r.imag) > tol * max(abs(r), 1):
        return "hyperbolic"
    return "poincare" if r.real > 0 else "siegel"


def _random_unitary(rng) -> np.ndarray:
    A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    Q, R = np.linalg.qr(A)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def _chart_field(X: HomogeneousField, U: np.ndarray):
    """Affine field (V1, V2) of X in the chart q -> U (u, v, 1)."""
    Ui = np.linalg.inv(U)

    def V(u, v):
        q = np.stack(np.broadcast_arrays(u, v, np.ones_like(u)), axis=-1).astype(complex)
        Z = q @ U.T
        Xq = X(Z) @ Ui.T
        return Xq[..., 0] - q[..., 0] * Xq[..., 2], Xq[..., 1] - q[..., 1] * Xq[..., 2]

    return V


def _coeffs_in_v(f, u: complex, deg: int) -> np.ndarray:
    """Ascending coefficients of v -> f(u, v) (degree <= deg) via sampling on a circle."""
    n = deg + 1
    w = np.exp(2j * np.pi * np.arange(n) / n)
    vals = f(np.full(n, u), w)
    return np.fft.fft(vals) / n


def _sylvester(a: np.ndarray, b: np.ndarray) -> complex:
    """Resultant of two polynomials given with ascending coefficients of fixed degree."""
    m, n = len(a) - 1, len(b) - 1
    S = np.zeros((m + n, m + n), complex)
    for i in range(n):
        S[i, i:i + m + 1] = a[::-1]
    for i in range(m):
        S[n + i, i:i + n + 1] = b[::-1]
    return np.linalg.det(S)


def singular_points(X: HomogeneousField, seed: int = 0, tol: float = 1e-9) -> list:
    """Singular points of the induced foliation by resultant elimination.

    The field is moved by a seeded random unitary so that no singular point
    lies at infinity of the affine chart and their first coordinates are
    distinct; the resultant in v is sampled on a circle and its roots give
    the first coordinates.
    """
    _check_not_radial(X)
    rng = np.random.default_rng(seed)
    d = X.degree
    U = _random_unitary(rng)
    V = _chart_field(X, U)
    dv = d + 1
    res_deg = dv * dv
    n = res_deg + 1
    radius = 1.0
    us = radius * np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.array([_sylvester(_coeffs_in_v(lambda a, b: V(a, b)[0], u, dv),
                                _coeffs_in_v(lambda a, b: V(a, b)[1], u, dv)) for u in us])
    coeffs = np.fft.fft(vals) / n / radius ** np.arange(n)
    coeffs[np.abs(coeffs) < 1e-10 * np.abs(coeffs).max()] = 0
    ur = P.polyroots(_trim(coeffs)) if _deg(coeffs) > 0 else np.zeros(0)
    found = []
    for u in ur:
        if not np.isfinite(u) or abs(u) > 1e6:
            continue
        vr = P.polyroots(_trim(_coeffs_in_v(lambda a, b: V(a, b)[0], u, dv)))
        if not len(vr):
            continue
        best = min(vr, key=lambda v: abs(V(np.array([u]), np.array([v]))[1][0]))
        z = _newton2(V, complex(u), complex(best))
        if z is None:
            continue
        Zp = U @ np.array([z[0], z[1], 1.0])
        Zp = Zp / Zp[np.argmax(np.abs(Zp))]
        if any(np.linalg.norm(Zp - q) < 1e-7 for q in found):
            continue
        found.append(Zp)
    if not found:
        raise SolverDidNotConverge("no singular point found")
    return [_report(X, Z) for Z in found]


def _newton2(V, u, v, iters: int = 50, tol: float = 1e-13):
    h = 1e-7
    for _ in range(iters):
        f = np.array([c[0] for c in V(np.array([u]), np.array([v]))])
        if np.abs(f).max() < tol:
            return u, v
        fu = (np.array([c[0] for c in V(np.array([u + h]), np.array([v]))]) -
              np.array([c[0] for c in V(np.array([u - h]), np.array([v]))])) / (2 * h)
        fv = (np.array([c[0] for c in V(np.array([u]), np.array([v + h]))]) -
              np.array([c[0] for c in V(np.array([u]), np.array([v - h]))])) / (2 * h)
        J = np.column_stack([fu, fv])
        try:
            step = np.linalg.solve(J, f)
        except np.linalg.LinAlgError:
            return None
        u, v = u - step[0], v - step[1]
    f = np.array([c[0] for c in V(np.array([u]), np.array([v]))])
    return (u, v) if np.abs(f).max() < 1e-8 else None


def _report(X: HomogeneousField, Z: np.ndarray) -> SingularPointReport:
    """Eigenvalues of the affine representative in the chart of the largest coordinate."""
    k = int(np.argmax(np.abs(Z)))
    Z = Z / Z[k]
    idx = [i for i in range(3) if i != k]
    # chart coordinates (Z[idx[0]], Z[idx[1]]) with Z[k] = 1
    Xv = X(Z)
    J = X.jacobian(Z)
    # V_a = X_a - z_a X_k as a function of the two chart coordinates
    A = np.zeros((2, 2), complex)
    for r, a in enumerate(idx):
        for c, b in enumerate(idx):
            A[r, c] = J[a, b] - Z[a] * J[k, b] - (Xv[k] if a == b else 0)
    ev = np.linalg.eigvals(A)
    return SingularPointReport(tuple(complex(z) for z in Z), (complex(ev[0]), complex(ev[1])),
                               classify_eigenvalues(ev[0], ev[1]))


# -------------------------------------------------------- invariant lines

def _line_basis(l: np.ndarray):
    """Orthonormal basis (a, b) of the plane l . p = 0."""
    _, _, vh = np.linalg.svd(l.reshape(1, 3))
    return np.conj(vh[1]), np.conj(vh[2])


def tangency_on_line(X: HomogeneousField, l: np.ndarray, st: np.ndarray) -> np.ndarray:
    """l . X(p) at the points p = s a + t b of the line l . p = 0."""
    a, b = _line_basis(np.asarray(l, complex))
    Z = st[:, :1] * a + st[:, 1:] * b
    return X(Z) @ np.asarray(l, complex)


def invariant_lines(X: HomogeneousField, n_starts: int = 60, seed: int = 0, tol: float = 1e-9) -> list:
    """Invariant lines found by multi-start least squares on the dual plane."""
    _check_not_radial(X)
    rng = np.random.default_rng(seed)
    d = X.degree
    U = _random_unitary(rng)
    k = d + 2
    sw = np.exp(2j * np.pi * np.arange(k) / k)
    st_unit = np.column_stack([np.ones(k), sw])

    def lvec(p):
        return U @ np.array([p[0] + 1j * p[1], p[2] + 1j * p[3], 1.0])

    def resid(p):
        l = lvec(p)
        l = l / np.linalg.norm(l)
        a, b = _line_basis(l)
        Z = st_unit[:, :1] * a + st_unit[:, 1:] * b
        r = X(Z) @ l
        return np.concatenate([r.real, r.imag])

    lines = []
    for _ in range(n_starts):
        p0 = rng.normal(scale=1.5, size=4)
        sol = least_squares(resid, p0, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
        if np.abs(sol.fun).max() > 1e-11:
            continue
        l = lvec(sol.x)
        l = l / np.linalg.norm(l)
        l = l * (abs(l[np.argmax(np.abs(l) > 1e-9)]) / l[np.argmax(np.abs(l) > 1e-9)])
        if any(abs(np.vdot(m, l)) > 1 - 1e-9 for m in lines):
            continue
        if _verify_line(X, l, rng) < tol:
            lines.append(l)
    return lines


def _verify_line(X, l, rng, n: int = 10) -> float:
    st = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
    a, b = _line_basis(l / np.linalg.norm(l))
    Z = st[:, :1] * a + st[:, 1:] * b
    scale = np.abs(X(Z)).max(axis=1) * np.linalg.norm(Z, axis=1)
    return float(np.max(np.abs(X(Z) @ (l / np.linalg.norm(l))) / np.maximum(scale, 1e-300)))


def concurrency_point(lines) -> tuple:
    """Common point of the lines (least squares) and the max incidence residual."""
    A = np.array([l / np.linalg.norm(l) for l in lines])
    _, s, vh = np.linalg.svd(A)
    p = np.conj(vh[-1])
    return p / p[np.argmax(np.abs(p))], float(np.max(np.abs(A @ p)) / np.linalg.norm(p))


# ----------------------------------------------------------- degree, CS

def degree_by_tangency(X: HomogeneousField, line=None, seed: int = 0, redraws: int = 20) -> int:
    """Number of tangencies (with multiplicity) of the foliation with a generic line.

    For p = s a + t b on the line the tangency form det[a, b, X(p)] is
    binary of degree deg X; its roots are counted after checking that none
    is a singular point, else the line is redrawn.
    """
    _check_not_radial(X)
    rng = np.random.default_rng(seed)
    d = X.degree
    for attempt in range(redraws + 1):
        if line is not None and attempt == 0:
            a, b = _line_basis(np.asarray(line, complex))
        else:
            a, b = _line_basis(rng.normal(size=3) + 1j * rng.normal(size=3))
        n = d + 1
        w = np.exp(2j * np.pi * np.arange(n) / n)
        # t = 1: coefficients in s, degree <= d
        Z = w[:, None] * a + b
        vals = np.linalg.det(np.stack([np.broadcast_to(a, Z.shape), np.broadcast_to(b, Z.shape), X(Z)], axis=1))
        c = np.fft.fft(vals) / n
        scale = np.abs(c).max()
        if scale < 1e-12:
            continue  # invariant line
        c[np.abs(c) < 1e-11 * scale] = 0
        roots = P.polyroots(_trim(c)) if _deg(c) > 0 else np.zeros(0)
        n_inf = d - _deg(c)  # roots at t = 0
        pts = [s * a + b for s in roots] + [a] * (1 if n_inf > 0 else 0)
        bad = False
        for Zp in pts:
            W = X.wedge_radial(Zp)
            if np.abs(W).max() < 1e-7 * max(np.abs(X(Zp)).max() * np.linalg.norm(Zp), 1e-300) or \
                    np.abs(X(Zp)).max() < 1e-10 * np.linalg.norm(Zp) ** d:
                bad = True
                break
        if bad:
            continue
        return len(roots) + n_inf
    raise NonGenericLine(f"no generic line after {redraws} redraws")


def fiber_singular_points(ode: RiccatiODE, r: complex) -> list:
    """Singular points on the fiber x = r with (transverse, tangent) eigenvalues.

    Roots are taken homogeneously so that a point at y = infinity appears
    in the chart w = 1/y.  A double root (saddle-node) raises.
    """
    if abs(P.polyval(r, ode.F)) > 1e-8 * max(1, np.abs(ode.F).max()):
        raise PreconditionError(f"{r} is not a root of F")
    transverse = complex(P.polyval(r, P.polyder(ode.F)))
    if abs(transverse) < 1e-10:
        raise PreconditionError("fiber is not simple")
    a0, a1, a2 = (complex(P.polyval(r, c)) for c in (ode.c0, ode.c1, ode.c2))
    scale = max(abs(a0), abs(a1), abs(a2))
    if scale == 0:
        raise PreconditionError("fiber consists of singular points")
    disc = a1 * a1 - 4 * a0 * a2
    if abs(disc) < 1e-12 * scale * scale:
        raise SaddleNodeOnFiber("tangent polynomial has a double root")
    pts = []
    if abs(a2) < 1e-14 * scale:
        y = -a0 / a1
        pts.append((y, a1))  # finite root, tangent eigenvalue d/dy (a0 + a1 y)
        pts.append((INF, -a1))  # root at infinity, -d/dw (a0 w^2 + a1 w) at 0
    else:
        sq = cmath.sqrt(disc)
        for s in (sq, -sq):
            y = (-a1 + s) / (2 * a2)
            pts.append((y, a1 + 2 * a2 * y))
    return [SingularPointReport((r, y), (transverse, tan), classify_eigenvalues(tan, transverse)) for y, tan in pts]


def camacho_sad_residual(ode: RiccatiODE, fiber_root: complex) -> float:
    """|sum of tangent/transverse ratios| over the two singular points of a simple fiber."""
    pts = fiber_singular_points(ode, fiber_root)
    if len(pts) != 2:
        raise SaddleNodeOnFiber("fewer than two singular points on the fiber")
    total = sum(p.eigenvalues[1] / p.eigenvalues[0] for p in pts)
    return float(abs(total))


def standard_ode_loop(ode: RiccatiODE, r: complex, n: int = 64, radius: float | None = None) -> BasePath:
    """Counterclockwise polygon around the fiber over r avoiding the others."""
    others = [abs(s - r) for s in ode.fibers() if abs(s - r) > 1e-12]
    rad = radius if radius is not None else 0.5 * min(others + [2.0])
    t = 2 * np.pi * np.arange(n + 1) / n
    pts = r + rad * np.exp(1j * t)
    pts[-1] = pts[0]
    return BasePath(pts)


__all__ = [
    "RiccatiODE", "HomogeneousField", "HPoly", "SingularPointReport", "euler", "hypergeometric", "with_exponents",
    "integrate_leaf", "monodromy", "halphen_field", "alpha_from_orders", "riccati_to_homogeneous",
    "singular_points", "invariant_lines", "degree_by_tangency", "camacho_sad_residual", "fiber_singular_points",
    "classify_eigenvalues", "concurrency_point", "standard_ode_loop", "tangency_on_line",
]
