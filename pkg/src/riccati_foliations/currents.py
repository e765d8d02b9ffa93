"""Foliated currents: closed currents near a linearizable singularity,
Ahlfors exhaustions, equidistribution, harmonic measure and pull-backs.

The closed current is realized on the linear model u d/du + lam v d/dv with
lam > 0.  The leaves through the invariant circle |v| = 1 of the transversal
{u = 1} are parametrized by Phi(t, y) = (e^t, y e^(lam t)) with |y| = 1, and
the transverse measure is a probability measure on that circle.  A (1,1)
form is split by a radial cutoff into a part away from the singular point,
integrated over flow boxes, and a part inside the unit ball, integrated over
the half strip Re t <= 0 with an explicit tail bound.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import (NonPositiveLambda, NotCyclic, PreconditionError, RefinementUnstable,
                     SupportOverlapsSingular)
from .moebius import INF, MoebiusMap, apply, chordal, is_inf, to_sphere
from .resolution import blowdown_map, resolve
from .suspension import SuspensionData

TAIL_REL = 1e-12


# ------------------------------------------------------------ measures

@dataclass(frozen=True, eq=False)
class TransverseMeasure:
    """Probability measure on the unit circle of the transversal.

    ``angles`` is None for the normalized Lebesgue measure; otherwise the
    measure is the weighted atom list.
    """

    angles: np.ndarray | None = None
    weights: np.ndarray | None = None

    @classmethod
    def uniform(cls) -> "TransverseMeasure":
        return cls()

    @classmethod
    def atoms(cls, angles, weights=None) -> "TransverseMeasure":
        a = np.mod(np.asarray(angles, float), 2 * np.pi)
        w = np.full(len(a), 1 / len(a)) if weights is None else np.asarray(weights, float)
        if len(a) == 0 or np.any(w < 0) or not w.sum() > 0:
            raise PreconditionError("atoms need nonnegative weights of positive total mass")
        return cls(a, w)

    @property
    def is_uniform(self) -> bool:
        return self.angles is None

    @property
    def mass(self) -> float:
        return 1.0 if self.is_uniform else float(self.weights.sum())

    def nodes(self, k: int):
        """Quadrature nodes (points of the circle) and weights."""
        if self.is_uniform:
            a = 2 * np.pi * (np.arange(k) + 0.5) / k
            return np.exp(1j * a), np.full(k, 1 / k)
        return np.exp(1j * self.angles), self.weights

    def rotated(self, alpha: float) -> "TransverseMeasure":
        if self.is_uniform:
            return self
        return TransverseMeasure(np.mod(self.angles + alpha, 2 * np.pi), self.weights)

    def histogram(self, bins: int) -> np.ndarray:
        if self.is_uniform:
            return np.full(bins, 1 / bins)
        h, _ = np.histogram(self.angles, bins=bins, range=(0, 2 * np.pi), weights=self.weights)
        return h / h.sum()

    def csv_rows(self):
        yield ["angle", "weight"]
        if self.is_uniform:
            return
        for a, w in zip(self.angles, self.weights):
            yield [float(a), float(w)]


def binned_tv(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


# ------------------------------------------------------------ test forms

def _bump(s):
    """exp(-1/(1-s)) for s < 1, zero otherwise, and its derivative in s."""
    s = np.asarray(s, float)
    inside = s < 1
    out = np.zeros_like(s)
    der = np.zeros_like(s)
    si = 1 - s[inside]
    out[inside] = np.exp(-1 / si)
    der[inside] = -out[inside] / si ** 2
    return out, der


_BUMP_MAX = math.exp(-1.0)
# max over s in [0, 1) of |d bump/ds| * sqrt(s), used for derivative bounds
_S = np.linspace(0, 1, 200001)[:-1]
_DBUMP_MAX = float(np.max(np.abs(_bump(_S)[1]) * np.sqrt(_S))) * 1.01
del _S


@dataclass(frozen=True, eq=False)
class TestForm:
    """(1,1) form sum a_sk dz_s ^ dzbar_k on C^2 with compact support.

    ``coeffs[s][k]`` maps arrays (z1, z2) to complex arrays or is None.
    ``support`` is a box (re z1, im z1, re z2, im z2) as (lo, hi) pairs
    outside which every coefficient vanishes, ``bounds`` the sup norms and
    ``radial`` an interval of |z1| outside which the form vanishes.
    """

    __test__ = False

    coeffs: tuple
    support: tuple
    bounds: tuple
    radial: tuple = (0.0, math.inf)

    def coefficient(self, s: int, k: int, z1, z2):
        f = self.coeffs[s][k]
        if f is None:
            return np.zeros(np.broadcast(z1, z2).shape, complex)
        return f(z1, z2)

    def __add__(self, other: "TestForm") -> "TestForm":
        return self.combine(other, 1.0, 1.0)

    def combine(self, other: "TestForm", a: complex, b: complex) -> "TestForm":
        def lin(f, g):
            if f is None and g is None:
                return None
            return lambda z1, z2: ((a * f(z1, z2)) if f is not None else 0) + ((b * g(z1, z2)) if g is not None else 0)

        coeffs = tuple(tuple(lin(self.coeffs[s][k], other.coeffs[s][k]) for k in range(2)) for s in range(2))
        sup = tuple((min(p[0], q[0]), max(p[1], q[1])) for p, q in zip(self.support, other.support))
        bounds = tuple(tuple(abs(a) * self.bounds[s][k] + abs(b) * other.bounds[s][k] for k in range(2))
                       for s in range(2))
        radial = (min(self.radial[0], other.radial[0]), max(self.radial[1], other.radial[1]))
        return TestForm(coeffs, sup, bounds, radial)

    def scaled(self, c: complex) -> "TestForm":
        coeffs = tuple(tuple(None if f is None else (lambda z1, z2, f=f: c * f(z1, z2)) for f in row)
                       for row in self.coeffs)
        return TestForm(coeffs, self.support, tuple(tuple(abs(c) * b for b in row) for row in self.bounds),
                        self.radial)

    def times_radial(self, chi, radial) -> "TestForm":
        """Product with a cutoff chi(|z1|) in [0, 1] vanishing outside ``radial``."""
        coeffs = tuple(tuple(None if f is None else (lambda z1, z2, f=f: chi(np.abs(z1)) * f(z1, z2))
                             for f in row) for row in self.coeffs)
        r = (max(self.radial[0], radial[0]), min(self.radial[1], radial[1]))
        return TestForm(coeffs, self.support, self.bounds, r)

    def z1_range(self) -> tuple:
        """Interval of |z1| that can carry the form."""
        (x0, x1), (y0, y1) = self.support[0], self.support[1]
        cx, cy = min(max(0.0, x0), x1), min(max(0.0, y0), y1)
        lo = math.hypot(cx, cy)
        hi = max(math.hypot(x, y) for x in (x0, x1) for y in (y0, y1))
        return max(lo, self.radial[0]), min(hi, self.radial[1])

    def arg_intervals(self) -> list:
        """Subintervals of [0, 2 pi] holding arg z1 on the support.

        A box missing the origin sees it under an angle below pi, with the
        extreme arguments at its corners.
        """
        (x0, x1), (y0, y1) = self.support[0], self.support[1]
        if x0 <= 0 <= x1 and y0 <= 0 <= y1:
            return [(0.0, 2 * np.pi)]
        c = math.atan2(0.5 * (y0 + y1), 0.5 * (x0 + x1))
        offs = [_wrap(math.atan2(y, x) - c) for x in (x0, x1) for y in (y0, y1)]
        lo = (c + min(offs)) % (2 * np.pi)
        hi = lo + (max(offs) - min(offs))
        if hi <= 2 * np.pi:
            return [(lo, hi)]
        return [(0.0, hi - 2 * np.pi), (lo, 2 * np.pi)]


def _wrap(a):
    return (a + np.pi) % (2 * np.pi) - np.pi


def zero_form() -> TestForm:
    return TestForm(((None, None), (None, None)), ((0, 0),) * 4, ((0.0, 0.0), (0.0, 0.0)), (1.0, 0.0))


def _ball_box(center, radius):
    c1, c2 = complex(center[0]), complex(center[1])
    return ((c1.real - radius, c1.real + radius), (c1.imag - radius, c1.imag + radius),
            (c2.real - radius, c2.real + radius), (c2.imag - radius, c2.imag + radius))


def bump_two_form(center, radius: float, amplitudes) -> TestForm:
    """a_sk = amplitudes[s][k] * bump(|z - center|^2 / radius^2)."""
    c1, c2 = complex(center[0]), complex(center[1])
    A = np.asarray(amplitudes, complex).reshape(2, 2)

    def make(a):
        if a == 0:
            return None
        return lambda z1, z2: a * _bump((np.abs(z1 - c1) ** 2 + np.abs(z2 - c2) ** 2) / radius ** 2)[0]

    coeffs = tuple(tuple(make(A[s, k]) for k in range(2)) for s in range(2))
    bounds = tuple(tuple(abs(A[s, k]) * _BUMP_MAX for k in range(2)) for s in range(2))
    return TestForm(coeffs, _ball_box(center, radius), bounds)


def box_two_form(box, value: complex = 1.0) -> TestForm:
    """Constant a_11 on a box (re z1, im z1, re z2, im z2), zero elsewhere."""
    (a0, a1), (b0, b1), (c0, c1), (d0, d1) = box

    def a11(z1, z2):
        inside = ((z1.real >= a0) & (z1.real <= a1) & (z1.imag >= b0) & (z1.imag <= b1)
                  & (z2.real >= c0) & (z2.real <= c1) & (z2.imag >= d0) & (z2.imag <= d1))
        return np.where(inside, complex(value), 0j)

    return TestForm(((a11, None), (None, None)), tuple(box), ((abs(value), 0.0), (0.0, 0.0)))


@dataclass(frozen=True, eq=False)
class OneForm:
    """eta = sum b_k dz_k + c_k dzbar_k with bump coefficients.

    b_k = B[k] * bump, c_k = Cc[k] * bump where bump is centered at
    ``center`` with the given radius.  The exterior derivative's (1,1) part
    is a_sk = d c_k / dz_s - d b_s / dzbar_k, computed from the explicit
    Wirtinger derivatives of the bump.
    """

    center: tuple
    radius: float
    B: tuple
    Cc: tuple

    def _s(self, z1, z2):
        c1, c2 = complex(self.center[0]), complex(self.center[1])
        return (np.abs(z1 - c1) ** 2 + np.abs(z2 - c2) ** 2) / self.radius ** 2

    def value(self, z1, z2):
        f, _ = _bump(self._s(z1, z2))
        return [complex(b) * f for b in self.B], [complex(c) * f for c in self.Cc]

    def d(self) -> TestForm:
        c = (complex(self.center[0]), complex(self.center[1]))
        r2 = self.radius ** 2
        B, Cc = [complex(b) for b in self.B], [complex(x) for x in self.Cc]

        def coeff(s, k):
            if Cc[k] == 0 and B[s] == 0:
                return None

            def a(z1, z2):
                z = (z1, z2)
                _, der = _bump(self._s(z1, z2))
                ds_dz = np.conj(z[s] - c[s]) / r2  # d s / d z_s
                ds_dzbar = (z[k] - c[k]) / r2  # d s / d zbar_k
                return Cc[k] * der * ds_dz - B[s] * der * ds_dzbar

            return a

        coeffs = tuple(tuple(coeff(s, k) for k in range(2)) for s in range(2))
        g = _DBUMP_MAX / self.radius
        bounds = tuple(tuple((abs(Cc[k]) + abs(B[s])) * g for k in range(2)) for s in range(2))
        return TestForm(coeffs, _ball_box(self.center, self.radius), bounds)


# ------------------------------------------------------------ quadrature

@dataclass(frozen=True)
class Quadrature:
    """Composite Gauss-Legendre rule: ``panels_per_unit`` panels per unit of
    leaf parameter, ``order`` nodes per panel, ``y_nodes`` transverse nodes
    for the Lebesgue measure, truncation depth (None = automatic)."""

    panels_per_unit: float = 16.0
    order: int = 2
    y_nodes: int = 64
    truncation: float | None = None
    boxes: int = 8

    def doubled(self) -> "Quadrature":
        return replace(self, panels_per_unit=2 * self.panels_per_unit, y_nodes=2 * self.y_nodes,
                       truncation=None if self.truncation is None else 2 * self.truncation)


def _gauss(a: float, b: float, panels_per_unit: float, order: int):
    n = max(1, int(math.ceil((b - a) * panels_per_unit)))
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, n + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1)).ravel()
    weights = (0.5 * h[:, None] * w[None, :]).ravel()
    return nodes, weights


def _gauss_graded(a: float, b: float, panels_per_unit: float, order: int, uniform_depth: float = 4.0):
    """Uniform panels on [b - uniform_depth, b], then panels doubling in width down to a.

    The leaf integrands decay exponentially as Re t decreases, so the deep
    part of the strip only needs a few panels.
    """
    c = max(a, b - uniform_depth)
    nodes, weights = _gauss(c, b, panels_per_unit, order)
    if c > a:
        h = 1.0 / panels_per_unit
        edges = [c]
        while edges[-1] > a:
            h *= 2
            edges.append(max(a, edges[-1] - h))
        x, w = np.polynomial.legendre.leggauss(order)
        e = np.array(edges[::-1])
        hh = np.diff(e)
        nodes = np.concatenate([(e[:-1, None] + 0.5 * hh[:, None] * (x[None, :] + 1)).ravel(), nodes])
        weights = np.concatenate([(0.5 * hh[:, None] * w[None, :]).ravel(), weights])
    return nodes, weights


def _kahan_sum(values) -> complex:
    s = 0j
    c = 0j
    for v in values:
        y = v - c
        t = s + y
        c = (t - s) - y
        s = t
    return s


@dataclass(frozen=True)
class CouplingResult:
    value: complex
    error: float
    flowbox: complex = 0j
    singular: complex = 0j
    tail: float = 0.0
    truncation: float = 0.0

    def to_json(self) -> dict:
        c = complex(self.value)
        return {"value": [c.real, c.imag], "error": self.error,
                "flowbox": [complex(self.flowbox).real, complex(self.flowbox).imag],
                "singular": [complex(self.singular).real, complex(self.singular).imag],
                "tail_bound": self.tail, "truncation": self.truncation}


def _density(form: TestForm, z1, z2, dz1, dz2):
    """Coefficient of dt ^ dtbar in the pull-back along a leaf map with derivatives dz1, dz2."""
    d = (dz1, dz2)
    out = np.zeros(np.broadcast(z1, z2).shape, complex)
    for s in range(2):
        for k in range(2):
            if form.coeffs[s][k] is not None:
                out = out + form.coefficient(s, k, z1, z2) * d[s] * np.conj(d[k])
    return out


def _strip_integral(form, lam, y, wy, re_nodes, re_w, im_nodes, im_w, phase=0.0, max_elems=200_000):
    """-2i * sum over (y, Re t, Im t) of J(t, y) for t = re + i(im + phase)."""
    T = re_nodes[:, None] + 1j * (im_nodes[None, :] + phase)
    W = re_w[:, None] * im_w[None, :]
    et = np.exp(T)
    elt = np.exp(lam * T)
    parts = []
    chunk = max(1, max_elems // T.size)
    for i0 in range(0, len(y), chunk):
        yy = y[i0:i0 + chunk, None, None]
        z1 = et[None]
        z2 = yy * elt[None]
        J = _density(form, np.broadcast_to(z1, z2.shape), z2, np.broadcast_to(z1, z2.shape), lam * z2)
        parts.append(np.einsum("kij,ij,k->", J, W, wy[i0:i0 + chunk]))
    return -2j * _kahan_sum(parts)


def _check_lambda(lam: float) -> float:
    lam = float(lam)
    if not lam > 0:
        raise NonPositiveLambda(f"lambda = {lam} must be positive")
    return lam


def tail_bound(form: TestForm, lam: float, T: float, mass: float = 1.0) -> float:
    """Bound on the part of the improper integral with Re t < -T.

    |J| <= B11 e^(2r) + lam (B12 + B21) e^((lam+1) r) + lam^2 B22 e^(2 lam r)
    with r = Re t, integrated over r < -T, 0 <= Im t <= 2 pi, times |dt ^ dtbar| = 2.
    """
    (b11, b12), (b21, b22) = form.bounds
    s = (b11 * math.exp(-2 * T) / 2 + lam * (b12 + b21) * math.exp(-(lam + 1) * T) / (lam + 1)
         + lam * lam * b22 * math.exp(-2 * lam * T) / (2 * lam))
    return 2 * 2 * math.pi * s * mass


def _auto_truncation(form, lam, scale, mass, lo_re) -> float:
    target = TAIL_REL * max(abs(scale), 1e-300)
    for T in np.arange(1.0, 400.0, 0.5):
        if -T <= lo_re or tail_bound(form, lam, T, mass) < target:
            return float(T)
    return 400.0


def singular_couple(lam: float, mu: TransverseMeasure, form: TestForm, quad: Quadrature = Quadrature()
                    ) -> CouplingResult:
    """Improper leaf integral over Re t <= 0 coupled with mu on the invariant circle."""
    lam = _check_lambda(lam)
    lo, hi = form.z1_range()
    if hi > 1 + 1e-12:
        raise PreconditionError("form must be supported in the unit ball |z1| <= 1")
    if hi <= lo or hi == 0:
        return CouplingResult(0j, 0.0)
    re_hi = min(0.0, math.log(hi))
    lo_re = math.log(lo) if lo > 0 else -math.inf
    y, wy = mu.nodes(quad.y_nodes)
    pieces = [_gauss(a, b, quad.panels_per_unit, quad.order) for a, b in form.arg_intervals()]
    im_n = np.concatenate([p[0] for p in pieces])
    im_w = np.concatenate([p[1] for p in pieces])

    def value(T):
        a = max(-T, lo_re)
        if a >= re_hi:
            return 0j
        re_n, re_w = _gauss_graded(a, re_hi, quad.panels_per_unit, quad.order)
        return _strip_integral(form, lam, y, wy, re_n, re_w, im_n, im_w)

    if quad.truncation is not None:
        T = quad.truncation
    else:
        coarse = value(8.0)
        T = _auto_truncation(form, lam, coarse if coarse != 0 else tail_bound(form, lam, 0.0, mu.mass),
                             mu.mass, lo_re)
    v = value(T)
    tail = 0.0 if -T <= lo_re else tail_bound(form, lam, T, mu.mass)
    return CouplingResult(v, tail, 0j, v, tail, T)


@dataclass(frozen=True)
class LinearModel:
    """Neighbourhood of a linearizable singular point.

    The singular ball is |z1| < 1 and the smaller ball |z1| < ``inner``
    is the one that flow boxes must avoid; flow boxes cover
    inner <= |z1| <= ``outer``.
    """

    lam: float
    inner: float = 0.4
    outer: float = 2.0

    def __post_init__(self):
        _check_lambda(self.lam)
        if not 0 < self.inner < 1 < self.outer:
            raise PreconditionError("need 0 < inner < 1 < outer")

    @classmethod
    def from_suspension(cls, D: SuspensionData, i: int, **kw) -> "LinearModel":
        """Model with lam the (positive) local exponent of fiber i."""
        return cls(float(complex(D.exponents[i].value).real), **kw)

    def cutoff(self, r):
        """1 on |z1| <= inner, 0 on |z1| >= 1, smooth in between."""
        x = np.clip((np.asarray(r, float) - self.inner) / (1 - self.inner), 0, 1)
        f = lambda s: np.where(s > 0, np.exp(-1 / np.where(s > 0, s, 1)), 0.0)  # noqa: E731
        return f(1 - x) / (f(1 - x) + f(x))


def _angular_partition(N: int):
    """Smooth periodic partition of unity on [0, 2 pi) by N bumps of half width 2 pi / N."""
    centers = 2 * np.pi * np.arange(N) / N
    half = 2 * np.pi / N

    def g(theta):
        d = (theta + np.pi) % (2 * np.pi) - np.pi
        return _bump((d / half) ** 2)[0]

    def a(j, theta):
        tot = sum(g(theta - c) for c in centers)
        return g(theta - centers[j]) / tot

    return centers, half, a


def flowbox_couple(model: LinearModel, mu: TransverseMeasure, form: TestForm, quad: Quadrature = Quadrature()
                   ) -> CouplingResult:
    """Sum over flow boxes of plaque integrals coupled with the transported measure.

    Box j is the sector |arg z1 - phi_j| < 2 pi / N, inner <= |z1| <= outer;
    its transversal is {z1 = e^(i phi_j)} with the measure obtained from mu
    by holonomy transport y -> y e^(i lam phi_j), and the plaque through z2
    is s -> (e^(i phi_j + s), z2 e^(lam s)).
    """
    lo, hi = form.z1_range()
    if hi <= lo:
        return CouplingResult(0j, 0.0)
    if lo < model.inner - 1e-12:
        raise SupportOverlapsSingular(f"form reaches |z1| = {lo:.3g} < {model.inner}")
    if hi > model.outer + 1e-12:
        raise PreconditionError("form extends beyond the flow-box region")
    lam = model.lam
    centers, half, a = _angular_partition(quad.boxes)
    re_n, re_w = _gauss(math.log(lo), math.log(hi), quad.panels_per_unit, quad.order)
    im_n, im_w = _gauss(-half, half, quad.panels_per_unit, quad.order)
    y, wy = mu.nodes(quad.y_nodes)
    parts = []
    for j, phi in enumerate(centers):
        # the plaque through z2 = y e^(i lam phi) on the box transversal is t -> Phi(i phi + s, y)
        wj = im_w * a(j, phi + im_n)
        parts.append(_strip_integral(form, lam, y, wy, re_n, re_w, im_n, wj, phase=phi))
    v = _kahan_sum(parts)
    return CouplingResult(v, 0.0, v, 0j)


def couple(model: LinearModel, mu: TransverseMeasure, form: TestForm, quad: Quadrature = Quadrature()
           ) -> CouplingResult:
    """Full coupling: cutoff split into the flow-box and singular parts."""
    chi = model.cutoff
    outer_part = form.times_radial(lambda r: 1 - chi(r), (model.inner, math.inf))
    inner_part = form.times_radial(chi, (0.0, 1.0))
    fb = flowbox_couple(model, mu, outer_part, quad)
    sg = singular_couple(model.lam, mu, inner_part, quad)
    return CouplingResult(fb.value + sg.value, fb.error + sg.error, fb.value, sg.value, sg.tail, sg.truncation)


def coupling_with_estimate(model, mu, form, quad: Quadrature = Quadrature()) -> CouplingResult:
    """Coupling whose error estimate adds the change from the next coarser rule."""
    fine = couple(model, mu, form, quad)
    coarse = couple(model, mu, form, replace(quad, panels_per_unit=quad.panels_per_unit / 2,
                                                y_nodes=max(quad.y_nodes // 2, 2)))
    return replace(fine, error=fine.error + abs(fine.value - coarse.value))


def closedness_residual(model: LinearModel, mu: TransverseMeasure, eta: OneForm,
                        quad: Quadrature = Quadrature()) -> float:
    """|T(d eta)| for the closed current of the model."""
    return abs(couple(model, mu, eta.d(), quad).value)


# ------------------------------------------------------------ Weyl

@dataclass(frozen=True)
class WeylResult:
    measure: TransverseMeasure
    discrepancy: float
    n: int


def star_discrepancy(x) -> float:
    """Exact star discrepancy of points in [0, 1)."""
    x = np.sort(np.asarray(x, float))
    n = len(x)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - x), np.max(x - (i - 1) / n)))


def weyl_measure(theta: float, N: int) -> WeylResult:
    """Empirical measure of k theta mod 2 pi, k < N, and its star discrepancy."""
    if N < 1:
        raise PreconditionError("N must be positive")
    k = np.arange(N, dtype=float)
    frac = np.mod(k * (theta / (2 * np.pi)), 1.0)
    return WeylResult(TransverseMeasure.atoms(2 * np.pi * frac), star_discrepancy(frac), int(N))


GOLDEN_ANGLE = 2 * np.pi * (1 - (math.sqrt(5) - 1) / 2)


# ------------------------------------------------------------ Ahlfors

@dataclass(frozen=True)
class AhlforsReport:
    radii: tuple
    lengths: tuple
    areas: tuple
    ratios: tuple
    plaques: int

    @property
    def monotone_tail(self) -> bool:
        r = self.ratios[-5:]
        return all(b < a for a, b in zip(r, r[1:]))

    def to_json(self) -> dict:
        return {"radii": list(self.radii), "lengths": list(self.lengths), "areas": list(self.areas),
                "ratios": list(self.ratios), "plaques": self.plaques}


def _spherical_length(path: np.ndarray) -> float:
    X = to_sphere(path)
    chords = np.linalg.norm(np.diff(X, axis=0), axis=1)
    return float(np.sum(2 * np.arcsin(np.clip(chords / 2, 0, 1))))


def cut_lengths_spherical(D: SuspensionData, n: int = 4000) -> np.ndarray:
    """Length of each cut in the round metric of the unit sphere."""
    out = []
    for d, L in zip(D.cut_directions, D.cut_lengths):
        if math.isinf(L):
            s = np.tan(np.linspace(0, np.pi / 2, n, endpoint=False))
            pts = np.append(D.basepoint + d * s, INF)
        else:
            pts = D.basepoint + d * np.linspace(0, L, n)
        out.append(_spherical_length(pts))
    return np.array(out)


def _is_abelian(mons, tol: float = 1e-9) -> bool:
    for i, A in enumerate(mons):
        for B in mons[i + 1:]:
            if np.linalg.norm(A.matrix @ B.matrix - B.matrix @ A.matrix) > tol * (1 + np.linalg.norm(A.matrix) * np.linalg.norm(B.matrix)):
                return False
    return True


def ahlfors_ratio(D: SuspensionData, y0=None, plaque_budget: int = 10 ** 4, mesh: int = 8,
                  max_radius: int | None = None) -> AhlforsReport:
    """Length/Area of word-length balls exhausting the leaf through (basepoint, y0).

    The leaf is tiled by sheets, one copy of the cut sphere per orbit point
    of y0; crossing cut j from left to right leads from sheet y to sheet
    M_j y.  Each sheet is divided into 2 mesh^2 latitude-longitude plaques
    of the round unit sphere (total area 4 pi).  The ball of radius r holds
    the sheets at word distance <= r; its boundary consists of the cut sides
    glued to sheets outside the ball.
    """
    mons = list(D.monodromies)
    if not _is_abelian(mons):
        raise NotCyclic("holonomy group is not abelian, so it is not cyclic")
    if y0 is None:
        y0 = 0.3137 + 0.2718j
    lengths = cut_lengths_spherical(D)
    per_sheet = 2 * mesh * mesh
    sheet_area = 4 * np.pi
    key_tol = 1e-9

    def key(z):
        X = to_sphere(z)
        return tuple(np.round(X / key_tol).astype(np.int64))

    level = {key(y0): 0}
    pts = {key(y0): complex(y0)}
    frontier = deque([key(y0)])
    radii, Ls, As, ratios = [], [], [], []
    r = 0
    while True:
        n_sheets = len(level)
        if n_sheets * per_sheet > plaque_budget or (max_radius is not None and r > max_radius):
            break
        # boundary of the ball of radius r: cut sides leading outside
        L = 0.0
        for kk, lv in level.items():
            for j, M in enumerate(mons):
                for Mx in (M, M.inverse()):
                    nk = key(apply(Mx, pts[kk]))
                    if nk not in level:
                        L += lengths[j]
        A = n_sheets * sheet_area
        radii.append(r)
        Ls.append(L)
        As.append(A)
        ratios.append(L / A)
        # grow to radius r + 1
        new = deque()
        for kk in frontier:
            for M in mons:
                for Mx in (M, M.inverse()):
                    z = apply(Mx, pts[kk])
                    nk = key(z)
                    if nk not in level:
                        level[nk] = r + 1
                        pts[nk] = z
                        new.append(nk)
        frontier = new
        r += 1
        if not new:
            break
    used = len(As) and int(As[-1] / sheet_area) * per_sheet
    return AhlforsReport(tuple(radii), tuple(Ls), tuple(As), tuple(ratios), int(used))


# ------------------------------------------------------------ harmonic measure

@dataclass(frozen=True, eq=False)
class HarmonicSample:
    """Recorded fiber positions of independent walkers.

    ``records[w, r]`` is the fiber point of walker w at the r-th recording
    step ``record_steps[r]``, in the cut-chart coordinate.
    """

    records: np.ndarray
    record_steps: np.ndarray
    crossings: int
    meta: dict = field(default_factory=dict)

    def window(self, start: int, stop: int) -> np.ndarray:
        sel = (self.record_steps >= start) & (self.record_steps < stop)
        return self.records[:, sel].ravel()

    def points(self) -> np.ndarray:
        return self.window(self.meta["burn"], self.meta["steps"])


def _walker_streams(seed: int, walkers: int):
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(walkers)]


def harmonic_measure(D: SuspensionData, start_points, walkers: int = 10 ** 4, steps: int = 10 ** 3,
                     seed: int = 0, sigma: float = 0.1, burn_fraction: float = 0.3, record_every: int = 10,
                     extra_steps: int = 0, batch: int = 512) -> HarmonicSample:
    """Random walks on the base sphere carrying a fiber point through the cuts.

    Each walker owns a seeded stream: it starts at a uniform point of the
    sphere with a fiber point drawn from ``start_points`` (typically a
    limit-set sample), takes tangential Gaussian steps of size sigma and
    applies M_j or its inverse at every crossing of cut j.  Positions are
    recorded every ``record_every`` steps after the burn-in; ``extra_steps``
    continues the walk past ``steps`` for stationarity checks.
    """
    start_points = np.asarray(start_points, complex)
    total = steps + extra_steps
    burn = int(burn_fraction * steps)
    mats = np.array([M.matrix for M in D.monodromies], complex)
    inv = np.array([M.inverse().matrix for M in D.monodromies], complex)
    b0 = D.basepoint
    dirs, lens = D.cut_directions, D.cut_lengths
    R = D.far_radius()
    streams = _walker_streams(seed, walkers)
    rec_steps = np.arange(burn, total, record_every)
    out = np.empty((walkers, len(rec_steps)), complex)
    crossings = 0
    for w0 in range(0, walkers, batch):
        gens = streams[w0:w0 + batch]
        X = np.empty((len(gens), 3))
        Y = np.empty((len(gens), 2), complex)
        noise = np.empty((total, len(gens), 3))
        for k, g in enumerate(gens):
            v = g.normal(size=3)
            X[k] = v / np.linalg.norm(v)
            y = start_points[g.integers(len(start_points))]
            Y[k] = (1.0, 0.0) if is_inf(y) else (y, 1.0)
            noise[:, k, :] = g.normal(size=(total, 3))
        _, _, rec, c = kernels.walk(X, Y, noise, sigma, b0.real, b0.imag, dirs.real, dirs.imag, lens, R,
                                    mats, inv, burn, record_every)
        crossings += c
        p, q = rec[..., 0], rec[..., 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[w0:w0 + len(gens)] = np.where(q == 0, INF, p / np.where(q == 0, 1, q))
    meta = {"walkers": walkers, "steps": steps, "extra_steps": extra_steps, "burn": burn, "sigma": sigma,
            "seed": seed, "record_every": record_every, "backend": kernels.BACKEND}
    return HarmonicSample(out, rec_steps, crossings, meta)


def sphere_histogram(points, side: float = 0.2) -> dict:
    """Normalized counts of points in cubes of the given side in R^3."""
    X = to_sphere(np.asarray(points, complex))
    keys, counts = np.unique(np.floor(X / side).astype(np.int64), axis=0, return_counts=True)
    return {tuple(k): c / len(X) for k, c in zip(keys, counts)}


def histogram_tv(a: dict, b: dict) -> float:
    keys = set(a) | set(b)
    return 0.5 * sum(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)


@dataclass(frozen=True)
class HarmonicReport:
    support_fraction: float
    stationarity_tv: float
    generator_tv: float
    crossings: int
    records: int

    def to_json(self) -> dict:
        return {"support_fraction": self.support_fraction, "stationarity_tv": self.stationarity_tv,
                "generator_tv": self.generator_tv, "crossings": self.crossings, "records": self.records}


def harmonic_diagnostics(D: SuspensionData, limit_points, walkers: int = 10 ** 4, steps: int = 10 ** 3,
                         seed: int = 0, block: int | None = None, support_eps: float = 0.01,
                         side: float = 0.2, generator: int = 0, **kw) -> HarmonicReport:
    """Support, stationarity and generator-invariance diagnostics of the walk measure.

    Stationarity compares the records of [burn, steps) with those of the
    window shifted by one extra block of steps; non-invariance compares the
    measure with its pushforward by one monodromy generator.
    """
    block = block or max(steps // 10, 1)
    S = harmonic_measure(D, limit_points, walkers, steps, seed, extra_steps=block, **kw)
    burn = S.meta["burn"]
    A = S.window(burn, steps)
    B = S.window(burn + block, steps + block)
    tree = cKDTree(to_sphere(np.asarray(limit_points, complex)))
    d, _ = tree.query(to_sphere(A))
    frac = float(np.mean(d <= support_eps))
    ha = sphere_histogram(A, side)
    st = histogram_tv(ha, sphere_histogram(B, side))
    gt = histogram_tv(ha, sphere_histogram(apply(D.monodromies[generator], A), side))
    return HarmonicReport(frac, st, gt, S.crossings, len(A))


# ------------------------------------------------------------ pull-back

@dataclass(frozen=True)
class PullbackResult:
    value: complex
    values: tuple
    resolutions: tuple
    stable: bool
    relative_change: float
    exponents: tuple

    def to_json(self) -> dict:
        return {"value": [complex(self.value).real, complex(self.value).imag],
                "values": [[complex(v).real, complex(v).imag] for v in self.values],
                "resolutions": list(self.resolutions), "stable": self.stable,
                "relative_change": self.relative_change, "exponents": [list(e) for e in self.exponents]}


def pullback_disc_integral(a11, m: int, n: int, radius: float = 1.0, s0: complex = 0.5 + 0.2j,
                           base: int = 16, levels: int = 3, rtol: float = 0.01, strict: bool = True
                           ) -> PullbackResult:
    """Integral of the blown-down coefficient over a leaf disc of the transverse chart.

    The blow-down of the resolution of m u d/du + n v d/dv sends (t, s) to
    (t^m s, t^n) in the chart of the transverse component.  On the leaf
    s = s0 the coefficient is recovered from (u, v) through the leaf
    coordinate z = t, and integrated over |z| < radius against
    dz ^ dzbar = -2i dA with polar Gauss rules of increasing size.
    The verdict is finite when the last two refinements agree to rtol.
    """
    (ut, us), (vt, vs) = blowdown_map(resolve(m, n))
    vals, res = [], []
    for lv in range(levels):
        k = base * 2 ** lv
        r, wr = np.polynomial.legendre.leggauss(k)
        r = 0.5 * radius * (r + 1)
        wr = 0.5 * radius * wr
        phi = 2 * np.pi * (np.arange(2 * k) + 0.5) / (2 * k)
        z = r[:, None] * np.exp(1j * phi[None, :])
        u = z ** ut * s0 ** us
        v = z ** vt * s0 ** vs
        t = z  # leaf coordinate: t^n = v and t^m s0 = u
        s = u / t ** ut
        f = a11(t, s)
        vals.append(-2j * np.sum(f * (r * wr)[:, None]) * (2 * np.pi / (2 * k)))
        res.append(k)
    change = abs(vals[-1] - vals[-2]) / max(abs(vals[-1]), 1e-300) if len(vals) > 1 else math.inf
    stable = change <= rtol
    out = PullbackResult(vals[-1], tuple(vals), tuple(res), stable, float(change), ((ut, us), (vt, vs)))
    if strict and not stable:
        raise RefinementUnstable(f"relative change {change:.3g} under refinement")
    return out


__all__ = [
    "TransverseMeasure", "TestForm", "OneForm", "Quadrature", "CouplingResult", "LinearModel",
    "bump_two_form", "box_two_form", "zero_form", "singular_couple", "flowbox_couple", "couple",
    "coupling_with_estimate", "closedness_residual", "tail_bound", "weyl_measure", "star_discrepancy",
    "WeylResult", "GOLDEN_ANGLE", "ahlfors_ratio", "AhlforsReport", "harmonic_measure", "harmonic_diagnostics",
    "HarmonicSample", "HarmonicReport", "pullback_disc_integral", "PullbackResult", "binned_tv",
    "sphere_histogram", "histogram_tv", "cut_lengths_spherical",
]
