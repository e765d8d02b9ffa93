"""Blow-up resolution of a Poincare singularity with eigenvalues (m, n).

The local model is the linear field m u d/du + n v d/dv with m, n coprime.
Blowing up the origin gives two chart origins with eigenvalue pairs
(m, n - m) and (m - n, n); exactly one is again in the Poincare domain and
is blown up next, until (1, 1) is reached.  The last blow-up of the radial
point (1, 1) produces an exceptional curve transverse to the foliation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NotCoprime, NotPositive


@dataclass
class Component:
    label: str
    self_intersection: int = -1
    transverse: bool = False
    singular_pairs: list = field(default_factory=list)


@dataclass(frozen=True)
class BlowUpTree:
    m: int
    n: int
    components: tuple
    chain: tuple
    transverse_index: int
    blowups: int
    steps: tuple  # (pair before, chart) per blow-up
    exponents: tuple  # (p, q, r, s): u = a^p b^q, v = a^r b^s in the last Poincare chart
    transverse_self_intersection_at_creation: int = -1

    def component(self, label: str) -> Component:
        return next(c for c in self.components if c.label == label)

    def to_json(self) -> dict:
        return {
            "m": self.m, "n": self.n, "blowups": self.blowups,
            "chain": list(self.chain),
            "transverse": self.chain[self.transverse_index],
            "components": [{"label": c.label, "self_intersection": c.self_intersection, "transverse": c.transverse,
                            "singular_pairs": [list(p) for p in c.singular_pairs]} for c in self.components],
            "edges": [[a, b] for a, b in zip(self.chain[:-1], self.chain[1:])],
            "steps": [{"pair": list(p), "chart": ch} for p, ch in self.steps],
        }


def _validate(m: int, n: int) -> None:
    if int(m) != m or int(n) != n:
        raise NotPositive("integers required")
    if m < 1 or n < 1:
        raise NotPositive(f"({m}, {n}) is not a positive pair")
    if math.gcd(int(m), int(n)) != 1:
        raise NotCoprime(f"gcd({m}, {n}) != 1")


def resolve(m: int, n: int) -> BlowUpTree:
    """Blow up the Poincare point until one transverse component appears.

    Either eigenvalue may be the larger one.  Curves through the current
    point are tracked as the u-curve {a = 0} and the v-curve {b = 0}: the
    initial separatrices, later exceptional components.
    """
    _validate(m, n)
    lu, lv = int(m), int(n)
    comps: dict = {}
    adjacency: dict = {}
    cur_u, cur_v = "sep_u", "sep_v"  # separatrices, not components
    p, q, r, s = 1, 0, 0, 1
    steps = []
    k = 0

    def blow_up(label, transverse=False):
        for c in (cur_u, cur_v):
            if c in comps:
                comps[c].self_intersection -= 1
        comps[label] = Component(label, -1, transverse)
        adjacency[label] = set()
        through = [c for c in (cur_u, cur_v) if c in comps and c != label]
        if len(through) == 2:
            a, b = through
            adjacency[a].discard(b)
            adjacency[b].discard(a)
        for c in through:
            adjacency[c].add(label)
            adjacency[label].add(c)

    while (lu, lv) != (1, 1):
        k += 1
        label = f"D{k}"
        blow_up(label)
        if lu > lv:
            # chart a = a' b', b = b': exceptional divisor {b' = 0}
            steps.append(((lu, lv), "u=u'v"))
            comps[label].singular_pairs.append((lu, lv - lu))  # other chart origin: Siegel
            lu, lv = lu - lv, lv
            p, q, r, s = p, p + q, r, r + s
            cur_v = label
        else:
            steps.append(((lu, lv), "v=v'u"))
            comps[label].singular_pairs.append((lu - lv, lv))
            lu, lv = lu, lv - lu
            p, q, r, s = p + q, q, r + s, s
            cur_u = label
    k += 1
    label = f"D{k}"
    blow_up(label, transverse=True)
    steps.append(((1, 1), "dicritical"))
    chain = _chain_order(adjacency)
    J = chain.index(label)
    return BlowUpTree(int(m), int(n), tuple(comps[c] for c in chain), tuple(chain), J, k, tuple(steps), (p, q, r, s))


def _chain_order(adjacency: dict) -> list:
    if len(adjacency) == 1:
        return list(adjacency)
    ends = sorted(c for c, nb in adjacency.items() if len(nb) <= 1)
    if any(len(nb) > 2 for nb in adjacency.values()) or len(ends) != 2:
        raise RuntimeError("exceptional divisor is not a chain")
    start = min(ends, key=lambda c: int(c[1:]))
    order, prev = [start], None
    while len(order) < len(adjacency):
        nxt = [c for c in adjacency[order[-1]] if c != prev]
        prev = order[-1]
        order.append(nxt[0])
    return order


def blowdown_exponents(T: BlowUpTree) -> tuple:
    """(m, n) with the blow-down map (t, s) -> (t^m s^., t^n s^.) in the transverse chart.

    The last blow-up uses the chart a = t s, b = t, so u = t^(p+q) s^p and
    v = t^(r+s) s^r.
    """
    p, q, r, s = T.exponents
    return p + q, r + s


def blowdown_map(T: BlowUpTree):
    """Monomial exponents ((u_t, u_s), (v_t, v_s)) of the composed blow-down."""
    p, q, r, s = T.exponents
    return (p + q, p), (r + s, r)


@dataclass(frozen=True)
class FirstIntegral:
    """The meromorphic first integral u^n v^-m of m u d/du + n v d/dv."""

    m: int
    n: int

    @property
    def exponents(self) -> tuple:
        return self.n, -self.m

    def __call__(self, u, v):
        """Value and pole flag (v = 0 with u != 0)."""
        u = np.asarray(u, complex)
        v = np.asarray(v, complex)
        pole = (v == 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = u ** self.n / np.where(pole, 1, v) ** self.m
        val = np.where(pole, np.inf, val)
        return val, pole


def first_integral_exponents(m: int, n: int) -> FirstIntegral:
    _validate(m, n)
    return FirstIntegral(int(m), int(n))


__all__ = ["BlowUpTree", "Component", "resolve", "blowdown_exponents", "blowdown_map", "first_integral_exponents",
           "FirstIntegral"]
