"""End-to-end invariant checks with fixed tolerances.

Each check returns a :class:`Check` carrying the measured quantities and
the thresholds they are compared with.  The checks are shared by the
``verify-all`` command and the acceptance tests.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.stats import qmc

from . import currents as cu
from .groups import deform_group, four_orbifold_group, triangle_group
from .leviflat import (accumulation_test, defining_function_residual, local_grid, path_grid, residual_trend,
                       saturate, siegel_clearance)
from .limitset import (auto_scales, box_dimension, enumerate_limit_points, fit_invariant_circle, normalized_cloud,
                       real_line_deviation)
from .moebius import MoebiusMap, elliptic_about
from .resolution import resolve
from .riccati_ode import (alpha_from_orders, camacho_sad_residual, degree_by_tangency, euler, halphen_field,
                          hypergeometric, monodromy, riccati_to_homogeneous, standard_ode_loop, with_exponents)
from .suspension import from_group, holonomy_of_loop, product_loop, repeated_generator, standard_loop

GOLDEN = (math.sqrt(5) - 1) / 2

PRESETS = {
    "triangle-2-3-7": {"signature": (2, 3, 7), "four_signature": (3, 3, 3, 3), "t": 0.1j, "depth": 10,
                       "levi_depth": 9, "harmonic_depth": 14, "walkers": 10 ** 4, "steps": 10 ** 3, "seed": 0},
}


@dataclass
class Check:
    number: int
    name: str
    passed: bool
    measured: dict
    thresholds: dict
    seconds: float = 0.0
    notes: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} [{self.number:2d}] {self.name}"

    def to_json(self) -> dict:
        return {"number": self.number, "name": self.name, "passed": bool(self.passed),
                "measured": _plain(self.measured), "thresholds": _plain(self.thresholds), "notes": self.notes}


def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real), float(v.imag)]
    if isinstance(v, (float, np.floating)):
        return float(v)
    return v


def _timed(fn):
    def run(*a, **kw):
        t0 = time.perf_counter()
        c = fn(*a, **kw)
        c.seconds = time.perf_counter() - t0
        return c

    run.__name__ = fn.__name__
    run.__doc__ = fn.__doc__
    return run


def sign_distance(A: MoebiusMap, B: MoebiusMap) -> float:
    """Entrywise distance of two normalized matrices up to an overall sign."""
    return float(min(np.abs(A.matrix - B.matrix).max(), np.abs(A.matrix + B.matrix).max()))


def partial_quotient_sum(m: int, n: int) -> int:
    """Sum of the continued-fraction partial quotients of m/n."""
    total = 0
    while n:
        q, r = divmod(m, n)
        total += q
        m, n = n, r
    return total


# ------------------------------------------------------------ checks

@_timed
def group_relations() -> Check:
    res = {}
    for sig in [(2, 3, 7), (2, 4, 5), (3, 3, 4)]:
        res[str(sig)] = triangle_group(*sig).max_relator_residual()
    res["(3, 3, 3, 3)"] = four_orbifold_group(3, 3, 3, 3).max_relator_residual()
    worst = max(res.values())
    return Check(1, "group relations", worst < 1e-9, {"residuals": res, "max": worst}, {"max": 1e-9})


@_timed
def fuchsian_circle(signature=(2, 3, 7), depth: int = 10) -> Check:
    G = triangle_group(*signature)
    S = enumerate_limit_points(G, depth)
    fit = fit_invariant_circle(S)
    dev = real_line_deviation(S.points, fit.normalizer())
    dim = box_dimension(S)
    ok = dev < 1e-6 and abs(dim.slope - 1.0) <= 0.1
    return Check(2, "Fuchsian circle", ok, {"points": len(S), "max_imag": dev, "dimension": dim.slope,
                                             "dimension_residual": dim.residual},
                 {"max_imag": 1e-6, "dimension": [0.9, 1.1]})


def dimension_pair(signature=(3, 3, 3, 3), t: complex = 0.1j, depth: int = 7):
    """Box dimensions of the Fuchsian and deformed limit sets on a common scale window."""
    G = four_orbifold_group(*signature)
    H = deform_group(G, t)
    A = enumerate_limit_points(G, depth)
    B = enumerate_limit_points(H, depth)
    scales = auto_scales(normalized_cloud(A))
    return box_dimension(A, scales), box_dimension(B, scales), fit_invariant_circle(B).max_deviation


@_timed
def quasifuchsian_dimension(signature=(3, 3, 3, 3), t: complex = 0.1j, depth: int = 7) -> Check:
    ea, eb, bend = dimension_pair(signature, t, depth)
    gap = eb.slope - ea.slope
    combined = math.hypot(ea.residual, eb.residual)
    ok = gap > 2 * combined
    return Check(3, "quasifuchsian dimension gap", ok,
                 {"fuchsian": ea.slope, "deformed": eb.slope, "gap": gap, "combined_residual": combined,
                  "circle_deviation": bend},
                 {"gap_over_combined_residual": 2.0})


@_timed
def holonomy_exactness(signature=(2, 3, 7)) -> Check:
    D = from_group(triangle_group(*signature))
    errs = [sign_distance(holonomy_of_loop(D, standard_loop(D, i)), D.monodromies[i]) for i in range(D.k)]
    prod = sign_distance(holonomy_of_loop(D, product_loop(D)), MoebiusMap.identity())
    worst = max(errs + [prod])
    return Check(4, "holonomy exactness", worst < 1e-12, {"loop_errors": errs, "product_error": prod},
                 {"entrywise": 1e-12})


@_timed
def euler_monodromy() -> Check:
    errs = {}
    for a in (1 / 3, 1 / 5, 0.3 + 0.1j):
        ode = euler(a)
        M = monodromy(ode, standard_ode_loop(ode, 0, n=64, radius=1.0))
        ref = 2 * np.cos(np.pi * a)
        errs[str(a)] = float(min(abs(M.trace - ref), abs(M.trace + ref)))
    worst = max(errs.values())
    return Check(5, "ODE monodromy oracle", worst < 1e-6, {"trace_errors": errs}, {"trace": 1e-6})


def camacho_sad_samples():
    return {"hypergeometric(2,3,7)": hypergeometric(2, 3, 7),
            "four fibers, exponents 1/3": with_exponents([0, 1, -1, 2j], [Fraction(1, 3)] * 4),
            "three fibers, exponents 1/4,1/5,2/7": with_exponents([0, 1, 1j], [0.25, 0.2, 2 / 7])}


@_timed
def camacho_sad() -> Check:
    res = {}
    for name, ode in camacho_sad_samples().items():
        for r in ode.fibers():
            if ode.is_simple(r):
                res[f"{name} @ {complex(r):.4g}"] = camacho_sad_residual(ode, r)
    worst = max(res.values())
    return Check(6, "Camacho-Sad", worst < 1e-8, {"residuals": res}, {"residual": 1e-8})


@_timed
def degree_counts() -> Check:
    halphen = degree_by_tangency(halphen_field(*alpha_from_orders(2, 3, 7)))
    four = degree_by_tangency(riccati_to_homogeneous(with_exponents([0, 1, -1, 2j], [Fraction(1, 3)] * 4)))
    general = {}
    for k in (3, 4, 5, 6):
        roots = [complex(math.cos(2 * math.pi * j / k + 0.3), math.sin(2 * math.pi * j / k + 0.3)) for j in range(k)]
        ode = with_exponents(roots, [Fraction(1, 3)] * k)
        D = repeated_generator(elliptic_about(0, math.inf, 2 * math.pi * GOLDEN), k - 1)
        general[k] = (degree_by_tangency(riccati_to_homogeneous(ode)), D.degree())
    ok = halphen == 2 and four == 3 and all(a == b == k - 1 for k, (a, b) in general.items())
    return Check(7, "degree by tangency", ok, {"halphen": halphen, "four_lines": four, "by_fibers": general},
                 {"halphen": 2, "four_lines": 3, "by_fibers": "k - 1"})


@_timed
def resolution_oracle(bound: int = 30) -> Check:
    bad = []
    n_pairs = 0
    for m in range(1, bound + 1):
        for n in range(1, bound + 1):
            if math.gcd(m, n) != 1:
                continue
            n_pairs += 1
            T = resolve(m, n)
            transverse = sum(c.transverse for c in T.components)
            if T.blowups != partial_quotient_sum(m, n) or transverse != 1:
                bad.append((m, n))
    return Check(8, "resolution oracle", not bad, {"pairs": n_pairs, "mismatches": bad}, {"mismatches": 0})


@_timed
def weyl(N: int = 10 ** 5) -> Check:
    r = cu.weyl_measure(cu.GOLDEN_ANGLE, N)
    return Check(9, "Weyl discrepancy", r.discrepancy < 0.01, {"discrepancy": r.discrepancy}, {"discrepancy": 0.01})


def closedness_forms():
    """Five bump one-forms; the last two overlap the singular ball |z1| <= 1."""
    return [cu.OneForm((1.3 + 0.2j, 1.1), 0.4, (1, 0.5j), (0.3, -1)),
            cu.OneForm((-1.1 + 0.4j, 0.5 - 0.6j), 0.5, (0.2, 1), (1j, 0.4)),
            cu.OneForm((0.2j - 1.4, 1.2j), 0.3, (1, 1), (1, 1)),
            cu.OneForm((0.3 + 0.1j, 0.5), 0.6, (1, 0.5), (0.5j, 1)),
            cu.OneForm((0.6j, -0.6), 0.5, (0.7, -0.2j), (0.4, 1))]


def overlap_two_forms():
    """Smooth two-forms whose supports contain the singular point."""
    return [cu.bump_two_form((0.1 + 0.05j, 0.1j), 0.5, [[1, 0.3], [0.2j, 0.7]]),
            cu.bump_two_form((0, 0), 0.6, [[0.5, 0], [0, 1]]),
            cu.bump_two_form((-0.2j, 0.25), 0.45, [[1j, 0.4], [-0.3, 0.8]])]


def polar_oracle(form: cu.TestForm, lam: float, m: int = 20, seeds: int = 4):
    """Scrambled Sobol estimate over (|u|, arg u, arg y) in the u-plane.

    The leaf through y is u -> (u, y |u|^lam e^(i lam arg u)) with arg u in
    [0, 2 pi); the pull-back density is divided by |u|^2 and dA = r dr dphi.
    Returns the mean and the spread over independent scramblings.
    """
    _, hi = form.z1_range()
    est = []
    for seed in range(seeds):
        s = qmc.Sobol(3, scramble=True, seed=seed).random_base2(m)
        r, phi, th = hi * s[:, 0], 2 * np.pi * s[:, 1], 2 * np.pi * s[:, 2]
        u = r * np.exp(1j * phi)
        z2 = np.exp(1j * th) * r ** lam * np.exp(1j * lam * phi)
        c = (u, lam * z2)
        acc = np.zeros_like(u)
        for a in range(2):
            for b in range(2):
                if form.coeffs[a][b] is not None:
                    acc = acc + form.coefficient(a, b, u, z2) * c[a] * np.conj(c[b])
        f = acc / np.where(r > 0, r, 1)
        est.append(-2j * hi * 2 * np.pi * f.mean())
    return complex(np.mean(est)), float(np.std(est))


@_timed
def closedness(lam: float = GOLDEN) -> Check:
    model = cu.LinearModel(lam)
    mu = cu.TransverseMeasure.uniform()
    q = cu.Quadrature()
    ratios, residuals = [], []
    for eta in closedness_forms():
        a = cu.closedness_residual(model, mu, eta, q)
        b = cu.closedness_residual(model, mu, eta, q.doubled())
        residuals.append((a, b))
        ratios.append(a / b if b > 0 else math.inf)
    rel = []
    for w in overlap_two_forms():
        ref, _ = polar_oracle(w, lam)
        v = cu.singular_couple(lam, mu, w, q).value
        rel.append(abs(v - ref) / abs(ref))
    ok = min(ratios) >= 2 and max(rel) < 1e-3
    return Check(10, "closed-current closedness", ok,
                 {"residuals": residuals, "ratios": ratios, "oracle_relative_errors": rel},
                 {"ratio": 2.0, "oracle_relative_error": 1e-3})


@_timed
def ahlfors(n: int = 2, plaque_budget: int = 10 ** 4) -> Check:
    D = repeated_generator(elliptic_about(0, math.inf, 2 * math.pi * GOLDEN), n)
    r = cu.ahlfors_ratio(D, plaque_budget=plaque_budget)
    ok = r.ratios[-1] < 0.05 and r.monotone_tail and r.plaques <= plaque_budget
    return Check(11, "Ahlfors ratio", ok, {"final": r.ratios[-1], "last5": r.ratios[-5:], "plaques": r.plaques},
                 {"final": 0.05, "plaque_budget": plaque_budget})


@_timed
def harmonic(signature=(2, 3, 7), depth: int = 14, walkers: int = 10 ** 4, steps: int = 10 ** 3,
             seed: int = 0) -> Check:
    G = triangle_group(*signature)
    D = from_group(G)
    L = enumerate_limit_points(G, depth)
    h = cu.harmonic_diagnostics(D, L.points, walkers, steps, seed)
    ok = h.support_fraction >= 0.99 and h.stationarity_tv < 0.02 and h.generator_tv > 0.05
    return Check(12, "harmonic measure", ok, h.to_json(),
                 {"support_fraction": 0.99, "stationarity_tv": 0.02, "generator_tv": 0.05})


@_timed
def leviflat(signature=(2, 3, 7), depth: int = 9, radius: float = 0.1) -> Check:
    G = triangle_group(*signature)
    D = from_group(G)
    L = enumerate_limit_points(G, depth)
    grid = path_grid(D) + [g for i in range(D.k) for g in local_grid(D, i, radius)]
    cloud = saturate(D, L, grid)
    resid, siegel = {}, {}
    for i in range(D.k):
        resid[i] = defining_function_residual(D, i, cloud, radius)
        acc = accumulation_test(D, i, L)
        siegel[i] = {"min": min(acc.siegel_distance), "separation": acc.separation,
                     "poincare_decreasing": acc.decreasing}
    trend = residual_trend(hypergeometric(*signature))
    clearance = siegel_clearance(D, cloud)
    ok = (max(resid.values()) < 1e-4 and all(b < a for a, b in zip(trend, trend[1:]))
          and all(s["min"] > 0.25 * s["separation"] and s["poincare_decreasing"] for s in siegel.values())
          and clearance > 0)
    return Check(13, "Levi-flat analyticity", ok,
                 {"residuals": resid, "ode_trend": trend, "siegel": siegel, "clearance": clearance},
                 {"residual": 1e-4, "siegel_min_over_separation": 0.25})


def smooth_bump(t, s):
    return np.exp(-np.abs(t) ** 2) * (1 + 0.5 * np.cos(np.abs(s)))


def singular_control(t, s):
    return 1 / np.abs(t) ** 2


@_timed
def pullback() -> Check:
    out = {}
    for m, n in [(2, 1), (3, 2), (5, 3)]:
        r = cu.pullback_disc_integral(smooth_bump, m, n, strict=False)
        out[f"{m},{n}"] = {"stable": r.stable, "relative_change": r.relative_change}
    ctrl = cu.pullback_disc_integral(singular_control, 2, 1, strict=False)
    ok = all(v["stable"] for v in out.values()) and not ctrl.stable
    return Check(14, "pull-back finiteness", ok,
                 {"bumps": out, "control_stable": ctrl.stable, "control_change": ctrl.relative_change},
                 {"relative_change": 0.01})


CHECKS = [group_relations, fuchsian_circle, quasifuchsian_dimension, holonomy_exactness, euler_monodromy,
          camacho_sad, degree_counts, resolution_oracle, weyl, closedness, ahlfors, harmonic, leviflat, pullback]


def run_all(preset: str = "triangle-2-3-7", only=None, progress=None) -> list:
    """Run every check with the preset's parameters; ``only`` selects check numbers."""
    P = PRESETS[preset]
    kw = {2: {"signature": P["signature"], "depth": P["depth"]},
          3: {"signature": P["four_signature"], "t": P["t"]},
          4: {"signature": P["signature"]},
          12: {"signature": P["signature"], "depth": P["harmonic_depth"], "walkers": P["walkers"],
               "steps": P["steps"], "seed": P["seed"]},
          13: {"signature": P["signature"], "depth": P["levi_depth"]}}
    out = []
    for k, fn in enumerate(CHECKS, 1):
        if only and k not in only:
            continue
        c = fn(**kw.get(k, {}))
        if progress:
            progress(c)
        out.append(c)
    return out


__all__ = ["Check", "CHECKS", "PRESETS", "run_all", "polar_oracle", "partial_quotient_sum", "sign_distance",
           "closedness_forms", "overlap_two_forms", "dimension_pair", "camacho_sad_samples"]
