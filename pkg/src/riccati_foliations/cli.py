"""Command line front end.

Every command writes a JSON report (with the fully resolved configuration
and seed), CSV data files and, with ``--plot``, standalone plotting
scripts.  A manifest lists every output with its sha256; wall-clock times
live only in the manifest so reports are reproducible byte for byte.

Exit codes: 0 success, 2 configuration error, 3 numerical-quality failure,
4 internal error.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from . import currents as cu
from . import kernels
from . import verify
from .errors import ConfigInvalid, FoliationError, UnknownSchema
from .groups import GroupPresentation, deform_group, four_orbifold_group, trace_coordinate, triangle_group
from .leviflat import (LeviFlatCloud, defining_function_residual, local_grid, path_grid, saturate,
                       slice_and_dimension)
from .limitset import box_dimension, enumerate_limit_points, fit_invariant_circle, sample_to_csv_rows
from .moebius import INF, MoebiusMap, elliptic_about
from .resolution import resolve
from .riccati_ode import (RiccatiODE, alpha_from_orders, camacho_sad_residual, concurrency_point, degree_by_tangency,
                          euler, halphen_field, hypergeometric, invariant_lines, monodromy, riccati_to_homogeneous,
                          singular_points, standard_ode_loop, with_exponents)
from .suspension import SuspensionData, from_group, holonomy_of_loop, product_loop, standard_loop

SCHEMA_PREFIX = "riccati-foliations"
SCHEMA_VERSION = 1
ENV_OUT = "RICCATI_FOLIATIONS_OUT"

HOLONOMY_TOL = 1e-12
CAMACHO_SAD_TOL = 1e-8
ANALYTIC_TOL = 1e-4

# name: (type, default, lower, upper)
PARAMS = {
    "depth": (int, 10, 1, 16),
    "seed": (int, 0, 0, 2 ** 63 - 1),
    "scales": (int, 8, 4, 20),
    "rtol": (float, 1e-10, 1e-14, 1e-3),
    "fiber": (int, 0, 0, 64),
    "radius": (float, 0.1, 1e-6, 10.0),
    "lam": (float, (math.sqrt(5) - 1) / 2, 1e-6, 1e3),
    "n": (int, 10 ** 5, 1, 10 ** 8),
    "theta": (float, cu.GOLDEN_ANGLE, -1e6, 1e6),
    "copies": (int, 2, 1, 64),
    "budget": (int, 10 ** 4, 10, 10 ** 7),
    "walkers": (int, 10 ** 4, 1, 10 ** 7),
    "steps": (int, 10 ** 3, 2, 10 ** 6),
    "max_rows": (int, 20000, 1, 10 ** 8),
    "ppu": (float, 16.0, 1.0, 4096.0),
    "y_nodes": (int, 64, 1, 1 << 16),
    "m": (int, None, 1, 10 ** 6),
    "n_exp": (int, None, 1, 10 ** 6),
}

COMMAND_DEFAULTS = {"leviflat saturate": {"depth": 9}, "leviflat slice": {"depth": 9},
                    "leviflat analytic-check": {"depth": 9}, "current harmonic": {"depth": 14}}

STR_PARAMS = {"signature", "t", "positions", "ode", "orders", "center", "amplitudes", "b", "c", "x", "preset",
              "only", "group", "suspension", "ode_file", "cloud"}
INPUT_KEYS = ("group", "suspension", "ode_file", "cloud")


# ------------------------------------------------------------ config

@dataclass
class RunConfig:
    command: str
    inputs: dict
    params: dict
    out: str
    seed: int
    plot: bool = False

    def validate(self) -> None:
        for key, path in self.inputs.items():
            if path is not None and not Path(path).is_file():
                raise ConfigInvalid(f"input file for --{key.replace('_', '-')} not found: {path}")
        for key, val in self.params.items():
            if key in PARAMS and val is not None:
                _, _, lo, hi = PARAMS[key]
                if not (lo <= val <= hi):
                    raise ConfigInvalid(f"--{key.replace('_', '-')} = {val} outside [{lo}, {hi}]")

    def to_json(self) -> dict:
        return {"command": self.command, "inputs": dict(self.inputs), "params": _plain(self.params),
                "out": self.out, "seed": self.seed, "plot": self.plot}


def read_config_file(path) -> dict:
    """``key = value`` lines; blank lines and lines starting with # are ignored."""
    p = Path(path)
    if not p.is_file():
        raise ConfigInvalid(f"config file not found: {path}")
    out = {}
    for n, line in enumerate(p.read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigInvalid(f"{path}:{n}: expected key = value")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _convert(key: str, raw):
    if key in PARAMS:
        typ = PARAMS[key][0]
        try:
            return typ(float(raw)) if typ is int and isinstance(raw, str) and "e" in raw.lower() else typ(raw)
        except (TypeError, ValueError):
            raise ConfigInvalid(f"bad value for {key}: {raw!r}") from None
    if key in STR_PARAMS:
        return str(raw)
    raise ConfigInvalid(f"unknown configuration key: {key}")


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_vals = read_config_file(args.config) if args.config else {}
    keys = [k for k in vars(args) if k in PARAMS or k in STR_PARAMS]
    for k in file_vals:
        if k not in PARAMS and k not in STR_PARAMS and k not in ("out", "plot"):
            raise ConfigInvalid(f"unknown configuration key: {k}")
    params = {}
    for k in keys:
        v = getattr(args, k)
        if v is None and k in file_vals:
            v = _convert(k, file_vals[k])
        if v is None and k in PARAMS:
            v = COMMAND_DEFAULTS.get(args.command_name, {}).get(k, PARAMS[k][1])
        params[k] = v
    out = args.out or file_vals.get("out") or os.environ.get(ENV_OUT) or "out"
    plot = bool(args.plot or str(file_vals.get("plot", "")).lower() in ("1", "true", "yes"))
    inputs = {k: params.pop(k) for k in INPUT_KEYS if k in params}
    seed = params.pop("seed", 0)
    cfg = RunConfig(args.command_name, inputs, params, str(out), int(seed), plot)
    cfg.validate()
    return cfg


# ------------------------------------------------------------ outputs

def _plain(v):
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (complex, np.complexfloating)):
        c = complex(v)
        return "inf" if math.isinf(c.real) or math.isinf(c.imag) else [c.real, c.imag]
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else str(f)
    return v


def schema(kind: str) -> str:
    return f"{SCHEMA_PREFIX}/{kind}/{SCHEMA_VERSION}"


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Outputs:
    """Single owner of an output directory for one command run."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.dir = Path(cfg.out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.started = _now()

    def _record(self, path: Path, kind: str) -> Path:
        self.files.append((path, kind))
        return path

    def json(self, name: str, obj: dict, kind: str) -> Path:
        p = self.dir / name
        p.write_text(dumps({"schema": schema(kind), **obj}))
        self._record(p, kind)
        if self.cfg.plot and kind in PLOT_KINDS:
            self.plot(p)
        return p

    def csv(self, name: str, rows, kind: str) -> Path:
        """``rows`` starts with the header row."""
        p = self.dir / name
        with p.open("w", newline="") as fh:
            fh.write(f"# schema: {schema(kind)}\n")
            w = csv.writer(fh, lineterminator="\n")
            for r in rows:
                w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
        self._record(p, kind)
        if self.cfg.plot and kind in PLOT_KINDS:
            self.plot(p)
        return p

    def plot(self, data: Path) -> Path:
        s = emit_plot_script(data)
        return self._record(s, "plot-script")

    def report(self, result: dict, ok: bool) -> Path:
        body = {"command": self.cfg.command, "config": self.cfg.to_json(), "seed": self.cfg.seed,
                "status": "ok" if ok else "quality-failure", "result": result}
        return self.json("report.json", body, "report")

    def manifest(self, exit_code: int) -> Path:
        p = self.dir / "manifest.json"
        outs = [{"path": f.name, "sha256": sha256(f), "schema": schema(k) if k != "plot-script" else "plot-script"}
                for f, k in self.files]
        body = {"schema": schema("manifest"), "command": self.cfg.command, "exit_code": exit_code,
                "outputs": outs, "backend": kernels.BACKEND, "version": __version__,
                "timestamps": {"started": self.started, "finished": _now()}}
        p.write_text(json.dumps(body, sort_keys=True, indent=2) + "\n")
        return p


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def status(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


# ------------------------------------------------------------ plot scripts

_PLOT_HEAD = '''"""Plot {data} ({kind}).  Generated script; run it with python."""
import json
import sys

import numpy as np
import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {data!r}
'''

_PLOT_BODIES = {
    "limitset-points": '''d = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
z = d[d[:, 2] == 0, 0] + 1j * d[d[:, 2] == 0, 1]
c = z.mean()
z = z[np.argsort(np.angle(z - c))]
plt.plot(z.real, z.imag, "-", lw=0.6)
plt.plot(z.real, z.imag, ".", ms=1.5)
plt.gca().set_aspect("equal")
plt.title("limit set")
plt.show()
''',
    "leviflat-cloud": '''d = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
d = d[d[:, 4] == 0]
ax = plt.figure().add_subplot(projection="3d")
ax.scatter(d[:, 0], d[:, 2], d[:, 3], s=1, c=d[:, 1])
ax.set_xlabel("Re x")
ax.set_ylabel("Re y")
ax.set_zlabel("Im y")
plt.show()
''',
    "leviflat-slice": '''d = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
d = d[d[:, 2] == 0]
ax = plt.figure().add_subplot(projection="3d")
r2 = d[:, 0] ** 2 + d[:, 1] ** 2
ax.scatter(2 * d[:, 0] / (1 + r2), 2 * d[:, 1] / (1 + r2), (r2 - 1) / (1 + r2), s=1)
ax.set_title("fiber slice on the sphere")
plt.show()
''',
    "ratio-series": '''data = json.load(open(path))
r = data["result"]["ratios"] if "result" in data else data["ratios"]
plt.semilogy(range(len(r)), r, "o-")
plt.xlabel("radius")
plt.ylabel("length / area")
plt.show()
''',
    "box-counts": '''d = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
plt.loglog(1 / d[:, 0], d[:, 1], "o-")
plt.xlabel("1 / scale")
plt.ylabel("boxes")
plt.show()
''',
    "circle-measure": '''d = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
plt.hist(d[:, 0], bins=64, weights=d[:, 1])
plt.xlabel("angle")
plt.show()
''',
    "sphere-measure": '''d = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
d = d[d[:, 2] == 0]
plt.scatter(d[:, 0], d[:, 1], s=0.5, alpha=0.3)
plt.gca().set_aspect("equal")
plt.show()
''',
    "resolution-tree": '''data = json.load(open(path))
t = data["result"]["tree"] if "result" in data else data
chain = t["chain"]
comps = {c["label"]: c for c in t["components"]}
for k, lab in enumerate(chain):
    c = comps[lab]
    plt.plot([k, k + 0.8], [0, 0.4 if k % 2 else -0.4], lw=3, color="C3" if c["transverse"] else "C0")
    plt.text(k + 0.2, 0.5, f"{lab} ({c['self_intersection']})")
plt.axis("off")
plt.title(f"resolution of ({t['m']}, {t['n']})")
plt.show()
''',
}
PLOT_KINDS = set(_PLOT_BODIES)


def read_schema(path) -> str:
    p = Path(path)
    if not p.is_file():
        raise ConfigInvalid(f"data file not found: {path}")
    text = p.read_text()
    if p.suffix == ".json":
        try:
            s = json.loads(text).get("schema", "")
        except (json.JSONDecodeError, AttributeError):
            s = ""
    else:
        first = text.split("\n", 1)[0]
        s = first.split("schema:", 1)[1].strip() if first.startswith("# schema:") else ""
    return s


def emit_plot_script(data, kind: str | None = None) -> Path:
    """Write ``<data>.plot.py`` for the recognized schema; the script is never executed here."""
    data = Path(data)
    s = read_schema(data)
    if kind is None:
        parts = s.split("/")
        kind = parts[1] if len(parts) == 3 and parts[0] == SCHEMA_PREFIX else ""
        if kind == "report":
            body = json.loads(data.read_text()).get("result", {})
            kind = "ratio-series" if "ratios" in body else "resolution-tree" if "tree" in body else ""
    if kind not in _PLOT_BODIES:
        raise UnknownSchema(f"no plot template for schema {s!r} of {data.name}")
    out = data.with_name(data.name + ".plot.py")
    out.write_text(_PLOT_HEAD.format(data=data.name, kind=kind) + _PLOT_BODIES[kind])
    return out


# ------------------------------------------------------------ parsing helpers

def parse_ints(s: str, name: str) -> tuple:
    try:
        return tuple(int(x) for x in s.replace(" ", "").split(",") if x)
    except ValueError:
        raise ConfigInvalid(f"--{name} expects comma separated integers, got {s!r}") from None


def parse_complex(s: str, name: str) -> complex:
    t = s.strip().lower().replace(" ", "")
    if t in ("inf", "infinity", "oo"):
        return INF
    try:
        return complex(t.replace("i", "j"))
    except ValueError:
        raise ConfigInvalid(f"--{name} expects a complex number, got {s!r}") from None


def parse_complexes(s: str, name: str) -> list:
    return [parse_complex(x, name) for x in s.split(",") if x.strip()]


def load_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise ConfigInvalid(f"{path}: invalid JSON ({e})") from None


def get_group(cfg: RunConfig, default="2,3,7") -> GroupPresentation:
    if cfg.inputs.get("group"):
        return GroupPresentation.from_json(load_json(cfg.inputs["group"]))
    sig = parse_ints(cfg.params.get("signature") or default, "signature")
    if len(sig) == 3:
        return triangle_group(*sig)
    if len(sig) == 4:
        return four_orbifold_group(*sig)
    raise ConfigInvalid("--signature needs 3 or 4 orders")


def get_suspension(cfg: RunConfig) -> tuple:
    if cfg.inputs.get("suspension"):
        D = SuspensionData.from_json(load_json(cfg.inputs["suspension"]))
        return D, None
    G = get_group(cfg)
    pos = cfg.params.get("positions")
    D = from_group(G, parse_complexes(pos, "positions") if pos else None)
    return D, G


def get_ode(cfg: RunConfig) -> RiccatiODE:
    if cfg.inputs.get("ode_file"):
        return RiccatiODE.from_json(load_json(cfg.inputs["ode_file"]))
    spec = cfg.params.get("ode") or "hypergeometric:2,3,7"
    fam, _, arg = spec.partition(":")
    if fam == "euler":
        return euler(parse_complex(arg or "0.3333333333333333", "ode"))
    if fam == "hypergeometric":
        return hypergeometric(*parse_ints(arg or "2,3,7", "ode"))
    if fam == "exponents":
        roots, _, exps = arg.partition(";")
        return with_exponents(parse_complexes(roots, "ode"), [float(x) for x in exps.split(",") if x])
    raise ConfigInvalid(f"unknown ODE family {fam!r}; use euler:a, hypergeometric:m1,m2,m3 or exponents:roots;exps")


def moebius_rows(maps):
    yield ["index", "re_a", "im_a", "re_b", "im_b", "re_c", "im_c", "re_d", "im_d"]
    for k, M in enumerate(maps):
        m = M.matrix.ravel()
        yield [k + 1] + [v for z in m for v in (z.real, z.imag)]


def limit_rows(points):
    yield ["re", "im", "infinite"]
    yield from sample_to_csv_rows(points)


def sphere_measure_rows(points, max_rows: int):
    points = np.asarray(points, complex)
    stride = max(1, int(math.ceil(len(points) / max_rows)))
    sub = points[::stride]
    yield ["re", "im", "infinite", "weight"]
    for z in sub:
        inf = bool(np.isinf(z))
        yield [0.0 if inf else z.real, 0.0 if inf else z.imag, int(inf), 1.0 / len(sub)]


# ------------------------------------------------------------ commands

def cmd_group_build(cfg, out):
    G = get_group(cfg)
    out.json("group.json", G.to_json(), "group")
    out.csv("generators.csv", moebius_rows(G.generators), "moebius-list")
    res = G.relator_residuals()
    return {"kind": G.kind, "orders": list(G.orders), "relator_residuals": res, "traces": [g.trace for g in G.generators],
            "group_hash": G.group_hash()}, True


def cmd_group_deform(cfg, out):
    G = get_group(cfg, default="3,3,3,3")
    t = parse_complex(cfg.params.get("t") or "0.1j", "t")
    H = deform_group(G, t)
    out.json("group.json", H.to_json(), "group")
    out.csv("generators.csv", moebius_rows(H.generators), "moebius-list")
    return {"t": t, "trace_coordinate": trace_coordinate(H.generators),
            "base_trace_coordinate": trace_coordinate(G.generators),
            "relator_residuals": H.relator_residuals()}, True


def cmd_limitset(cfg, out):
    G = get_group(cfg)
    S = enumerate_limit_points(G, cfg.params["depth"])
    p = out.csv("limitset.csv", limit_rows(S.points), "limitset-points")
    fit = fit_invariant_circle(S)
    return {"points": len(S), "depth": S.max_len, "group_hash": S.group_hash, "circle": fit.to_json(),
            "data": p.name}, True


def cmd_dimension(cfg, out):
    G = get_group(cfg)
    S = enumerate_limit_points(G, cfg.params["depth"])
    est = box_dimension(S, n_scales=cfg.params["scales"])
    out.csv("box_counts.csv", [["scale", "count"]] + [[s, c] for s, c in zip(est.scales, est.counts)], "box-counts")
    return {"points": len(S), "dimension": est.to_json()}, True


def cmd_suspend(cfg, out):
    D, _ = get_suspension(cfg)
    out.json("suspension.json", D.to_json(), "suspension")
    out.csv("monodromies.csv", moebius_rows(D.monodromies), "moebius-list")
    return {"punctures": D.punctures, "orders": list(D.orders), "degree": D.degree(),
            "relation_residual": D.relation_residual(),
            "exponents": [{"value": e.value, "order": e.order, "kind": e.kind} for e in D.exponents]}, True


def cmd_holonomy(cfg, out):
    D, _ = get_suspension(cfg)
    rows = [["loop", "entrywise_error"]]
    errs = []
    for i in range(D.k):
        e = verify.sign_distance(holonomy_of_loop(D, standard_loop(D, i)), D.monodromies[i])
        errs.append(e)
        rows.append([f"p{i + 1}", e])
    prod = verify.sign_distance(holonomy_of_loop(D, product_loop(D)), MoebiusMap.identity())
    rows.append(["product", prod])
    out.csv("holonomy.csv", rows, "holonomy-errors")
    worst = max(errs + [prod])
    return {"loop_errors": errs, "product_error": prod, "tolerance": HOLONOMY_TOL}, worst < HOLONOMY_TOL


def cmd_ode_monodromy(cfg, out):
    ode = get_ode(cfg)
    fibers = ode.fibers()
    i = cfg.params["fiber"]
    if i >= len(fibers):
        raise ConfigInvalid(f"--fiber {i} but the equation has {len(fibers)} finite fibers")
    loop = standard_ode_loop(ode, fibers[i])
    fit = monodromy(ode, loop, rtol=cfg.params["rtol"], seed=cfg.seed, report=True)
    out.csv("monodromy.csv", moebius_rows([fit.map]), "moebius-list")
    return {"fiber": fibers[i], "trace": fit.map.trace, "class": fit.map.classify(),
            "check_residual": fit.check_residual, "ode": ode.to_json()}, True


def _homogeneous(cfg):
    if cfg.params.get("orders"):
        al = alpha_from_orders(*parse_ints(cfg.params["orders"], "orders"))
        return halphen_field(*al), {"halphen_alpha": al}
    if cfg.params.get("ode") or cfg.inputs.get("ode_file"):
        ode = get_ode(cfg)
        return riccati_to_homogeneous(ode), {"ode": ode.to_json()}
    al = alpha_from_orders(2, 3, 7)
    return halphen_field(*al), {"halphen_alpha": al}


def cmd_halphen(cfg, out):
    al = alpha_from_orders(*parse_ints(cfg.params.get("orders") or "2,3,7", "orders"))
    X, src = halphen_field(*al), {"halphen_alpha": al}
    pts = singular_points(X, seed=cfg.seed)
    rows = [["x", "y", "z", "class", "re_ratio", "im_ratio"]]
    for s in pts:
        loc = [complex(z) for z in s.location]
        r = s.ratio
        rows.append([" ".join(f"{z.real:.12g}{z.imag:+.12g}j" for z in loc[:1]),
                     " ".join(f"{z.real:.12g}{z.imag:+.12g}j" for z in loc[1:2]),
                     " ".join(f"{z.real:.12g}{z.imag:+.12g}j" for z in loc[2:3]), s.kind,
                     r.real if np.isfinite(r) else "inf", r.imag if np.isfinite(r) else "inf"])
    out.csv("singular_points.csv", rows, "singular-points")
    return {**src, "field": X.to_json(), "degree": degree_by_tangency(X, seed=cfg.seed),
            "singular_points": [s.to_json() for s in pts]}, True


def cmd_invariant_lines(cfg, out):
    X, src = _homogeneous(cfg)
    lines = invariant_lines(X, seed=cfg.seed)
    rows = [["re_l0", "im_l0", "re_l1", "im_l1", "re_l2", "im_l2"]]
    for l in lines:
        rows.append([v for z in l for v in (z.real, z.imag)])
    out.csv("invariant_lines.csv", rows, "invariant-lines")
    res = {**src, "lines": [list(l) for l in lines], "count": len(lines)}
    if len(lines) >= 2:
        pt, resid = concurrency_point(lines)
        res["concurrency_point"] = list(pt)
        res["concurrency_residual"] = resid
    return res, True


def cmd_camacho_sad(cfg, out):
    ode = get_ode(cfg)
    rows = [["re_fiber", "im_fiber", "residual"]]
    res = []
    for r in ode.fibers():
        if ode.is_simple(r):
            v = camacho_sad_residual(ode, r)
            res.append({"fiber": r, "residual": v})
            rows.append([complex(r).real, complex(r).imag, v])
    out.csv("camacho_sad.csv", rows, "camacho-sad")
    worst = max((x["residual"] for x in res), default=0.0)
    return {"ode": ode.to_json(), "fibers": res, "tolerance": CAMACHO_SAD_TOL}, worst < CAMACHO_SAD_TOL


def cmd_degree(cfg, out):
    X, src = _homogeneous(cfg)
    d = degree_by_tangency(X, seed=cfg.seed)
    out.csv("degree.csv", [["algebraic_degree", "tangency_count"], [X.degree, d]], "degree")
    return {**src, "algebraic_degree": X.degree, "tangency_count": d}, True


def cmd_resolve(cfg, out):
    m, n = cfg.params["m"], cfg.params["n_exp"]
    T = resolve(m, n)
    tree = T.to_json()
    rows = [["label", "self_intersection", "transverse"]]
    rows += [[c.label, c.self_intersection, int(c.transverse)] for c in T.components]
    out.csv("components.csv", rows, "resolution-components")
    p = out.json("tree.json", {"result": {"tree": tree}}, "resolution-tree")
    if not cfg.plot:
        out.plot(p)
    return {"tree": tree}, True


def _levi_setup(cfg):
    G = get_group(cfg)
    D = from_group(G)
    L = enumerate_limit_points(G, cfg.params["depth"])
    return G, D, L


def cloud_rows(cloud: LeviFlatCloud):
    return cloud.csv_rows()


def cmd_leviflat_saturate(cfg, out):
    G, D, L = _levi_setup(cfg)
    cloud = saturate(D, L, path_grid(D))
    out.csv("cloud.csv", cloud_rows(cloud), "leviflat-cloud")
    return {"points": len(cloud), "limit_points": len(L), "meta": cloud.meta,
            "basepoint": D.basepoint}, True


def _read_cloud(path) -> LeviFlatCloud:
    d = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    base = d[:, 0] + 1j * d[:, 1]
    fiber = np.where(d[:, 4] > 0, INF, d[:, 2] + 1j * d[:, 3])
    return LeviFlatCloud(base, fiber, {"source": str(path)})


def cmd_leviflat_slice(cfg, out):
    if cfg.inputs.get("cloud"):
        if read_schema(cfg.inputs["cloud"]) != schema("leviflat-cloud"):
            raise ConfigInvalid("--cloud must be a Levi-flat cloud CSV")
        cloud = _read_cloud(cfg.inputs["cloud"])
        x = parse_complex(cfg.params["x"], "x") if cfg.params.get("x") else complex(cloud.base[0])
    else:
        G, D, L = _levi_setup(cfg)
        cloud = saturate(D, L, path_grid(D))
        x = parse_complex(cfg.params["x"], "x") if cfg.params.get("x") else D.basepoint
    rep = slice_and_dimension(cloud, x)
    out.csv("slice.csv", limit_rows(rep.points), "leviflat-slice")
    return {"x": x, **rep.to_json()}, True


def cmd_leviflat_analytic(cfg, out):
    G, D, L = _levi_setup(cfg)
    radius = cfg.params["radius"]
    grid = path_grid(D) + [g for i in range(D.k) for g in local_grid(D, i, radius)]
    cloud = saturate(D, L, grid)
    rows = [["fiber", "residual"]]
    res = []
    for i in range(D.k):
        v = defining_function_residual(D, i, cloud, radius)
        res.append(v)
        rows.append([i + 1, v])
    out.csv("analytic_residuals.csv", rows, "analytic-residuals")
    return {"residuals": res, "radius": radius, "tolerance": ANALYTIC_TOL, "cloud_points": len(cloud)}, \
        max(res) < ANALYTIC_TOL


def _quad(cfg):
    return cu.Quadrature(panels_per_unit=cfg.params["ppu"], y_nodes=cfg.params["y_nodes"])


def cmd_current_couple(cfg, out):
    center = parse_complexes(cfg.params.get("center") or "0.3,0.2", "center")
    amps = parse_complexes(cfg.params.get("amplitudes") or "1,0,0,1", "amplitudes")
    if len(center) != 2 or len(amps) != 4:
        raise ConfigInvalid("--center needs 2 and --amplitudes 4 complex numbers")
    form = cu.bump_two_form(center, cfg.params["radius"], np.reshape(amps, (2, 2)))
    model = cu.LinearModel(cfg.params["lam"])
    r = cu.couple(model, cu.TransverseMeasure.uniform(), form, _quad(cfg))
    out.csv("coupling.csv", [["part", "re", "im"], ["flowbox", r.flowbox.real, r.flowbox.imag],
                             ["singular", r.singular.real, r.singular.imag], ["total", r.value.real, r.value.imag]],
            "coupling")
    return {"coupling": r.to_json(), "lam": cfg.params["lam"]}, True


def cmd_current_closedness(cfg, out):
    center = parse_complexes(cfg.params.get("center") or "0.3+0.1j,0.5", "center")
    B = parse_complexes(cfg.params.get("b") or "1,0.5", "b")
    C = parse_complexes(cfg.params.get("c") or "0.5j,1", "c")
    if len(center) != 2 or len(B) != 2 or len(C) != 2:
        raise ConfigInvalid("--center, --b and --c need two complex numbers each")
    eta = cu.OneForm(tuple(center), cfg.params["radius"], tuple(B), tuple(C))
    model = cu.LinearModel(cfg.params["lam"])
    q = _quad(cfg)
    mu = cu.TransverseMeasure.uniform()
    a = cu.closedness_residual(model, mu, eta, q)
    b = cu.closedness_residual(model, mu, eta, q.doubled())
    out.csv("closedness.csv", [["panels_per_unit", "y_nodes", "residual"], [q.panels_per_unit, q.y_nodes, a],
                               [2 * q.panels_per_unit, 2 * q.y_nodes, b]], "closedness")
    return {"residual": a, "residual_doubled": b, "ratio": a / b if b else math.inf}, b <= a


def cmd_current_weyl(cfg, out):
    r = cu.weyl_measure(cfg.params["theta"], cfg.params["n"])
    m = r.measure
    out.csv("measure.csv", [["angle", "weight"]] + [[a, w] for a, w in zip(m.angles, m.weights)], "circle-measure")
    return {"theta": cfg.params["theta"], "n": r.n, "discrepancy": r.discrepancy}, True


def cmd_current_ahlfors(cfg, out):
    from .suspension import repeated_generator

    D = repeated_generator(elliptic_about(0, INF, cfg.params["theta"]), cfg.params["copies"])
    r = cu.ahlfors_ratio(D, plaque_budget=cfg.params["budget"])
    out.json("ratios.json", {"ratios": list(r.ratios), "radii": list(r.radii)}, "ratio-series")
    out.csv("ratios.csv", [["radius", "length", "area", "ratio"]] +
            [list(x) for x in zip(r.radii, r.lengths, r.areas, r.ratios)], "ahlfors-series")
    return {**r.to_json(), "monotone_tail": r.monotone_tail}, True


def cmd_current_harmonic(cfg, out):
    G = get_group(cfg)
    D = from_group(G)
    L = enumerate_limit_points(G, cfg.params["depth"])
    status(f"harmonic: {cfg.params['walkers']} walkers x {cfg.params['steps']} steps ({kernels.BACKEND} kernels)")
    S = cu.harmonic_measure(D, L.points, cfg.params["walkers"], cfg.params["steps"], cfg.seed)
    h = cu.harmonic_diagnostics(D, L.points, cfg.params["walkers"], cfg.params["steps"], cfg.seed)
    out.csv("measure.csv", sphere_measure_rows(S.points(), cfg.params["max_rows"]), "sphere-measure")
    ok = h.support_fraction >= 0.99 and h.stationarity_tv < 0.02
    return {**h.to_json(), "limit_points": len(L)}, ok


def cmd_verify_all(cfg, out):
    preset = cfg.params.get("preset") or "triangle-2-3-7"
    if preset not in verify.PRESETS:
        raise ConfigInvalid(f"unknown preset {preset!r}; available: {sorted(verify.PRESETS)}")
    only = set(parse_ints(cfg.params["only"], "only")) if cfg.params.get("only") else None
    checks = verify.run_all(preset, only, progress=lambda c: status(f"{c.line()}  ({c.seconds:.1f} s)"))
    rows = [["number", "name", "passed"]] + [[c.number, c.name, int(c.passed)] for c in checks]
    out.csv("checks.csv", rows, "checks")
    ok = all(c.passed for c in checks)
    return {"preset": preset, "checks": [c.to_json() for c in checks], "all_passed": ok}, ok


COMMANDS = {
    "group build": cmd_group_build, "group deform": cmd_group_deform, "limitset": cmd_limitset,
    "dimension": cmd_dimension, "suspend": cmd_suspend, "holonomy": cmd_holonomy,
    "ode monodromy": cmd_ode_monodromy, "halphen": cmd_halphen, "invariant-lines": cmd_invariant_lines,
    "camacho-sad": cmd_camacho_sad, "degree": cmd_degree, "resolve": cmd_resolve,
    "leviflat saturate": cmd_leviflat_saturate, "leviflat slice": cmd_leviflat_slice,
    "leviflat analytic-check": cmd_leviflat_analytic, "current couple": cmd_current_couple,
    "current closedness": cmd_current_closedness, "current weyl": cmd_current_weyl,
    "current ahlfors": cmd_current_ahlfors, "current harmonic": cmd_current_harmonic, "verify-all": cmd_verify_all,
}


# ------------------------------------------------------------ argparse

def _common(p):
    p.add_argument("--out", help=f"output directory (default: ${ENV_OUT} or ./out)")
    p.add_argument("--config", help="key = value configuration file; explicit flags win")
    p.add_argument("--seed", type=int, help="random seed recorded in every report (default 0)")
    p.add_argument("--plot", action="store_true", help="also write plotting scripts for the data files")


def _add(sub, name, helptext, *opts):
    p = sub.add_parser(name, help=helptext, description=helptext)
    _common(p)
    for o in opts:
        o(p)
    return p


def _opt(flag, typ=str, help=None, dest=None):
    def add(p):
        kw = {"type": typ, "default": None, "help": help}
        if dest:
            kw["dest"] = dest
        p.add_argument(flag, **kw)
    return add


SIG = _opt("--signature", help="orbifold orders, e.g. 2,3,7 or 3,3,3,3")
GROUP = _opt("--group", help="group JSON written by 'group build'")
DEPTH = _opt("--depth", int, help="maximal word length (syllables)")
ODE = _opt("--ode", help="euler:a | hypergeometric:m1,m2,m3 | exponents:r1,r2,..;a1,a2,..")
ODE_FILE = _opt("--ode-file", help="ODE JSON", dest="ode_file")
ORDERS = _opt("--orders", help="Halphen orders m1,m2,m3")
LAM = _opt("--lam", float, help="eigenvalue ratio of the linear model")
RADIUS = _opt("--radius", float, help="support or neighbourhood radius")
PPU = _opt("--ppu", float, help="quadrature panels per unit of leaf parameter")
YN = _opt("--y-nodes", int, help="transverse quadrature nodes", dest="y_nodes")
THETA = _opt("--theta", float, help="rotation angle in radians (default: golden angle)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="riccati-foliations",
                                 description="Riccati foliations with Fuchsian and quasifuchsian holonomy.")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("group", help="group constructions").add_subparsers(dest="sub", required=True)
    _add(g, "build", "build a triangle or four-orbifold group", SIG)
    _add(g, "deform", "deform a four-orbifold group along the trace coordinate", SIG, GROUP,
         _opt("--t", help="complex deformation parameter, e.g. 0.1j"))
    _add(sub, "limitset", "enumerate limit points", SIG, GROUP, DEPTH)
    _add(sub, "dimension", "box-counting dimension of the limit set", SIG, GROUP, DEPTH,
         _opt("--scales", int, help="number of box scales"))
    _add(sub, "suspend", "suspension data from a group", SIG, GROUP,
         _opt("--positions", help="puncture positions, e.g. 0,1,inf"))
    _add(sub, "holonomy", "check holonomy of the standard loops", SIG, GROUP,
         _opt("--suspension", help="suspension JSON"), _opt("--positions", help="puncture positions"))
    o = sub.add_parser("ode", help="Riccati equations").add_subparsers(dest="sub", required=True)
    _add(o, "monodromy", "fitted monodromy around a fiber", ODE, ODE_FILE,
         _opt("--fiber", int, help="index of the finite fiber"), _opt("--rtol", float, help="integrator tolerance"))
    _add(sub, "halphen", "Halphen field: singular points and degree", ORDERS)
    _add(sub, "invariant-lines", "invariant lines of a homogeneous field", ORDERS, ODE, ODE_FILE)
    _add(sub, "camacho-sad", "index-formula residual on every simple fiber", ODE, ODE_FILE)
    _add(sub, "degree", "degree by tangency with a generic line", ORDERS, ODE, ODE_FILE)
    rp = _add(sub, "resolve", "blow-up resolution of the singularity with eigenvalues (m, n)")
    rp.add_argument("m", type=int)
    rp.add_argument("n_exp", metavar="n", type=int)
    lv = sub.add_parser("leviflat", help="Levi-flat hypersurfaces").add_subparsers(dest="sub", required=True)
    _add(lv, "saturate", "saturate the limit set along the foliation", SIG, GROUP, DEPTH)
    _add(lv, "slice", "fiber slice and its dimension", SIG, GROUP, DEPTH,
         _opt("--cloud", help="cloud CSV from 'leviflat saturate'"), _opt("--x", help="base point of the slice"))
    _add(lv, "analytic-check", "defining-function residual near each fiber", SIG, GROUP, DEPTH, RADIUS)
    c = sub.add_parser("current", help="foliated currents").add_subparsers(dest="sub", required=True)
    _add(c, "couple", "couple the closed current with a bump two-form", LAM, RADIUS, PPU, YN,
         _opt("--center", help="z1,z2"), _opt("--amplitudes", help="a11,a12,a21,a22"))
    _add(c, "closedness", "|T(d eta)| at default and doubled resolution", LAM, RADIUS, PPU, YN,
         _opt("--center", help="z1,z2"), _opt("--b", help="dz coefficients b1,b2"),
         _opt("--c", help="dzbar coefficients c1,c2"))
    _add(c, "weyl", "orbit measure of a rotation and its discrepancy", THETA, _opt("--n", int, help="orbit length"))
    _add(c, "ahlfors", "Length/Area ratios of a cyclic elliptic leaf", THETA,
         _opt("--copies", int, help="number of punctures carrying the generator"),
         _opt("--budget", int, help="plaque budget"))
    _add(c, "harmonic", "harmonic measure by random walks", SIG, GROUP, DEPTH,
         _opt("--walkers", int), _opt("--steps", int), _opt("--max-rows", int, dest="max_rows"))
    _add(sub, "verify-all", "run every invariant check", _opt("--preset", help="triangle-2-3-7"),
         _opt("--only", help="comma separated check numbers"))
    return ap


def _command_name(args) -> str:
    return args.command + (f" {args.sub}" if getattr(args, "sub", None) else "")


def run(cfg: RunConfig) -> tuple:
    """Run one command; returns (exit code, manifest path)."""
    out = Outputs(cfg)
    status(f"{cfg.command}: writing to {out.dir}")
    result, ok = COMMANDS[cfg.command](cfg, out)
    code = 0 if ok else 3
    out.report(result, ok)
    return code, out.manifest(code)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    args.command_name = _command_name(args)
    try:
        cfg = resolve_config(args)
        code, manifest = run(cfg)
    except FoliationError as e:
        status(f"error: {type(e).__name__}: {e}")
        return e.exit_code
    except Exception as e:  # noqa: BLE001 - reported as an internal error
        status(f"internal error: {type(e).__name__}: {e}")
        return 4
    status(f"manifest: {manifest}")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
