"""TOML scenario files: one file drives every command.

Example::

    name = "t2-periodic"
    theorem = "T2"
    eps = [0.25, 0.125, 0.0625]

    [layout]
    generator = "periodic"
    bc = "dirichlet"
    outer = { kind = "box", box = [0.0, 0.0, 1.0, 1.0] }

    [eta]
    rule = "fixed"
    value = 0.5
"""

from __future__ import annotations

import math
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from . import fem, rates
from .geometry import DEFAULT_RADII, Disk, LayoutConfig, OuterDomain, Polygon


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str, line: int | None = None):
        where = f" (line {line})" if line else ""
        super().__init__(f"{field_name}: {message}{where}")
        self.field = field_name
        self.line = line


@dataclass
class ScenarioFile:
    path: Path | None
    text: str
    raw: dict
    scenario: rates.Scenario
    seed: int = 0
    sharpness: dict = field(default_factory=dict)
    cell: dict = field(default_factory=dict)

    @property
    def eps_list(self) -> list[float]:
        return list(self.scenario.eps_list)


def _line_of(text: str, table: str | None, key: str) -> int | None:
    lines = text.splitlines()
    start = 0
    if table:
        pat = re.compile(r"^\s*\[\s*" + re.escape(table) + r"\s*\]")
        for i, ln in enumerate(lines):
            if pat.match(ln):
                start = i + 1
                break
        else:
            # inline table such as  eta = { rule = ... }
            pat = re.compile(r"^\s*" + re.escape(table) + r"\s*=")
            for i, ln in enumerate(lines):
                if pat.match(ln):
                    return i + 1
            return None
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for i in range(start, len(lines)):
        if table and i > start and re.match(r"^\s*\[", lines[i]):
            break
        if pat.match(lines[i]):
            return i + 1
    return None


class _Reader:
    def __init__(self, text: str, data: dict):
        self.text = text
        self.data = data

    def err(self, table: str | None, key: str, msg: str):
        name = f"{table}.{key}" if table else key
        return ConfigError(name, msg, _line_of(self.text, table, key))

    def table(self, name: str) -> dict:
        t = self.data.get(name, {})
        if not isinstance(t, dict):
            raise self.err(None, name, "must be a table")
        return t

    def get(self, table: str | None, key: str, kind, default=..., check=None, msg: str = ""):
        src = self.data if table is None else self.table(table)
        if key not in src:
            if default is ...:
                raise self.err(table, key, "missing required field")
            return default
        val = src[key]
        try:
            if kind is float and isinstance(val, bool):
                raise TypeError
            val = kind(val)
        except (TypeError, ValueError):
            raise self.err(table, key, f"expected {getattr(kind, '__name__', kind)}, got {val!r}") from None
        if check is not None and not check(val):
            raise self.err(table, key, msg or f"invalid value {val!r}")
        return val


def _float_list(v):
    if not isinstance(v, list):
        raise TypeError
    return [float(x) for x in v]


def _rule(r: _Reader, table: str, kind: str):
    t = r.table(table)
    if not t:
        return None
    rule = r.get(table, "rule", str, check=lambda s: s in ("fixed", "power"),
                 msg="rule must be 'fixed' or 'power'")
    if rule == "fixed":
        ok = (lambda v: 0 < v <= 1) if kind == "eta" else (lambda v: v >= 1)
        val = r.get(table, "value", float, check=ok,
                    msg="eta must lie in (0, 1]" if kind == "eta" else "mu must be >= 1")
        return rates.Fixed(val)
    key = "gamma" if kind == "eta" else "beta"
    ex = r.get(table, key, float, check=lambda v: v >= 0 and math.isfinite(v), msg=f"{key} must be >= 0")
    return rates.eta_power(ex) if kind == "eta" else rates.mu_power(ex)


def _shape(r: _Reader, t: dict):
    s = t.get("shape", {"kind": "disk", "radius": 1.0})
    if not isinstance(s, dict) or s.get("kind") not in ("disk", "polygon"):
        raise r.err("layout", "shape", "shape must be {kind='disk'|'polygon', ...}")
    if s["kind"] == "disk":
        rad = s.get("radius", 1.0)
        if not isinstance(rad, (int, float)) or rad <= 0:
            raise r.err("layout", "shape", "disk radius must be positive")
        return Disk(float(rad))
    verts = s.get("vertices")
    try:
        arr = np.asarray(verts, dtype=float)
        if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 3:
            raise ValueError
    except (TypeError, ValueError):
        raise r.err("layout", "shape", "polygon needs a list of at least three [x, y] vertices") from None
    return Polygon(tuple(map(tuple, arr.tolist())), bool(s.get("star_shaped", True)))


def _outer(r: _Reader, t: dict) -> OuterDomain:
    o = t.get("outer", {"kind": "box", "box": [0.0, 0.0, 1.0, 1.0]})
    if not isinstance(o, dict):
        raise r.err("layout", "outer", "must be an inline table")
    try:
        if o.get("kind", "box") == "box":
            return OuterDomain(kind="box", box=tuple(_float_list(o.get("box", [0, 0, 1, 1]))))
        if o.get("kind") == "disk":
            return OuterDomain(kind="disk", center=tuple(_float_list(o.get("center", [0, 0]))),
                               radius=float(o.get("radius", 1.0)))
    except (TypeError, ValueError) as e:
        raise r.err("layout", "outer", f"invalid outer domain: {e}") from None
    raise r.err("layout", "outer", "kind must be 'box' or 'disk'")


def _source(r: _Reader):
    t = r.table("source")
    kind = r.get("source", "kind", str, "constant", check=lambda s: s in ("constant", "bump", "zero"),
                 msg="kind must be constant, bump or zero")
    if kind == "zero":
        return (lambda x: np.zeros(len(x))), True
    if kind == "constant":
        val = r.get("source", "value", float, 1.0)
        return (lambda x: np.full(len(x), val)), val == 0
    center = t.get("center", [0.5, 0.5])
    try:
        center = tuple(_float_list(center))
    except TypeError:
        raise r.err("source", "center", "expected [x, y]") from None
    radius = r.get("source", "radius", float, 0.4, check=lambda v: v > 0, msg="radius must be positive")
    return rates.SmoothBump(center=center, radius=radius), False


def _coeffs(r: _Reader):
    t = r.table("coefficients")
    if not t:
        return None
    try:
        A = np.asarray(t.get("A", [[1.0, 0.0], [0.0, 1.0]]), dtype=float)
        b = t.get("b")
        b = None if b is None else np.asarray(b, dtype=float)
    except (TypeError, ValueError):
        raise r.err("coefficients", "A", "A must be a 2x2 numeric matrix, b a 2-vector") from None
    if A.shape != (2, 2) or not np.allclose(A, A.T):
        raise r.err("coefficients", "A", "A must be a symmetric 2x2 matrix")
    if np.linalg.eigvalsh(A).min() <= 0:
        raise r.err("coefficients", "A", "A must be positive definite")
    if b is not None and b.shape != (2,):
        raise r.err("coefficients", "b", "b must have two entries")
    c = r.get("coefficients", "c", float, 0.0)
    return fem.CoefficientField.constant(A, b, c)


def parse(text: str, path: Path | None = None, seed: int | None = None) -> ScenarioFile:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        m = re.search(r"line (\d+)", str(e))
        raise ConfigError("<toml>", str(e), int(m.group(1)) if m else None) from None
    r = _Reader(text, data)
    name = r.get(None, "name", str, path.stem if path else "scenario")
    theorem = r.get(None, "theorem", str, "T2", check=lambda s: s in ("T1", "T2"), msg="theorem must be T1 or T2")
    eps = r.get(None, "eps", _float_list, check=lambda v: len(v) > 0 and all(x > 0 for x in v),
                msg="eps must be a non-empty list of positive numbers")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise r.err(None, "eps", "eps list must be strictly decreasing")
    file_seed = r.get(None, "seed", int, 0)
    seed = file_seed if seed is None else seed

    lt = r.table("layout")
    gen = r.get("layout", "generator", str, "periodic", check=lambda s: s in ("periodic", "explicit", "jittered"),
                msg="generator must be periodic, explicit or jittered")
    bc = r.get("layout", "bc", str, "dirichlet",
               check=lambda s: s in ("dirichlet", "robin", "robin_indefinite", "split"),
               msg="bc must be dirichlet, robin, robin_indefinite or split")
    radii = tuple(r.get("layout", "radii", _float_list, list(DEFAULT_RADII),
                        check=lambda v: len(v) == 4 and all(a < b for a, b in zip(v, v[1:])) and v[0] > 0,
                        msg="radii must be four increasing positive numbers"))
    centers = r.get("layout", "centers", lambda v: [tuple(_float_list(p)) for p in v], [])
    if gen == "explicit" and not centers:
        raise r.err("layout", "centers", "explicit generator needs centers")
    jitter = r.get("layout", "jitter", float, 0.0, check=lambda v: 0 <= v < 1, msg="jitter must lie in [0, 1)")
    eta_rule = _rule(r, "eta", "eta")
    if eta_rule is None:
        raise ConfigError("eta", "missing [eta] table", None)
    mu_rule = _rule(r, "mu", "mu")
    if theorem == "T1" and mu_rule is None:
        raise ConfigError("mu", "T1 scenarios need a [mu] rule", _line_of(text, None, "theorem"))
    layout = LayoutConfig(epsilon=eps[0], eta=eta_rule(eps[0]), generator=gen, outer=_outer(r, lt),
                          shape=_shape(r, lt), bc_rule=bc, radii=radii, centers=tuple(centers),
                          jitter=jitter, seed=seed)
    family = r.get("robin", "family", str, "linear", check=lambda s: s in ("linear", "tanh"),
                   msg="family must be linear or tanh")
    f, zero = _source(r)
    tol = dict(rates.DEFAULT_TOL)
    for k in ("L2", "W12"):
        tol[k] = r.get("tolerances", k, float, tol[k], check=lambda v: v > 0, msg="tolerance must be positive")
    scn = rates.Scenario(
        layout=layout, eps_list=eps, eta_rule=eta_rule, mu_rule=mu_rule, theorem=theorem,
        coeffs=_coeffs(r), robin_family=family, f=f, f_is_zero=zero,
        lam=r.get("solver", "lam", float, 0.0),
        h_factor=r.get("solver", "h_factor", float, 0.2, check=lambda v: 0 < v <= 1, msg="h_factor must lie in (0, 1]"),
        max_triangles=r.get("solver", "max_triangles", int, 300_000, check=lambda v: v > 0),
        self_convergence=r.get("solver", "self_convergence", bool, True),
        name=name, tol=tol,
    )
    sharp = dict(r.table("sharpness"))
    if sharp:
        sharp["kind"] = r.get("sharpness", "kind", str, "dirichlet", check=lambda s: s in ("dirichlet", "robin"),
                              msg="kind must be dirichlet or robin")
        sharp["eps"] = r.get("sharpness", "eps", _float_list, eps)
        sharp["eta"] = r.get("sharpness", "eta", float, 0.5, check=lambda v: 0 < v <= 1)
        sharp["beta"] = r.get("sharpness", "beta", float, 0.5, check=lambda v: 0 <= v < 1,
                              msg="beta must lie in [0, 1) so that eps*mu -> 0")
    cell_t = dict(r.table("cell"))
    if cell_t:
        cell_t["eta"] = r.get("cell", "eta", float, 1.0, check=lambda v: 0 < v < 2, msg="eta must lie in (0, 2)")
        cell_t["epsmu"] = r.get("cell", "epsmu", _float_list, [0.1, 0.05],
                                check=lambda v: all(x > 0 for x in v), msg="epsmu values must be positive")
        cell_t["h_max"] = r.get("cell", "h_max", float, 0.2, check=lambda v: v > 0)
    return ScenarioFile(path, text, data, scn, seed, sharp, cell_t)


def load(path: str | Path, seed: int | None = None) -> ScenarioFile:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise ConfigError("--scenario", f"cannot read {p}: {e.strerror}") from None
    return parse(text, p, seed)
