"""INI-style configuration files for the command line.

Sections::

    [settings]            dimension, norm, grid, tolerance, seed, domain, compactified
    [measure NAME]        density, support, breakpoints, atoms, null, norm
    [integrand NAME]      expr, exempt, at_infinity
    [setmeasure NAME]     shape, center, radius, radii, generators, weights, base, support, norm
    [experiment NAME]     theorem, measure, setmeasure, sequence, limit, dominating,
                          bound, n, tolerance, integration_tol, seed, ui

With ``compactified = true`` the point +inf belongs to the domain and an
integrand's ``at_infinity`` value is used there.

Lists of expressions (vector components, centers, radii, weights) are
separated by ``;``. Atoms are written ``x: w1, w2; x2: ...`` with one weight
per component. Unknown sections or keys are rejected with their line number.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .domain import MeasurableSet
from .errors import ConfigError
from .expr import ExprError, parse
from .measures import DensityPiece, ScalarMeasure
from .setvalued import BallDensity, BoxDensity, SetValuedMeasure, ZonotopeDensity
from .vector import NORMS, DirectionGrid, VectorMeasure

KEYS = {
    "settings": {"dimension", "norm", "grid", "tolerance", "seed", "domain", "compactified"},
    "measure": {"density", "support", "breakpoints", "atoms", "null", "norm"},
    "integrand": {"expr", "exempt", "at_infinity"},
    "setmeasure": {"shape", "center", "radius", "radii", "generators", "weights", "base", "support", "norm"},
    "experiment": {"theorem", "measure", "setmeasure", "sequence", "limit", "dominating", "bound", "n",
                   "tolerance", "integration_tol", "seed", "ui"},
}
_LEBESGUE = parse("1")
THEOREMS = ("dct", "bct", "vitali-sv", "dct-sv")


@dataclass
class Settings:
    dimension: int = 1
    norm: str = "euclidean"
    grid: int | None = None
    tolerance: float = 1e-9
    seed: int = 0
    domain: MeasurableSet = field(default_factory=lambda: MeasurableSet.interval(0.0, 1.0))
    compactified: bool = False

    def direction_grid(self, dim: int | None = None, norm: str | None = None,
                       hemisphere: bool = False) -> DirectionGrid:
        return DirectionGrid.default(dim or self.dimension, norm or self.norm, self.grid, hemisphere)


@dataclass
class Integrand:
    text: str
    fn: object
    exempt: tuple[float, ...] = ()
    at_infinity: float | None = None


@dataclass
class Experiment:
    name: str
    theorem: str
    values: dict


@dataclass
class Config:
    settings: Settings = field(default_factory=Settings)
    measures: dict = field(default_factory=dict)
    integrands: dict = field(default_factory=dict)
    setmeasures: dict = field(default_factory=dict)
    experiments: dict = field(default_factory=dict)


class _Locator:
    """Line and column of every key, found by a scan of the raw text."""

    def __init__(self, text: str):
        self.sections: dict[str, int] = {}
        self.keys: dict[tuple[str, str], tuple[int, int, int]] = {}
        current = None
        for i, line in enumerate(text.splitlines(), start=1):
            s = line.strip()
            if not s or s[0] in "#;":
                continue
            m = re.match(r"\s*\[([^\]]+)\]", line)
            if m:
                current = m.group(1).strip()
                self.sections.setdefault(current, i)
                continue
            m = re.match(r"\s*([^=:\s][^=:]*?)\s*[=:]\s*", line)
            if m and current is not None:
                self.keys.setdefault((current, m.group(1).strip().lower()), (i, m.end() + 1, m.start(1) + 1))

    def where(self, section: str, key: str | None = None, at_key: bool = False) -> tuple[int | None, int | None]:
        if key is not None and (section, key) in self.keys:
            line, value_col, key_col = self.keys[(section, key)]
            return line, key_col if at_key else value_col
        return self.sections.get(section), 1


def load_config(source) -> Config:
    """Parse a config from a path or from text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and "[" not in source):
        try:
            text = Path(source).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
    else:
        text = str(source)
    return parse_config(text)


def parse_config(text: str) -> Config:
    cp = configparser.ConfigParser(interpolation=None, strict=True, default_section="__defaults__")
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno, 1) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno, 1) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any section", exc.lineno, 1) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError(f"malformed line: {exc.errors[0][1].strip() if exc.errors else ''}", line, 1) from None
    loc = _Locator(text)
    cfg = Config()
    order = sorted(cp.sections(), key=lambda s: (_kind(s, loc) != "settings", loc.where(s)[0] or 0))
    for sec in order:
        kind = _kind(sec, loc)
        name = sec.split(None, 1)[1].strip() if " " in sec.strip() else ""
        if kind != "settings" and not name:
            raise ConfigError(f"section [{sec}] needs a name", *loc.where(sec))
        for key in cp[sec]:
            if key not in KEYS[kind]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]", *loc.where(sec, key, at_key=True))
        reader = _Reader(cp[sec], sec, loc)
        if kind == "settings":
            cfg.settings = _settings(reader)
        elif kind == "measure":
            cfg.measures[name] = _measure(reader, cfg.settings)
        elif kind == "integrand":
            cfg.integrands[name] = _integrand(reader)
        elif kind == "setmeasure":
            cfg.setmeasures[name] = _setmeasure(reader, cfg)
        else:
            cfg.experiments[name] = _experiment(reader, name, cfg)
    return cfg


def _kind(section: str, loc: _Locator) -> str:
    head = section.split(None, 1)[0].strip().lower()
    if head not in KEYS:
        raise ConfigError(f"unknown section [{section}]", *loc.where(section))
    return head


class _Reader:
    def __init__(self, proxy, section: str, loc: _Locator):
        self.proxy = proxy
        self.section = section
        self.loc = loc

    def error(self, key: str, msg: str, offset: int = 0):
        line, col = self.loc.where(self.section, key)
        raise ConfigError(msg, line, (col or 1) + offset)

    def has(self, key: str) -> bool:
        return key in self.proxy

    def raw(self, key: str, default=None):
        if key not in self.proxy:
            if default is None:
                self.error(key, f"missing key {key!r} in [{self.section}]")
            return default
        return self.proxy[key].strip()

    def number(self, key: str, default=None, positive: bool = False) -> float:
        s = self.raw(key, None if default is None else str(default))
        try:
            v = float(s)
        except ValueError:
            self.error(key, f"{key} must be a number, got {s!r}")
        if positive and not v > 0:
            self.error(key, f"{key} must be positive")
        return v

    def integer(self, key: str, default=None) -> int:
        s = self.raw(key, None if default is None else str(default))
        try:
            return int(s)
        except ValueError:
            self.error(key, f"{key} must be an integer, got {s!r}")

    def flag(self, key: str, default: bool) -> bool:
        if key not in self.proxy:
            return default
        s = self.raw(key).lower()
        if s in ("1", "yes", "true", "on"):
            return True
        if s in ("0", "no", "false", "off"):
            return False
        self.error(key, f"{key} must be true or false, got {s!r}")

    def set(self, key: str, default: MeasurableSet | None = None) -> MeasurableSet:
        if key not in self.proxy and default is not None:
            return default
        s = self.raw(key)
        try:
            return MeasurableSet.parse(s)
        except ValueError as exc:
            self.error(key, f"bad set {s!r}: {exc}")

    def numbers(self, key: str, sep: str = ",") -> list[float]:
        s = self.raw(key, "")
        out = []
        for piece in [p for p in s.split(sep) if p.strip()]:
            try:
                out.append(float(piece))
            except ValueError:
                self.error(key, f"bad number {piece.strip()!r}", s.find(piece.strip()))
        return out

    def expr_list(self, key: str, variables=("t",)):
        s = self.raw(key)
        out = []
        pos = 0
        for piece in s.split(";"):
            start = s.find(piece, pos)
            pos = start + len(piece)
            text = piece.strip()
            if text.lower() == "lebesgue":
                out.append(_LEBESGUE)
                continue
            try:
                out.append(parse(text, variables))
            except ExprError as exc:
                lead = len(piece) - len(piece.lstrip())
                self.error(key, f"in {key}: {exc}", start + lead + (exc.column or 1) - 1)
        return out

    def expr(self, key: str, variables=("t",)):
        items = self.expr_list(key, variables)
        if len(items) != 1:
            self.error(key, f"{key} takes a single expression")
        return items[0]


def _settings(r: _Reader) -> Settings:
    s = Settings()
    s.dimension = r.integer("dimension", 1)
    if s.dimension < 1:
        r.error("dimension", "dimension must be positive")
    s.norm = r.raw("norm", "euclidean")
    if s.norm not in NORMS:
        r.error("norm", f"norm must be one of {', '.join(NORMS)}")
    s.grid = r.integer("grid") if r.has("grid") else None
    s.tolerance = r.number("tolerance", 1e-9, positive=True)
    s.seed = r.integer("seed", 0)
    s.domain = r.set("domain", s.domain)
    s.compactified = r.flag("compactified", False)
    return s


def _scalar_from_expr(e, support: MeasurableSet, breaks, atoms) -> ScalarMeasure:
    pieces = []
    for part in support.parts:
        if not part.hi > part.lo:
            continue
        poly = e.poly
        pts = [part.lo] + sorted(b for b in set(breaks) | set(getattr(e, "breakpoints", [])) if part.lo < b < part.hi) + [part.hi]
        for a, b in zip(pts, pts[1:]):
            if poly is not None:
                pieces.append(DensityPiece(a, b, poly=poly))
            else:
                pieces.append(DensityPiece(a, b, func=e.bind()))
    return ScalarMeasure(tuple(pieces), tuple(atoms))


def _atoms(r: _Reader, dim: int) -> list[list[tuple[float, float]]]:
    out: list[list[tuple[float, float]]] = [[] for _ in range(dim)]
    s = r.raw("atoms", "")
    for item in [x for x in s.split(";") if x.strip()]:
        if ":" not in item:
            r.error("atoms", f"atom {item.strip()!r} must look like 'x: w1, w2'", s.find(item.strip()))
        loc, weights = item.split(":", 1)
        try:
            x = float(loc)
            ws = [float(w) for w in weights.split(",")]
        except ValueError:
            r.error("atoms", f"bad atom {item.strip()!r}", s.find(item.strip()))
        if len(ws) != dim:
            r.error("atoms", f"atom at {x} needs {dim} weights")
        for k in range(dim):
            out[k].append((x, ws[k]))
    return out


def _measure(r: _Reader, st: Settings) -> VectorMeasure:
    exprs = r.expr_list("density") if r.has("density") else [_LEBESGUE]
    support = r.set("support", st.domain)
    lo, hi = support.bounds if not support.is_empty else (0.0, 0.0)
    if lo == -math.inf:
        r.error("support", "supports must be bounded below")
    breaks = r.numbers("breakpoints")
    atoms = _atoms(r, len(exprs))
    comps = tuple(_scalar_from_expr(e, support, breaks, a) for e, a in zip(exprs, atoms))
    norm = r.raw("norm", st.norm)
    if norm not in NORMS:
        r.error("norm", f"norm must be one of {', '.join(NORMS)}")
    null = (r.set("null"),) if r.has("null") else ()
    try:
        return VectorMeasure(comps, norm, null)
    except ValueError as exc:
        r.error("null" if r.has("null") else "density", str(exc))


def _integrand(r: _Reader) -> Integrand:
    e = r.expr("expr")
    f = e.bind()
    exempt = tuple(r.numbers("exempt"))
    at_inf = r.number("at_infinity") if r.has("at_infinity") else None
    if at_inf is not None:
        f.at_infinity = at_inf
    return Integrand(e.text, f, exempt, at_inf)


def _profiles(r: _Reader, key: str):
    return [e.bind() if e.poly is None or e.poly.degree() > 0 else float(e.poly.coef[0])
            for e in r.expr_list(key)]


def _setmeasure(r: _Reader, cfg: Config) -> SetValuedMeasure:
    shape = r.raw("shape").lower()
    norm = r.raw("norm", cfg.settings.norm)
    center = _profiles(r, "center")
    if shape == "ball":
        dens = BallDensity(center, _profiles(r, "radius")[0], norm)
    elif shape == "box":
        radii = _profiles(r, "radii")
        if len(radii) != len(center):
            r.error("radii", "one radius per coordinate required")
        dens = BoxDensity(center, radii, norm)
    elif shape == "zonotope":
        rows = [x for x in r.raw("generators").split(";") if x.strip()]
        try:
            gens = np.array([[float(v) for v in row.split(",")] for row in rows])
        except ValueError:
            r.error("generators", "generators are rows of numbers separated by ';'")
        if gens.ndim != 2 or gens.shape[1] != len(center):
            r.error("generators", "each generator needs one entry per coordinate")
        weights = _profiles(r, "weights")
        if len(weights) != gens.shape[0]:
            r.error("weights", "one weight per generator required")
        dens = ZonotopeDensity(center, gens, weights, norm)
    else:
        r.error("shape", "shape must be ball, box or zonotope")
    base_name = r.raw("base", "lebesgue")
    if base_name.lower() == "lebesgue":
        support = r.set("support", cfg.settings.domain)
        base = _scalar_from_expr(_LEBESGUE, support, [], [])
    else:
        if base_name not in cfg.measures:
            r.error("base", f"unknown measure {base_name!r}")
        vm = cfg.measures[base_name]
        if vm.dim != 1:
            r.error("base", "the base must be a one-component measure")
        base = vm.components[0]
    try:
        return SetValuedMeasure(dens, base)
    except ValueError as exc:
        r.error("shape", str(exc))


def _experiment(r: _Reader, name: str, cfg: Config) -> Experiment:
    theorem = r.raw("theorem").lower()
    if theorem not in THEOREMS:
        r.error("theorem", f"theorem must be one of {', '.join(THEOREMS)}")
    vals: dict = {}
    if r.has("measure"):
        m = r.raw("measure")
        if m not in cfg.measures:
            r.error("measure", f"unknown measure {m!r}")
        vals["measure"] = cfg.measures[m]
    if r.has("setmeasure"):
        m = r.raw("setmeasure")
        if m not in cfg.setmeasures:
            r.error("setmeasure", f"unknown set-valued measure {m!r}")
        vals["setmeasure"] = cfg.setmeasures[m]
    if r.has("sequence"):
        vals["sequence"] = r.expr("sequence", ("t", "n"))
    for key in ("limit", "dominating"):
        if r.has(key):
            vals[key] = r.expr(key).bind()
    if r.has("bound"):
        vals["bound"] = r.number("bound", positive=True)
    if r.has("n"):
        ns = [int(x) for x in r.numbers("n")]
        if not ns or any(n < 1 for n in ns):
            r.error("n", "n must list positive integers")
        vals["n"] = ns
    if r.has("tolerance"):
        vals["tolerance"] = r.number("tolerance", positive=True)
    if r.has("integration_tol"):
        vals["integration_tol"] = r.number("integration_tol", positive=True)
    vals["seed"] = r.integer("seed", cfg.settings.seed)
    if r.has("ui"):
        pairs = []
        for item in [x for x in r.raw("ui").split(",") if x.strip()]:
            try:
                eps, delta = (float(v) for v in item.split(":"))
            except ValueError:
                r.error("ui", "ui entries look like 'eps:delta'")
            pairs.append((eps, delta))
        vals["ui"] = pairs
    custom = "sequence" in vals
    if custom and "limit" not in vals:
        r.error("sequence", "a custom sequence needs a limit")
    if custom and theorem in ("dct", "bct") and "measure" not in vals:
        r.error("theorem", "vector experiments need a measure")
    if custom and theorem in ("vitali-sv", "dct-sv") and "setmeasure" not in vals:
        r.error("theorem", "set-valued experiments need a setmeasure")
    return Experiment(name, theorem, vals)


__all__ = ["Config", "Experiment", "Integrand", "Settings", "THEOREMS", "load_config", "parse_config"]
