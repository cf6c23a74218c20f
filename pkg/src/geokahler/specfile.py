"""Sectioned key = value spacetime descriptions for the ``custom`` command.

Example::

    [chart]
    name = minkowski
    coords = t, x, y, z
    signature = lorentzian

    [params]
    a = 1

    [metric]
    t t = -1
    x x = 1
    y y = 1
    z z = 1

    [fields]
    kind = standard
    k = 1, 1, 0, 0
    t = -1, 0, 0, 0
    tau = t
    f = exp
    orientation = 1

    [box]
    t = -1:1
    x = -1:1
    y = -1:1
    z = -1:1

The full grammar is in docs/grammar.md.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .catalog import SpacetimeSpec
from .expr import ExprError, parse_expr
from .fields import Chart, MetricField, ScalarField, VectorField
from .kahler import ParamFn

SECTIONS = ("chart", "params", "metric", "fields", "box")
REQUIRED = ("chart", "metric", "fields", "box")
_HEADER = re.compile(r"^\[([A-Za-z_]+)\]$")
_IDENT = re.compile(r"^[A-Za-z_][A-Za-z_0-9]*$")


class SpecFileError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class _Entry:
    key: str
    value: str
    line: int


@dataclass
class RawSpec:
    sections: dict = field(default_factory=dict)  # name -> list[_Entry]
    header_lines: dict = field(default_factory=dict)


def tokenize(text: str) -> RawSpec:
    raw = RawSpec()
    current = None
    for lineno, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if s.startswith("["):
            m = _HEADER.match(s)
            if not m:
                raise SpecFileError(lineno, f"malformed section header '{s}'")
            name = m.group(1)
            if name not in SECTIONS:
                raise SpecFileError(lineno, f"unknown section [{name}] (expected one of {', '.join(SECTIONS)})")
            if name in raw.sections:
                raise SpecFileError(lineno, f"section [{name}] repeated")
            raw.sections[name] = []
            raw.header_lines[name] = lineno
            current = name
            continue
        if current is None:
            raise SpecFileError(lineno, "entry before any section header")
        if "=" not in s:
            raise SpecFileError(lineno, "expected 'key = value'")
        key, _, value = s.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise SpecFileError(lineno, "empty key or value")
        raw.sections[current].append(_Entry(key, value, lineno))
    for name in REQUIRED:
        if name not in raw.sections:
            raise SpecFileError(len(text.splitlines()) + 1, f"missing section [{name}]")
    return raw


def _number(e: _Entry) -> float:
    try:
        return float(e.value)
    except ValueError:
        raise SpecFileError(e.line, f"'{e.key}' must be a decimal number, got '{e.value}'") from None


def _check_expr(e: _Entry, text: str, params, variables):
    try:
        parse_expr(text, params, variables)
    except ExprError as exc:
        raise SpecFileError(e.line, f"in '{e.key}': {exc}") from None


def _unique(entries, section):
    seen = {}
    for e in entries:
        if e.key in seen:
            raise SpecFileError(e.line, f"key '{e.key}' repeated in [{section}]")
        seen[e.key] = e
    return seen


def build_spec(text: str, source: str = "<spec>") -> SpacetimeSpec:
    """Parse ``text`` into a SpacetimeSpec; errors carry line numbers."""
    raw = tokenize(text)
    chart_kv = _unique(raw.sections["chart"], "chart")
    if "coords" not in chart_kv:
        raise SpecFileError(raw.header_lines["chart"], "[chart] needs 'coords'")
    coords = tuple(c.strip() for c in chart_kv["coords"].value.split(","))
    if len(coords) != 4 or not all(_IDENT.match(c) for c in coords) or len(set(coords)) != 4:
        raise SpecFileError(chart_kv["coords"].line, "coords must be four distinct identifiers")
    for key, e in chart_kv.items():
        if key not in ("name", "coords", "signature"):
            raise SpecFileError(e.line, f"unknown [chart] key '{key}'")
    name = chart_kv["name"].value if "name" in chart_kv else "custom"
    signature = chart_kv["signature"].value if "signature" in chart_kv else "lorentzian"
    if signature not in ("lorentzian", "riemannian"):
        raise SpecFileError(chart_kv["signature"].line, f"unknown signature '{signature}'")

    params = {}
    for e in raw.sections.get("params", []):
        if not _IDENT.match(e.key) or e.key in coords:
            raise SpecFileError(e.line, f"invalid parameter name '{e.key}'")
        if e.key in params:
            raise SpecFileError(e.line, f"parameter '{e.key}' repeated")
        params[e.key] = _number(e)

    chart = Chart(name, coords)
    comps = {}
    for e in raw.sections["metric"]:
        parts = e.key.replace(",", " ").split()
        if len(parts) != 2 or any(p not in coords for p in parts):
            raise SpecFileError(e.line, f"metric key must name two coordinates, got '{e.key}'")
        key = tuple(parts)
        if key in comps or key[::-1] in comps:
            raise SpecFileError(e.line, f"metric component '{e.key}' given twice")
        _check_expr(e, e.value, params, coords)
        comps[key] = e.value
    g = MetricField.from_expr(chart, comps, signature, params, name)

    fk = _unique(raw.sections["fields"], "fields")
    kind = fk["kind"].value if "kind" in fk else "standard"
    if kind not in ("standard", "petrov"):
        raise SpecFileError(fk["kind"].line, f"kind must be standard or petrov, got '{kind}'")
    needed = ("k", "t", "tau") if kind == "standard" else ("kp", "km", "u")
    for key in needed:
        if key not in fk:
            raise SpecFileError(raw.header_lines["fields"], f"[fields] needs '{key}' for kind {kind}")
    allowed = set(needed) | {"kind", "ell", "f", "orientation"}
    for key, e in fk.items():
        if key not in allowed:
            raise SpecFileError(e.line, f"unknown [fields] key '{key}' for kind {kind}")

    def vec(key):
        e = fk[key]
        texts = [s.strip() for s in e.value.split(",")]
        if len(texts) != 4:
            raise SpecFileError(e.line, f"'{key}' needs 4 components, got {len(texts)}")
        for t in texts:
            _check_expr(e, t, params, coords)
        return VectorField.from_expr(chart, texts, params, key)

    def scal(key):
        e = fk[key]
        _check_expr(e, e.value, params, coords)
        return ScalarField.from_expr(chart, e.value, params, key)

    f = ParamFn.exponential()
    if "f" in fk:
        try:
            f = ParamFn.parse(fk["f"].value, params)
        except (ValueError, ExprError) as exc:
            raise SpecFileError(fk["f"].line, str(exc)) from None
    orientation = 1
    if "orientation" in fk:
        if fk["orientation"].value not in ("1", "-1", "+1"):
            raise SpecFileError(fk["orientation"].line, "orientation must be 1 or -1")
        orientation = int(fk["orientation"].value)

    box = {}
    for e in raw.sections["box"]:
        if e.key not in coords:
            raise SpecFileError(e.line, f"box names unknown coordinate '{e.key}'")
        lo, sep, hi = e.value.partition(":")
        if not sep:
            raise SpecFileError(e.line, "box interval must be lo:hi")
        try:
            lo_v, hi_v = float(lo), float(hi)
        except ValueError:
            raise SpecFileError(e.line, f"box bounds must be decimal numbers, got '{e.value}'") from None
        if not lo_v < hi_v:
            raise SpecFileError(e.line, f"empty interval {e.value}")
        box[e.key] = (lo_v, hi_v)
    missing = [c for c in coords if c not in box]
    if missing:
        raise SpecFileError(raw.header_lines["box"], f"box missing coordinate(s) {', '.join(missing)}")

    if kind == "standard":
        k, t, tau = vec("k"), vec("t"), scal("tau")
        ell = scal("ell") if "ell" in fk else None
        u = None
    else:
        k, t, u = vec("kp"), vec("km"), scal("u")
        tau, ell = None, None
    return SpacetimeSpec(
        id=f"custom:{name}", description=f"custom spec from {source}", chart=chart, g=g, k=k, t=t, tau=tau, f=f,
        kind=kind, orientation=orientation, box=box, params=params, ell=ell, u=u,
    )


def load_spec(path: str) -> SpacetimeSpec:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return build_spec(text, path)
