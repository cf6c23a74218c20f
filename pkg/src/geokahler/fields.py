"""Charts and jet-evaluable fields over them."""

from __future__ import annotations

from collections import OrderedDict
from typing import Callable, Sequence

import numpy as np

from . import jets
from .expr import Expr, parse_expr
from .jets import MAX_ORDER, Jet


class DomainError(ValueError):
    pass


class Chart:
    """A named coordinate chart with a validity predicate."""

    def __init__(self, name: str, coords: Sequence[str], domain: Callable | None = None):
        self.name = name
        self.coords = tuple(coords)
        self.dim = len(self.coords)
        if self.dim not in (2, 3, 4):
            raise ValueError("charts of dimension 2, 3 or 4 are supported")
        self._domain = domain

    def contains(self, p) -> bool:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,) or not np.all(np.isfinite(p)):
            return False
        return True if self._domain is None else bool(self._domain(p))

    def check(self, p):
        if not self.contains(p):
            raise DomainError(f"point {tuple(np.round(p, 6))} is outside the domain of chart '{self.name}'")

    def __repr__(self):
        return f"Chart({self.name!r}, {self.coords})"


_CACHE_SIZE = 512


class Field:
    """A tensor-valued quantity evaluable as a jet at any chart point.

    ``fn(p, order)`` returns a :class:`Jet` of the given order whose shape is
    ``shape``.  Results are cached per point; a cached higher-order jet serves
    lower-order requests by truncation.
    """

    kind = "tensor"

    def __init__(self, chart: Chart, shape: tuple, fn: Callable[[tuple, int], Jet], name: str = ""):
        self.chart = chart
        self.shape = tuple(shape)
        self._fn = fn
        self.name = name
        self._cache: OrderedDict = OrderedDict()

    def jet(self, p, order: int) -> Jet:
        key = tuple(float(x) for x in p)
        hit = self._cache.get(key)
        if hit is not None and hit.order >= order:
            self._cache.move_to_end(key)
            return hit.truncate(order)
        out = self._fn(key, order)
        if not isinstance(out, Jet):
            out = jets.algebra(self.chart.dim, order).constant(out)
        self._cache[key] = out
        if len(self._cache) > _CACHE_SIZE:
            self._cache.popitem(last=False)
        return out

    def __call__(self, p) -> np.ndarray:
        return self.jet(p, 0).value

    def __repr__(self):
        return f"{type(self).__name__}({self.name or '?'}, chart={self.chart.name})"


class ScalarField(Field):
    kind = "scalar"

    def __init__(self, chart, fn, name=""):
        super().__init__(chart, (), fn, name)

    @classmethod
    def from_expr(cls, chart: Chart, text: str, params=None, name=""):
        e = parse_expr(text, params, chart.coords)
        return cls(chart, _expr_fn(chart, [e], ()), name or text)


class VectorField(Field):
    kind = "vector"

    def __init__(self, chart, fn, name=""):
        super().__init__(chart, (chart.dim,), fn, name)

    @classmethod
    def from_expr(cls, chart: Chart, texts: Sequence[str], params=None, name=""):
        if len(texts) != chart.dim:
            raise ValueError(f"vector field needs {chart.dim} components, got {len(texts)}")
        es = [parse_expr(str(t), params, chart.coords) for t in texts]
        return cls(chart, _expr_fn(chart, es, (chart.dim,)), name)


class CovectorField(Field):
    kind = "covector"

    def __init__(self, chart, fn, name=""):
        super().__init__(chart, (chart.dim,), fn, name)

    @classmethod
    def from_expr(cls, chart: Chart, texts: Sequence[str], params=None, name=""):
        if len(texts) != chart.dim:
            raise ValueError(f"covector field needs {chart.dim} components, got {len(texts)}")
        es = [parse_expr(str(t), params, chart.coords) for t in texts]
        return cls(chart, _expr_fn(chart, es, (chart.dim,)), name)


class MetricField(Field):
    """Symmetric nondegenerate 2-tensor with a declared signature."""

    kind = "metric"

    def __init__(self, chart, fn, signature: str = "lorentzian", name=""):
        if signature not in ("riemannian", "lorentzian"):
            raise ValueError("signature must be 'riemannian' or 'lorentzian'")
        super().__init__(chart, (chart.dim, chart.dim), fn, name)
        self.signature = signature

    @classmethod
    def from_expr(cls, chart: Chart, components, signature="lorentzian", params=None, name=""):
        """``components`` maps index pairs ``(i, j)`` (or coordinate-name pairs) to expressions.

        Only one of ``(i, j)`` / ``(j, i)`` needs to be given; missing entries are zero.
        """
        n = chart.dim
        table = {}
        for key, text in components.items():
            i, j = (chart.coords.index(k) if isinstance(k, str) else int(k) for k in key)
            if (j, i) in table and (j, i) != (i, j):
                raise ValueError(f"metric component ({i},{j}) given twice")
            table[(min(i, j), max(i, j))] = parse_expr(str(text), params, chart.coords)
        pairs = sorted(table)
        exprs = [table[k] for k in pairs]

        def fn(p, order):
            x = jets.algebra(n, order).variables(p)
            env = _env(chart, x)
            c = np.zeros((n, n, x.alg.size))
            for (i, j), e in zip(pairs, exprs):
                v = e(env)
                cv = v.c if isinstance(v, Jet) else x.alg.constant(v).c
                c[i, j] = cv
                c[j, i] = cv
            return Jet(x.alg, c)

        return cls(chart, fn, signature, name)

    def check_signature(self, p, tol=1e-12):
        G = self(p)
        ev = np.linalg.eigvalsh(0.5 * (G + G.T))
        scale = max(1.0, float(np.max(np.abs(ev))))
        if np.min(np.abs(ev)) < tol * scale:
            raise DomainError(f"metric singular at {tuple(p)}")
        neg = int(np.sum(ev < 0))
        want = 0 if self.signature == "riemannian" else 1
        if neg != want:
            raise DomainError(f"metric has {neg} negative eigenvalues at {tuple(p)}, expected {want}")
        return ev


def _env(chart: Chart, x: Jet) -> dict:
    return {name: x[i] for i, name in enumerate(chart.coords)}


def _expr_fn(chart: Chart, exprs: list[Expr], shape):
    n = chart.dim

    def fn(p, order):
        x = jets.algebra(n, order).variables(p)
        env = _env(chart, x)
        vals = []
        for e in exprs:
            v = e(env)
            vals.append(v.c if isinstance(v, Jet) else x.alg.constant(v).c)
        c = np.stack(vals).reshape(shape + (x.alg.size,))
        return Jet(x.alg, c)

    return fn


def eval_jet(field: Field, p, order: int) -> Jet:
    """Checked jet evaluation: ``p`` must lie in the chart domain and ``order`` ≤ 3."""
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be between 0 and {MAX_ORDER}, got {order}")
    field.chart.check(p)
    return field.jet(p, order)


def constant_field(chart: Chart, value, kind=ScalarField):
    value = np.asarray(value, dtype=float)
    return kind(chart, lambda p, order: jets.algebra(chart.dim, order).constant(value))


def coordinate_field(chart: Chart, i: int) -> VectorField:
    e = np.eye(chart.dim)[i]
    return VectorField(chart, lambda p, order: jets.algebra(chart.dim, order).constant(e), f"d_{chart.coords[i]}")


def coordinate_function(chart: Chart, i: int) -> ScalarField:
    return ScalarField(chart, lambda p, order: jets.algebra(chart.dim, order).variables(p)[i], chart.coords[i])
