"""Command-line runner: verification suites, region scans and curvature reports with deterministic output."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from . import calculus as calc
from . import catalog
from . import curvature_kahler as ck
from .catalog import CatalogError, SpacetimeSpec
from .expr import ExprError
from .fields import DomainError, ScalarField
from .jstruct import check_admissible, nijenhuis_max
from .kahler import (KahlerCandidate, ParamFn, RegionError, check_sample, shear_transfer, transfer_geodesic,
                     transfer_killing, variation_biconformal, variation_vertical)
from .sampling import EmptyBoxError, halton_points
from .specfile import SpecFileError, load_spec

SCHEMA = 1
EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
DEFAULT_TOL = 1e-7
DEFAULT_FD_TOL = 1e-4
# fixed thresholds of the Kähler verification
KAHLER_TOL = {"d_omega": 1e-8, "symmetry": 1e-9, "j_compat": 1e-9, "nijenhuis": 1e-7, "nabla_J": 1e-5}
CURVATURE_TOL = 1e-4
RICCI_J_TOL = 1e-6
FD_SAMPLES = 5
VERTICAL_EPS = (0.1, -0.1)  # first one that keeps the signature


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# records


@dataclass
class Check:
    name: str
    max_residual: Optional[float]
    tolerance: Optional[float]
    passed: Optional[bool]
    skipped: bool = False
    expected_negative: bool = False
    note: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "max_residual": self.max_residual, "tolerance": self.tolerance,
                "pass": self.passed, "skipped": self.skipped, "expected_negative": self.expected_negative,
                "note": self.note}


def _finite_max(vals) -> float:
    vals = [float(v) for v in vals]
    if not vals:
        return float("nan")
    if any(not math.isfinite(v) for v in vals):
        return float("inf")
    return max(vals)


def residual_check(name: str, vals, tol: float, note: str = "") -> Check:
    m = _finite_max(vals)
    return Check(name, m, tol, bool(m <= tol), note=note)


def negative_check(name: str, vals, tol: float, note: str = "") -> Check:
    """Passes when the underlying check fails at every sample."""
    vals = [float(v) for v in vals]
    m = min(vals) if vals else float("nan")
    return Check(name, m, tol, bool(vals) and all(not (v <= tol) for v in vals), expected_negative=True, note=note)


def skipped(name: str, note: str) -> Check:
    return Check(name, None, None, None, skipped=True, note=note)


def info(name: str, value: float, note: str = "") -> Check:
    return Check(name, float(value), None, None, note=note)


def verdict(checks) -> str:
    graded = [c for c in checks if not c.skipped and c.passed is not None]
    return "pass" if all(c.passed for c in graded) else "fail"


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    command: str
    entry: Optional[str]
    spec_file: Optional[str]
    params: dict
    box: dict
    samples: int
    tol: float
    fd_tol: float
    f: Optional[str]
    orientation: Optional[int]
    fmt: str
    out: Optional[str]
    checks: tuple
    case: str
    wall_time: bool

    def echo(self) -> dict:
        return {"command": self.command, "entry": self.entry, "spec_file": self.spec_file,
                "params": dict(sorted(self.params.items())),
                "box": {k: list(v) for k, v in sorted(self.box.items())}, "samples": self.samples,
                "tol": self.tol, "fd_tol": self.fd_tol, "f": self.f, "orientation": self.orientation,
                "checks": list(self.checks), "case": self.case}


def _parse_kv(items, what) -> dict:
    out = {}
    for it in items or []:
        key, sep, val = it.partition("=")
        if not sep or not key.strip():
            raise UsageError(f"{what} must look like name=value, got '{it}'")
        out[key.strip()] = val.strip()
    return out


def _parse_box(items) -> dict:
    out = {}
    for name, val in _parse_kv(items, "--box").items():
        lo, sep, hi = val.partition(":")
        try:
            lo_v, hi_v = float(lo), float(hi)
        except ValueError:
            raise UsageError(f"--box {name} needs lo:hi decimal bounds, got '{val}'") from None
        if not sep:
            raise UsageError(f"--box {name} needs lo:hi")
        if not lo_v < hi_v:
            raise EmptyBoxError(f"empty interval for {name}: {val}")
        out[name] = (lo_v, hi_v)
    return out


def _default_tol() -> float:
    env = os.environ.get("GEOKAHLER_TOL")
    if env is None:
        return DEFAULT_TOL
    try:
        v = float(env)
    except ValueError:
        raise UsageError(f"GEOKAHLER_TOL must be a decimal number, got '{env}'") from None
    if not v > 0:
        raise UsageError("GEOKAHLER_TOL must be positive")
    return v


def load_entry(cfg: RunConfig) -> SpacetimeSpec:
    if cfg.spec_file:
        spec = load_spec(cfg.spec_file)
        if cfg.params:
            raise UsageError("--param applies to catalog entries only")
    else:
        if not cfg.entry:
            raise UsageError("no entry given (use --entry ID or a positional id)")
        spec = catalog.build(cfg.entry, **cfg.params)
    if cfg.box:
        unknown = [c for c in cfg.box if c not in spec.chart.coords]
        if unknown:
            raise UsageError(f"--box names unknown coordinate(s) {', '.join(unknown)} "
                             f"(chart has {', '.join(spec.chart.coords)})")
        spec.box = dict(spec.box, **cfg.box)
    if cfg.f:
        try:
            spec.f = ParamFn.parse(cfg.f, {k: v for k, v in spec.params.items() if isinstance(v, float)})
        except (ValueError, ExprError) as exc:
            raise UsageError(str(exc)) from None
    if cfg.orientation is not None:
        spec.orientation = cfg.orientation
    return spec


def sample_points(spec: SpacetimeSpec, count: int) -> np.ndarray:
    return halton_points(spec.chart, spec.box, count)


# ---------------------------------------------------------------------------
# verify


def expected_checks(spec: SpacetimeSpec, pts) -> list:
    out = []
    for ex in spec.expected:
        res, oks = [], []
        for p in pts:
            got, want, r, ok = ex.check(spec, p)
            res.append(r)
            oks.append(ok)
        note = f"{ex.formula} [{ex.provenance}]" + (f"; {ex.note}" if ex.note else "")
        if ex.negative:
            m = min(res) if res else float("nan")
            out.append(Check(f"expected.{ex.name}", m, ex.tol, all(oks), expected_negative=True, note=note))
        else:
            out.append(Check(f"expected.{ex.name}", _finite_max(res), ex.tol, all(oks), note=note))
    return out


def _fd_relative(field, p, h=1e-5) -> float:
    """max relative error between jet first derivatives and central differences."""
    p = np.asarray(p, dtype=float)
    jet = np.moveaxis(field.jet(tuple(p), 1).grad().value, -1, 0)
    worst = 0.0
    for i in range(len(p)):
        e = np.zeros(len(p))
        e[i] = h
        fd = (field(tuple(p + e)) - field(tuple(p - e))) / (2 * h)
        err = np.abs(jet[i] - fd) / np.maximum(1.0, np.abs(jet[i]))
        worst = max(worst, float(np.max(err)))
    return worst


def oracle_checks(spec: SpacetimeSpec, pts, fd_tol: float) -> list:
    fields = [spec.g, spec.k, spec.t] + [f for f in (spec.tau, spec.u, spec.ell) if f is not None]
    sub = pts[:FD_SAMPLES]
    fd = [_fd_relative(f, p) for f in fields for p in sub]
    kflat = calc.flat_field(spec.g, spec.k)
    sf = [float(np.max(np.abs(calc.sharp(spec.g, kflat, p) - spec.k(p)))) for p in sub]
    dt = calc.exterior_derivative_field(calc.flat_field(spec.g, spec.t))
    dd = [float(np.max(np.abs(calc.exterior_derivative2_jet(dt, p, 0).value))) for p in sub]
    return [residual_check("oracle.finite_difference", fd, fd_tol, "jet vs central differences, relative"),
            residual_check("oracle.sharp_flat", sf, 1e-12),
            residual_check("oracle.dd_zero", dd, 1e-10)]


def admissibility_checks(spec: SpacetimeSpec, pts, tol: float) -> list:
    negative = "admissible" in spec.expected_negative
    if spec.kind == "petrov" and not negative:
        return [skipped("admissible", "petrov construction: admissibility not required")]
    tau = spec.tau if spec.kind == "standard" else None
    fails, worst = [], []
    for p in pts:
        rep = check_admissible(spec.g, spec.k, spec.t, tau, p, spec.orientation, spec.ell, tol)
        vals = [v for k, v in rep.residuals.items() if k in rep.passes and k != "nnsing" and v is not None]
        worst.append(_finite_max(vals) if vals else 0.0)
        fails.append(rep.failing())
    names = sorted({n for f in fails for n in f})
    note = "failing conditions: " + ", ".join(names) if names else "all conditions hold"
    if negative:
        ok = all(fails)
        return [Check("admissible", min(worst), tol, ok, expected_negative=True,
                      note=note + " (expected to fail)")]
    return [Check("admissible", _finite_max(worst), tol, not any(fails), note=note)]


def petrov_checks(cand, pts, tol: float) -> list:
    rows = [cand.check_preconditions(p, tol) for p in pts]
    out = []
    for key in rows[0]:
        vals = [r[key] for r in rows]
        if key == "g_kp_km":
            out.append(residual_check("petrov.g_kp_km_negative", [max(0.0, v) for v in vals], 0.0,
                                      "g(k+, k-) < 0"))
            if not all(v < 0 for v in vals):
                out[-1].passed = False
        else:
            out.append(residual_check(f"petrov.{key}", vals, tol))
    return out


def kahler_checks(cand, pts) -> tuple:
    samples = [check_sample(cand, p) for p in pts]
    inside = [s for s in samples if s.in_region]
    out = [Check("kahler.in_region", float(len(inside)), None, bool(inside),
                 note=f"{len(inside)} of {len(samples)} samples in the Kähler region")]
    if not inside:
        return out, samples
    for key, tol in KAHLER_TOL.items():
        out.append(residual_check(f"kahler.{key}", [getattr(s, key) for s in inside], tol))
    me = min(s.min_eig for s in inside)
    out.append(Check("kahler.min_eig", me, 0.0, bool(me > 0), note="smallest eigenvalue of g_K, must be positive"))
    return out, samples


def _transfer(name, fn, cand, pts, tol) -> Check:
    res, notice = [], ""
    for p in pts:
        r = fn(cand, p)
        if r.skipped:
            return skipped(name, r.notice)
        res.append(r.worst)
        notice = r.notice
    return residual_check(name, res, tol, notice)


def transfer_checks(cand: KahlerCandidate, pts, inside, tol: float) -> list:
    if not inside:
        return [skipped(f"transfer.{n}", "no in-region samples") for n in ("geodesic", "killing", "shear")]
    out = [_transfer("transfer.geodesic", lambda c, p: transfer_geodesic(c, p, tol), cand, inside, tol)]
    kill = _transfer("transfer.killing", lambda c, p: transfer_killing(c, p, tol), cand, inside, tol)
    if not kill.skipped:
        kill.note = "k Killing for g_K"
    out.append(kill)
    if inside:
        res = [shear_transfer(cand, p).worst for p in inside]
        out.append(residual_check("transfer.shear", res, tol * 0.1, "shear coefficients in matched frames"))
    else:
        out.append(skipped("transfer.shear", "no in-region samples"))
    return out


def variation_checks(spec: SpacetimeSpec, cand: KahlerCandidate, pts, tol: float) -> list:
    second = spec.chart.coords[1]
    beta = ScalarField.from_expr(spec.chart, f"1.5 + 0.25*sin({second})", name="beta")
    gk, ratio = [], []
    for p in pts:
        r = variation_biconformal(cand, beta, p)
        gk.append(r["g_K"])
        ratio.append(r["iota_ratio"])
    out = [residual_check("variation.biconformal", gk, tol * 0.1, "g_K unchanged under (g|V, beta^2 g|H)"),
           residual_check("variation.biconformal_iota", ratio, tol * 0.1, "iota scales by 1/beta^2")]
    notice = ""
    for eps in VERTICAL_EPS:
        vals = []
        for p in pts:
            r = variation_vertical(cand, eps, p, tol)
            if r["skipped"]:
                notice = r["notice"]
                break
            vals.append(max(r["g_K"], r["omega"], r["iota"]))
        else:
            out.append(residual_check("variation.vertical", vals, tol * 0.1, f"g + ({eps:g}) dtau^2"))
            return out
    out.append(skipped("variation.vertical", notice))
    return out


def cmd_verify(cfg: RunConfig) -> dict:
    spec = load_entry(cfg)
    pts = sample_points(spec, cfg.samples)
    cand = spec.candidate()
    groups = {
        "expected": lambda: expected_checks(spec, pts),
        "oracle": lambda: oracle_checks(spec, pts, cfg.fd_tol),
        "admissible": lambda: admissibility_checks(spec, pts, cfg.tol),
    }
    if spec.kind == "petrov":
        groups["petrov"] = lambda: petrov_checks(cand, pts, cfg.tol)
    state = {}

    def kahler():
        checks, samples = kahler_checks(cand, pts)
        state["inside"] = [s.point for s in samples if s.in_region]
        return checks

    groups["optics"] = lambda: optics_summary(cand, pts)
    groups["integrability"] = lambda: [residual_check("integrability.nijenhuis",
                                                      [nijenhuis_max(cand.J, p) for p in pts], 1e-7)]
    groups["kahler"] = kahler
    if spec.kind == "standard":
        groups["transfer"] = lambda: transfer_checks(cand, pts, state.get("inside") or _inside(cand, pts), cfg.tol)
        groups["variation"] = lambda: variation_checks(spec, cand, pts, cfg.tol)
    checks = []
    for name, fn in groups.items():
        if cfg.checks and not any(name.startswith(c) or c.startswith(name) for c in cfg.checks):
            continue
        for c in fn():
            if not cfg.checks or any(c.name == s or c.name.startswith(s + ".") or c.name.startswith(s)
                                     for s in cfg.checks):
                checks.append(c)
    if cfg.checks and not checks:
        raise UsageError(f"--check {', '.join(cfg.checks)} selects no checks")
    return _report(cfg, spec, checks)


def optics_summary(cand, pts) -> list:
    vals = []
    for p in pts:
        try:
            r = cand.region(p)
        except (RegionError, ValueError):
            continue
        vals.append(r.iota if r.iota is not None else r.lhs1)
    if not vals:
        return [skipped("optics.iota", "twist undefined at every sample")]
    lo, hi = min(vals), max(vals)
    return [info("optics.iota_min", lo), info("optics.iota_max", hi,
                                               "zero twist: no Kähler region" if max(abs(lo), abs(hi)) < 1e-12 else "")]


def _inside(cand, pts):
    out = []
    for p in pts:
        try:
            if cand.region(p).in_region:
                out.append(tuple(p))
        except (RegionError, ValueError):
            pass
    return out


# ---------------------------------------------------------------------------
# region


def cmd_region(cfg: RunConfig) -> dict:
    spec = load_entry(cfg)
    pts = sample_points(spec, cfg.samples)
    cand = spec.candidate()
    coords = list(spec.chart.coords)
    standard = spec.kind == "standard"
    rows = []
    for i, p in enumerate(pts):
        try:
            r = cand.region(p)
        except RegionError as exc:
            raise UsageError(str(exc)) from None
        extra = [r.lhs1, r.lhs2, r.iota] if standard else [r.lhs1, r.lhs2]
        rows.append([i] + [float(v) for v in p] + extra + [r.in_region])
    inside = sum(1 for r in rows if r[-1])
    checks = [info("region.in_region_count", inside, f"{inside} of {len(rows)} samples in the Kähler region")]
    names = ["f_iota", "lhs2", "iota"] if standard else ["iota", "d_kp_fp"]
    table = {"columns": ["index"] + coords + names + ["in_region"], "rows": rows}
    return _report(cfg, spec, checks, table)


# ---------------------------------------------------------------------------
# curvature


def cmd_curvature(cfg: RunConfig) -> dict:
    spec = load_entry(cfg)
    if spec.kind != "standard":
        rep = _report(cfg, spec, [Check("curvature.hypotheses", None, None, False,
                                        note="refused: closed formulas need a standard (k, t, tau) candidate")])
        rep["verdict"] = "refused"
        return rep
    pts = sample_points(spec, cfg.samples)
    cand = spec.candidate()
    cases = ("geodesic", "killing") if cfg.case == "auto" else (cfg.case,)
    refusals = {}
    chosen = None
    for case in cases:
        try:
            for p in pts[:1]:
                ck.curvature_report(cand, p, case, tol=cfg.tol)
            chosen = case
            break
        except ck.CurvatureHypothesisError as exc:
            refusals[case] = f"{exc.residual} ({exc.value:.3e})"
    rows = []
    checks = []
    if chosen is None:
        note = "; ".join(f"{c}: refused, hypothesis {r}" for c, r in refusals.items())
        if cfg.case != "auto":
            rep = _report(cfg, spec, [Check("curvature.hypotheses", None, None, False, note=note)])
            rep["verdict"] = "refused"
            return rep
        checks.append(skipped("curvature.formula", note))
        scal = []
        for i, p in enumerate(pts):
            so = ck.scalar_oracle(cand, p)
            scal.append(abs(so))
            rows.append([i] + [float(v) for v in p] + [None, None, so, None])
        checks.append(info("curvature.max_abs_scalar_oracle", _finite_max(scal)))
    else:
        disc, jinv, rdisc, vol = [], [], [], []
        for i, p in enumerate(pts):
            r = ck.curvature_report(cand, p, chosen, tol=cfg.tol)
            rows.append([i] + [float(v) for v in p] + [r.scalar_formula, r.scalar_riemannian, r.scalar_oracle,
                                                       r.discrepancy])
            disc.append(r.discrepancy)
            rdisc.append(r.ricci_discrepancy)
            jinv.append(r.j_invariance)
            vol.append(r.extras["star_vol"])
        checks += [
            residual_check(f"curvature.{chosen}.scalar", disc, CURVATURE_TOL,
                           "relative |2 * formula - oracle|; the formula value is half the Riemannian scalar"),
            residual_check(f"curvature.{chosen}.ricci_form", rdisc, CURVATURE_TOL, "Ric(J., .) vs -1/2 dJd log"),
            residual_check("curvature.ricci_J_invariant", jinv, RICCI_J_TOL),
            residual_check("curvature.star_vol", vol, 1e-9),
        ]
        for case, why in refusals.items():
            checks.append(skipped(f"curvature.{case}.scalar", f"refused, hypothesis {why}"))
    coords = list(spec.chart.coords)
    table = {"columns": ["index"] + coords + ["scalar_formula", "scalar_riemannian", "scalar_oracle",
                                               "discrepancy"], "rows": rows}
    rep = _report(cfg, spec, checks, table)
    rep["case"] = chosen
    return rep


# ---------------------------------------------------------------------------
# list


def cmd_list(cfg: RunConfig) -> dict:
    rows = [[eid, catalog.describe(eid)] for eid in catalog.entry_ids()]
    return {"schema": SCHEMA, "engine": f"geokahler {__version__}", "command": "list",
            "table": {"columns": ["id", "description"], "rows": rows}, "verdict": "pass"}


# ---------------------------------------------------------------------------
# output


def _report(cfg: RunConfig, spec: SpacetimeSpec, checks, table=None) -> dict:
    graded = [c for c in checks if not c.skipped and c.passed is not None]
    rep = {
        "schema": SCHEMA,
        "engine": f"geokahler {__version__}",
        "command": cfg.command,
        "config": cfg.echo(),
        "spacetime": {"id": spec.id, "kind": spec.kind, "orientation": spec.orientation, "f": repr(spec.f),
                      "params": {k: float(v) for k, v in sorted(spec.params.items()) if _is_num(v)},
                      "coords": list(spec.chart.coords),
                      "box": {c: list(spec.box[c]) for c in spec.chart.coords}},
        "checks": [c.as_dict() for c in checks],
        "summary": {"checks": len(checks), "passed": sum(1 for c in graded if c.passed),
                    "failed": sum(1 for c in graded if not c.passed),
                    "skipped": sum(1 for c in checks if c.skipped)},
        "verdict": verdict(checks),
    }
    if table is not None:
        rep["table"] = table
    return rep


def _is_num(v) -> bool:
    return isinstance(v, (int, float, np.floating)) and not isinstance(v, bool)


def _fmt_num(x) -> str:
    if x is None:
        return "null"
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def to_json(obj, indent: int = 0) -> str:
    """Deterministic JSON: insertion order, 17 significant digits, 2-space indent."""
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f'{inner}{_json_str(str(k))}: {to_json(v, indent + 1)}' for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in obj):
            return "[" + ", ".join(to_json(v, indent + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + to_json(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, str):
        return _json_str(obj)
    return _fmt_num(obj)


def _json_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def _csv_cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return _fmt_num(v).strip('"')
    return "" if v is None else v


def to_csv(rep: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if "table" in rep:
        w.writerow(rep["table"]["columns"])
        for row in rep["table"]["rows"]:
            w.writerow([_csv_cell(v) for v in row])
    else:
        cols = ["name", "max_residual", "tolerance", "pass", "skipped", "expected_negative", "note"]
        w.writerow(cols)
        for c in rep["checks"]:
            w.writerow([_csv_cell(c[k]) for k in cols])
    return buf.getvalue()


def to_text(rep: dict) -> str:
    lines = []
    if rep["command"] == "list":
        width = max(len(r[0]) for r in rep["table"]["rows"])
        return "\n".join(f"{r[0]:<{width}}  {r[1]}" for r in rep["table"]["rows"]) + "\n"
    sp = rep["spacetime"]
    lines.append(f"geokahler {rep['command']} {sp['id']} ({sp['kind']}, f = {sp['f']}, orientation {sp['orientation']})")
    for c in rep["checks"]:
        if c["skipped"]:
            tag = "SKIP"
        elif c["pass"] is None:
            tag = "INFO"
        elif c["expected_negative"]:
            tag = "XFAIL" if c["pass"] else "XPASS"
        else:
            tag = "PASS" if c["pass"] else "FAIL"
        res = "" if c["max_residual"] is None else f"{c['max_residual']:.3e}"
        tol = "" if c["tolerance"] is None else f"tol {c['tolerance']:.1e}"
        lines.append(f"  {tag:<5} {c['name']:<34} {res:>10} {tol:<12} {c['note']}".rstrip())
    if "table" in rep and rep["command"] != "verify":
        lines.append("  " + ", ".join(rep["table"]["columns"]))
        for row in rep["table"]["rows"]:
            lines.append("  " + ", ".join(str(_csv_cell(v)) for v in row))
    s = rep["summary"]
    lines.append(f"verdict: {rep['verdict']} ({s['passed']} passed, {s['failed']} failed, {s['skipped']} skipped)")
    return "\n".join(lines) + "\n"


def render(rep: dict, fmt: str) -> str:
    if fmt == "json":
        return to_json(rep) + "\n"
    if fmt == "csv":
        return to_csv(rep)
    return to_text(rep)


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="geokahler", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, positional: str):
        if positional == "entry":
            p.add_argument("entry_pos", nargs="?", metavar="ENTRY", help="catalog entry id")
            p.add_argument("--entry", help="catalog entry id")
            p.add_argument("--spec", dest="spec_file", help="custom spec file instead of a catalog entry")
        else:
            p.add_argument("spec_file", metavar="SPEC", help="custom spec file")
        p.add_argument("--param", action="append", default=[], metavar="K=V", help="override an entry parameter")
        p.add_argument("--box", action="append", default=[], metavar="COORD=LO:HI", help="override a sampling interval")
        p.add_argument("--samples", type=int, default=100, help="number of Halton samples (default 100)")
        p.add_argument("--tol", type=float, default=None, help="residual tolerance (default $GEOKAHLER_TOL or 1e-7)")
        p.add_argument("--fd-tol", type=float, default=DEFAULT_FD_TOL, help="finite-difference oracle tolerance")
        p.add_argument("--f", dest="f", help="affine:c | exp | expr:<expression in tau>")
        p.add_argument("--orientation", type=int, choices=(1, -1), help="orientation of the screen space")
        p.add_argument("--format", dest="fmt", choices=("json", "csv", "text"), default="text")
        p.add_argument("--out", help="write the report to this file")
        p.add_argument("--check", action="append", default=[], metavar="NAME",
                       help="restrict to checks whose name starts with NAME")
        p.add_argument("--case", choices=("auto", "geodesic", "killing"), default="auto",
                       help="curvature formula case")
        p.add_argument("--wall-time", action="store_true", help="add the wall time to the report")

    lp = sub.add_parser("list", help="list catalog entries")
    lp.add_argument("--format", dest="fmt", choices=("json", "csv", "text"), default="text")
    lp.add_argument("--out")
    helps = {"verify": "run the check suite on a catalog entry or spec file",
             "region": "per-sample Kahler region scan", "curvature": "scalar curvature formulas against the oracle"}
    for name, text in helps.items():
        common(sub.add_parser(name, help=text), "entry")
    common(sub.add_parser("custom", help="run the verify pipeline on a spec file"), "spec")
    return ap


COMMANDS = {"list": cmd_list, "verify": cmd_verify, "region": cmd_region, "curvature": cmd_curvature,
            "custom": cmd_verify}


def config_from_args(args) -> RunConfig:
    if args.command == "list":
        return RunConfig("list", None, None, {}, {}, 0, DEFAULT_TOL, DEFAULT_FD_TOL, None, None, args.fmt, args.out,
                         (), "auto", False)
    entry = getattr(args, "entry", None) or getattr(args, "entry_pos", None)
    if getattr(args, "entry", None) and getattr(args, "entry_pos", None) and args.entry != args.entry_pos:
        raise UsageError("entry given twice with different values")
    if args.samples <= 0:
        raise UsageError("--samples must be positive")
    tol = args.tol if args.tol is not None else _default_tol()
    if not tol > 0 or not args.fd_tol > 0:
        raise UsageError("tolerances must be positive")
    if args.spec_file and entry:
        raise UsageError("give either a catalog entry or --spec, not both")
    return RunConfig(args.command, entry, args.spec_file, _parse_kv(args.param, "--param"), _parse_box(args.box),
                     args.samples, tol, args.fd_tol, args.f, args.orientation, args.fmt, args.out,
                     tuple(args.check), args.case, args.wall_time)


def run(argv=None) -> tuple[int, str]:
    """Execute and return (exit code, rendered output)."""
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = config_from_args(args)
        rep = COMMANDS[cfg.command](cfg)
    except (UsageError, CatalogError, EmptyBoxError, SpecFileError, DomainError) as exc:
        return EXIT_USAGE, f"geokahler: error: {exc}\n"
    except OSError as exc:
        return EXIT_USAGE, f"geokahler: error: {exc}\n"
    if cfg.wall_time:
        rep["wall_time_s"] = round(time.perf_counter() - start, 3)
    code = EXIT_PASS if rep["verdict"] == "pass" else EXIT_FAIL
    text = render(rep, cfg.fmt)
    if cfg.out:
        try:
            with open(cfg.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            return EXIT_USAGE, f"geokahler: error: {exc}\n"
        return code, ""
    return code, text


def main(argv=None) -> int:
    code, text = run(argv)
    stream = sys.stderr if code == EXIT_USAGE else sys.stdout
    stream.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
