"""Command-line front end: one job per invocation, CSV or JSON out."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import __version__
from .algebra import MultiSeries, SmallResurgentFunction, compose_small, convolve_numeric, convolve_series
from .borel import Minor, minor_of_series
from .core import (
    DEFAULT_PRECISION,
    GevreySeries,
    Precision,
    ResurgeError,
    ValidationError,
    c2j,
    j2c,
)
from .laplace import in_sector, laplace_lateral, stokes_jump

SUBCOMMANDS = ("borel-sum", "convolve", "compose", "stokes", "schrodinger", "check-invariants")
COLUMNS = ["h_re", "h_im", "val_re", "val_im", "err", "exp_floor"]


@dataclass
class HGrid:
    start: float
    end: float
    count: int
    spacing: str = "linear"

    @classmethod
    def parse(cls, text: str) -> "HGrid":
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ValidationError(f"h grid must be a:b:n[:log], got {text!r}")
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError as exc:
            raise ValidationError(f"bad h grid {text!r}") from exc
        spacing = "linear"
        if len(parts) == 4:
            if parts[3] not in ("log", "linear"):
                raise ValidationError(f"unknown spacing {parts[3]!r}")
            spacing = parts[3]
        return cls(a, b, n, spacing)

    def values(self) -> np.ndarray:
        if self.count < 1:
            raise ValidationError("h grid is empty")
        if self.spacing == "log":
            if self.start <= 0 or self.end <= 0:
                raise ValidationError("log spacing needs positive endpoints")
            return np.geomspace(self.start, self.end, self.count)
        return np.linspace(self.start, self.end, self.count)

    def to_json(self) -> list:
        return [self.start, self.end, self.count, self.spacing]


@dataclass
class JobSpec:
    subcommand: str
    inputs: dict = field(default_factory=dict)
    precision: dict = field(default_factory=dict)
    h_grid: HGrid | None = None
    h_values: list = field(default_factory=list)
    alpha: float = 0.0
    out: str = "csv"
    seed: int = 0

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ValidationError(f"unknown subcommand {self.subcommand!r}")
        if self.out not in ("csv", "json"):
            raise ValidationError("output format must be csv or json")

    def hs(self) -> np.ndarray:
        if self.h_values:
            hs = np.array([complex(h) for h in self.h_values])
        elif self.h_grid is not None:
            hs = self.h_grid.values().astype(complex)
        else:
            raise ValidationError("no h values given")
        if hs.size == 0:
            raise ValidationError("h grid is empty")
        for h in hs:
            if not in_sector(self.alpha, h):
                raise ValidationError(f"h = {h} is outside the sector of direction {self.alpha}")
        return hs

    def precision_obj(self) -> Precision:
        return Precision.from_json({**DEFAULT_PRECISION.to_json(), **self.precision})

    def to_json(self) -> dict:
        return {"subcommand": self.subcommand, "inputs": dict(self.inputs), "precision": dict(self.precision),
                "h_grid": self.h_grid.to_json() if self.h_grid else None,
                "h_values": [c2j(h) for h in self.h_values], "alpha": self.alpha, "out": self.out,
                "seed": self.seed}

    @classmethod
    def from_json(cls, d: dict) -> "JobSpec":
        try:
            g = d.get("h_grid")
            return cls(d["subcommand"], dict(d.get("inputs", {})), dict(d.get("precision", {})),
                       HGrid(float(g[0]), float(g[1]), int(g[2]), g[3]) if g else None,
                       [j2c(h) for h in d.get("h_values", [])], float(d.get("alpha", 0.0)),
                       d.get("out", "csv"), int(d.get("seed", 0)))
        except (KeyError, TypeError, IndexError) as exc:
            raise ValidationError(f"bad job JSON: {exc}") from exc


# input readers -----------------------------------------------------------

def _load(path_or_json):
    if isinstance(path_or_json, dict):
        return path_or_json
    text = str(path_or_json)
    if text.lstrip().startswith(("{", "[")):
        return json.loads(text)
    try:
        with open(text) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {text}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{text} is not valid JSON: {exc}") from exc


def minor_from_spec(d: dict, precision: Precision | None = None) -> tuple:
    """(minor, a0) from {"series"|"coeffs"|"polynomial"|"taylor"|"expr"}."""
    if "series" in d or "coeffs" in d:
        s = GevreySeries.from_json(d.get("series", d))
        return minor_of_series(s, precision=precision), complex(s.coeffs[0])
    if "polynomial" in d:
        return Minor.polynomial([j2c(c) for c in d["polynomial"]], precision=precision), 0j
    if "taylor" in d:
        return Minor(np.array([j2c(c) for c in d["taylor"]]), precision=precision), 0j
    if "expr" in d:
        xi = sp.Symbol("xi")
        try:
            expr = sp.sympify(d["expr"].replace("^", "**"), locals={"xi": xi})
            num, den = sp.fraction(sp.cancel(sp.together(expr)))
            pn, pd = sp.Poly(num, xi), sp.Poly(den, xi)
        except (sp.SympifyError, sp.PolynomialError) as exc:
            raise ValidationError(f"minor expression must be rational in xi: {exc}") from exc
        poles = [complex(r) for r in sp.Poly(pd, xi).nroots()] if pd.degree() > 0 else []
        f = sp.lambdify(xi, pn.as_expr() / pd.as_expr(), "numpy")

        def fn(z):
            return np.asarray(f(np.asarray(z, dtype=complex)), dtype=complex) * np.ones(np.shape(z))
        if not poles:
            c = [complex(x) for x in (pn.all_coeffs()[::-1])]
            den0 = complex(pd.all_coeffs()[0])
            return Minor.polynomial([x / den0 for x in c], precision=precision), 0j
        return Minor.from_function(fn, poles=poles, n=int(d.get("n", 40)), precision=precision), 0j
    raise ValidationError("minor JSON needs one of: series, coeffs, polynomial, taylor, expr")


# subcommands ---------------------------------------------------------------

def _threads() -> int:
    try:
        return max(1, int(os.environ.get("RESURGE_THREADS", "1")))
    except ValueError:
        return 1


def _pmap(fn, items):
    n = _threads()
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))


def _row(lv) -> list:
    v = complex(lv.value)
    return [lv.h.real, lv.h.imag, v.real, v.imag, float(lv.error_estimate), float(lv.exp_floor)]


def run_borel_sum(job: JobSpec, prec: Precision):
    m, a0 = minor_from_spec(_load(job.inputs["series"]), prec)
    side = {"plus": "+", "minus": "-"}.get(job.inputs.get("side", "+"), job.inputs.get("side", "+"))
    rows = _pmap(lambda h: _row(laplace_lateral(m, job.alpha, side, h, a0, prec)), job.hs())
    return COLUMNS, rows, {}


def run_convolve(job: JobSpec, prec: Precision):
    f, fa = minor_from_spec(_load(job.inputs["f"]), prec)
    g, ga = minor_from_spec(_load(job.inputs["g"]), prec)
    if fa != 0 or ga != 0:
        raise ValidationError("convolve takes minors of series without constant term")
    fg = convolve_series(f, g)
    rows = _pmap(lambda h: _row(laplace_lateral(fg, job.alpha, "+", h, 0j, prec)), job.hs())
    extra = {}
    ts = job.inputs.get("t")
    if ts:
        vals = []
        for t in ts:
            v, e = convolve_numeric(f, g, j2c(t), precision=prec, full_output=True)
            vals.append({"t": c2j(j2c(t)), "value": c2j(v), "err": e})
        extra["convolution_values"] = vals
    extra["minor_coeffs"] = [c2j(c) for c in fg.coeffs]
    return COLUMNS, rows, extra


def run_compose(job: JobSpec, prec: Precision):
    g = MultiSeries.from_json(_load(job.inputs["g"]))
    phis = _load(job.inputs["phi"])
    phis = phis if isinstance(phis, list) else phis.get("phis", [phis])
    fns = [SmallResurgentFunction.from_json(p) for p in phis]
    hs = job.hs()
    comp = compose_small(g, fns, h_max=float(np.max(np.abs(hs))), alpha=job.alpha, precision=prec)
    rows = _pmap(lambda h: _row(comp(h)), hs)
    return COLUMNS, rows, {"K": comp.K, "levels": len(comp.pieces),
                           "note": "tail-bound constants are fitted, not proven"}


def run_stokes(job: JobSpec, prec: Precision):
    m, _ = minor_from_spec(_load(job.inputs["minor"]), prec)
    rows = _pmap(lambda h: _row(stokes_jump(m, job.alpha, h, prec)), job.hs())
    return COLUMNS, rows, {}


def run_schrodinger(job: JobSpec, prec: Precision):
    from .schrodinger import PotentialSpec, perturbative_eigenvalue, residual_check
    V = PotentialSpec.from_string(job.inputs["potential"])
    order = int(job.inputs.get("order", 6))
    level = int(job.inputs.get("level", 0))
    c = V.coeffs
    base = np.zeros_like(c)
    base[2, 0] = 1.0
    if c.shape[0] < 3 or not np.allclose(c[:, 0], base[:, 0]):
        raise ValidationError("schrodinger expects V = q^2 + (terms carrying powers of h)")
    rest = c.copy()
    rest[2, 0] = 0
    ms = [j for j in range(rest.shape[1]) if np.any(rest[:, j])]
    if len(ms) > 1:
        raise ValidationError("perturbation must be h^m W(q) with a single power m")
    if ms:
        m = ms[0]
        Es = perturbative_eigenvalue(rest[:, m], level, min(8, max(order, 2)), m)
    else:
        Es = GevreySeries([2 * level + 1.0])
    hs = job.hs().real
    probes = [float(x) for x in job.inputs.get("q_probe", [0.5, 0.8, 1.1, 1.4])]
    rep = residual_check(V, Es, order, probes, hs)
    rows = []
    for h, e, r in zip(hs, rep.energies, rep.max_residual):
        tail = abs(Es.coeffs[-1]) * h ** (Es.coeffs.size - 1) if Es.coeffs.size > 1 else 0.0
        rows.append([h, 0.0, e.real, e.imag, tail, 0.0, r, rep.slope])
    return COLUMNS + ["residual", "slope"], rows, {"E_coeffs": [c2j(x) for x in Es.coeffs],
                                                   "skipped": rep.skipped}


def run_check_invariants(job: JobSpec, prec: Precision):
    from .invariants import run_all
    results = run_all(seed=job.seed, precision=prec)
    rows = [[r.name, r.passed, r.detail] for r in results]
    return ["check", "passed", "detail"], rows, {"all_passed": all(r.passed for r in results)}


RUNNERS = {"borel-sum": run_borel_sum, "convolve": run_convolve, "compose": run_compose,
           "stokes": run_stokes, "schrodinger": run_schrodinger, "check-invariants": run_check_invariants}


def run(job: JobSpec) -> dict:
    prec = job.precision_obj()
    cols, rows, extra = RUNNERS[job.subcommand](job, prec)
    return {"job": job.to_json(), "columns": cols, "rows": rows,
            "metadata": {"version": __version__, "precision": prec.to_json(), **extra}}


# output ------------------------------------------------------------------

def render(result: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(result, indent=2, default=_json_default) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(result["columns"])
    for row in result["rows"]:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue()


def _json_default(o):
    if isinstance(o, complex):
        return c2j(o)
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".resurge-")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def parse_result(text: str) -> dict:
    """Inverse of render(..., 'json'); the job comes back as a JobSpec."""
    d = json.loads(text)
    d["job"] = JobSpec.from_json(d["job"])
    return d


# argument parsing ----------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail(ValidationError(message))


def _fail(exc: ResurgeError):
    payload = {"error": type(exc).__name__, "message": str(exc), "exit_code": exc.exit_code}
    loc = getattr(exc, "location", None)
    if loc is not None:
        payload["location"] = c2j(loc)
    sys.stderr.write(json.dumps(payload) + "\n")
    sys.exit(exc.exit_code)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="resurge", description="Borel-Laplace resummation jobs")
    p.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision-file")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--h-grid")
    common.add_argument("--h", help="comma separated h values")
    common.add_argument("--alpha", type=float, default=0.0, help="summation direction")
    common.add_argument("--out", choices=("csv", "json"), default="csv")
    common.add_argument("-o", "--output", help="file to write (default stdout)")
    common.add_argument("--job", help="JobSpec JSON to run instead of flags")
    sub = p.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    s = sub.add_parser("borel-sum", parents=[common])
    s.add_argument("--series")
    s.add_argument("--side", choices=("+", "-", "plus", "minus"), default="+")
    s = sub.add_parser("convolve", parents=[common])
    s.add_argument("--f")
    s.add_argument("--g")
    s.add_argument("--t", action="append", type=complex, help="also evaluate f*g at t")
    s = sub.add_parser("compose", parents=[common])
    s.add_argument("--g")
    s.add_argument("--phi")
    s = sub.add_parser("stokes", parents=[common])
    s.add_argument("--minor")
    s = sub.add_parser("schrodinger", parents=[common])
    s.add_argument("--potential")
    s.add_argument("--level", type=int, default=0)
    s.add_argument("--order", type=int, default=6)
    sub.add_parser("check-invariants", parents=[common])
    return p


_INPUTS = {"borel-sum": ("series", "side"), "convolve": ("f", "g", "t"), "compose": ("g", "phi"),
           "stokes": ("minor",), "schrodinger": ("potential", "level", "order"), "check-invariants": ()}


def job_from_args(a: argparse.Namespace) -> JobSpec:
    if a.job:
        return JobSpec.from_json(_load(a.job))
    inputs = {}
    for k in _INPUTS[a.subcommand]:
        v = getattr(a, k, None)
        if v is None:
            continue
        if k == "t":
            v = [c2j(x) for x in v]
        inputs[k] = v
    needed = {"borel-sum": ["series"], "convolve": ["f", "g"], "compose": ["g", "phi"],
              "stokes": ["minor"], "schrodinger": ["potential"]}.get(a.subcommand, [])
    for k in needed:
        if k not in inputs:
            raise ValidationError(f"--{k} is required for {a.subcommand}")
    prec = _load(a.precision_file) if a.precision_file else {}
    Precision.from_json({**DEFAULT_PRECISION.to_json(), **prec})
    grid = HGrid.parse(a.h_grid) if a.h_grid else None
    hv = [complex(x) for x in a.h.split(",") if x.strip()] if a.h else []
    if a.h is not None and not hv:
        raise ValidationError("empty --h list")
    if grid is None and not hv and a.subcommand != "check-invariants":
        raise ValidationError("give --h-grid or --h")
    return JobSpec(a.subcommand, inputs, prec, grid, hv, a.alpha, a.out, a.seed)


def main(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
        job = job_from_args(a)
        if job.h_grid is not None:
            job.h_grid.values()
        result = run(job)
        text = render(result, job.out)
        if a.output:
            write_atomic(a.output, text)
        else:
            sys.stdout.write(text)
    except ResurgeError as exc:
        _fail(exc)
    except (KeyError, json.JSONDecodeError) as exc:
        _fail(ValidationError(f"bad input: {exc}"))
    if job.subcommand == "check-invariants" and not result["metadata"]["all_passed"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
