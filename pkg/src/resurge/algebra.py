"""Convolution of minors and the algebra built on it.

Series-level work happens on h-side coefficients with exact rational
arithmetic: the convolution of minors is the Cauchy product of the
corresponding series, so commutativity and associativity hold exactly.
Quadrature is only used to continue a convolution off the disc.
"""

from __future__ import annotations

import cmath
import itertools
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .borel import Microfunction, Minor, ResurgentSymbol, from_exact, to_exact
from .core import (
    DEFAULT_PRECISION,
    TWO_PI,
    CertificateError,
    ContourCollisionError,
    PinchError,
    Precision,
    ValidationError,
    c2j,
    j2c,
)
from .laplace import LaplaceValue, Piece, mittag_leffler_sum

ZERO = (Fraction(0), Fraction(0))
ONE = (Fraction(1), Fraction(0))


# exact truncated h-series --------------------------------------------

def _xmul(x: complex | tuple, y: tuple) -> tuple:
    a, b = x
    c, d = y
    return (a * c - b * d, a * d + b * c)


def xcauchy(a: Sequence, b: Sequence, n: int | None = None) -> list:
    """Exact Cauchy product of coefficient lists, optionally truncated to length n."""
    la, lb = len(a), len(b)
    if la == 0 or lb == 0:
        return []
    L = la + lb - 1 if n is None else min(la + lb - 1, n)
    real = all(v[1] == 0 for v in a) and all(v[1] == 0 for v in b)
    out = []
    for k in range(L):
        lo, hi = max(0, k - lb + 1), min(k, la - 1)
        if real:
            s = Fraction(0)
            for i in range(lo, hi + 1):
                ai = a[i][0]
                if ai:
                    s += ai * b[k - i][0]
            out.append((s, Fraction(0)))
        else:
            sr, si = Fraction(0), Fraction(0)
            for i in range(lo, hi + 1):
                p, q = a[i]
                r, t = b[k - i]
                sr += p * r - q * t
                si += p * t + q * r
            out.append((sr, si))
    return out


def xadd(a: Sequence, b: Sequence) -> list:
    n = max(len(a), len(b))
    out = []
    for k in range(n):
        p = a[k] if k < len(a) else ZERO
        q = b[k] if k < len(b) else ZERO
        out.append((p[0] + q[0], p[1] + q[1]))
    return out


def xscale(a: Sequence, c) -> list:
    c = c if isinstance(c, tuple) else to_exact(c)
    return [_xmul(c, v) for v in a]


def xpow(a: Sequence, n: int, N: int) -> list:
    out = [ONE]
    for _ in range(n):
        out = xcauchy(out, a, N + 1)
    return out


def exact_h_coeffs(m: Minor) -> list:
    """a_0 = 0 and a_{k+1} = b_k k!, exactly."""
    return [ZERO] + [(q[0] * math.factorial(k), q[1] * math.factorial(k))
                     for k, q in enumerate(m.exact_coeffs)]


def minor_from_exact_h(c: Sequence, exact: bool, precision: Precision | None = None,
                       gevrey=None) -> tuple:
    """Split an exact h-series into (a_0, Minor)."""
    a0 = from_exact(c[0]) if c else 0j
    rest = list(c[1:]) or [ZERO]
    ex = tuple((q[0] / math.factorial(k), q[1] / math.factorial(k)) for k, q in enumerate(rest))
    b = np.array([from_exact(q) for q in ex], dtype=complex)
    return a0, Minor(b, exact=exact, exact_coeffs=ex, gevrey=gevrey, precision=precision)


def _known_length(m: Minor) -> float:
    return math.inf if m.exact else m.n_coeffs


# convolution ----------------------------------------------------------

def convolve_series(f: Minor, g: Minor) -> Minor:
    """Taylor germ of f * g (the minor of the product of the h-side series)."""
    nf, ng = _known_length(f), _known_length(g)
    if math.isinf(nf) and math.isinf(ng):
        n = None
        exact = True
    else:
        n = int(min(nf, ng)) + 2  # h-coefficients c_0 .. c_{min+1}
        exact = False
    c = xcauchy(exact_h_coeffs(f), exact_h_coeffs(g), n)
    if exact:
        while len(c) > 2 and c[-1] == ZERO:
            c.pop()
    gev = None
    if f.gevrey and g.gevrey:
        gev = (2.0 * f.gevrey[0] * g.gevrey[0], max(f.gevrey[1], g.gevrey[1]))
    _, m = minor_from_exact_h(c, exact, f.precision)
    m.gevrey = gev
    return m


def _obstacles(f: Minor, g: Minor, t: complex):
    fs = [complex(w) for w in f.singular_points()]
    gs = [complex(t - w) for w in g.singular_points()]
    return fs, gs


def _detoured_path(t: complex, obstacles, r: float):
    """Segment 0 -> t with arcs around obstacles; obstacles are (point, side)."""
    u = t / abs(t)
    L = abs(t)
    near = []
    for w, s in obstacles:
        loc = w / u
        if 0 < loc.real < L and abs(loc.imag) <= 2 * r:
            near.append((loc.real, w, s, loc.imag))
    near.sort()
    pieces, start = [], 0j
    for x, w, s, off in near:
        r_eff = r if abs(off) < r else abs(off) + r
        half = math.sqrt(r_eff ** 2 - off ** 2)
        enter, leave = (x - half) * u, (x + half) * u
        pieces.append(Piece("segment", start, enter))
        pi, po = cmath.phase(enter - w), cmath.phase(leave - w)
        if s > 0:
            d = (po - pi) % TWO_PI or TWO_PI
        else:
            d = -((pi - po) % TWO_PI or TWO_PI)
        pieces.append(Piece("arc", w, r=r_eff, phi0=pi, phi1=pi + d))
        start = leave
    pieces.append(Piece("segment", start, t))
    return pieces


def convolve_numeric(f: Minor, g: Minor, t: complex, side: int = 1,
                     precision: Precision | None = None, pinch_tol: float = 1e-3,
                     full_output: bool = False):
    """int_0^t f(tau) g(t - tau) d tau along the (detoured) segment.

    Singularities of f on the segment are passed on ``side`` (+1 right,
    -1 left); reflected singularities t - omega_g on the other side.
    """
    precision = precision or f.precision
    t = complex(t)
    if t == 0:
        return (0j, 0.0) if full_output else 0j
    fs, gs = _obstacles(f, g, t)
    u = t / abs(t)
    scale = max(1.0, abs(t))
    for a in fs:
        for b in gs:
            if abs(a - b) < pinch_tol * scale:
                la, lb = a / u, b / u
                inside = 0 < la.real < abs(t) and 0 < lb.real < abs(t)
                close = abs(la.imag) < pinch_tol * scale and abs(lb.imag) < pinch_tol * scale
                if inside and close:
                    loc = a + (t - b)
                    raise PinchError(f"singularities pinch the path; convolution singular near {loc:.6g}",
                                     location=loc)
    for a in fs:
        if abs(a - t) < pinch_tol * scale:
            raise PinchError(f"t is at a singularity of f ({a:.6g})", location=a)
    for b in gs:
        if abs(b) < pinch_tol * scale:
            raise PinchError(f"t is at a singularity of g ({t - b:.6g})", location=t - b)
    r = precision.detour_radius
    obstacles = [(a, side) for a in fs] + [(b, -side) for b in gs]
    pieces = _detoured_path(t, obstacles, r)
    for p in pieces:
        for w, _ in obstacles:
            if p.distance(w) < 0.5 * r:
                raise ContourCollisionError(f"integration path hits singularity {w}")
    fc, gc = bool(f.cuts), bool(g.cuts)

    def integrand(z):
        fv = f.evaluate(np.array([z]), side if fc else 0)[0]
        gv = g.evaluate(np.array([t - z]), side if gc else 0)[0]
        return complex(fv * gv)

    total, err = 0j, 0.0
    bps = [((w / u).real) for w, _ in obstacles]
    for p in pieces:
        if p.kind == "segment":
            d = p.b - p.a

            def fn(s, p=p, d=d):
                return integrand(p.a + s * d) * d
            pts = [((bw * u - p.a) / d).real for bw in bps] if d != 0 else []
        else:
            dphi = p.phi1 - p.phi0

            def fn(s, p=p, dphi=dphi):
                e = cmath.exp(1j * (p.phi0 + s * dphi))
                return integrand(p.a + p.r * e) * 1j * p.r * e * dphi
            pts = []
        pts = sorted(x for x in pts if 0 < x < 1)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            v, e = quad(fn, 0.0, 1.0, complex_func=True, epsabs=precision.quad_abs_tol,
                        epsrel=precision.quad_rel_tol, limit=400, points=pts or None)
        total += complex(v)
        err += abs(complex(e)) if np.iscomplexobj(e) else abs(e)
    err += 4 * np.finfo(float).eps * abs(total)
    return (total, err) if full_output else total


# tail bounds ----------------------------------------------------------

def _primitive(coeffs: np.ndarray, times: int) -> np.ndarray:
    """Coefficients of the ``times``-fold primitive vanishing at 0."""
    c = np.asarray(coeffs, dtype=complex)
    for _ in range(times):
        k = np.arange(1, c.size + 1)
        c = np.concatenate([[0j], c / k])
    return c


def _sup_on_disc(coeffs, radius: float, n: int = 256) -> float:
    z = radius * np.exp(2j * math.pi * np.arange(n) / n)
    return float(np.max(np.abs(np.polynomial.polynomial.polyval(z, coeffs))))


@dataclass
class CompositionTailBound:
    """Primitive bound |g_n^(-n-1)| <= (C sqrt(V) eps(n))^n / n! with g_n the n-fold
    convolution power; eps is fitted from computed primitives (C = 1, 5% margin,
    made nonincreasing)."""

    C_alpha: float
    epsilon_seq: tuple
    V_norm: float
    radius: float = 1.0
    raw_norms: tuple = field(default=(), repr=False)

    def bound(self, n: int) -> float:
        if n < 1:
            raise ValidationError("n must be positive")
        if n > len(self.epsilon_seq):
            raise ValidationError("bound requested beyond the recorded range")
        e = self.epsilon_seq[n - 1]
        return (self.C_alpha * math.sqrt(self.V_norm) * e) ** n / math.factorial(n)

    @property
    def peak(self) -> int:
        return int(np.argmax(self.epsilon_seq)) + 1

    def nonincreasing_after_peak(self) -> bool:
        e = np.asarray(self.epsilon_seq)[self.peak - 1:]
        return bool(np.all(np.diff(e) <= 0))

    def converges(self) -> bool:
        e = self.epsilon_seq
        return len(e) < 3 or e[-1] < 0.9 * max(e)


def primitive_tail_bound(fs: Sequence[Minor], n_max: int, radius: float = 1.0,
                         safety: float = 1.05, C_alpha: float = 1.0) -> CompositionTailBound:
    """Empirical constants for the primitive bound, from exact convolution powers."""
    V = max(_sup_on_disc(_primitive(f.coeffs, 1), radius) for f in fs)
    if V == 0:
        return CompositionTailBound(C_alpha, tuple([0.0] * n_max), 1.0, radius)
    f = fs[0]
    for other in fs[1:]:
        f = f + other
    raw = []
    power = None
    for n in range(1, n_max + 1):
        power = f if power is None else convolve_series(power, f)
        P = _sup_on_disc(_primitive(power.coeffs, n + 1), radius)
        raw.append(P)
    eps = []
    for n, P in enumerate(raw, start=1):
        val = (math.factorial(n) * P) ** (1.0 / n) / (C_alpha * math.sqrt(V)) if P > 0 else 0.0
        eps.append(safety * val)
    env = np.maximum.accumulate(np.asarray(eps)[::-1])[::-1]
    return CompositionTailBound(C_alpha, tuple(float(x) for x in env), V, radius, tuple(raw))


def convolution_power(f: Minor, n: int, radius: float = 1.0) -> Minor:
    if n < 1:
        raise ValidationError("n must be at least 1")
    out = f
    for _ in range(n - 1):
        out = convolve_series(out, f)
    m = Minor(out.coeffs, exact=out.exact, exact_coeffs=out.exact_coeffs, gevrey=out.gevrey,
              precision=f.precision, meta={"tail_bound": primitive_tail_bound([f], n, radius)})
    return m


# small resurgent functions --------------------------------------------

class SmallResurgentFunction:
    """F (small microfunction at 0) plus shifted singular data at Re(omega) > 0."""

    def __init__(self, origin: Microfunction | None = None, shifted: ResurgentSymbol | None = None,
                 check: bool = True):
        self.origin = origin if origin is not None else Microfunction(0.0)
        self.shifted = shifted if shifted is not None else ResurgentSymbol([])
        if self.origin.omega != 0:
            raise ValidationError("origin part must sit at 0")
        if not self.origin.is_small:
            raise ValidationError("origin part is not small (nonzero pole part)")
        if check and not self.origin.check_small():
            raise ValidationError("origin part fails the o(1/|zeta|) probe")
        for w in self.shifted.support:
            if not complex(w).real > 0:
                raise ValidationError(f"shifted support point {w} must have positive real part")

    @classmethod
    def from_series(cls, series, shifted=()) -> "SmallResurgentFunction":
        """Origin series (a_0 must vanish) plus [(omega, series), ...] blocks."""
        from .borel import SymbolTerm, borel_transform
        from .core import GevreySeries
        s = series if isinstance(series, GevreySeries) else GevreySeries(series)
        if s.coeffs[0] != 0:
            raise ValidationError("a small function has no constant term")
        origin = borel_transform(SymbolTerm(0.0, s))
        terms = []
        for w, ser in shifted:
            ser = ser if isinstance(ser, GevreySeries) else GevreySeries(ser)
            terms.append(borel_transform(SymbolTerm(w, ser)))
        return cls(origin, ResurgentSymbol(terms))

    @property
    def L0(self) -> float:
        pts = self.shifted.support
        return min(complex(w).real for w in pts) if pts else math.inf

    def origin_h(self) -> list:
        from .analytic import variation
        if not np.any(self.origin.log_coeffs):
            return [ZERO]
        return exact_h_coeffs(variation(self.origin))

    def shifted_h(self) -> list:
        """[(omega, exact h-series with a_0 = residue)]."""
        from .analytic import variation
        out = []
        for mf in self.shifted:
            if not mf.integer_type:
                raise ValidationError("shifted parts must be of integer (pole + log) type")
            c = exact_h_coeffs(variation(mf)) if np.any(mf.log_coeffs) else [ZERO]
            c[0] = to_exact(mf.residue)
            out.append((mf.omega, c))
        return out

    def pieces(self) -> list:
        out = []
        h = self.origin_h()
        a0, m = minor_from_exact_h(h, exact=True)
        out.append((0j, m, a0))
        for w, c in self.shifted_h():
            a0, m = minor_from_exact_h(c, exact=True)
            out.append((complex(w), m, a0))
        return out

    def laplace(self, h: complex, alpha: float = 0.0, precision: Precision | None = None) -> LaplaceValue:
        ps = sorted(self.pieces(), key=lambda p: (complex(p[0]) / complex(h)).real)
        return mittag_leffler_sum(ps, alpha, h, precision=precision)

    def to_json(self) -> dict:
        return {"origin": self.origin.to_json(), "shifted": self.shifted.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "SmallResurgentFunction":
        from .core import GevreySeries
        if "series" in d:
            shifted = [(j2c(e["omega"]), GevreySeries.from_json(e["series"])) for e in d.get("shifted", [])]
            return cls.from_series(GevreySeries.from_json(d["series"]), shifted)
        return cls(Microfunction.from_json(d["origin"]), ResurgentSymbol.from_json(d.get("shifted", {})))


# multivariate coefficients ---------------------------------------------

@dataclass
class MultiSeries:
    """sum a_J z^J with J a multi-index, convergent on the polydisc of radius rho."""

    coeffs: dict
    rho: float
    k: int = 1

    def __post_init__(self):
        clean = {}
        for J, a in self.coeffs.items():
            J = (J,) if isinstance(J, int) else tuple(int(x) for x in J)
            if len(J) != self.k or min(J) < 0:
                raise ValidationError(f"bad multi-index {J} for k = {self.k}")
            clean[J] = complex(a)
        self.coeffs = clean
        if not self.rho > 0:
            raise ValidationError("rho must be positive")

    def __call__(self, *z) -> complex:
        return sum(a * np.prod([zi ** j for zi, j in zip(z, J)]) for J, a in self.coeffs.items())

    @property
    def degree(self) -> int:
        return max((sum(J) for J in self.coeffs), default=0)

    def to_json(self) -> dict:
        return {"k": self.k, "coeffs": [{"j": list(J), "a": c2j(a)} for J, a in self.coeffs.items()],
                "rho": self.rho}

    @classmethod
    def from_json(cls, d: dict) -> "MultiSeries":
        try:
            return cls({tuple(e["j"]): j2c(e["a"]) for e in d["coeffs"]}, float(d["rho"]), int(d["k"]))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"bad multivariate series JSON: {exc}") from exc


# expansion shared by composition and substitution ----------------------

def _combine_pieces(pa: dict, pb: dict, N: int) -> dict:
    out: dict = {}
    for ca, sa in pa.items():
        for cb, sb in pb.items():
            c = ca + cb
            key = _exp_key(c, out)
            prod = xcauchy(sa, sb, N + 1)
            out[key] = xadd(out[key], prod) if key in out else prod
    return out


def _exp_key(c: complex, existing: dict) -> complex:
    for k in existing:
        if abs(k - c) <= 1e-12 * max(1.0, abs(c)):
            return k
    return c


def _r_power(shifted: list, m: int, N: int) -> dict:
    """Pieces of R^m as {exponent: exact h-series}."""
    out = {0j: [ONE]}
    base = {}
    for w, c in shifted:
        key = _exp_key(complex(w), base)
        base[key] = xadd(base[key], c) if key in base else list(c)
    for _ in range(m):
        out = _combine_pieces(out, base, N)
    return out


def _to_float_pieces(acc: dict, exact: bool, precision: Precision) -> list:
    pieces = []
    for c, ser in acc.items():
        if not any(v != ZERO for v in ser):
            continue
        ser = list(ser)
        if exact:
            while len(ser) > 2 and ser[-1] == ZERO:
                ser.pop()
        a0, m = minor_from_exact_h(ser, exact, precision)
        pieces.append((complex(c), m, a0))
    return pieces


@dataclass
class Composition:
    """Pieces (exponent, minor, a_0) of a composed or substituted function."""

    pieces: list
    K: int
    N: int
    tail_bound: CompositionTailBound | None = None
    metadata: dict = field(default_factory=dict)
    sources: tuple = ()
    alpha: float = 0.0
    precision: Precision = DEFAULT_PRECISION
    value_check: object = None

    def by_level(self) -> dict:
        out: dict = {}
        for c, m, a0 in self.pieces:
            out.setdefault(self.metadata.get("levels", {}).get(c, 0), []).append((c, m, a0))
        return out

    def minor(self, level_exponent: complex = 0j) -> Minor:
        for c, m, _ in self.pieces:
            if abs(c - level_exponent) < 1e-12:
                return m
        return Minor.polynomial([0.0])

    def __call__(self, h: complex) -> LaplaceValue:
        h = complex(h)
        if self.value_check is not None:
            self.value_check(h)
        ps = sorted(self.pieces, key=lambda p: (p[0] / h).real)
        lv = mittag_leffler_sum(ps, self.alpha, h, precision=self.precision)
        extra = self.metadata.get("truncation_error")
        err = lv.error_estimate + (extra(h) if callable(extra) else 0.0)
        floor = lv.exp_floor
        L0 = self.metadata.get("L0", math.inf)
        if math.isfinite(L0):
            floor = max(floor, math.exp(-(self.K + 1) * L0 * (1.0 / h).real))
        return LaplaceValue(lv.value, h, err, floor)


def _k_budget(L0: float, h_max: float, tol: float, cap: int = 12) -> int:
    if not math.isfinite(L0):
        return 0
    x = (1.0 / complex(h_max)).real
    K = 0
    while math.exp(-(K + 1) * L0 * x) >= tol and K < cap:
        K += 1
    return K


def compose_small(g: MultiSeries, phis: Sequence[SmallResurgentFunction], K: int | None = None,
                  h_max: complex = 0.3, alpha: float = 0.0,
                  precision: Precision | None = None) -> Composition:
    """g(phi_1, ..., phi_k) as pieces sum_m e^{-...}(G_m * R^m).

    G_m = sum_J a_J prod_i C(J_i, m_i) F_i^{J_i - m_i}, where each phi_i = F_i + R_i
    is split into its origin part and its shifted part.
    """
    precision = precision or DEFAULT_PRECISION
    phis = list(phis)
    if len(phis) != g.k:
        raise ValidationError(f"g has {g.k} variables but {len(phis)} functions were given")
    N = precision.series_truncation
    Fs = [p.origin_h() for p in phis]
    Rs = [p.shifted_h() for p in phis]
    L0 = min((p.L0 for p in phis), default=math.inf)
    if K is None:
        K = _k_budget(L0, h_max, precision.quad_abs_tol)
    # primitive bound for the origin parts
    f_minors = [minor_from_exact_h(F, exact=True)[1] for F in Fs if any(v != ZERO for v in F)]
    tb = None
    if f_minors:
        n_tb = min(max(g.degree, 1), 24)
        tb = primitive_tail_bound(f_minors, n_tb)
        if not tb.converges():
            raise CertificateError("primitive bound does not decrease: tail bound fails to converge")
    jmax = max((max(J) for J in g.coeffs), default=0)
    Fpow = [[xpow(F, n, N) for n in range(jmax + 1)] for F in Fs]
    acc: dict = {}
    levels: dict = {}
    for mvec in itertools.product(range(K + 1), repeat=g.k):
        if sum(mvec) > K:
            continue
        G = [ZERO]
        for J, a in g.coeffs.items():
            if any(j < m for j, m in zip(J, mvec)) or a == 0:
                continue
            term = [to_exact(a)]
            coef = 1
            for i, (j, m) in enumerate(zip(J, mvec)):
                coef *= math.comb(j, m)
                term = xcauchy(term, Fpow[i][j - m], N + 1)
            G = xadd(G, xscale(term, (Fraction(coef), Fraction(0))))
        if not any(v != ZERO for v in G):
            continue
        part = {0j: G}
        for i, m in enumerate(mvec):
            if m:
                part = _combine_pieces(part, _r_power(Rs[i], m, N), N)
        for c, ser in part.items():
            key = _exp_key(c, acc)
            acc[key] = xadd(acc[key], ser) if key in acc else ser
            levels[key] = sum(mvec)
    exact_inputs = True
    pieces = _to_float_pieces(acc, exact_inputs, precision)
    rho = g.rho
    maxa = max((abs(a) for a in g.coeffs.values()), default=0.0)
    deg = g.degree

    def phi_values(h):
        return [complex(p.laplace(h, alpha, precision).value) for p in phis]

    def value_check(h):
        for v in phi_values(h):
            if abs(v) >= rho:
                raise ValidationError(f"|phi(h)| = {abs(v):.3g} exceeds the radius {rho} of g at h = {h}")

    def truncation_error(h):
        # the coefficients of g beyond its stored degree are assumed to obey a_J <= max|a| rho^-|J|
        z = max(abs(v) for v in phi_values(h)) / rho
        if z >= 1:
            return math.inf
        hz = abs(h) ** (N + 1)
        return maxa * rho ** deg * z ** (deg + 1) / (1 - z) + hz

    meta = {"levels": levels, "L0": L0, "truncation_error": truncation_error,
            "level_bounds": _level_bounds(pieces, levels, L0)}
    if tb is not None:
        meta["tail_bound_note"] = "constants fitted from computed primitives"
    return Composition(pieces, K, N, tb, meta, tuple(phis), alpha, precision, value_check)


def _level_bounds(pieces, levels, L0) -> dict:
    """sup of each shifted piece's minor on B(0, k L0 / 2), next to 1/k!."""
    out = {}
    if not math.isfinite(L0):
        return out
    for c, m, _ in pieces:
        k = levels.get(c, 0)
        if k >= 1:
            z = 0.5 * k * L0 * np.exp(2j * math.pi * np.arange(64) / 64)
            out[c] = (float(np.max(np.abs(m(z)))), 1.0 / math.factorial(k))
    return out


def _as_h_series(item) -> list:
    from .core import GevreySeries
    if isinstance(item, Minor):
        return exact_h_coeffs(item)
    if isinstance(item, GevreySeries):
        return [to_exact(a) for a in item.coeffs]
    if isinstance(item, tuple) and len(item) == 2:
        a0, m = item
        c = exact_h_coeffs(m)
        c[0] = to_exact(a0)
        return c
    return [to_exact(a) for a in np.atleast_1d(item)]


@dataclass
class SubstitutionCertificate:
    ratio: float
    constant: float
    sup_E: float

    @property
    def effective_ratio(self) -> float:
        return self.ratio * self.sup_E

    def tail(self, N: int) -> float:
        r = self.effective_ratio
        return self.constant * r ** (N + 1) / (1 - r) if r < 1 else math.inf


def substitute_parameter(phi_family: Sequence, E_fn: SmallResurgentFunction, K: int | None = None,
                         N: int | None = None, h_probe=(0.05, 0.1, 0.15, 0.2, 0.25), h_max: complex = 0.3,
                         alpha: float = 0.0, probe_radius: float = 0.5,
                         precision: Precision | None = None) -> Composition:
    """sum_n E^n Phi_n, with Phi_n the n-th E-Taylor coefficient (an h-series).

    The coefficients must decay geometrically: with q their fitted ratio,
    q * sup |E(h)| over h_probe has to stay below 1/2.
    """
    precision = precision or DEFAULT_PRECISION
    fam = [_as_h_series(x) for x in phi_family]
    N = len(fam) - 1 if N is None else min(N, len(fam) - 1)
    Nh = precision.series_truncation
    norms = []
    z = probe_radius * np.exp(2j * math.pi * np.arange(64) / 64)
    for ser in fam:
        a0, m = minor_from_exact_h(ser, exact=True)
        norms.append(abs(a0) + float(np.max(np.abs(m(z)))))
    norms = np.array(norms)
    nz = np.nonzero(norms > 0)[0]
    if nz.size >= 2:
        q = math.exp(np.polyfit(nz, np.log(norms[nz]), 1)[0])
        Cq = float(np.max(norms[nz] / q ** nz))
    else:
        q, Cq = 0.0, float(norms.max()) if norms.size else 0.0
    supE = max(abs(E_fn.laplace(h, alpha, precision).value) for h in h_probe)
    cert = SubstitutionCertificate(q, Cq, supE)
    if cert.effective_ratio >= 0.5:
        raise CertificateError(f"E-Taylor coefficients decay with ratio {q:.3g}; "
                               f"q * sup|E| = {cert.effective_ratio:.3g} is not below 1/2")
    F = E_fn.origin_h()
    R = E_fn.shifted_h()
    L0 = E_fn.L0
    if K is None:
        K = _k_budget(L0, h_max, precision.quad_abs_tol)
    Fpow = [xpow(F, n, Nh) for n in range(N + 1)]
    acc: dict = {}
    levels: dict = {}
    for k in range(K + 1):
        G = [ZERO]
        for n in range(k, N + 1):
            term = xcauchy(Fpow[n - k], fam[n], Nh + 1)
            G = xadd(G, xscale(term, (Fraction(math.comb(n, k)), Fraction(0))))
        if not any(v != ZERO for v in G):
            continue
        part = {0j: G}
        if k:
            part = _combine_pieces(part, _r_power(R, k, Nh), Nh)
        for c, ser in part.items():
            key = _exp_key(c, acc)
            acc[key] = xadd(acc[key], ser) if key in acc else ser
            levels[key] = k
    pieces = _to_float_pieces(acc, True, precision)
    meta = {"levels": levels, "L0": L0, "certificate": cert,
            "truncation_error": lambda h: cert.tail(N)}
    return Composition(pieces, K, N, None, meta, (E_fn,), alpha, precision)


def interchange_check_sum_convolution(psi: Minor, ms: Sequence[Minor], q: float, t: complex,
                                      N: int | None = None, side: int = 1,
                                      precision: Precision | None = None):
    """psi * (sum of the family) against the sum of psi * member, by quadrature at t."""
    from .laplace import InterchangeResult, certify_geometric, tail_ratio
    ms = list(ms)
    N = len(ms) if N is None else N
    if N > len(ms):
        raise ValidationError("N exceeds the family length")
    certify_geometric(ms[:N], q)
    total = ms[0]
    for m in ms[1:N]:
        total = total + m
    lhs, e0 = convolve_numeric(psi, total, t, side, precision, full_output=True)
    vals, errs = zip(*(convolve_numeric(psi, m, t, side, precision, full_output=True) for m in ms[:N]))
    partial = np.cumsum(vals)
    return InterchangeResult(abs(lhs - partial[-1]), e0 + sum(errs), partial, tail_ratio(partial))


def convolution_singularities(f: Minor, g: Minor, radius: float = math.inf, side: int = 1,
                              precision: Precision | None = None) -> tuple:
    """Points where the deformed segment for f * g cannot be drawn.

    Candidates are probed by running convolve_numeric just off each of them;
    a pinch or an endpoint collision marks a singularity of the convolution.
    """
    fs = [complex(w) for w in f.singular_points()] + [0j]
    gs = [complex(w) for w in g.singular_points()] + [0j]
    found = []
    for a in fs:
        for b in gs:
            t = a + b
            if t == 0 or abs(t) > radius:
                continue
            try:
                convolve_numeric(f, g, t, side, precision)
            except PinchError as exc:
                loc = complex(exc.location)
                if all(abs(loc - p) > 1e-12 for p in found):
                    found.append(loc)
    return tuple(found)
