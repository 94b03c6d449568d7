"""Borel-plane objects.

A Gevrey series sum a_k h^k is carried to the Borel plane as its *minor*
sum_{k>=1} a_k xi^(k-1)/(k-1)!, with the constant a_0 kept aside.  A *major*
is a multivalued function whose Laplace integral along a contour wrapping
its cuts gives back the h-side function; the minor is its jump across the
cut.  All closed-form majors here cut along the ray leaving each singular
point in the resummation direction alpha.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma as _gamma

from .core import (
    DEFAULT_PRECISION,
    TWO_PI,
    FilteredSingularitySet,
    GevreySeries,
    Precision,
    SupportCollisionError,
    ValidationError,
    as_angle,
    c2j,
    j2c,
)

TWO_PI_I = 2j * math.pi


def arg_from(z, alpha: float):
    """Argument of z lifted to [alpha, alpha + 2 pi)."""
    z = np.asarray(z, dtype=complex)
    return alpha + np.mod(np.angle(z) - alpha, TWO_PI)


def log_from(z, alpha: float, sheet: int = 0):
    z = np.asarray(z, dtype=complex)
    return np.log(np.abs(z)) + 1j * (arg_from(z, alpha) + TWO_PI * sheet)


def _is_nonpositive_integer(nu: complex) -> bool:
    nu = complex(nu)
    return nu.imag == 0 and nu.real <= 0 and float(nu.real).is_integer()


def _is_positive_integer(nu: complex) -> bool:
    nu = complex(nu)
    return nu.imag == 0 and nu.real >= 1 and float(nu.real).is_integer()


# exact complex rationals, used by the coefficient-space algebra

def to_exact(z) -> tuple:
    z = complex(z)
    return (Fraction(z.real), Fraction(z.imag))


def from_exact(q) -> complex:
    return complex(float(q[0]), float(q[1]))


# minors ---------------------------------------------------------------

@dataclass(frozen=True)
class BranchCut:
    """Straight cut leaving ``omega`` at angle ``angle``.

    ``jump`` is what a closed-form minor gains when a path crosses the cut
    turning counterclockwise around ``omega``: a constant or a callable.
    """

    omega: complex
    angle: float
    jump: object = 0.0

    def jump_at(self, z):
        if callable(self.jump):
            return self.jump(z)
        return np.full(np.shape(z), complex(self.jump))


def crossings(p0, p1, omega: complex, angle: float):
    """Signed crossings of segments p0 -> p1 with a cut ray (+1 counterclockwise)."""
    rot = cmath.exp(-1j * angle)
    w0 = (np.asarray(p0, dtype=complex) - omega) * rot
    w1 = (np.asarray(p1, dtype=complex) - omega) * rot
    y0, y1 = w0.imag, w1.imag
    straddle = (y0 < 0) != (y1 < 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(straddle, y0 / (y0 - y1), 0.0)
    x = w0.real + t * (w1.real - w0.real)
    hit = straddle & (x > 0)
    return np.where(hit, np.where(y1 >= 0, 1, -1), 0)


class Minor:
    """Borel-plane germ sum b_k xi^k at the origin.

    The Taylor coefficients are always present.  Optionally a closed form with
    declared poles and cuts is attached; otherwise evaluation away from the
    disc of convergence goes through a rational approximant built lazily by
    :class:`resurge.analytic.ContinuationEngine`.

    ``exact`` marks a polynomial germ: the stored coefficients are all there is.
    """

    def __init__(self, coeffs, *, closed_form: Callable | None = None, cuts: Sequence[BranchCut] = (),
                 poles: Sequence[complex] = (), exact: bool = False, exact_coeffs=None,
                 gevrey: tuple | None = None, precision: Precision | None = None, meta: dict | None = None):
        b = np.atleast_1d(np.asarray(coeffs, dtype=complex)).copy()
        if b.ndim != 1 or b.size == 0:
            raise ValidationError("a minor needs at least one Taylor coefficient")
        b.setflags(write=False)
        self.coeffs = b
        self.closed_form = closed_form
        self.cuts = tuple(cuts)
        self.poles = tuple(complex(p) for p in poles)
        self.exact = bool(exact)
        self._exact_coeffs = None if exact_coeffs is None else tuple(exact_coeffs)
        self.gevrey = gevrey
        self.precision = precision or DEFAULT_PRECISION
        self.meta = dict(meta or {})
        self._engine = None

    # construction helpers

    @classmethod
    def polynomial(cls, coeffs, **kw) -> "Minor":
        return cls(coeffs, exact=True, **kw)

    @classmethod
    def from_function(cls, f: Callable, *, coeffs=None, n: int = 40, cuts=(), poles=(),
                      radius: float | None = None, **kw) -> "Minor":
        """Closed-form minor; Taylor data by Cauchy integrals unless ``coeffs`` is given."""
        if coeffs is None:
            sing = [abs(complex(c.omega)) for c in cuts] + [abs(complex(p)) for p in poles]
            R = radius if radius is not None else (min(sing) if sing else math.inf)
            r = 0.9 * R if math.isfinite(R) else 1.0
            m = max(512, 8 * n)
            z = r * np.exp(TWO_PI_I * np.arange(m) / m)
            c = np.fft.fft(f(z)) / m
            coeffs = c[:n] / r ** np.arange(n)
        return cls(coeffs, closed_form=f, cuts=cuts, poles=poles, **kw)

    # basic data

    @property
    def n_coeffs(self) -> int:
        return self.coeffs.size

    @property
    def exact_coeffs(self) -> tuple:
        if self._exact_coeffs is None:
            self._exact_coeffs = tuple(to_exact(b) for b in self.coeffs)
        return self._exact_coeffs

    def h_coeffs(self, a0: complex = 0.0) -> np.ndarray:
        """h-side coefficients a_0, a_1, ... with a_{k+1} = b_k k!."""
        k = np.arange(self.coeffs.size)
        return np.concatenate([[complex(a0)], self.coeffs * _gamma(k + 1.0)])

    def series(self, a0: complex = 0.0) -> GevreySeries:
        return GevreySeries(self.h_coeffs(a0))

    def radius(self) -> float:
        """Radius of convergence: declared singularities, else a root-test estimate."""
        if self.exact:
            return math.inf
        if self.closed_form is not None:
            sing = [abs(c.omega) for c in self.cuts] + [abs(p) for p in self.poles]
            return min(sing) if sing else math.inf
        return root_test_radius(self.coeffs)

    # evaluation

    def taylor(self, xi):
        return np.polynomial.polynomial.polyval(np.asarray(xi, dtype=complex), self.coeffs)

    @property
    def engine(self):
        if self._engine is None:
            from .analytic import ContinuationEngine
            self._engine = ContinuationEngine(self.coeffs, precision=self.precision)
        return self._engine

    def _closed(self, xi, start=0.0):
        val = np.asarray(self.closed_form(xi), dtype=complex)
        for cut in self.cuts:
            n = crossings(start, xi, cut.omega, cut.angle)
            if np.any(n):
                val = val + n * cut.jump_at(xi)
        return val

    def __call__(self, xi):
        """Value on the star-shaped principal sheet (continuation along [0, xi])."""
        xi = np.asarray(xi, dtype=complex)
        if self.closed_form is not None:
            return self._closed(xi)
        if self.exact:
            return self.taylor(xi)
        out = np.empty(xi.shape, dtype=complex)
        ok = self._taylor_ok(xi)
        if np.any(ok):
            out[ok] = self.taylor(xi[ok])
        if not np.all(ok):
            out[~ok] = self.engine(xi[~ok])
        return out

    def _taylor_ok(self, xi):
        R = root_test_radius(self.coeffs)
        r = np.abs(xi) / R if math.isfinite(R) else np.zeros(xi.shape)
        N = self.coeffs.size - 1
        with np.errstate(over="ignore", invalid="ignore"):
            tail = np.abs(self.coeffs[-1]) * np.abs(xi) ** N
            if N >= 1:
                tail = np.maximum(tail, np.abs(self.coeffs[-2]) * np.abs(xi) ** (N - 1))
        scale = np.maximum(1.0, np.abs(self.coeffs[0]))
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            est = tail / np.maximum(1.0 - r, 1e-300)
        return (r < 0.9) & (est < 1e-15 * scale)

    def evaluate(self, xi, side: int = 0):
        """Lateral value: side=+1 is just to the right of the ray through xi
        (clockwise), side=-1 just to the left, side=0 the star value."""
        xi = np.asarray(xi, dtype=complex)
        if side == 0:
            return self(xi)
        return self(xi * np.exp(-1j * side * 1e-13))

    def continuation_error(self, xi):
        """Estimated error of the value at xi (zero where Taylor or closed form is used)."""
        xi = np.asarray(xi, dtype=complex)
        if self.closed_form is not None or self.exact:
            return np.zeros(xi.shape)
        err = np.zeros(xi.shape)
        ok = self._taylor_ok(xi)
        if not np.all(ok):
            err[~ok] = self.engine.error(xi[~ok])
        return err

    # singularities

    def singular_points(self) -> tuple:
        if self.exact:
            return ()
        if self.closed_form is not None:
            return tuple(self.poles) + tuple(complex(c.omega) for c in self.cuts)
        return tuple(self.engine.stable_poles())

    @property
    def singularities(self) -> FilteredSingularitySet:
        from .analytic import levels_from_points
        return levels_from_points(self.singular_points(), self.precision)

    # linear structure

    def _combine(self, other: "Minor", sign: complex) -> "Minor":
        n = max(self.n_coeffs, other.n_coeffs)
        if not (self.exact and other.exact):
            n = min(self.n_coeffs, other.n_coeffs)
        a = np.zeros(n, complex)
        b = np.zeros(n, complex)
        a[:min(n, self.n_coeffs)] = self.coeffs[:n]
        b[:min(n, other.n_coeffs)] = other.coeffs[:n]
        cf = None
        if self.closed_form is not None and other.closed_form is not None \
                and not self.cuts and not other.cuts:
            f1, f2 = self.closed_form, other.closed_form
            cf = lambda z: f1(z) + sign * f2(z)  # noqa: E731
            return Minor(a + sign * b, closed_form=cf, poles=self.poles + other.poles,
                         precision=self.precision)
        return Minor(a + sign * b, exact=self.exact and other.exact, precision=self.precision)

    def __add__(self, other):
        if not isinstance(other, Minor):
            return NotImplemented
        return self._combine(other, 1.0)

    def __sub__(self, other):
        if not isinstance(other, Minor):
            return NotImplemented
        return self._combine(other, -1.0)

    def scale(self, c: complex) -> "Minor":
        c = complex(c)
        if self.closed_form is not None:
            f = self.closed_form
            cuts = tuple(BranchCut(cut.omega, cut.angle,
                                   (lambda z, j=cut: c * j.jump_at(z))) for cut in self.cuts)
            return Minor(c * self.coeffs, closed_form=lambda z: c * f(z), cuts=cuts,
                         poles=self.poles, precision=self.precision)
        return Minor(c * self.coeffs, exact=self.exact, precision=self.precision)

    def __mul__(self, c):
        if isinstance(c, (int, float, complex, np.number)):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    def with_precision(self, precision: Precision) -> "Minor":
        return Minor(self.coeffs, closed_form=self.closed_form, cuts=self.cuts, poles=self.poles,
                     exact=self.exact, exact_coeffs=self._exact_coeffs, gevrey=self.gevrey,
                     precision=precision, meta=self.meta)

    def __repr__(self):
        kind = "closed" if self.closed_form is not None else ("poly" if self.exact else "germ")
        head = ", ".join(f"{c:.4g}" for c in self.coeffs[:4])
        return f"Minor<{kind}>[{head}{', ...' if self.n_coeffs > 4 else ''}]"


def root_test_radius(coeffs) -> float:
    b = np.abs(np.asarray(coeffs))
    n = b.size
    k = np.arange(n)
    sel = (k >= max(1, n // 2)) & (b > 0)
    if not np.any(sel):
        if np.any(b[1:] > 0) and n > 1:
            sel = (k >= 1) & (b > 0)
        else:
            return math.inf
    rho = np.max(np.exp(np.log(b[sel]) / k[sel]))
    if rho == 0:
        return math.inf
    # geometric decay faster than anything representable: treat as entire
    if rho < 1e-8:
        return math.inf
    return 1.0 / rho


def minor_of_series(s: GevreySeries, exact: bool = False, precision: Precision | None = None) -> Minor:
    """b_k = a_{k+1}/k!.  The constant a_0 is not part of the minor."""
    if len(s) < 2:
        raise ValidationError("series must have a coefficient beyond a_0")
    a = s.coeffs[1:]
    k = np.arange(a.size)
    b = a / _gamma(k + 1.0)
    ex = None
    if np.all(a.real == np.round(a.real)) and np.all(a.imag == np.round(a.imag)):
        ex = tuple((Fraction(int(x.real)) / math.factorial(j), Fraction(int(x.imag)) / math.factorial(j))
                   for j, x in enumerate(a))
    return Minor(b, exact=exact, exact_coeffs=ex, gevrey=s.gevrey_bound, precision=precision)


# majors ---------------------------------------------------------------

class Major:
    """Black-box multivalued function of (xi, sheet).

    ``sheet`` counts extra counterclockwise turns around the singular points;
    closed forms add 2 pi to every argument per sheet.
    """

    def __init__(self, evaluator: Callable, support: Sequence[complex] = (), alpha: float = 0.0,
                 decay_certificate=None, precision: Precision | None = None, label: str = ""):
        self.evaluator = evaluator
        self.support = tuple(complex(w) for w in support)
        self.alpha = as_angle(alpha)
        self.decay_certificate = decay_certificate
        self.precision = precision or DEFAULT_PRECISION
        self.label = label

    def __call__(self, xi, sheet: int = 0):
        xi = np.asarray(xi, dtype=complex)
        return np.asarray(self.evaluator(xi, sheet), dtype=complex)

    @property
    def singularities(self) -> FilteredSingularitySet:
        from .analytic import levels_from_points
        return levels_from_points(self.support, self.precision)

    def __add__(self, other):
        if not isinstance(other, Major):
            return NotImplemented
        f, g = self.evaluator, other.evaluator
        return Major(lambda z, s: f(z, s) + g(z, s), self.support + other.support, self.alpha,
                     precision=self.precision)

    def scale(self, c: complex) -> "Major":
        f = self.evaluator
        c = complex(c)
        return Major(lambda z, s: c * f(z, s), self.support, self.alpha, precision=self.precision)

    def __mul__(self, c):
        if isinstance(c, (int, float, complex, np.number)):
            return self.scale(c)
        return NotImplemented

    __rmul__ = __mul__

    def cauchy_riemann_defect(self, points, step: float = 1e-5) -> float:
        """Max |df/dx + i df/dy| / |df/dx| by central differences (0 for analytic f)."""
        z = np.asarray(points, dtype=complex)
        fx = (self(z + step) - self(z - step)) / (2 * step)
        fy = (self(z + 1j * step) - self(z - 1j * step)) / (2 * step)
        return float(np.max(np.abs(fx + 1j * fy) / np.maximum(np.abs(fx), 1e-300)))

    def __repr__(self):
        return f"Major({self.label or 'custom'}, support={list(self.support)})"


def _power_major_values(zeta, nu: complex, alpha: float, sheet: int):
    nu = complex(nu)
    if _is_positive_integer(nu):
        n = int(nu.real)
        return zeta ** (n - 1) * log_from(zeta, alpha, sheet) / (TWO_PI_I * math.factorial(n - 1))
    theta = arg_from(zeta, alpha) + TWO_PI * sheet
    pw = np.exp((nu - 1) * (np.log(np.abs(zeta)) + 1j * (theta - math.pi)))
    return -pw / (2j * cmath.sin(math.pi * nu) * complex(_gamma(nu)))


def major_of_power(nu: complex, alpha: float = 0.0, omega: complex = 0.0) -> Major:
    """Major of h^nu (times e^{-omega/h} when omega != 0), cut along the alpha-ray."""
    if _is_nonpositive_integer(nu):
        raise ValidationError("nu must not be a nonpositive integer")
    a = as_angle(alpha)
    w = complex(omega)
    return Major(lambda z, s: _power_major_values(z - w, nu, a, s), (w,), a,
                 label=f"h^{complex(nu):g}")


def major_of_log(alpha: float = 0.0) -> Major:
    """Major of log h: (log(-xi) + euler_gamma) / (2 pi i xi), log(-xi) cut along the alpha-ray."""
    a = as_angle(alpha)

    def ev(z, s):
        lg = np.log(np.abs(z)) + 1j * (arg_from(z, a) + TWO_PI * s - math.pi)
        return (lg + np.euler_gamma) / (TWO_PI_I * z)

    return Major(ev, (0j,), a, label="log h")


def pole_major(omega: complex = 0.0, residue: complex = 1.0) -> Major:
    w, r = complex(omega), complex(residue)
    return Major(lambda z, s: r / (TWO_PI_I * (z - w)), (w,), 0.0, label="pole")


# symbol terms and microfunctions --------------------------------------

@dataclass(frozen=True, eq=False)
class SymbolTerm:
    """e^{-c/h} h^nu (a_0 + a_1 h + ...); nu = None means nu = 0."""

    c: complex
    series: GevreySeries
    nu: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        if self.nu is not None:
            nu = complex(self.nu)
            if nu.imag == 0 and nu.real < 0 and float(nu.real).is_integer():
                raise ValidationError("power offset must not be a negative integer")
            object.__setattr__(self, "nu", nu)

    def to_json(self) -> dict:
        return {"c": c2j(self.c), "nu": None if self.nu is None else c2j(self.nu),
                "series": self.series.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "SymbolTerm":
        nu = d.get("nu")
        return cls(j2c(d["c"]), GevreySeries.from_json(d["series"]), None if nu is None else j2c(nu))


@dataclass(frozen=True, eq=False)
class Microfunction:
    """Singular data at omega: residue/(2 pi i (xi - omega)) plus
    sum_i a_i (xi - omega)^(nu+i-1) log(xi - omega) / (2 pi i Gamma(nu + i))
    with a = log_series coefficients (nu = 1 is the plain log family).
    For non-integer nu the log factor is replaced by the sine-form power major."""

    omega: complex
    residue: complex = 0.0
    log_series: GevreySeries | None = None
    nu: complex = 1.0

    def __post_init__(self):
        object.__setattr__(self, "omega", complex(self.omega))
        object.__setattr__(self, "residue", complex(self.residue))
        object.__setattr__(self, "nu", complex(self.nu))
        if self.log_series is None:
            object.__setattr__(self, "log_series", GevreySeries([0.0]))
        if _is_nonpositive_integer(self.nu):
            raise ValidationError("nu must not be a nonpositive integer")

    @property
    def log_coeffs(self) -> np.ndarray:
        return self.log_series.coeffs

    @property
    def integer_type(self) -> bool:
        return _is_positive_integer(self.nu)

    @property
    def is_small(self) -> bool:
        return self.residue == 0 and (self.nu.real > 0 or not np.any(self.log_coeffs))

    def major_values(self, xi, alpha: float = 0.0, sheet: int = 0):
        z = np.asarray(xi, dtype=complex) - self.omega
        out = self.residue / (TWO_PI_I * z) if self.residue != 0 else np.zeros(z.shape, complex)
        for i, a in enumerate(self.log_coeffs):
            if a != 0:
                out = out + a * _power_major_values(z, self.nu + i, alpha, sheet)
        return out

    def major(self, alpha: float = 0.0) -> Major:
        a = as_angle(alpha)
        return Major(lambda z, s: self.major_values(z, a, s), (self.omega,), a, label="microfunction")

    def check_small(self, alpha: float = 0.0, radii=None, rays: int = 7) -> bool:
        """Probe |zeta * major| -> 0 along rays away from the cut."""
        radii = np.logspace(-2, -7, 6) if radii is None else np.asarray(radii)
        a = as_angle(alpha)
        angles = a + TWO_PI * (np.arange(rays) + 0.5) / rays
        worst = []
        for r in radii:
            z = r * np.exp(1j * angles)
            worst.append(np.max(np.abs(z * self.major_values(self.omega + z, a))))
        worst = np.array(worst)
        return bool(worst[-1] < 1e-3 and np.all(np.diff(worst) <= 1e-14 + 1e-9 * worst[:-1]))

    def same_as(self, other: "Microfunction", tol: float = 1e-8) -> bool:
        if abs(self.omega - other.omega) > tol or abs(self.residue - other.residue) > tol:
            return False
        if abs(self.nu - other.nu) > tol:
            return False
        a, b = self.log_coeffs, other.log_coeffs
        n = max(a.size, b.size)
        aa = np.zeros(n, complex)
        bb = np.zeros(n, complex)
        aa[:a.size] = a
        bb[:b.size] = b
        return bool(np.all(np.abs(aa - bb) <= tol * np.maximum(1.0, np.abs(bb))))

    def to_json(self) -> dict:
        d = {"omega": c2j(self.omega), "residue": c2j(self.residue),
             "log_series": self.log_series.to_json()}
        if self.nu != 1:
            d["nu"] = c2j(self.nu)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Microfunction":
        ls = d.get("log_series")
        return cls(j2c(d["omega"]), j2c(d.get("residue", [0, 0])),
                   None if ls is None else GevreySeries.from_json(ls), j2c(d.get("nu", [1, 0])))


class ResurgentSymbol:
    """Finitely many microfunctions at distinct points."""

    def __init__(self, terms, tol: float = 1e-6):
        if isinstance(terms, dict):
            items = list(terms.values())
        else:
            items = list(terms)
        pts = [m.omega for m in items]
        for i in range(len(pts)):
            for j in range(i):
                if abs(pts[i] - pts[j]) <= tol:
                    raise SupportCollisionError(f"support points {pts[j]} and {pts[i]} collide")
        self.terms = {m.omega: m for m in items}
        self.tol = tol

    @property
    def support(self) -> tuple:
        return tuple(self.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms.values())

    def same_as(self, other: "ResurgentSymbol", tol: float = 1e-8) -> bool:
        if len(self) != len(other):
            return False
        for m in self:
            match = [o for o in other if abs(o.omega - m.omega) <= max(tol, 1e-10)]
            if len(match) != 1 or not m.same_as(match[0], tol):
                return False
        return True

    def to_json(self) -> dict:
        return {"terms": [m.to_json() for m in self]}

    @classmethod
    def from_json(cls, d: dict) -> "ResurgentSymbol":
        return cls([Microfunction.from_json(t) for t in d.get("terms", [])])

    def __repr__(self):
        return f"ResurgentSymbol({list(self.terms.values())!r})"


def borel_transform(t: SymbolTerm) -> Microfunction:
    """Formal Borel transform of one transseries block."""
    a = t.series.coeffs
    nu = 0 if t.nu is None else t.nu
    if nu == 0:
        logs = GevreySeries(a[1:]) if a.size > 1 else None
        return Microfunction(t.c, a[0], logs, 1.0)
    return Microfunction(t.c, 0.0, GevreySeries(a), nu)
