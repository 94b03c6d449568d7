"""Continuation of minors, singularity detection, variation and its inverse,
and the split of a major into singular data at each of its singular points.

Continuation beyond the disc of convergence uses robust SVD-based Pade
approximants (Gonnet, Guttel and Trefethen).  Poles that survive a change of
approximant order are reported as singularities; the rest are treated as
artifacts of the approximation.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.linalg import toeplitz

from .borel import (
    TWO_PI_I,
    BranchCut,
    Major,
    Microfunction,
    Minor,
    ResurgentSymbol,
    crossings,
    log_from,
)
from .core import (
    DEFAULT_PRECISION,
    CertificateError,
    TWO_PI,
    ContinuationError,
    ContourCollisionError,
    FilteredSingularitySet,
    GevreySeries,
    InsufficientCoefficientsError,
    NumericalError,
    Precision,
    SupportCollisionError,
    UnresolvableSingularityError,
    ValidationError,
    as_angle,
)

SPURIOUS_RESIDUE = 1e-10


def robust_pade(c, m: int, n: int, tol: float = 1e-14):
    """Type (m, n) Pade approximant of the Taylor data ``c``.

    Returns ascending coefficient arrays (a, b) with b[0] = 1.  Degrees are
    reduced whenever the data are consistent with a lower type.
    """
    c = np.asarray(c, dtype=complex)[: m + n + 1]
    if c.size < m + n + 1:
        c = np.concatenate([c, np.zeros(m + n + 1 - c.size, complex)])
    ts = tol * np.linalg.norm(c)
    if np.all(np.abs(c[: m + 1]) <= ts):
        return np.zeros(1, complex), np.ones(1, complex)
    row = np.zeros(n + 1, complex)
    row[0] = c[0]
    while True:
        if n == 0:
            a = c[: m + 1].copy()
            b = np.ones(1, complex)
            break
        Z = toeplitz(c[: m + n + 1], row[: n + 1])
        C = Z[m + 1: m + n + 1, :]
        s = np.linalg.svd(C, compute_uv=False)
        rho = int(np.sum(s > ts))
        if rho == n:
            _, _, Vh = np.linalg.svd(C)
            b = Vh[-1].conj()
            # reweighting sharpens the null vector when b has tiny entries
            D = np.diag(np.abs(b) + math.sqrt(np.finfo(float).eps))
            Q, _ = np.linalg.qr((C @ D).conj().T, mode="complete")
            b = D @ Q[:, n]
            b = b / np.linalg.norm(b)
            a = Z[: m + 1, : n + 1] @ b
            break
        m -= n - rho
        n = rho
    nz = np.nonzero(np.abs(b) > tol)[0]
    lam = nz[0] if nz.size else 0
    b = b[lam:]
    a = a[lam:]
    ia = np.nonzero(np.abs(a) > ts)[0]
    a = a[: ia[-1] + 1] if ia.size else np.zeros(1, complex)
    ib = np.nonzero(np.abs(b) > tol)[0]
    b = b[: ib[-1] + 1]
    return a / b[0], b / b[0]


@dataclass(frozen=True)
class DetectedPole:
    location: complex
    residue: complex
    confidence: float


class _Rational:
    def __init__(self, a, b, scale):
        self.a, self.b, self.scale = a, b, scale

    def __call__(self, xi):
        u = np.asarray(xi, dtype=complex) / self.scale
        P = np.polynomial.polynomial
        return P.polyval(u, self.a) / P.polyval(u, self.b)

    def poles(self):
        if self.b.size < 2:
            return np.zeros(0, complex), np.zeros(0, complex)
        P = np.polynomial.polynomial
        u = P.polyroots(self.b)
        db = P.polyder(self.b)
        res = P.polyval(u, self.a) / P.polyval(u, db) * self.scale
        return u * self.scale, res


class ContinuationEngine:
    """Rational continuation of a Taylor germ, with pole bookkeeping.

    Two approximants are built, of types (L, M) and (L-2, M-2); poles of the
    first that reappear in the second within ``pole_cluster_tol`` (relative
    to their size) and carry a non-negligible residue are kept.
    """

    def __init__(self, coeffs, precision: Precision | None = None, order=None):
        self.precision = precision or DEFAULT_PRECISION
        c = np.asarray(coeffs, dtype=complex)
        self.coeffs = c
        n = c.size
        Lp, Mp = order or self.precision.pade_order
        M = min(Mp, (n - 1) // 2)
        L = min(Lp, n - 1 - M)
        self.order = (L, M)
        R = _radius_guess(c)
        self.scale = R if math.isfinite(R) else 1.0
        u = c * self.scale ** np.arange(n)
        tol = 1e-14
        self.primary = _Rational(*robust_pade(u, L, M, tol), self.scale)
        L2, M2 = max(L - 2, 0), max(M - 2, 0)
        self.secondary = _Rational(*robust_pade(u, L2, M2, tol), self.scale)
        self._fn_scale = float(np.max(np.abs(u))) if n else 1.0
        self._poles = None

    def __call__(self, xi):
        return self.primary(xi)

    def error(self, xi):
        return np.abs(self.primary(xi) - self.secondary(xi))

    def _classify(self):
        if self._poles is not None:
            return self._poles
        p1, r1 = self.primary.poles()
        p2, _ = self.secondary.poles()
        tol = self.precision.pole_cluster_tol
        stable, unstable = [], []
        for p, r in zip(p1, r1):
            if abs(r) < SPURIOUS_RESIDUE * max(1.0, self._fn_scale):
                continue
            drift = np.min(np.abs(p2 - p)) / max(1.0, abs(p)) if p2.size else math.inf
            conf = float(max(0.0, 1.0 - drift / tol)) if math.isfinite(drift) else 0.0
            rec = DetectedPole(complex(p), complex(r), conf)
            (stable if drift <= tol else unstable).append(rec)
        stable.sort(key=lambda d: abs(d.location))
        self._poles = (stable, unstable)
        return self._poles

    @property
    def detected(self) -> list:
        return list(self._classify()[0])

    @property
    def unstable(self) -> list:
        return list(self._classify()[1])

    def stable_poles(self) -> list:
        return [d.location for d in self.detected]


def _radius_guess(c) -> float:
    from .borel import root_test_radius
    return root_test_radius(c)


def levels_from_points(points, precision: Precision | None = None) -> FilteredSingularitySet:
    precision = precision or DEFAULT_PRECISION
    slack = 10.0 * precision.detour_radius
    pts = sorted((complex(p) for p in points), key=abs)
    return FilteredSingularitySet.cumulative([(abs(p) + slack, (p,)) for p in pts],
                                             precision.pole_cluster_tol)


def detect_singularities(m: Minor, precision: Precision | None = None) -> FilteredSingularitySet:
    """Cluster-stable poles of the rational continuation of ``m``."""
    precision = precision or m.precision
    if m.exact:
        return FilteredSingularitySet.empty(precision.pole_cluster_tol)
    need = 2 * precision.pade_order[1]
    if m.n_coeffs < need:
        raise InsufficientCoefficientsError(f"need {need} Taylor coefficients, have {m.n_coeffs}")
    eng = ContinuationEngine(m.coeffs, precision)
    return levels_from_points(eng.stable_poles(), precision)


def _dist_to_segment(z, a, b):
    z, a, b = complex(z), complex(a), complex(b)
    d = b - a
    if d == 0:
        return abs(z - a)
    t = min(1.0, max(0.0, ((z - a) * d.conjugate()).real / abs(d) ** 2))
    return abs(z - (a + t * d))


def continue_minor(m: Minor, path, precision: Precision | None = None) -> complex:
    """Value of the continuation of ``m`` along the polyline ``path`` (starting at 0)."""
    precision = precision or m.precision
    pts = [complex(p) for p in path]
    if not pts or pts[0] != 0:
        pts = [0j] + pts
    tol = precision.pole_cluster_tol
    sing = m.singular_points()
    for a, b in zip(pts[:-1], pts[1:]):
        for w in sing:
            if _dist_to_segment(w, a, b) <= tol:
                raise ContinuationError(f"path passes through singularity {w}")
    end = pts[-1]
    if m.closed_form is not None:
        val = complex(np.asarray(m.closed_form(np.array([end])))[0])
        for cut in m.cuts:
            n = int(sum(int(crossings(a, b, cut.omega, cut.angle)) for a, b in zip(pts[:-1], pts[1:])))
            if abs(n) > precision.sheet_depth:
                raise ContinuationError(f"winding {n} around {cut.omega} exceeds sheet depth")
            if n:
                val += n * complex(np.asarray(cut.jump_at(np.array([end])))[0])
        return val
    if not m.exact:
        for d in m.engine.unstable:
            near = 0.1 * (1.0 + abs(d.location))
            for a, b in zip(pts[:-1], pts[1:]):
                if _dist_to_segment(d.location, a, b) <= near:
                    raise ContinuationError(
                        f"rational continuation unreliable near {d.location:.4g} (spurious pole)")
    return complex(m(np.array([end]))[0])


def variation(phi: Microfunction) -> Minor:
    """var = (one counterclockwise turn) - (identity), as a germ at omega.

    The pole part is single valued and drops out; it stays available as
    ``phi.residue``.  The returned minor is in the local variable xi - omega.
    """
    if not phi.integer_type:
        raise ValidationError("variation of a non-integer power is not a Taylor germ")
    nu = int(phi.nu.real)
    a = phi.log_coeffs
    b = np.zeros(nu - 1 + a.size, complex)
    for i, ai in enumerate(a):
        b[nu - 1 + i] = ai / math.factorial(nu - 1 + i)
    if b.size == 0:
        b = np.zeros(1, complex)
    return Minor.polynomial(b, meta={"omega": phi.omega, "residue": phi.residue})


def major_variation(M: Major, zeta, sheet: int = 0):
    return M(zeta, sheet + 1) - M(zeta, sheet)


class BemolMajor(Major):
    """Cauchy integral (1/2 pi i) int_0^eta1 g(eta) / (zeta - eta) d eta.

    Its jump across the segment [0, eta1] is g; ``sheet = k`` adds k
    counterclockwise turns around 0 (only felt for |zeta| < |eta1|).
    """

    def __init__(self, g: Minor, eta1: complex, precision: Precision | None = None):
        self.g = g
        self.eta1 = complex(eta1)
        super().__init__(self._evaluate, (0j, self.eta1), cmath.phase(self.eta1), precision=precision,
                         label="bemol")

    def _principal(self, zeta: complex) -> complex:
        e1 = self.eta1
        pr = self.precision

        def f(s):
            eta = s * e1
            return complex(self.g(np.array([eta]))[0]) * e1 / (zeta - eta)

        s0 = ((zeta / e1).real)
        d = abs((zeta / e1).imag)
        pts = []
        if -1.0 < s0 < 2.0:
            c = min(max(s0, 0.0), 1.0)
            for k in range(40):
                w = max(d, 1e-300) * 2.0 ** k
                if w > 1:
                    break
                for p in (c - w, c + w):
                    if 0 < p < 1:
                        pts.append(p)
            if 0 < c < 1:
                pts.append(c)
        val, _ = quad(f, 0.0, 1.0, complex_func=True, points=sorted(set(pts)) or None,
                      epsabs=pr.quad_abs_tol, epsrel=pr.quad_rel_tol, limit=400)
        return val / TWO_PI_I

    def _loop(self, zeta: complex) -> complex:
        sing = [abs(zeta - w) for w in self.g.singular_points()]
        r = 0.5 * min([abs(zeta), abs(zeta - self.eta1)] + sing)
        n = 64
        eta = zeta + r * np.exp(-TWO_PI_I * np.arange(n) / n)  # clockwise
        deta = -TWO_PI_I / n * (eta - zeta)
        return complex(np.sum(self.g(eta) / (zeta - eta) * deta)) / TWO_PI_I

    def _evaluate(self, zeta, sheet):
        z = np.atleast_1d(np.asarray(zeta, dtype=complex))
        out = np.empty(z.shape, complex)
        for idx, zz in np.ndenumerate(z):
            v = self._principal(complex(zz))
            if sheet and abs(zz) < abs(self.eta1):
                v += sheet * self._loop(complex(zz))
            out[idx] = v
        return out.reshape(np.shape(zeta))


def bemol(g: Minor, eta1: complex | None = None, alpha: float = 0.0,
          precision: Precision | None = None) -> BemolMajor:
    """Inverse of the variation: a major whose variation at 0 is ``g``."""
    precision = precision or g.precision
    sing = g.singular_points()
    if eta1 is None:
        d = min((abs(w) for w in sing), default=2.0)
        eta1 = 0.5 * d * cmath.exp(1j * as_angle(alpha))
    eta1 = complex(eta1)
    if eta1 == 0:
        raise ValidationError("eta1 must be nonzero")
    for w in sing:
        if _dist_to_segment(w, 0, eta1) <= precision.pole_cluster_tol:
            raise ContourCollisionError(f"segment [0, eta1] hits singularity {w}")
    if not np.all(np.isfinite(g.coeffs)):
        raise ValidationError("g is not integrable at 0")
    return BemolMajor(g, eta1, precision)


def _ray_distance(z, omega, alpha):
    w = (complex(z) - complex(omega)) * cmath.exp(-1j * alpha)
    return abs(w) if w.real < 0 else abs(w.imag)


def decompose_major(M: Major, alpha: float = 0.0, precision: Precision | None = None,
                    support=None, n_log: int = 12, n_analytic: int = 24,
                    tol: float = 1e-8) -> ResurgentSymbol:
    """Residue and log-coefficient series at every singular point of ``M``.

    Near omega the major is modelled as
    r / (2 pi i z) + A(z) log(z) / (2 pi i) + H(z),  z = xi - omega,
    with A, H polynomials.  The unknowns are fitted by least squares on two
    circles around omega; a poor fit means the singularity is outside this class.
    """
    precision = precision or M.precision
    a = as_angle(alpha)
    pts = tuple(complex(w) for w in (M.support if support is None else support))
    if not pts:
        raise ValidationError("major has no declared singular points")
    for i, w in enumerate(pts):
        for j, v in enumerate(pts):
            if i != j and _ray_distance(v, w, a) <= precision.pole_cluster_tol:
                raise ValidationError(f"singularity {v} lies on the cut of {w}")
    terms = []
    n_ang = 96
    theta = a + TWO_PI * (np.arange(n_ang) + 0.5) / n_ang
    for w in pts:
        others = [abs(v - w) for v in pts if v != w] + \
                 [_ray_distance(w, v, a) for v in pts if v != w]
        rho = 0.2 * min(others + [2.5])
        z = np.concatenate([rho * np.exp(1j * theta), 0.5 * rho * np.exp(1j * theta)])
        u = z / rho
        vals = M(w + z)
        logs = log_from(z, a)
        norm = max(np.linalg.norm(vals), 1e-300)
        analytic = [u ** k for k in range(n_analytic)]
        best = None
        # smallest log order that fits keeps the high coefficients out of the noise
        for nl in range(n_log + 1):
            cols = [1.0 / (TWO_PI_I * u)] + [u ** k * logs / TWO_PI_I for k in range(nl)] + analytic
            A = np.stack(cols, axis=1)
            sol, *_ = np.linalg.lstsq(A, vals, rcond=None)
            resid = np.linalg.norm(A @ sol - vals) / norm
            if best is None or resid < best[1]:
                best = (nl, resid, sol)
            if resid <= 1e-11:
                break
        nl, resid, sol = best
        if not np.isfinite(resid) or resid > tol:
            raise UnresolvableSingularityError(
                f"singularity at {w} is not pole + log x analytic (fit residual {resid:.2e})")
        scale = max(np.max(np.abs(sol)), 1e-300)
        sol = np.where(np.abs(sol) < 1e-11 * scale, 0.0, sol)
        r = sol[0] * rho
        c = sol[1:1 + nl] / rho ** np.arange(nl)
        logc = np.array([c[k] * math.factorial(k) for k in range(nl)], complex)
        nz = np.nonzero(logc)[0]
        logc = logc[: nz[-1] + 1] if nz.size else np.zeros(1, complex)
        terms.append(Microfunction(w, r, GevreySeries(logc)))
    return ResurgentSymbol(terms, precision.pole_cluster_tol)


def reconstruct_major(sigma: ResurgentSymbol, alpha: float = 0.0,
                      precision: Precision | None = None) -> Major:
    """Sum of closed-form pole/log majors, each cut along its alpha-ray."""
    precision = precision or DEFAULT_PRECISION
    a = as_angle(alpha)
    pts = list(sigma.support)
    for i, w in enumerate(pts):
        for j, v in enumerate(pts):
            if i != j and _ray_distance(v, w, a) <= precision.pole_cluster_tol:
                raise SupportCollisionError(f"support point {v} lies on the cut of {w}")
    mfs = list(sigma)

    def ev(z, s):
        out = np.zeros(np.shape(z), complex)
        for m in mfs:
            out = out + m.major_values(z, a, s)
        return out

    return Major(ev, pts, a, precision=precision, label="reconstructed")


def log_cut(omega: complex, angle: float, coeff: complex = 1.0) -> BranchCut:
    """Cut of coeff * log(xi - omega) type: crossing counterclockwise adds 2 pi i coeff."""
    return BranchCut(complex(omega), angle, TWO_PI_I * complex(coeff))



def add_symbols(a: ResurgentSymbol, b: ResurgentSymbol, tol: float = 1e-10) -> ResurgentSymbol:
    """Termwise sum; microfunctions at the same point must share nu."""
    terms = {m.omega: m for m in a}
    for m in b:
        key = next((w for w in terms if abs(w - m.omega) <= tol), None)
        if key is None:
            terms[m.omega] = m
            continue
        o = terms[key]
        if abs(o.nu - m.nu) > tol:
            raise ValidationError(f"cannot add microfunctions of different type at {key}")
        x, y = o.log_coeffs, m.log_coeffs
        n = max(x.size, y.size)
        c = np.zeros(n, complex)
        c[:x.size] += x
        c[:y.size] += y
        terms[key] = Microfunction(key, o.residue + m.residue, GevreySeries(c), o.nu)
    return ResurgentSymbol(list(terms.values()))


def symbol_norm(sigma: ResurgentSymbol) -> float:
    return float(sum(abs(m.residue) + np.sum(np.abs(m.log_coeffs)) for m in sigma))


def interchange_check_sum_reconstruction(sigmas, q: float, xi, alpha: float = 0.0, N: int | None = None,
                                         precision: Precision | None = None):
    """Reconstruction of the summed symbol against the sum of reconstructions, at probe points xi."""
    from .laplace import InterchangeResult, geometric_ratio, tail_ratio
    sigmas = list(sigmas)
    N = len(sigmas) if N is None else N
    if N > len(sigmas):
        raise ValidationError("N exceeds the family length")
    norms = [symbol_norm(s) for s in sigmas[:N]]
    ratio = geometric_ratio(norms)
    if ratio > q * (1 + 1e-6) + 1e-6:
        raise CertificateError(f"symbol norms decay with ratio {ratio:.4g} > {q}")
    xi = np.atleast_1d(np.asarray(xi, dtype=complex))
    total = sigmas[0]
    for s in sigmas[1:N]:
        total = add_symbols(total, s)
    lhs = reconstruct_major(total, alpha, precision)(xi)
    parts = [reconstruct_major(s, alpha, precision)(xi) for s in sigmas[:N]]
    rhs = np.sum(parts, axis=0)
    scale = np.sum([np.abs(p) for p in parts], axis=0) + np.abs(lhs)
    err = float(np.max(64 * np.finfo(float).eps * scale))
    partial = np.cumsum([p[0] for p in parts])
    return InterchangeResult(float(np.max(np.abs(lhs - rhs))), err, partial, tail_ratio(partial))


def nearest_singularity(m: Minor, n_fit: int = 12) -> complex:
    """Domb-Sykes estimate: b_n / b_{n-1} = (1 - g/n + c/n^2) / omega, fitted in 1/n."""
    b = np.asarray(m.coeffs, dtype=complex)
    n = np.arange(1, b.size)
    keep = (b[:-1] != 0) & (b[1:] != 0)
    if np.sum(keep) < 4:
        raise InsufficientCoefficientsError("too few nonzero coefficients for a ratio fit")
    r = b[1:][keep] / b[:-1][keep]
    x = 1.0 / n[keep]
    x, r = x[-n_fit:], r[-n_fit:]
    A = np.vstack([np.ones_like(x), x, x * x]).T
    coef, *_ = np.linalg.lstsq(A.astype(complex), r, rcond=None)
    if abs(coef[0]) < 1e-300:
        raise NumericalError("ratio fit gives no finite singularity")
    return complex(1.0 / coef[0])
