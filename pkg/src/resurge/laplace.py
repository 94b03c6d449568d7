"""Contours, Laplace integrals of majors, lateral Borel sums of minors,
bounded (Cauchy-transform) representatives and Mittag-Leffler sums.

Infinite rays are integrated in the variable tau = Re(xi/h) - Re(start/h),
which turns the exponential weight into e^{-tau} up to a phase, and are cut
where Re(xi/h) reaches 40.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .borel import TWO_PI_I, Major, Minor
from .core import (
    TWO_PI,
    Arc,
    CertificateError,
    ContinuationError,
    ContourCollisionError,
    DivergentDirectionError,
    Precision,
    SectorError,
    ValidationError,
    as_angle,
    copolar,
)

T_TRUNC = 40.0


@dataclass(frozen=True)
class LaplaceValue:
    value: complex
    h: complex
    error_estimate: float
    exp_floor: float = 0.0

    def __complex__(self):
        return complex(self.value)


# contours -------------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    """One analytic piece of a contour.

    kind is 'segment' (a -> b), 'arc' (center a, radius r, angle phi0 -> phi1),
    'ray_out' (from a to infinity at ``angle``) or 'ray_in' (from infinity at
    ``angle`` to a).
    """

    kind: str
    a: complex
    b: complex = 0j
    r: float = 0.0
    phi0: float = 0.0
    phi1: float = 0.0
    angle: float = 0.0

    def point(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "segment":
            return self.a + t * (self.b - self.a)
        if self.kind == "arc":
            return self.a + self.r * np.exp(1j * (self.phi0 + t * (self.phi1 - self.phi0)))
        return self.a + t * cmath.exp(1j * self.angle)

    def length(self) -> float:
        if self.kind == "segment":
            return abs(self.b - self.a)
        if self.kind == "arc":
            return abs(self.r * (self.phi1 - self.phi0))
        return math.inf

    def distance(self, z: complex) -> float:
        z = complex(z)
        if self.kind == "segment":
            d = self.b - self.a
            if d == 0:
                return abs(z - self.a)
            t = min(1.0, max(0.0, ((z - self.a) * d.conjugate()).real / abs(d) ** 2))
            return abs(z - (self.a + t * d))
        if self.kind == "arc":
            ts = np.linspace(0.0, 1.0, 721)
            return float(np.min(np.abs(self.point(ts) - z)))
        u = cmath.exp(1j * self.angle)
        t = max(0.0, ((z - self.a) * u.conjugate()).real)
        return abs(z - (self.a + t * u))


@dataclass(frozen=True)
class Contour:
    pieces: tuple

    @property
    def incoming(self):
        p = self.pieces[0]
        return as_angle(p.angle) if p.kind == "ray_in" else None

    @property
    def outgoing(self):
        p = self.pieces[-1]
        return as_angle(p.angle) if p.kind == "ray_out" else None

    @property
    def closed(self) -> bool:
        return self.incoming is None and self.outgoing is None

    def distance(self, z) -> float:
        return min(p.distance(z) for p in self.pieces)

    def convergent_for(self, h: complex) -> bool:
        for p in self.pieces:
            if p.kind in ("ray_in", "ray_out") and (cmath.exp(1j * p.angle) / h).real <= 0:
                return False
        return True

    def adapted_arc(self) -> Arc:
        """Arc of arg h on which both asymptotic directions give convergence."""
        if self.closed:
            raise ValidationError("closed contours converge for every h")
        th_in, th_out = self.incoming, self.outgoing
        if th_in is None or th_out is None:
            th = th_out if th_in is None else th_in
            return Arc(th - 0.5 * math.pi + 1e-15, math.pi - 2e-15)
        ap = (th_in - th_out) % TWO_PI
        return Arc(th_in - 0.5 * math.pi, math.pi - ap)

    def is_adapted_to(self, arc: Arc, tol: float = 1e-12) -> bool:
        co = copolar(arc)
        ok_dirs = (abs(cmath.exp(1j * co.start) - cmath.exp(1j * self.incoming)) < tol and
                   abs(cmath.exp(1j * co.end) - cmath.exp(1j * self.outgoing)) < tol)
        return ok_dirs and self.annulus_bound() < math.inf

    def annulus_lengths(self, radii) -> np.ndarray:
        """Arclength inside {R <= |z| <= R + 1}, by fine sampling."""
        out = []
        for R in radii:
            tot = 0.0
            for p in self.pieces:
                if p.kind in ("ray_in", "ray_out"):
                    s = np.linspace(0.0, R + 2.0 + abs(p.a), 20001)
                else:
                    s = np.linspace(0.0, 1.0, 20001)
                z = p.point(s)
                mid = 0.5 * (z[1:] + z[:-1])
                seg = np.abs(np.diff(z))
                inside = (np.abs(mid) >= R) & (np.abs(mid) <= R + 1)
                tot += float(np.sum(seg[inside]))
            out.append(tot)
        return np.array(out)

    def annulus_bound(self, radii=(1.0, 3.0, 10.0, 30.0, 100.0)) -> float:
        return float(np.max(self.annulus_lengths(radii)))

    # factories

    @classmethod
    def circle(cls, center: complex = 0j, r: float = 0.5) -> "Contour":
        return cls((Piece("arc", complex(center), r=r, phi0=-math.pi, phi1=math.pi),))

    @classmethod
    def wedge(cls, vertex: complex, alpha: float, delta: float) -> "Contour":
        """In along the ray at alpha + delta, out along alpha - delta."""
        a = as_angle(alpha)
        return cls((Piece("ray_in", complex(vertex), angle=a + delta),
                    Piece("ray_out", complex(vertex), angle=a - delta)))

    @classmethod
    def hankel(cls, alpha: float = 0.0, support: Sequence[complex] = (0j,), h: complex | None = None,
               margin: float | None = None, delta: float | None = None) -> "Contour":
        """Wedge around the alpha-cuts of all support points, counterclockwise
        about them, opening chosen so the Laplace integral converges at h."""
        a = as_angle(alpha)
        u = cmath.exp(1j * a)
        pts = [complex(w) for w in support] or [0j]
        if h is not None:
            cap = 0.5 * math.pi - abs(cmath.phase(cmath.exp(-1j * a) * h))
            if cap <= 0:
                raise DivergentDirectionError(f"h = {h} is outside the sector of direction {a}")
        else:
            cap = 0.5 * math.pi
        m = margin if margin is not None else (abs(h) if h is not None else 0.5)
        loc = [(w / u) for w in pts]
        p0 = min(z.real for z in loc)
        for _ in range(60):
            vx = p0 - m
            need = max(math.atan2(abs(z.imag) + m, z.real - vx) for z in loc)
            if delta is not None:
                d = delta
            else:
                d = max(need + 0.5 * (cap - need), min(0.25 * math.pi, 0.8 * cap)) if need < cap else None
            if d is not None and need < d < cap:
                return cls.wedge(vx * u, a, d)
            m *= 1.5
        raise DivergentDirectionError("cannot fit a convergent wedge around the singularities")


# quadrature helpers ---------------------------------------------------

def _cquad(f, a, b, precision: Precision, points=None, limit=400):
    pts = None
    if points:
        pts = sorted(p for p in set(points) if a < p < b)
    with warnings.catch_warnings():
        # the returned error estimate carries the same information
        warnings.simplefilter("ignore", IntegrationWarning)
        val, err = quad(f, a, b, complex_func=True, epsabs=precision.quad_abs_tol,
                        epsrel=precision.quad_rel_tol, limit=limit, points=pts or None)
    # scipy reports a complex error pair for complex integrands
    err = abs(complex(err)) if np.iscomplexobj(err) else abs(err)
    return complex(val), float(err)


def _scalar(f):
    def g(z):
        return complex(np.asarray(f(np.array([z])))[0])
    return g


def _integrate_piece(piece: Piece, F, h: complex, precision: Precision, breakpoints=()):
    """Integral of F(xi) e^{-xi/h} d xi along one piece; returns (value, error, truncated)."""
    x = 1.0 / h
    if piece.kind == "segment":
        d = piece.b - piece.a

        def f(t):
            z = piece.a + t * d
            return F(z) * cmath.exp(-z * x) * d
        bp = [((w - piece.a) / d).real for w in breakpoints] if d != 0 else []
        v, e = _cquad(f, 0.0, 1.0, precision, bp)
        return v, e, False
    if piece.kind == "arc":
        dphi = piece.phi1 - piece.phi0

        def f(t):
            e_ = cmath.exp(1j * (piece.phi0 + t * dphi))
            z = piece.a + piece.r * e_
            return F(z) * cmath.exp(-z * x) * 1j * piece.r * e_ * dphi
        v, e = _cquad(f, 0.0, 1.0, precision)
        return v, e, False
    u = cmath.exp(1j * piece.angle)
    kappa = (u * x).real
    if kappa <= 0:
        raise DivergentDirectionError(f"integrand does not decay along direction {piece.angle}")
    base = piece.a
    t_end = max(T_TRUNC - (base * x).real, 1.0)

    def f(tau):
        z = base + (tau / kappa) * u
        return F(z) * cmath.exp(-z * x) * u / kappa

    bp = []
    for w in breakpoints:
        tau = (((w - base) * u.conjugate()).real) * kappa
        if 0 < tau < t_end:
            bp.append(tau)
    v, e = _cquad(f, 0.0, t_end, precision, bp)
    f1, f2 = abs(f(t_end)), abs(f(t_end + 2.0))
    rate = math.log(f1 / f2) / 2.0 if f1 > 0 and f2 > 0 and f1 > f2 else 0.0
    tail = f1 / rate if rate > 1e-3 else f1 * 1e3
    if piece.kind == "ray_in":
        v = -v
    return v, e + tail, True


def laplace_major(M: Major, gamma: Contour, h: complex, sheet: int = 0,
                  precision: Precision | None = None) -> LaplaceValue:
    """int_gamma e^{-xi/h} M(xi) d xi."""
    precision = precision or M.precision
    h = complex(h)
    if h == 0:
        raise ValidationError("h must be nonzero")
    if not gamma.convergent_for(h):
        raise DivergentDirectionError(f"h = {h} lies outside the sector of convergence of the contour")
    for w in M.support:
        if gamma.distance(w) <= precision.pole_cluster_tol:
            raise ContourCollisionError(f"contour passes through singularity {w}")
    F = _scalar(lambda z: M(z, sheet))
    total, err, trunc = 0j, 0.0, False
    for p in gamma.pieces:
        v, e, t = _integrate_piece(p, F, h, precision, M.support)
        total += v
        err += e
        trunc = trunc or t
    floor = math.exp(-T_TRUNC) if trunc else 0.0
    err += 4 * np.finfo(float).eps * abs(total)
    return LaplaceValue(total, h, err, floor)


# lateral sums ---------------------------------------------------------

def _side_sign(side) -> int:
    if side in (1, "+", "plus", "right"):
        return 1
    if side in (-1, "-", "minus", "left"):
        return -1
    raise ValidationError(f"side must be '+' or '-', got {side!r}")


def in_sector(alpha: float, h: complex) -> bool:
    return (cmath.exp(1j * as_angle(alpha)) / complex(h)).real > 0


def lateral_path(alpha: float, side, singular_points, h: complex, precision: Precision):
    """Pieces of the ray of direction alpha, with arcs around on-ray singularities."""
    a = as_angle(alpha)
    s = _side_sign(side)
    u = cmath.exp(1j * a)
    r = precision.detour_radius
    kappa = (u / h).real
    s_max = T_TRUNC / kappa
    on_ray = []
    for w in singular_points:
        loc = complex(w) / u
        if loc.real > r and abs(loc.imag) <= 2 * r and loc.real - r < s_max:
            on_ray.append(complex(w))
    on_ray.sort(key=lambda w: (w / u).real)
    pieces = []
    start = 0j
    for w in on_ray:
        loc = w / u
        offset = loc.imag
        half = math.sqrt(max(r * r - offset * offset, 0.0)) if abs(offset) < r else 0.0
        if abs(offset) >= r:
            r_eff = abs(offset) + r
            half = math.sqrt(r_eff ** 2 - offset ** 2)
        else:
            r_eff = r
        enter = (loc.real - half) * u
        leave = (loc.real + half) * u
        if abs(enter - start) > 0:
            pieces.append(Piece("segment", start, enter))
        phi_in = cmath.phase(enter - w)
        phi_out = cmath.phase(leave - w)
        # the right side (s = +1) passes with increasing angle about w
        if s > 0:
            d = (phi_out - phi_in) % TWO_PI or TWO_PI
        else:
            d = -((phi_in - phi_out) % TWO_PI or TWO_PI)
        pieces.append(Piece("arc", w, r=r_eff, phi0=phi_in, phi1=phi_in + d))
        start = leave
    pieces.append(Piece("ray_out", start, angle=a))
    return pieces, on_ray


def laplace_lateral(m: Minor, alpha: float = 0.0, side="+", h: complex = 0.1, a0: complex = 0.0,
                    precision: Precision | None = None) -> LaplaceValue:
    """a0 + int over the alpha-ray of e^{-xi/h} m(xi), detouring on-ray
    singularities to the right (+) or to the left (-)."""
    precision = precision or m.precision
    h = complex(h)
    a = as_angle(alpha)
    s = _side_sign(side)
    if h == 0 or not in_sector(a, h):
        raise SectorError(f"h = {h} is outside the half-plane Re(e^(i alpha)/h) > 0")
    sing = m.singular_points()
    pieces, on_ray = lateral_path(a, s, sing, h, precision)
    if on_ray and m.closed_form is None and not m.exact:
        u = cmath.exp(1j * a)
        first = min((w / u).real for w in on_ray)
        for d in m.engine.unstable:
            loc = d.location / u
            if loc.real > first and abs(loc.imag) < 0.1 * (1 + abs(loc)):
                raise ContinuationError(
                    f"continuation behind {on_ray[0]} is unreliable (approximant poles near the ray)")
    off_ray = [w for w in sing if w not in on_ray]

    def star(z):
        return complex(m(np.array([z]))[0])

    def lateral(z):
        return complex(m.evaluate(np.array([z]), s)[0])

    total, err = 0j, 0.0
    past = False
    for p in pieces:
        # points lying on a cut behind an on-ray branch point need the side
        F = lateral if (past and p.kind != "arc" and m.cuts) else star
        past = past or p.kind == "arc"
        v, e, _ = _integrate_piece(p, F, h, precision, off_ray)
        total += v
        err += e
    cont = 0.0
    if m.closed_form is None and not m.exact:
        u = cmath.exp(1j * a)
        kappa = (u / h).real
        taus = np.linspace(0.0, T_TRUNC, 41)
        z = taus / kappa * u
        ce = m.continuation_error(z)
        cont = float(np.max(ce * np.exp(-taus))) / kappa
    err += cont + 4 * np.finfo(float).eps * abs(total)
    return LaplaceValue(complex(a0) + total, h, err, math.exp(-T_TRUNC))


def stokes_jump(m: Minor, alpha: float = 0.0, h: complex = 0.5,
                precision: Precision | None = None) -> LaplaceValue:
    """S+ - S- for the minor m along direction alpha."""
    p = laplace_lateral(m, alpha, "+", h, precision=precision)
    q = laplace_lateral(m, alpha, "-", h, precision=precision)
    return LaplaceValue(p.value - q.value, complex(h), p.error_estimate + q.error_estimate,
                        max(p.exp_floor, q.exp_floor))


# bounded representative ------------------------------------------------

def _decay_rate(M: Major, piece: Piece, s0: float = 1.0, n: int = 9):
    s = s0 * 2.0 ** np.arange(n)
    z = piece.point(s)
    v = np.abs(M(z))
    if not np.all(np.isfinite(v)):
        return -math.inf, s, v
    with np.errstate(divide="ignore"):
        lv = np.log(np.maximum(v, 1e-320))
    slope = np.polyfit(s, lv, 1)[0]
    return slope, s, v


@dataclass
class DecayCertificate:
    rates: tuple
    cutoffs: tuple


class CauchyMajor(Major):
    """(1/2 pi i) int_gamma M(eta)/(xi - eta) d eta on a composite Gauss grid."""

    def __init__(self, M: Major, gamma: Contour, nodes, weights, values, certificate, precision):
        self.source = M
        self.gamma = gamma
        self.nodes, self.weights, self.values = nodes, weights, values
        super().__init__(self._eval, M.support, M.alpha, certificate, precision, label="cauchy")

    def _eval(self, xi, sheet=0):
        z = np.atleast_1d(np.asarray(xi, dtype=complex))
        flat = z.ravel()
        out = np.empty(flat.shape, complex)
        wv = self.weights * self.values
        for i0 in range(0, flat.size, 256):
            blk = flat[i0:i0 + 256]
            out[i0:i0 + 256] = (wv[None, :] / (blk[:, None] - self.nodes[None, :])).sum(axis=1)
        return (out / TWO_PI_I).reshape(np.shape(xi))

    def bound(self, d: float) -> float:
        """Bound on |Psi| at distance >= d from gamma."""
        return float(np.sum(np.abs(self.weights * self.values))) / (TWO_PI * d)


def _gauss_panels(piece: Piece, t_max: float, panel: float, n: int = 16):
    x, w = np.polynomial.legendre.leggauss(n)
    if piece.kind in ("ray_in", "ray_out"):
        L = t_max
        speed = 1.0
    elif piece.kind == "segment":
        L = 1.0
        speed = abs(piece.b - piece.a)
    else:
        L = 1.0
        speed = abs(piece.r * (piece.phi1 - piece.phi0))
    npan = max(1, int(math.ceil(L * speed / panel)))
    edges = np.linspace(0.0, L, npan + 1)
    ts, ws = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        ts.append(0.5 * (b - a) * x + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * w)
    t = np.concatenate(ts)
    wt = np.concatenate(ws)
    z = piece.point(t)
    if piece.kind == "segment":
        dz = np.full(t.shape, piece.b - piece.a)
    elif piece.kind == "arc":
        dphi = piece.phi1 - piece.phi0
        dz = 1j * piece.r * dphi * np.exp(1j * (piece.phi0 + t * dphi))
    else:
        dz = np.full(t.shape, cmath.exp(1j * piece.angle))
        if piece.kind == "ray_in":
            dz = -dz
    return z, wt * dz


def bounded_representative(M: Major, gamma: Contour, precision: Precision | None = None,
                           panel: float = 0.25, cutoff: float = 1e-18) -> CauchyMajor:
    """Cauchy transform of M along gamma.

    Outside the region cut off by gamma it differs from M by an entire
    function; inside it is holomorphic.  It is bounded away from gamma.
    """
    precision = precision or M.precision
    rates, cuts, nodes, weights = [], [], [], []
    for p in gamma.pieces:
        t_max = 1.0
        if p.kind in ("ray_in", "ray_out"):
            slope, s, v = _decay_rate(M, p)
            if not (slope < 0) or not np.all(np.isfinite(v)) or v[-1] > v[0]:
                raise CertificateError(f"major does not decay along the ray at angle {p.angle:.3g}")
            vmax = max(float(np.max(np.abs(M(p.point(np.linspace(0, s[-1], 200)))))), 1e-300)
            # distance where |M| has dropped below cutoff * max
            t_max = s[0] + max(0.0, (math.log(cutoff * vmax) - math.log(max(v[0], 1e-300))) / slope)
            rates.append(float(slope))
            cuts.append(float(t_max))
        z, w = _gauss_panels(p, t_max, panel)
        nodes.append(z)
        weights.append(w)
    nodes = np.concatenate(nodes)
    weights = np.concatenate(weights)
    values = M(nodes)
    cert = DecayCertificate(tuple(rates), tuple(cuts))
    return CauchyMajor(M, gamma, nodes, weights, values, cert, precision)


# Mittag-Leffler sums --------------------------------------------------

def mittag_leffler_sum(pieces, alpha: float = 0.0, h: complex = 0.1, J: int | None = None,
                       precision: Precision | None = None) -> LaplaceValue:
    """sum_{j<J} e^{-c_j/h} (a0_j + lateral Laplace of m_j), pieces ordered by Re(c_j/h).

    A piece is (c, minor, a0); ``minor`` may be None for a bare exponential.
    """
    pieces = list(pieces)
    h = complex(h)
    J = len(pieces) if J is None else int(J)
    if not 0 <= J <= len(pieces):
        raise ValidationError("J out of range")
    key = [(complex(c) / h).real for c, _, _ in pieces]
    for j in range(1, len(pieces)):
        if key[j] < key[j - 1] - 1e-12 * max(1.0, abs(key[j])) or complex(pieces[j][0]) == complex(pieces[j - 1][0]):
            raise ValidationError("pieces must have increasing Re(c/h) with distinct exponents")
    total, err, floor = 0j, 0.0, 0.0
    for c, m, a0 in pieces[:J]:
        pref = cmath.exp(-complex(c) / h)
        if m is None:
            lv = LaplaceValue(complex(a0), h, 0.0, 0.0)
        else:
            lv = laplace_lateral(m, alpha, "+", h, a0, precision)
        total += pref * lv.value
        err += abs(pref) * lv.error_estimate
        floor = max(floor, abs(pref) * lv.exp_floor)
    if J < len(pieces):
        floor = max(floor, math.exp(-key[J]))
    return LaplaceValue(total, h, err, floor)


# interchange of sums and Laplace --------------------------------------

@dataclass
class InterchangeResult:
    defect: float
    error_estimate: float
    partial_sums: np.ndarray = field(repr=False)
    tail_ratio: float = math.nan

    def __float__(self):
        return self.defect

    @property
    def ok(self) -> bool:
        return self.defect <= 10.0 * self.error_estimate


def geometric_ratio(values) -> float:
    """exp of the slope of log|values| against the index (least squares)."""
    v = np.abs(np.asarray(values, dtype=complex))
    k = np.arange(v.size)
    keep = v > 0
    if np.sum(keep) < 2:
        return 0.0
    return float(math.exp(np.polyfit(k[keep], np.log(v[keep]), 1)[0]))


def tail_ratio(partial_sums) -> float:
    s = np.asarray(partial_sums, dtype=complex)
    return geometric_ratio(s[:-1] - s[-1])


def certify_geometric(ms: Sequence[Minor], q: float, radius: float | None = None,
                      slack: float = 1e-6) -> float:
    """Fit of sup |m_j| on a probe circle against q^j; raises if the ratio exceeds q."""
    if radius is None:
        radius = 0.5 * min(min(m.radius() for m in ms), 2.0)
    z = radius * np.exp(TWO_PI_I * np.arange(64) / 64)
    sups = np.array([np.max(np.abs(m(z))) for m in ms])
    ratio = geometric_ratio(sups)
    if ratio > q * (1.0 + slack) + slack:
        raise CertificateError(f"sup norms decay with ratio {ratio:.4g} > {q}")
    return ratio


def interchange_check_sum_laplace(ms: Sequence[Minor], q: float, alpha: float = 0.0, h: complex = 0.1,
                                  N: int | None = None, precision: Precision | None = None) -> InterchangeResult:
    """Laplace of the summed minor against the sum of Laplace transforms."""
    ms = list(ms)
    N = len(ms) if N is None else N
    if N > len(ms):
        raise ValidationError("N exceeds the family length")
    certify_geometric(ms[:N], q)
    total = ms[0]
    for m in ms[1:N]:
        total = total + m
    lhs = laplace_lateral(total, alpha, "+", h, precision=precision)
    parts = [laplace_lateral(m, alpha, "+", h, precision=precision) for m in ms[:N]]
    rhs = sum(p.value for p in parts)
    err = lhs.error_estimate + sum(p.error_estimate for p in parts)
    partial = np.cumsum([p.value for p in parts])
    return InterchangeResult(abs(lhs.value - rhs), err, partial, tail_ratio(partial))
