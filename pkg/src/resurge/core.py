"""Shared types: directions and arcs, Gevrey series, filtered singularity sets,
precision settings, error classes and JSON helpers."""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.special import gammaln

TWO_PI = 2.0 * math.pi


# errors ---------------------------------------------------------------

class ResurgeError(Exception):
    """Base class. ``exit_code`` is what the command line front-end returns."""

    exit_code = 3


class ValidationError(ResurgeError, ValueError):
    exit_code = 2


class NumericalError(ResurgeError, ArithmeticError):
    exit_code = 3


class CertificateError(ResurgeError):
    exit_code = 4


class DivergentDirectionError(NumericalError):
    """h lies outside the half-plane where the Laplace integral converges."""


class SectorError(DivergentDirectionError, ValidationError):
    exit_code = 2


class ContourCollisionError(NumericalError):
    pass


class ContinuationError(NumericalError):
    pass


class PinchError(NumericalError):
    def __init__(self, message, location=None):
        super().__init__(message)
        self.location = location


class InsufficientCoefficientsError(ValidationError):
    pass


class UnresolvableSingularityError(NumericalError):
    pass


class SupportCollisionError(ValidationError):
    pass


class TurningPointError(ValidationError):
    pass


class DegeneracyError(NumericalError):
    pass


# json helpers ---------------------------------------------------------

def c2j(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def j2c(v) -> complex:
    if isinstance(v, (int, float, complex)):
        return complex(v)
    if len(v) != 2:
        raise ValidationError(f"complex number must be [re, im], got {v!r}")
    return complex(float(v[0]), float(v[1]))


# directions -----------------------------------------------------------

def normalize_angle(theta: float) -> float:
    """Map an angle to (-pi, pi]."""
    t = math.fmod(float(theta), TWO_PI)
    if t <= -math.pi:
        t += TWO_PI
    elif t > math.pi:
        t -= TWO_PI
    return t


@dataclass(frozen=True)
class Direction:
    angle: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "angle", normalize_angle(self.angle))

    @property
    def unit(self) -> complex:
        return complex(math.cos(self.angle), math.sin(self.angle))

    def __float__(self):
        return self.angle


def as_angle(alpha) -> float:
    if isinstance(alpha, Direction):
        return alpha.angle
    return normalize_angle(float(alpha))


@dataclass(frozen=True)
class Arc:
    """Counterclockwise arc of directions from ``start`` to ``end``.

    The arc is stored by its start angle and aperture; a zero aperture is a
    single direction.
    """

    start: float
    aperture: float

    def __post_init__(self):
        if not (0.0 <= self.aperture < TWO_PI):
            raise ValidationError(f"aperture must lie in [0, 2pi), got {self.aperture}")
        object.__setattr__(self, "start", normalize_angle(self.start))

    @classmethod
    def from_endpoints(cls, start, end) -> "Arc":
        a, b = as_angle(start), as_angle(end)
        return cls(a, (b - a) % TWO_PI)

    @property
    def end(self) -> float:
        return normalize_angle(self.start + self.aperture)

    @property
    def is_small(self) -> bool:
        return self.aperture < math.pi

    def contains(self, theta: float, closed: bool = False) -> bool:
        d = (float(theta) - self.start) % TWO_PI
        if closed:
            return d <= self.aperture + 1e-15 or d >= TWO_PI - 1e-15
        return 0.0 < d < self.aperture

    def midpoint(self) -> float:
        return normalize_angle(self.start + 0.5 * self.aperture)


def copolar(arc: Arc) -> Arc:
    """Directions making an obtuse angle with at least one direction of ``arc``.

    For a small arc (a0, a1) this is the open arc (a0 + pi/2, a1 + 3pi/2),
    of aperture pi + aperture(arc).
    """
    if not arc.is_small:
        raise ValidationError("copolar arc is only defined for arcs of aperture < pi")
    return Arc(arc.start + 0.5 * math.pi, math.pi + arc.aperture)


def obtuse_with_some(arc: Arc, theta: float, samples: int = 2001) -> bool:
    """Pointwise predicate behind :func:`copolar`, by brute-force sampling."""
    alphas = arc.start + np.linspace(0.0, arc.aperture, samples)
    return bool(np.any(np.cos(theta - alphas) < 0.0))


# Gevrey series --------------------------------------------------------

def _log_factorial(k):
    return gammaln(np.asarray(k, dtype=float) + 1.0)


@dataclass(frozen=True, eq=False)
class GevreySeries:
    """Truncated power series sum a_k h^k with a certificate |a_k| <= C A^k k!."""

    coeffs: np.ndarray
    gevrey_bound: tuple = None

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex)).copy()
        if c.ndim != 1 or c.size == 0:
            raise ValidationError("a Gevrey series needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise ValidationError("non-finite series coefficient")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.gevrey_bound is None:
            object.__setattr__(self, "gevrey_bound", fit_gevrey_bound(c))
        else:
            C, A = (float(x) for x in self.gevrey_bound)
            if C < 0 or A < 0:
                raise ValidationError("Gevrey constants must be nonnegative")
            object.__setattr__(self, "gevrey_bound", (C, A))
            if not certificate_holds(c, C, A):
                raise CertificateError("supplied Gevrey certificate fails on stored coefficients")

    @property
    def N(self) -> int:
        return self.coeffs.size - 1

    def __len__(self):
        return self.coeffs.size

    def __eq__(self, other):
        if not isinstance(other, GevreySeries):
            return NotImplemented
        return (np.array_equal(self.coeffs, other.coeffs)
                and self.gevrey_bound == other.gevrey_bound)

    __hash__ = None

    def partial_sum(self, h, n=None):
        n = self.coeffs.size if n is None else n
        return np.polynomial.polynomial.polyval(h, self.coeffs[:n])

    def to_json(self) -> dict:
        return {"coeffs": [c2j(a) for a in self.coeffs],
                "gevrey": [self.gevrey_bound[0], self.gevrey_bound[1]]}

    @classmethod
    def from_json(cls, d: dict) -> "GevreySeries":
        if "coeffs" not in d:
            raise ValidationError("series JSON needs a 'coeffs' field")
        coeffs = [j2c(v) for v in d["coeffs"]]
        g = d.get("gevrey")
        return cls(coeffs, None if g is None else tuple(g))


def certificate_holds(coeffs, C, A) -> bool:
    a = np.abs(np.asarray(coeffs))
    k = np.arange(a.size)
    nz = a > 0
    if not np.any(nz):
        return True
    if C == 0:
        return False
    with np.errstate(divide="ignore"):
        logA = math.log(A) if A > 0 else -np.inf
        bound = math.log(C) + np.where(k > 0, k * logA, 0.0) + _log_factorial(k)
    lhs = np.log(a[nz])
    return bool(np.all(lhs <= bound[nz] + 1e-12 * np.maximum(1.0, np.abs(bound[nz]))))


def fit_gevrey_bound(coeffs) -> tuple:
    """Least-squares fit of log|a_k| - log k! against k, then inflate C."""
    a = np.abs(np.asarray(coeffs))
    k = np.arange(a.size)
    nz = a > 0
    if not np.any(nz):
        return (0.0, 1.0)
    y = np.log(a[nz]) - _log_factorial(k[nz])
    kk = k[nz]
    if kk.size >= 2 and np.ptp(kk) > 0:
        slope, _ = np.polyfit(kk, y, 1)
        A = math.exp(min(slope, 700.0))
    else:
        A = 1.0
    A = max(A, 1e-300)
    logC = float(np.max(y - kk * math.log(A)))
    return (math.exp(min(logC, 700.0)) * (1.0 + 1e-12), A)


# filtered singularity sets --------------------------------------------

def dedup_points(points: Iterable[complex], tol: float) -> tuple:
    out: list = []
    for z in sorted((complex(p) for p in points), key=lambda w: (w.real, w.imag)):
        if not any(abs(z - w) <= tol for w in out):
            out.append(z)
    return tuple(out)


def _level_key(L: float) -> float:
    return float(L)


def _same_level(a: float, b: float) -> bool:
    return abs(a - b) <= 1e-12 * max(1.0, abs(a), abs(b))


@dataclass(frozen=True, eq=False)
class FilteredSingularitySet:
    """Monotone family of finite point sets indexed by path length L.

    Between grid levels the set is constant; below the first level it is empty.
    """

    levels: tuple = ()
    tol: float = 1e-6

    def __post_init__(self):
        merged: list = []
        for L, pts in sorted(((float(L), tuple(p)) for L, p in self.levels), key=lambda t: t[0]):
            if L <= 0 or not math.isfinite(L):
                raise ValidationError(f"levels must be positive and finite, got {L}")
            if merged and _same_level(merged[-1][0], L):
                merged[-1] = (merged[-1][0], merged[-1][1] + pts)
            else:
                merged.append((L, pts))
        out = []
        acc: tuple = ()
        for L, pts in merged:
            new = dedup_points(pts, self.tol)
            for p in acc:
                if not any(abs(p - q) <= self.tol for q in new):
                    raise ValidationError("filtered set is not monotone in L")
            acc = new
            out.append((L, new))
        object.__setattr__(self, "levels", tuple(out))

    @classmethod
    def cumulative(cls, levels, tol=1e-6) -> "FilteredSingularitySet":
        """Build from increments: each level's points are added to all later levels."""
        acc: list = []
        out = []
        for L, pts in sorted(levels, key=lambda t: t[0]):
            acc.extend(complex(p) for p in pts)
            out.append((L, tuple(acc)))
        return cls(tuple(out), tol)

    @classmethod
    def empty(cls, tol=1e-6) -> "FilteredSingularitySet":
        return cls((), tol)

    @property
    def grid(self) -> tuple:
        return tuple(L for L, _ in self.levels)

    def points_at(self, L: float) -> tuple:
        pts: tuple = ()
        for Li, p in self.levels:
            if Li <= L + 1e-12 * max(1.0, abs(L)):
                pts = p
            else:
                break
        return pts

    @property
    def all_points(self) -> tuple:
        return self.levels[-1][1] if self.levels else ()

    def __len__(self):
        return len(self.all_points)

    def is_empty(self) -> bool:
        return not self.all_points

    def contains(self, z: complex, L: float | None = None, tol: float | None = None) -> bool:
        tol = self.tol if tol is None else tol
        pts = self.all_points if L is None else self.points_at(L)
        return any(abs(complex(z) - p) <= tol for p in pts)

    def subset_of(self, other: "FilteredSingularitySet", tol: float | None = None) -> bool:
        tol = max(self.tol, other.tol) if tol is None else tol
        grid = sorted(set(self.grid) | set(other.grid))
        for L in grid:
            mine = self.points_at(L)
            theirs = other.points_at(L)
            for p in mine:
                if not any(abs(p - q) <= tol for q in theirs):
                    return False
        return True

    def equivalent(self, other: "FilteredSingularitySet", tol: float | None = None) -> bool:
        return self.subset_of(other, tol) and other.subset_of(self, tol)

    def with_origin(self, L: float | None = None) -> "FilteredSingularitySet":
        """Add the base point 0, at a level below every existing level."""
        L0 = (min(self.grid) if self.levels else 1.0) if L is None else L
        levels = [(L0, (0j,))] + [(L, p + (0j,)) for L, p in self.levels]
        return FilteredSingularitySet(tuple(levels), self.tol)

    def union(self, other: "FilteredSingularitySet") -> "FilteredSingularitySet":
        grid = sorted(set(self.grid) | set(other.grid))
        tol = max(self.tol, other.tol)
        return FilteredSingularitySet(
            tuple((L, self.points_at(L) + other.points_at(L)) for L in grid), tol)

    def to_json(self) -> dict:
        return {"levels": [{"L": L, "points": [c2j(p) for p in pts]} for L, pts in self.levels]}

    @classmethod
    def from_json(cls, d: dict, tol: float = 1e-6) -> "FilteredSingularitySet":
        return cls(tuple((float(e["L"]), tuple(j2c(p) for p in e["points"]))
                         for e in d.get("levels", [])), tol)

    def __repr__(self):
        body = ", ".join(f"{L:g}: {list(p)}" for L, p in self.levels)
        return f"FilteredSingularitySet({{{body}}})"


def filtered_set_sum(a: FilteredSingularitySet, b: FilteredSingularitySet) -> FilteredSingularitySet:
    """Levelwise sumset: level L holds w1 + w2 with w1 at L1, w2 at L2, L1 + L2 <= L."""
    tol = max(a.tol, b.tol)
    if not a.levels or not b.levels:
        return FilteredSingularitySet.empty(tol)
    grid = sorted({La + Lb for La in a.grid for Lb in b.grid})
    levels = []
    for L in grid:
        pts = []
        for La, pa in a.levels:
            for Lb, pb in b.levels:
                if La + Lb <= L + 1e-12 * max(1.0, L):
                    pts.extend(x + y for x in pa for y in pb)
        levels.append((L, tuple(pts)))
    return FilteredSingularitySet(tuple(levels), tol)


def filtered_set_iterate(omega: FilteredSingularitySet, n: int) -> FilteredSingularitySet:
    if n < 1:
        raise ValidationError("n must be at least 1")
    out = omega
    for _ in range(n - 1):
        out = filtered_set_sum(out, omega)
    return out


# precision ------------------------------------------------------------

@dataclass(frozen=True)
class Precision:
    quad_abs_tol: float = 1e-13
    quad_rel_tol: float = 1e-12
    series_truncation: int = 40
    pade_order: tuple = (20, 20)
    pole_cluster_tol: float = 1e-6
    sheet_depth: int = 2

    def __post_init__(self):
        object.__setattr__(self, "pade_order", tuple(int(x) for x in self.pade_order))
        for name in ("quad_abs_tol", "quad_rel_tol", "pole_cluster_tol"):
            if not getattr(self, name) > 0:
                raise ValidationError(f"{name} must be positive")
        if self.series_truncation < 1:
            raise ValidationError("series_truncation must be positive")
        if len(self.pade_order) != 2 or min(self.pade_order) < 0:
            raise ValidationError("pade_order must be a pair of nonnegative integers")
        if self.sheet_depth < 1:
            raise ValidationError("sheet_depth must be at least 1")

    @property
    def detour_radius(self) -> float:
        return 10.0 * self.pole_cluster_tol

    def replace(self, **kw) -> "Precision":
        return dataclasses.replace(self, **kw)

    def to_json(self) -> dict:
        d = dataclasses.asdict(self)
        d["pade_order"] = list(self.pade_order)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "Precision":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValidationError(f"unknown precision fields: {sorted(unknown)}")
        try:
            return cls(**d)
        except TypeError as exc:
            raise ValidationError(str(exc)) from exc


DEFAULT_PRECISION = Precision()


def load_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
