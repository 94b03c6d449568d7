"""WKB series for -h^2 d^2/dq^2 + V(q, h) and residual checks.

With psi = exp(int sigma / h) the eigen-equation P psi = h E psi becomes the
Riccati equation sigma^2 + h sigma' = V - h E.  Writing sigma = sum sigma_k h^k
and V = sum V_k h^k gives

    sigma_0^2 = V_0
    2 sigma_0 sigma_1 = V_1 - E - sigma_0'
    2 sigma_0 sigma_k = V_k - sigma_{k-1}' - sum_{i+j=k, i,j>=1} sigma_i sigma_j

so sigma_k is a polynomial in E of degree at most k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import sympy as sp

from .core import (
    DegeneracyError,
    GevreySeries,
    NumericalError,
    TurningPointError,
    ValidationError,
)

Q, H, E, W = sp.symbols("q h E w")

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """V(q, h) = sum coeffs[i, j] q^i h^j."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 2:
            raise ValidationError("potential coefficients must be a 2-d array")
        if not np.any(c[:, 0]):
            raise ValidationError("V(q, 0) vanishes identically")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_string(cls, text: str) -> "PotentialSpec":
        try:
            expr = sp.sympify(text.replace("^", "**"), locals={"q": Q, "h": H})
            poly = sp.Poly(sp.expand(expr), Q, H)
        except (sp.SympifyError, sp.PolynomialError, TypeError) as exc:
            raise ValidationError(f"cannot read potential {text!r}: {exc}") from exc
        dq, dh = poly.degree(Q), poly.degree(H)
        c = np.zeros((max(dq, 0) + 1, max(dh, 0) + 1), complex)
        for (i, j), a in poly.terms():
            c[i, j] = complex(a)
        return cls(c)

    @classmethod
    def from_json(cls, d) -> "PotentialSpec":
        if isinstance(d, str):
            return cls.from_string(d)
        if "expr" in d:
            return cls.from_string(d["expr"])
        return cls(np.array([[complex(*x) for x in row] for row in d["coeffs"]]))

    def to_json(self) -> dict:
        return {"coeffs": [[[float(x.real), float(x.imag)] for x in row] for row in self.coeffs]}

    def h_part(self, k: int) -> sp.Expr:
        if k >= self.coeffs.shape[1]:
            return sp.Integer(0)
        return sum((_nice(a) * Q ** i for i, a in enumerate(self.coeffs[:, k]) if a != 0), sp.Integer(0))

    def __call__(self, q, h):
        q = np.asarray(q, dtype=complex)
        out = np.zeros(np.broadcast(q, np.asarray(h)).shape, complex)
        for j in range(self.coeffs.shape[1]):
            out = out + np.polynomial.polynomial.polyval(q, self.coeffs[:, j]) * np.asarray(h) ** j
        return out

    @property
    def turning_points(self) -> np.ndarray:
        c = np.trim_zeros(self.coeffs[:, 0], "b")
        if c.size <= 1:
            return np.zeros(0, complex)
        return np.roots(c[::-1])

    @property
    def turning_margin(self) -> float:
        tp = _distinct(self.turning_points)
        if len(tp) < 2:
            return 0.2
        d = min(abs(a - b) for i, a in enumerate(tp) for b in tp[:i])
        return 0.2 * d

    def check_point(self, q) -> None:
        q = np.atleast_1d(np.asarray(q, dtype=complex))
        for t in self.turning_points:
            if np.any(np.abs(q - t) < self.turning_margin):
                raise TurningPointError(f"probe within {self.turning_margin:.3g} of turning point {t:.6g}")


def _nice(a: complex):
    a = complex(a)
    return sp.nsimplify(a.real, rational=True) + sp.I * sp.nsimplify(a.imag, rational=True)


def _distinct(pts, tol=1e-8):
    out = []
    for p in pts:
        if all(abs(p - o) > tol for o in out):
            out.append(p)
    return out


def _poly_sqrt(v0: sp.Expr):
    """Polynomial square root of v0 if it is a perfect square, else None."""
    poly = sp.Poly(v0, Q)
    lc, factors = sp.sqf_list(poly)
    if any(m % 2 for _, m in factors):
        return None
    root = sp.sqrt(sp.nsimplify(lc))
    for f, m in factors:
        root *= f.as_expr() ** (m // 2)
    return sp.expand(root)


@dataclass(eq=False)
class WKBSeries:
    """sigma_0 .. sigma_N as expressions in q, E (and w = sqrt(V_0) when needed)."""

    sigma_coeffs: tuple
    order: int
    branch: int
    potential: PotentialSpec
    symbolic_root: bool
    _funcs: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        args = (Q, E, W) if self.symbolic_root else (Q, E)
        self._funcs = [sp.lambdify(args, s, "numpy") for s in self.sigma_coeffs]

    def e_degree(self, k: int) -> int:
        num, den = sp.fraction(sp.together(self.sigma_coeffs[k]))
        if E in den.free_symbols:
            return -2
        return sp.Poly(num, E).degree() if num != 0 else -1

    def sigma(self, k: int, q, energy, check: bool = True) -> np.ndarray:
        q = np.asarray(q, dtype=complex)
        if check:
            self.potential.check_point(q)
        energy = np.asarray(energy, dtype=complex)
        f = self._funcs[k]
        if self.symbolic_root:
            w = np.sqrt(np.polynomial.polynomial.polyval(q, self.potential.coeffs[:, 0]))
            out = f(q, energy, w)
        else:
            out = f(q, energy)
        return np.broadcast_to(np.asarray(out, dtype=complex), np.broadcast(q, energy).shape).copy()

    def action_increments(self, q0: float, offsets, h: float, energy, N: int | None = None):
        """(1/h) sum_{k<N} h^k int_{q0}^{q0+d} sigma_k for each offset d; energy may be an array."""
        N = self.order + 1 if N is None else N
        energy = np.asarray(energy, dtype=complex)
        out = np.zeros((len(offsets),) + energy.shape, complex)
        for i, d in enumerate(offsets):
            if d == 0:
                continue
            nodes = q0 + 0.5 * d * (_GL_X + 1)
            tot = 0
            for k in range(N):
                vals = self.sigma(k, nodes[:, None], energy.reshape(1, -1), check=False)
                tot = tot + h ** (k - 1) * 0.5 * d * (_GL_W @ vals)
            out[i] = tot.reshape(energy.shape)
        return out


def riccati_coefficients(V: PotentialSpec, N: int, branch: int = 1) -> WKBSeries:
    if branch not in (1, -1):
        raise ValidationError("branch must be +1 or -1")
    if N < 0:
        raise ValidationError("order must be nonnegative")
    v0 = V.h_part(0)
    root = _poly_sqrt(v0)
    symbolic = root is None
    w = W if symbolic else root
    dv0 = sp.diff(v0, Q)

    def D(f):
        d = sp.diff(f, Q)
        if symbolic:
            d = d + sp.diff(f, W) * dv0 / (2 * W)
        return d

    def reduce(f):
        f = sp.cancel(sp.together(f))
        if symbolic:
            f = sp.cancel(f.subs(W ** 2, v0))
        return f

    s0 = branch * w
    sig = [sp.expand(s0)]
    if N >= 1:
        sig.append(reduce((V.h_part(1) - E - D(s0)) / (2 * s0)))
    for k in range(2, N + 1):
        conv = sum((sig[i] * sig[k - i] for i in range(1, k)), sp.Integer(0))
        sig.append(reduce((V.h_part(k) - D(sig[k - 1]) - conv) / (2 * s0)))
    return WKBSeries(tuple(sig), N, branch, V, symbolic)


# residuals --------------------------------------------------------------

@dataclass
class ResidualReport:
    h: np.ndarray
    max_residual: np.ndarray
    slope: float
    skipped: list
    energies: np.ndarray

    def to_rows(self):
        return [(float(h), complex(e), float(r)) for h, e, r in zip(self.h, self.energies, self.max_residual)]


def _energy_value(E_fn, h: float) -> complex:
    if E_fn is None:
        return 0j
    if isinstance(E_fn, (int, float, complex)):
        return complex(E_fn)
    if isinstance(E_fn, GevreySeries):
        return complex(E_fn.partial_sum(h))
    if callable(getattr(E_fn, "laplace", None)):
        return complex(E_fn.laplace(h).value)
    if callable(E_fn):
        v = E_fn(h)
        return complex(getattr(v, "value", v))
    raise ValidationError("energy must be a number, a GevreySeries or a small resurgent function")


_D1 = np.array([1, -8, 0, 8, -1]) / 12.0
_D2 = np.array([-1, 16, -30, 16, -1]) / 12.0
_OFFS = np.array([-2, -1, 0, 1, 2])


def _log_psi(series: WKBSeries, q: float, h: float, energy: complex, step: float, N: int,
             route: str, budget: int):
    offs = _OFFS * step
    if route == "substitute":
        return series.action_increments(q, offs, h, np.array([energy]), N)[:, 0]
    if route == "expand":
        # psi as a power series in E, then summed at E(h) termwise
        M = 64
        rad = 2.0 * max(abs(energy), 1.0)
        nodes = rad * np.exp(2j * math.pi * np.arange(M) / M)
        S = series.action_increments(q, offs, h, nodes, N)
        with np.errstate(over="raise", under="ignore"):
            try:
                psi_nodes = np.exp(S)
            except FloatingPointError as exc:
                raise NumericalError("overflow while expanding psi in E") from exc
        taylor = np.fft.fft(psi_nodes, axis=1) / M / rad ** np.arange(M)
        n = min(budget, M)
        psi = taylor[:, :n] @ (energy ** np.arange(n))
        return np.log(psi)
    raise ValidationError(f"unknown route {route!r}")


def residual_check(V: PotentialSpec, E_fn, N: int, q_probe: Sequence[float], h_grid: Sequence[float],
                   route: str = "substitute", psi_energy=None, branch: int = -1,
                   series: WKBSeries | None = None, budget: int = 48, q0: float | None = None) -> ResidualReport:
    """max over probes of |(-h^2 psi'' + (V - h E(h)) psi) / psi| for the order-N WKB function.

    psi_N uses sigma_0 .. sigma_{N-1}; the residual is then O(h^N).  ``psi_energy``
    builds psi at a different energy from the one in the operator.
    """
    if N < 1:
        raise ValidationError("N must be at least 1")
    q_probe = np.asarray(q_probe, dtype=float)
    V.check_point(q_probe)
    series = series if series is not None and series.order >= N - 1 else riccati_coefficients(V, N - 1, branch)
    q0 = float(q_probe[0]) if q0 is None else q0
    hs = np.asarray(h_grid, dtype=float)
    if hs.size == 0 or np.any(hs <= 0):
        raise ValidationError("h grid must be nonempty and positive")
    worst, skipped, energies = [], [], []
    for h in hs:
        e_op = _energy_value(E_fn, h)
        e_psi = e_op if psi_energy is None else _energy_value(psi_energy, h)
        energies.append(e_op)
        step = h / 10.0
        rmax = 0.0
        for q in q_probe:
            mag = series.action_increments(q0, [q - q0], h, np.array([e_psi]), N)[0, 0].real
            if mag < -700:
                skipped.append((float(q), float(h)))
                continue
            S = _log_psi(series, q, h, e_psi, step, N, route, budget)
            d1 = _D1 @ S / step
            d2 = _D2 @ S / step ** 2
            r = -h * h * (d2 + d1 * d1) + V(q, h) - h * e_op
            rmax = max(rmax, float(abs(r)))
        worst.append(rmax)
    worst = np.array(worst)
    slope = fit_slope(hs, worst)
    return ResidualReport(hs, worst, slope, skipped, np.array(energies))


def fit_slope(h, r) -> float:
    h, r = np.asarray(h, float), np.asarray(r, float)
    keep = r > 0
    if np.sum(keep) < 2:
        return math.nan
    return float(np.polyfit(np.log(h[keep]), np.log(r[keep]), 1)[0])


# Rayleigh-Schrodinger ---------------------------------------------------

def _x_matrix(M: int) -> np.ndarray:
    """Position operator in the eigenbasis of -d^2/dx^2 + x^2."""
    off = np.sqrt(np.arange(1, M) / 2.0)
    return np.diag(off, 1) + np.diag(off, -1)


def perturbative_eigenvalue(W_poly, n_level: int = 0, order: int = 4, m: int = 1) -> GevreySeries:
    """E(h) for -h^2 psi'' + (q^2 + h^m W(q)) psi = h E psi, as a series in h up to h^order.

    With q = sqrt(h) x the operator becomes h(-d^2/dx^2 + x^2 + sum_p w_p t^(2m-2+p) x^p),
    t = sqrt(h); ordinary RS perturbation theory in t is run in the harmonic basis.
    """
    if isinstance(W_poly, str):
        W_poly = [complex(c) for c in sp.Poly(sp.sympify(W_poly.replace("^", "**"), locals={"q": Q}), Q)
                  .all_coeffs()[::-1]]
    w = np.asarray(W_poly, dtype=complex)
    if order > 8:
        raise ValidationError("order must be at most 8")
    if n_level < 0 or m < 1:
        raise ValidationError("need n_level >= 0 and m >= 1")
    E0 = 2 * n_level + 1
    if not np.any(w):
        return GevreySeries([E0] + [0.0] * order, gevrey_bound=(float(E0) + 1.0, 1.0))
    T = 2 * order
    pmax = len(w) - 1
    M = n_level + T * pmax + 4
    X = _x_matrix(M)
    Vt: dict = {}
    Xp = np.eye(M)
    for p, wp in enumerate(w):
        if p:
            Xp = Xp @ X
        if wp != 0:
            j = 2 * m - 2 + p
            if j == 0:
                raise ValidationError("perturbation must vanish at h = 0")
            Vt[j] = Vt.get(j, 0) + wp * Xp
    diag = 2.0 * np.arange(M) + 1.0
    gaps = diag - E0
    gaps[n_level] = 1.0
    if np.any(np.abs(gaps) < 1e-12):
        raise DegeneracyError("unperturbed level is degenerate")
    Rinv = 1.0 / gaps
    Rinv[n_level] = 0.0
    psi = [np.zeros(M, complex)]
    psi[0][n_level] = 1.0
    Ek = [complex(E0)]
    for k in range(1, T + 1):
        e = sum((Vt[j] @ psi[k - j])[n_level] for j in Vt if j <= k)
        Ek.append(complex(e))
        rhs = np.zeros(M, complex)
        for j in range(1, k + 1):
            rhs += Ek[j] * psi[k - j]
            if j in Vt:
                rhs -= Vt[j] @ psi[k - j]
        psi.append(Rinv * rhs)
    Ek = np.array(Ek)
    odd = Ek[1::2]
    if np.any(np.abs(odd) > 1e-10 * max(1.0, np.max(np.abs(Ek)))):
        raise ValidationError("eigenvalue has half-integer powers of h")
    return GevreySeries(Ek[0::2])
