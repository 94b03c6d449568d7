"""Reference values computed without the package."""

import math

import numpy as np
import sympy as sp
from scipy.integrate import quad
from scipy.special import exp1


def euler_laplace(h: float) -> float:
    """int_0^inf e^{-t/h} / (1 + t) dt by plain adaptive quadrature."""
    v, _ = quad(lambda t: math.exp(-t / h) / (1 + t), 0, np.inf, epsabs=1e-15, epsrel=1e-13, limit=200)
    return v


def euler_exp1(h: float) -> float:
    x = 1.0 / h
    return math.exp(x) * exp1(x)


def cauchy_product_minor(a, b, n):
    """Minor coefficients of (sum a_k h^k)(sum b_k h^k), exact via sympy."""
    H = sp.Symbol("h")
    A = sum(sp.Rational(x) * H ** k for k, x in enumerate(a))
    B = sum(sp.Rational(x) * H ** k for k, x in enumerate(b))
    c = sp.Poly(sp.expand(A * B), H).all_coeffs()[::-1]
    c = c + [0] * (n + 2 - len(c))
    return [sp.Rational(c[k + 1]) / sp.factorial(k) for k in range(n)]


def _hermite_functions(x, n):
    """Orthonormal Hermite functions without the Gaussian factor, rows 0..n-1."""
    out = np.zeros((n, x.size))
    out[0] = math.pi ** -0.25
    if n > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(2, n):
        out[k] = math.sqrt(2.0 / k) * x * out[k - 1] - math.sqrt((k - 1) / k) * out[k - 2]
    return out


def anharmonic_levels(lam: float, size: int = 60, power: int = 4):
    """Eigenvalues of -d^2/dx^2 + x^2 + lam x^power, dense in the harmonic basis."""
    x, w = np.polynomial.hermite.hermgauss(2 * size + 40)
    phi = _hermite_functions(x, size)
    V = (phi * (w * x ** power)) @ phi.T
    Hm = np.diag(2.0 * np.arange(size) + 1.0) + lam * V
    return np.linalg.eigvalsh(Hm)


def anharmonic_coefficients(level: int = 0, size: int = 60, hs=None, degree: int = 6):
    """Fit E(lam) = sum c_j lam^j with lam = h^2 from dense eigenvalues at small h."""
    hs = np.linspace(0.02, 0.06, 17) if hs is None else np.asarray(hs)
    lam = hs ** 2
    E = np.array([anharmonic_levels(l, size)[level] for l in lam])
    return np.polynomial.polynomial.polyfit(lam, E, degree)
