"""
Summing the Euler series
========================

The Euler series sum (-1)^k k! h^(k+1) diverges for every h > 0.  Its Borel
minor is 1/(1+xi), so the Laplace integral along the positive axis gives it
a finite value.  Flipping the sign of the coefficients moves the pole onto
the integration ray and the two lateral sums stop agreeing.
"""

import math

import numpy as np
from scipy.integrate import quad

from resurge.borel import minor_of_series
from resurge.core import GevreySeries
from resurge.laplace import laplace_lateral, stokes_jump

# first forty coefficients, constant term zero
coeffs = [0.0] + [(-1) ** k * math.factorial(k) for k in range(40)]
minor = minor_of_series(GevreySeries(coeffs))
print("pole found by Pade:", minor.singularities.points_at(minor.singularities.levels[-1][0]))

# partial sums blow up, the Borel sum doesn't
h = 0.1
for n in (5, 10, 20, 30):
    print(f"partial sum N={n:2d}: {GevreySeries(coeffs[:n + 1]).partial_sum(h).real:.6f}")
s = laplace_lateral(minor, 0.0, "+", h)
exact = quad(lambda t: math.exp(-t / h) / (1 + t), 0, np.inf, epsabs=1e-14)[0]
print(f"Borel sum at h={h}: {s.value.real:.12f}  (quadrature {exact:.12f})")

# same series with all signs positive: pole at xi = 1 on the ray
minor_plus = minor_of_series(GevreySeries([0.0] + [math.factorial(k) for k in range(40)]))
for h in (0.3, 0.5, 0.8):
    j = stokes_jump(minor_plus, 0.0, h).value
    print(f"h={h}: |S+ - S-| = {abs(j):.10f}   2 pi e^(-1/h) = {2 * math.pi * math.exp(-1 / h):.10f}")
