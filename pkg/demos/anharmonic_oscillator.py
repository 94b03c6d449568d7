"""
WKB residuals for the anharmonic oscillator
===========================================

-h^2 psi'' + (q^2 + h q^4) psi = h E psi.  The energy comes from
Rayleigh-Schrodinger perturbation in t = sqrt(h); psi is built from the
Riccati coefficients sigma_k.  The residual of the truncated WKB ansatz
should fall like h^(N) at order N.
"""

import numpy as np

from resurge.schrodinger import PotentialSpec, perturbative_eigenvalue, residual_check

E = perturbative_eigenvalue("q^4", 0, 8)
print("ground state E(h):", np.round(E.coeffs.real, 6))

# compare with a dense diagonalization in the oscillator basis
n = 80
a = np.diag(np.sqrt(np.arange(1, n)), 1)
x = (a + a.T) / np.sqrt(2)
p2 = -((a - a.T) @ (a - a.T)) / 2
for h in (0.05, 0.1, 0.2):
    lam = h * h
    x4 = np.linalg.matrix_power(x, 4)
    dense = np.linalg.eigvalsh(p2 + x @ x + lam * x4)[0]
    print(f"h={h}: RS partial sum {E.partial_sum(h).real:.10f}   dense {dense:.10f}")

V = PotentialSpec.from_string("q^2 + h*q^4")
hs = np.linspace(0.02, 0.1, 8)
for order in (2, 4, 6):
    r = residual_check(V, E, order, [0.8, 1.1, 1.4], hs)
    print(f"order {order}: residual at h=0.02 {r.max_residual[0]:.2e}, log-log slope {r.slope:.2f}")

# the harmonic ground state is exact at every order
r = residual_check(PotentialSpec.from_string("q^2"), 1.0, 4, [0.8, 1.1, 1.4], [0.05, 0.1, 0.2])
print("harmonic residual:", r.max_residual)
