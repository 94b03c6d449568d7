"""
Composition and convolution
===========================

Products of resummed series are convolutions of their minors.  A convergent
function of a resurgent small series is again resurgent; here g(z) = z/(1-z)
is applied to phi(h) = h.
"""

import math

import numpy as np

from resurge.algebra import (
    MultiSeries,
    SmallResurgentFunction,
    compose_small,
    convolution_singularities,
    convolve_numeric,
    convolve_series,
)
from resurge.borel import Minor
from resurge.core import PinchError
from resurge.laplace import laplace_lateral

euler = Minor.from_function(lambda z: 1 / (1 + z), poles=[-1.0])

# the square of the Euler sum, two ways
sq = convolve_series(euler, euler)
for h in (0.05, 0.1):
    a = laplace_lateral(euler, 0.0, "+", h).value
    b = laplace_lateral(sq, 0.0, "+", h).value
    print(f"h={h}: (Euler sum)^2 = {a.real ** 2:.12f}, sum of convolved minor = {b.real:.12f}")

# closed form of the convolved minor: 2 log(1+t)/(2+t)
for t in (0.3, 2.0, 1.5 + 1j):
    print(f"t={t}: {convolve_numeric(euler, euler, t):.10f}  vs {2 * np.log(1 + t) / (2 + t):.10f}")

# singularities of the product live at -1 and -2
print("convolution singularities:", np.round(convolution_singularities(euler, euler), 6))
try:
    convolve_numeric(euler, euler, -2 + 1e-5)
except PinchError as exc:
    print("pinch near", np.round(exc.location, 6))

# g(z) = sum z^j composed with phi = h
phi = SmallResurgentFunction.from_series([0.0, 1.0])
comp = compose_small(MultiSeries({j: 1.0 for j in range(1, 41)}, 1.0), [phi])
print("inner minor at 0.5:", comp.minor(0j)(np.array([0.5]))[0], "e^0.5 =", math.exp(0.5))
for h in np.linspace(0.05, 0.3, 6):
    print(f"h={h:.2f}: composed {comp(h).value.real:.12f}   h/(1-h) {h / (1 - h):.12f}")
