"""Cross-module invariant checks, run by ``resurge check-invariants``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import convolution_singularities, convolve_series
from .analytic import bemol, major_variation, nearest_singularity
from .borel import Minor, major_of_power, minor_of_series
from .core import DEFAULT_PRECISION, GevreySeries, Precision, filtered_set_sum
from .laplace import Contour, laplace_lateral, laplace_major


@dataclass
class Check:
    name: str
    passed: bool
    detail: str


def _random_poly(rng, n: int) -> Minor:
    return Minor.polynomial(rng.integers(-5, 6, size=n).astype(float))


def check_convolution_exact(rng) -> Check:
    f, g, h = (_random_poly(rng, int(rng.integers(2, 9))) for _ in range(3))
    comm = convolve_series(f, g).exact_coeffs == convolve_series(g, f).exact_coeffs
    assoc = (convolve_series(convolve_series(f, g), h).exact_coeffs
             == convolve_series(f, convolve_series(g, h)).exact_coeffs)
    return Check("convolution commutative and associative", comm and assoc, f"comm={comm} assoc={assoc}")


def check_homomorphism(prec: Precision) -> Check:
    e = minor_of_series(GevreySeries([0] + [(-1) ** k * math.factorial(k) for k in range(30)]), precision=prec)
    worst = 0.0
    for h in (0.1, 0.2):
        a = laplace_lateral(e, 0.0, "+", h, precision=prec)
        b = laplace_lateral(convolve_series(e, e), 0.0, "+", h, precision=prec)
        worst = max(worst, abs(b.value - a.value ** 2) / abs(a.value ** 2))
    return Check("laplace(f*g) = laplace(f) laplace(g)", worst < 1e-9, f"rel={worst:.2e}")


def check_power_round_trip(prec: Precision) -> Check:
    worst = 0.0
    for nu in (0.5, 2.0):
        M = major_of_power(nu)
        for h in (0.05, 0.2):
            v = laplace_major(M, Contour.hankel(0.0, (0j,), h), h, precision=prec).value
            worst = max(worst, abs(v - h ** nu) / h ** nu)
    return Check("power major round trip", worst < 1e-8, f"rel={worst:.2e}")


def check_var_bemol(rng, prec: Precision) -> Check:
    g = Minor.polynomial(rng.normal(size=4))
    Phi = bemol(g, precision=prec)
    z = np.array([0.05 + 0.02j, -0.03 + 0.04j])
    err = float(np.max(np.abs(major_variation(Phi, z) - g(z))))
    return Check("var of bemol is the identity", err < 1e-9, f"err={err:.2e}")


def check_singularity_budget(prec: Precision) -> Check:
    f = Minor.from_function(lambda x: 1 / (1 + x), poles=[-1.0], precision=prec)
    g = Minor.from_function(lambda x: 1 / (2 - x), poles=[2.0], precision=prec)
    budget = filtered_set_sum(f.singularities.with_origin(), g.singularities.with_origin())
    pinched = convolution_singularities(f, g, precision=prec)
    ok = bool(pinched) and all(budget.contains(p, tol=1e-6) for p in pinched)
    near = nearest_singularity(convolve_series(f, g))
    ok = ok and budget.contains(near, tol=1e-3)
    return Check("convolution singularities inside the summed set", ok,
                 f"pinched={[round(p.real, 6) for p in pinched]} nearest={near:.6g}")


def run_all(seed: int = 0, precision: Precision | None = None) -> list:
    prec = precision or DEFAULT_PRECISION
    rng = np.random.default_rng(seed)
    return [check_convolution_exact(rng), check_homomorphism(prec), check_power_round_trip(prec),
            check_var_bemol(rng, prec), check_singularity_budget(prec)]
