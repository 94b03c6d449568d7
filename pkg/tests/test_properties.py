import math

import numpy as np
from hypothesis import HealthCheck, example, given, settings
from hypothesis import strategies as st

from resurge.algebra import convolve_series
from resurge.analytic import bemol, decompose_major, major_variation, reconstruct_major, variation
from resurge.borel import Microfunction, Minor, ResurgentSymbol, SymbolTerm, borel_transform, minor_of_series
from resurge.core import (
    Arc,
    FilteredSingularitySet,
    GevreySeries,
    Precision,
    copolar,
    filtered_set_iterate,
    filtered_set_sum,
    normalize_angle,
    obtuse_with_some,
)
from resurge.laplace import laplace_lateral
from resurge.schrodinger import PotentialSpec, riccati_coefficients

SETTINGS = settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])

small_int = st.integers(-5, 5)
gauss_int = st.builds(complex, small_int, small_int)
finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def filtered_sets():
    pts = st.lists(gauss_int, min_size=1, max_size=3, unique=True)

    @st.composite
    def build(draw):
        levels = sorted(draw(st.lists(st.integers(1, 4), min_size=1, max_size=2, unique=True)))
        acc, out = [], []
        for L in levels:
            acc = list(dict.fromkeys(acc + draw(pts)))
            out.append((float(L), tuple(complex(p) for p in acc)))
        return FilteredSingularitySet(tuple(out))
    return build()


int_minor = st.lists(small_int, min_size=1, max_size=40).map(lambda c: Minor.polynomial([float(x) for x in c]))


@SETTINGS
@given(st.floats(-math.pi, math.pi), st.floats(0, 3.0))
def test_copolar_is_the_obtuse_set(start, aperture):
    a = Arc(start, aperture)
    c = copolar(a)
    assert math.isclose(c.aperture, math.pi + aperture, rel_tol=1e-12)
    for theta in np.linspace(-math.pi, math.pi, 73):
        near_edge = min(abs(normalize_angle(theta - c.start)), abs(normalize_angle(theta - c.end))) < 1e-6
        if not near_edge:
            assert c.contains(theta) == obtuse_with_some(a, theta)


@SETTINGS
@given(filtered_sets(), filtered_sets())
def test_filtered_sum_commutes(a, b):
    assert filtered_set_sum(a, b).equivalent(filtered_set_sum(b, a))


@SETTINGS
@given(filtered_sets(), filtered_sets(), filtered_sets())
def test_filtered_sum_associates(a, b, c):
    assert filtered_set_sum(filtered_set_sum(a, b), c).equivalent(filtered_set_sum(a, filtered_set_sum(b, c)))


@SETTINGS
@given(filtered_sets(), filtered_sets())
def test_filtered_sum_is_monotone_in_level(a, b):
    s = filtered_set_sum(a, b)
    grid = sorted(L for L, _ in s.levels)
    for lo, hi in zip(grid, grid[1:]):
        assert set(s.points_at(lo)) <= set(s.points_at(hi))


@SETTINGS
@given(filtered_sets(), st.integers(1, 3))
def test_iterate_is_repeated_sum(a, n):
    acc = a
    for _ in range(n - 1):
        acc = filtered_set_sum(acc, a)
    assert filtered_set_iterate(a, n).equivalent(acc)


@SETTINGS
@given(int_minor, int_minor)
def test_convolution_commutes_exactly(f, g):
    assert convolve_series(f, g).exact_coeffs == convolve_series(g, f).exact_coeffs


@SETTINGS
@given(int_minor, int_minor, int_minor)
def test_convolution_associates_exactly(f, g, h):
    left = convolve_series(convolve_series(f, g), h)
    right = convolve_series(f, convolve_series(g, h))
    assert left.exact_coeffs == right.exact_coeffs


@SETTINGS
@given(st.lists(finite, min_size=1, max_size=6), st.lists(finite, min_size=1, max_size=6),
       st.sampled_from([0.05, 0.1, 0.2]))
@example([0.0, 0.0, 0.0, 0.0, 2.0], [0.0, 0.0, 0.0, 0.0, 3.0], 0.2)
def test_convolution_is_multiplication(a, b, h):
    f, g = Minor.polynomial(a), Minor.polynomial(b)
    lhs = laplace_lateral(convolve_series(f, g), 0.0, "+", h)
    a, b = laplace_lateral(f, 0.0, "+", h), laplace_lateral(g, 0.0, "+", h)
    rhs = a.value * b.value
    # quadrature error propagated through the product
    budget = lhs.error_estimate + abs(a.value) * b.error_estimate + abs(b.value) * a.error_estimate
    assert abs(lhs.value - rhs) <= budget + 1e-14 * (1 + abs(rhs))
    assert abs(lhs.value - rhs) <= 1e-9


@SETTINGS
@given(st.lists(finite, min_size=2, max_size=8))
def test_polynomial_minor_sum_is_the_series(a):
    s = GevreySeries([0.0] + a)
    m = minor_of_series(s, exact=True)
    h = 0.1
    assert abs(laplace_lateral(m, 0.0, "+", h).value - s.partial_sum(h)) <= 1e-12 * (1 + sum(map(abs, a)))


@SETTINGS
@given(st.lists(finite, min_size=1, max_size=5), st.lists(finite, min_size=1, max_size=5), finite)
def test_borel_transform_is_linear(a, b, c):
    n = max(len(a), len(b))
    a, b = a + [0.0] * (n - len(a)), b + [0.0] * (n - len(b))
    sa, sb = GevreySeries(a), GevreySeries(b)
    ss = GevreySeries(np.array(a) + c * np.array(b))
    ma, mb, ms = (borel_transform(SymbolTerm(0.5, x)) for x in (sa, sb, ss))
    assert np.isclose(ms.residue, ma.residue + c * mb.residue)
    assert np.allclose(ms.log_coeffs, ma.log_coeffs + c * mb.log_coeffs)


@SETTINGS
@given(st.lists(finite, min_size=1, max_size=4), st.floats(0.05, 0.9), st.floats(-3, 3))
def test_variation_is_the_loop_jump(logs, r, theta):
    mf = Microfunction(0.0, 0.7, GevreySeries(logs))
    z = np.array([r * np.exp(1j * theta)])
    loop = mf.major_values(z, 0.0, 1) - mf.major_values(z, 0.0, 0)
    assert np.allclose(loop, variation(mf)(z), atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=4), st.floats(0.1, 0.45), st.floats(0.3, 6.0))
def test_var_of_bemol(c, r, theta):
    g = Minor.polynomial(c)
    Phi = bemol(g, 0.5)
    z = r * np.exp(1j * theta)
    assert abs(major_variation(Phi, z) - g(np.array([z]))[0]) <= 1e-9


@settings(max_examples=10, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=3), finite)
def test_decompose_inverts_reconstruct(logs, res):
    sigma = ResurgentSymbol([
        Microfunction(0.0, res, GevreySeries([complex(*p) for p in logs])),
        Microfunction(2.0 + 1j, 1.0, GevreySeries([1.0, -0.5])),
    ])
    back = decompose_major(reconstruct_major(sigma, math.pi / 2), math.pi / 2)
    assert back.same_as(sigma, tol=1e-8)


@SETTINGS
@given(st.lists(st.integers(-3, 3), min_size=1, max_size=3), st.floats(2.0, 5.0), st.floats(-2, 2))
def test_wkb_branches_are_opposite(tail, re, im):
    V = PotentialSpec(np.array([[float(a)] for a in tail] + [[1.0]]))
    q = complex(re, im)
    if np.min(np.abs(V.turning_points - q)) < 0.5:
        return
    plus, minus = riccati_coefficients(V, 0, 1), riccati_coefficients(V, 0, -1)
    sp_, sm = plus.sigma(0, q, 0.0, check=False), minus.sigma(0, q, 0.0, check=False)
    assert np.allclose(sp_, -sm)
    assert np.allclose(sp_ * sm, -V(q, 0.0))


@SETTINGS
@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=6))
def test_gevrey_json_round_trip(pairs):
    s = GevreySeries([complex(*p) for p in pairs])
    t = GevreySeries.from_json(s.to_json())
    assert np.array_equal(s.coeffs, t.coeffs)


@SETTINGS
@given(st.floats(1e-14, 1e-4), st.integers(1, 4), st.integers(8, 60))
def test_precision_json_round_trip(tol, depth, n):
    p = Precision(pole_cluster_tol=tol, sheet_depth=depth, series_truncation=n)
    assert Precision.from_json(p.to_json()) == p
