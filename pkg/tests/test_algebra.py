import math
from fractions import Fraction

import numpy as np
import pytest

from oracles import cauchy_product_minor, euler_laplace
from resurge.algebra import (
    MultiSeries,
    SmallResurgentFunction,
    compose_small,
    convolution_power,
    convolution_singularities,
    convolve_numeric,
    convolve_series,
    interchange_check_sum_convolution,
    primitive_tail_bound,
    substitute_parameter,
)
from resurge.borel import Minor
from resurge.core import CertificateError, PinchError, ValidationError, filtered_set_sum
from resurge.laplace import laplace_lateral


def monomial(a):
    """xi^{a-1}/Gamma(a)."""
    c = [0.0] * a
    c[a - 1] = 1.0 / math.factorial(a - 1)
    return Minor.polynomial(c)


def euler_minor(n=40):
    return Minor.from_function(lambda z: 1 / (1 + z), poles=[-1.0], n=n)


@pytest.mark.parametrize("a, b", [(1, 1), (1, 3), (2, 2), (3, 4)])
def test_convolution_of_monomials(a, b):
    m = convolve_series(monomial(a), monomial(b))
    expect = np.zeros(a + b)
    expect[a + b - 1] = 1.0 / math.factorial(a + b - 1)
    assert np.allclose(m.coeffs[:a + b], expect, atol=0)
    assert m.exact


def test_convolution_of_ones_is_xi():
    m = convolve_series(Minor.polynomial([1.0]), Minor.polynomial([1.0]))
    assert m.exact_coeffs[:2] == ((Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)))


def test_euler_self_convolution_coefficients():
    m = convolve_series(euler_minor(), euler_minor())
    a = [0] + [(-1) ** k * math.factorial(k) for k in range(12)]
    expect = np.array(cauchy_product_minor(a, a, 8), dtype=float)
    assert np.allclose(m.coeffs[:8], expect, rtol=1e-10, atol=1e-12)


def test_numeric_convolution_of_ones():
    one = Minor.polynomial([1.0])
    assert convolve_numeric(one, one, 2.0) == pytest.approx(2.0)


def test_numeric_convolution_matches_series_inside_disc():
    f = euler_minor()
    series = convolve_series(f, f)
    v = convolve_numeric(f, f, 0.3)
    assert v == pytest.approx(series(np.array([0.3]))[0], abs=1e-10)
    assert v == pytest.approx(math.log(1.3) * 2 / 2.3, abs=1e-12)


def test_numeric_convolution_continues_past_disc():
    f = euler_minor()
    for t in (2.0, 1.5 + 1j):
        assert convolve_numeric(f, f, t) == pytest.approx(2 * np.log(1 + t) / (2 + t), rel=1e-9)


def test_pinch_detected_at_minus_two():
    f = euler_minor()
    with pytest.raises(PinchError) as exc:
        convolve_numeric(f, f, -2.0 + 1e-5)
    assert abs(exc.value.location - (-2.0)) < 1e-4


def test_convolution_singularities_inside_filtered_sum():
    f = euler_minor()
    g = Minor.from_function(lambda z: 1 / (1 - z / 2j), poles=[2j])
    found = convolution_singularities(f, g)
    budget = filtered_set_sum(f.singularities.with_origin(), g.singularities.with_origin())
    assert found
    for w in found:
        assert budget.contains(w, tol=1e-6)


def test_convolution_power_of_one():
    m = convolution_power(Minor.polynomial([1.0]), 4)
    assert m.coeffs[3] == pytest.approx(1 / 6)
    assert np.allclose(m.coeffs[:3], 0)


def test_convolution_power_leading_coefficient():
    m = convolution_power(Minor.polynomial([2.0, 1.0]), 3)
    assert m.coeffs[2] == pytest.approx(8 / 2)
    assert np.allclose(m.coeffs[:2], 0)


def test_tail_bound_dominates_exact_primitives():
    tb = primitive_tail_bound([Minor.polynomial([1.0])], 12)
    assert tb.V_norm == pytest.approx(1.0)
    for n in range(1, 13):
        # n-fold power is xi^{n-1}/(n-1)!, its (n+1)-fold primitive xi^{2n}/(2n)!
        assert tb.bound(n) >= 1 / math.factorial(2 * n)
    assert tb.nonincreasing_after_peak()
    assert tb.converges()
    with pytest.raises(ValidationError):
        tb.bound(13)


def test_convolution_power_records_tail_bound():
    m = convolution_power(Minor.polynomial([1.0, 0.5]), 5)
    assert m.meta["tail_bound"].bound(5) > 0


def test_compose_geometric_with_h():
    g = MultiSeries({j: 1.0 for j in range(1, 41)}, 1.0)
    phi = SmallResurgentFunction.from_series([0.0, 1.0])
    comp = compose_small(g, [phi])
    inner = comp.minor(0j)
    z = np.array([0.3, -0.5 + 0.2j])
    assert np.allclose(inner(z), np.exp(z), rtol=1e-12)
    for h in np.linspace(0.05, 0.3, 6):
        assert comp(h).value == pytest.approx(h / (1 - h), abs=1e-8)


def test_compose_identity():
    phi = SmallResurgentFunction.from_series([0.0, 1.0, -1.0, 2.0])
    comp = compose_small(MultiSeries({1: 1.0}, 10.0), [phi])
    for h in (0.05, 0.2):
        assert comp(h).value == pytest.approx(phi.laplace(h).value, rel=1e-12)


def test_compose_product_is_convolution():
    one = SmallResurgentFunction.from_series([0.0, 1.0])
    comp = compose_small(MultiSeries({(1, 1): 1.0}, 0.5, 2), [one, one])
    m = comp.minor(0j)
    direct = convolve_series(Minor.polynomial([1.0]), Minor.polynomial([1.0]))
    assert m.exact_coeffs == direct.exact_coeffs


def test_compose_with_shifted_part():
    phi = SmallResurgentFunction.from_series([0.0, 1.0], shifted=[(1.0, [0.5])])
    g = MultiSeries({j: 1.0 for j in range(1, 41)}, 1.0)
    comp = compose_small(g, [phi])
    for h in (0.1, 0.2):
        x = phi.laplace(h).value
        assert abs(comp(h).value - x / (1 - x)) <= 10 * comp(h).error_estimate + 1e-10


def test_compose_radius_violation():
    phi = SmallResurgentFunction.from_series([0.0, 1.0])
    comp = compose_small(MultiSeries({1: 1.0, 2: 1.0}, 0.1), [phi])
    with pytest.raises(ValidationError):
        comp(0.25)


def test_compose_arity_mismatch():
    phi = SmallResurgentFunction.from_series([0.0, 1.0])
    with pytest.raises(ValidationError):
        compose_small(MultiSeries({(1, 1): 1.0}, 1.0, 2), [phi])


def test_small_function_rejects_constant():
    with pytest.raises(ValidationError):
        SmallResurgentFunction.from_series([1.0, 1.0])


def test_substitute_linear_family():
    E = SmallResurgentFunction.from_series([0.0, 1.0])
    comp = substitute_parameter([[0.0], [0.0, 1.0]], E)
    assert comp(0.1).value == pytest.approx(0.01, rel=1e-12)


def test_substitute_geometric_family():
    E = SmallResurgentFunction.from_series([0.0, 1.0])
    comp = substitute_parameter([[1.0]] * 30, E)
    for h in (0.05, 0.1, 0.2):
        v = comp(h)
        assert abs(v.value - 1 / (1 - h)) <= v.error_estimate + 1e-12


def test_substitute_truncation_within_certificate():
    E = SmallResurgentFunction.from_series([0.0, 1.0])
    fam = [[1.0]] * 30
    a = substitute_parameter(fam, E, N=10)
    b = substitute_parameter(fam, E, N=12)
    cert = a.metadata["certificate"]
    for h in (0.1, 0.2):
        assert abs(a(h).value - b(h).value) <= cert.tail(10)


def test_substitute_rejects_slow_family():
    E = SmallResurgentFunction.from_series([0.0, 1.0])
    with pytest.raises(CertificateError):
        substitute_parameter([[5.0 ** n] for n in range(10)], E)


def test_homomorphism_on_entire_and_euler_minors():
    f = Minor.polynomial([1.0, 2.0, 0.5])
    e = euler_minor()
    for a, b in ((f, f), (f, e), (e, e)):
        c = convolve_series(a, b)
        for h in (0.05, 0.1):
            lhs = laplace_lateral(c, 0.0, "+", h).value
            rhs = laplace_lateral(a, 0.0, "+", h).value * laplace_lateral(b, 0.0, "+", h).value
            assert lhs == pytest.approx(rhs, abs=1e-9)


def test_euler_square_against_quadrature():
    e = euler_minor()
    for h in (0.05, 0.1):
        assert laplace_lateral(convolve_series(e, e), 0.0, "+", h).value == pytest.approx(
            euler_laplace(h) ** 2, abs=1e-9)


def test_sum_convolution_interchange():
    q = 0.5
    psi = euler_minor()
    ms = [Minor.from_function(lambda z, c=q ** j: c / (1 + z / 3), poles=[-3.0]) for j in range(20)]
    res = interchange_check_sum_convolution(psi, ms, q, 0.7 + 0.2j)
    assert res.ok
    assert res.tail_ratio <= 0.6
