import numpy as np
import pytest
import sympy as sp

from oracles import anharmonic_coefficients, anharmonic_levels
from resurge.algebra import SmallResurgentFunction
from resurge.core import GevreySeries, TurningPointError, ValidationError
from resurge.schrodinger import (
    E,
    Q,
    PotentialSpec,
    perturbative_eigenvalue,
    residual_check,
    riccati_coefficients,
)

HARMONIC = PotentialSpec.from_string("q^2")
QUARTIC = PotentialSpec.from_string("q^2 + h*q^4")
PROBES = [0.8, 1.1, 1.4]


def same(a, b):
    return sp.simplify(a - b) == 0


def test_potential_parsing_and_json():
    assert QUARTIC.coeffs.shape == (5, 2)
    assert QUARTIC.coeffs[4, 1] == 1 and QUARTIC.coeffs[2, 0] == 1
    assert np.array_equal(PotentialSpec.from_json(QUARTIC.to_json()).coeffs, QUARTIC.coeffs)
    assert QUARTIC(1.0, 0.5) == pytest.approx(1.5)
    with pytest.raises(ValidationError):
        PotentialSpec.from_string("h*q^2")
    with pytest.raises(ValidationError):
        PotentialSpec.from_string("q^^2")


def test_turning_point_margin():
    V = PotentialSpec.from_string("q^2 - 1")
    assert sorted(V.turning_points.real) == pytest.approx([-1, 1])
    assert V.turning_margin == pytest.approx(0.4)
    with pytest.raises(TurningPointError):
        V.check_point(1.1)
    V.check_point(0.0)


def test_first_sigma_for_harmonic_potential():
    s = riccati_coefficients(HARMONIC, 2, branch=1)
    assert same(s.sigma_coeffs[0], Q)
    assert same(s.sigma_coeffs[1], -(E + 1) / (2 * Q))


def test_ground_state_branch_terminates():
    s = riccati_coefficients(HARMONIC, 4, branch=-1)
    assert same(s.sigma_coeffs[0], -Q)
    for k in range(1, 5):
        assert same(s.sigma_coeffs[k].subs(E, 1), 0)


def test_constant_potential():
    s = riccati_coefficients(PotentialSpec.from_string("1"), 2)
    assert same(s.sigma_coeffs[0], 1)
    assert same(s.sigma_coeffs[1].subs(E, 0), 0)
    assert same(s.sigma_coeffs[2].subs(E, 0), 0)


@pytest.mark.parametrize("text", ["q^2 + h*q^4", "q^2 - 1 + h*q", "q^4 + 1 + h^2*q^2"])
def test_sigma_degree_in_energy(text):
    s = riccati_coefficients(PotentialSpec.from_string(text), 4)
    for k in range(5):
        assert 0 <= s.e_degree(k) <= k or s.e_degree(k) == -1


@pytest.mark.parametrize("text", ["q^2 + h*q^4", "q^3 - q + 2"])
def test_branches_are_opposite(text):
    V = PotentialSpec.from_string(text)
    plus, minus = riccati_coefficients(V, 1, 1), riccati_coefficients(V, 1, -1)
    q = np.array([2.5 + 0.3j, -3.0 + 1j, 4.0])
    s_p, s_m = plus.sigma(0, q, 0.0), minus.sigma(0, q, 0.0)
    assert np.allclose(s_p, -s_m)
    assert np.allclose(s_p * s_m, -V(q, 0.0))


def test_riccati_identity_at_each_order():
    s = riccati_coefficients(QUARTIC, 6, branch=-1)
    h = sp.Symbol("h")
    sig = sum(s.sigma_coeffs[k] * h ** k for k in range(7))
    eq = sp.expand(h * sp.diff(sig, Q) + sig ** 2 - (Q ** 2 + h * Q ** 4) + h * E)
    for k in range(7):
        assert sp.simplify(eq.coeff(h, k)) == 0


def test_harmonic_residual_is_exact():
    r = residual_check(HARMONIC, 1.0, 4, PROBES, [0.05, 0.1, 0.2])
    assert np.max(r.max_residual) <= 1e-12


def test_energy_offset_shows_as_h_delta():
    delta = 1e-3
    hs = np.array([0.05, 0.1, 0.2])
    r = residual_check(HARMONIC, 1.0 + delta, 4, PROBES, hs, psi_energy=1.0)
    assert np.allclose(r.max_residual, hs * delta, rtol=1e-6)


def test_quartic_residual_slope_and_routes():
    Eh = perturbative_eigenvalue("q^4", 0, 4)
    hs = np.linspace(0.02, 0.1, 8)
    a = residual_check(QUARTIC, Eh, 6, PROBES, hs)
    b = residual_check(QUARTIC, Eh, 6, PROBES, hs, route="expand")
    assert a.slope >= 5.5
    assert np.allclose(a.max_residual, b.max_residual, rtol=1e-3, atol=1e-13)


def test_doubling_order_raises_slope():
    Eh = perturbative_eigenvalue("q^4", 0, 4)
    hs = np.linspace(0.02, 0.1, 8)
    s2 = residual_check(QUARTIC, Eh, 2, PROBES, hs).slope
    s4 = residual_check(QUARTIC, Eh, 4, PROBES, hs).slope
    assert s4 - s2 >= 1


def test_residual_accepts_small_resurgent_energy():
    # E = 1 + h^2 as h-series of a small function, offset by the constant
    Eh = SmallResurgentFunction.from_series([0.0, 0.0, 1.0])
    r = residual_check(QUARTIC, lambda h: 1 + Eh.laplace(h).value, 2, PROBES, [0.05, 0.1])
    assert np.all(np.isfinite(r.max_residual))


def test_residual_rejects_bad_grid():
    with pytest.raises(ValidationError):
        residual_check(HARMONIC, 1.0, 2, PROBES, [])
    with pytest.raises(TurningPointError):
        residual_check(HARMONIC, 1.0, 2, [0.0], [0.1])


@pytest.mark.parametrize("n", [0, 1, 3])
def test_unperturbed_levels(n):
    Eh = perturbative_eigenvalue("0", n, 4)
    assert Eh.coeffs[0] == 2 * n + 1
    assert not np.any(Eh.coeffs[1:])


def test_quartic_coefficients_against_diagonalization():
    rs = perturbative_eigenvalue("q^4", 0, 4).coeffs
    assert rs[2] == pytest.approx(0.75, abs=1e-12)
    assert rs[4] == pytest.approx(-21 / 16, abs=1e-12)
    fit = anharmonic_coefficients(0, 60)
    assert fit[1] == pytest.approx(rs[2].real, abs=1e-6)
    assert fit[2] == pytest.approx(rs[4].real, abs=1e-6)


def test_quartic_partial_sum_against_dense_levels():
    Eh = perturbative_eigenvalue("q^4", 0, 8)
    # next RS coefficient is about 224
    for h in (0.05, 0.1):
        assert Eh.partial_sum(h).real == pytest.approx(anharmonic_levels(h * h, 60)[0], abs=500 * h ** 10)


def test_cubic_parity():
    c = perturbative_eigenvalue("q^3", 0, 6).coeffs
    assert abs(c[1]) < 1e-14 and abs(c[2]) < 1e-14
    assert c[3] == pytest.approx(-11 / 16)


def test_excited_level_against_diagonalization():
    c = perturbative_eigenvalue("q^4", 1, 4).coeffs
    fit = anharmonic_coefficients(1, 60)
    assert c[2] == pytest.approx(fit[1], abs=1e-5)
    assert c[0] == 3


def test_perturbation_order_limit():
    with pytest.raises(ValidationError):
        perturbative_eigenvalue("q^4", 0, 9)


def test_gevrey_series_output():
    assert isinstance(perturbative_eigenvalue("q^4", 0, 2), GevreySeries)
