import cmath
import math

import numpy as np
import pytest

from resurge.analytic import (
    ContinuationError,
    ContourCollisionError,
    bemol,
    continue_minor,
    decompose_major,
    detect_singularities,
    interchange_check_sum_reconstruction,
    log_cut,
    major_variation,
    nearest_singularity,
    reconstruct_major,
    variation,
)
from resurge.borel import Microfunction, Minor, ResurgentSymbol, major_of_power, pole_major
from resurge.core import GevreySeries, InsufficientCoefficientsError

TPI = 2j * math.pi


def rational_minor(poles, n=40):
    """Minor of prod 1/(p - xi), by Taylor coefficients only."""
    c = np.zeros(n, complex)
    c[0] = 1.0
    for p in poles:
        geo = np.array([p ** (-k - 1) for k in range(n)], complex)
        c = np.convolve(c, geo)[:n]
    return Minor(c)


def euler_minor(n=40):
    return Minor([(-1.0) ** k for k in range(n)])


def test_continue_euler_minor_past_its_disc():
    assert continue_minor(euler_minor(), [0, 2]) == pytest.approx(1 / 3, rel=1e-9)


def test_continue_constant_minor():
    one = Minor.polynomial([1.0])
    assert continue_minor(one, [0, 3 + 1j, -2j, 5]) == pytest.approx(1.0)


def test_loop_around_log_singularity_picks_up_variation():
    cut = log_cut(1.0, 0.0)
    m = Minor.from_function(lambda z: np.log(1 - z), cuts=[cut])
    end = 0.5 + 0.0j
    direct = continue_minor(m, [0, end])
    looped = continue_minor(m, [0, 1.5 - 0.5j, 1.5 + 0.5j, end])
    var = variation(Microfunction(1.0, 0.0, GevreySeries([1.0])))
    assert looped - direct == pytest.approx(TPI * var(np.array([end - 1]))[0])


def test_continuation_refuses_paths_through_poles():
    with pytest.raises(ContinuationError):
        continue_minor(euler_minor(), [0, -2])


def test_detect_euler_pole():
    found = detect_singularities(euler_minor())
    assert len(found.all_points) == 1
    assert found.contains(-1.0, tol=1e-8)


def test_detect_nothing_for_polynomial():
    assert not detect_singularities(Minor.polynomial([0.0, 1.0])).all_points


def test_detect_two_poles():
    found = detect_singularities(rational_minor([1.0, 2.0]))
    pts = sorted(found.all_points, key=abs)
    assert len(pts) == 2
    assert pts[0] == pytest.approx(1.0, abs=1e-8)
    assert pts[1] == pytest.approx(2.0, abs=1e-8)


def test_detection_needs_coefficients():
    with pytest.raises(InsufficientCoefficientsError):
        detect_singularities(Minor([1.0, -1.0, 1.0]))


def test_detection_is_stable_under_tiny_perturbations():
    rng = np.random.default_rng(3)
    base = rational_minor([1.0, -2.0 + 0.5j])
    ref = sorted(detect_singularities(base).all_points, key=abs)
    for _ in range(5):
        c = base.coeffs * (1 + 1e-12 * rng.standard_normal(base.coeffs.size))
        got = sorted(detect_singularities(Minor(c)).all_points, key=abs)
        assert len(got) == len(ref)
        assert max(abs(a - b) for a, b in zip(got, ref)) < 1e-6


@pytest.mark.parametrize("log_coeffs, residue, expect", [
    ([1.0], 0.0, [1.0]),
    ([], 1.0, [0.0]),
    ([0.0, 1.0], 0.0, [0.0, 1.0]),
])
def test_variation_examples(log_coeffs, residue, expect):
    mf = Microfunction(0.0, residue, GevreySeries(log_coeffs) if log_coeffs else None)
    v = variation(mf)
    z = np.array([0.3, -0.2 + 0.1j])
    assert np.allclose(v(z), np.polyval(expect[::-1], z))


def test_variation_matches_loop_of_major():
    mf = Microfunction(0.0, 0.0, GevreySeries([0.0, 1.0]))
    z = np.array([0.2 - 0.3j])
    loop = mf.major_values(z, 0.0, 1) - mf.major_values(z, 0.0, 0)
    assert loop == pytest.approx(variation(mf)(z))


def test_bemol_of_constant_closed_form():
    Phi = bemol(Minor.polynomial([1.0]), 1.0)
    assert Phi(np.array([-1.0 + 0j]))[0] == pytest.approx(-math.log(2) / TPI, rel=1e-10)
    z = np.array([0.5 + 0.5j, -0.3 - 1j])
    assert np.allclose(Phi(z), np.log(z / (z - 1)) / TPI, rtol=1e-10)


def test_var_of_bemol_is_identity():
    g = rational_minor([2.0])
    Phi = bemol(g, 0.8)
    pts = [0.4 * cmath.exp(1j * t) * s for t, s in zip(np.linspace(0.3, 6.0, 10), np.linspace(0.3, 1, 10))]
    for z in pts:
        assert major_variation(Phi, z) == pytest.approx(g(np.array([z]))[0], abs=1e-9)


def test_bemol_is_small():
    Phi = bemol(euler_minor(), 0.5)
    vals = [abs(10.0 ** -k * Phi(np.array([-(10.0 ** -k) + 0j]))[0]) for k in range(2, 7)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


def test_bemol_segment_must_avoid_singularities():
    with pytest.raises(ContourCollisionError):
        bemol(euler_minor(), -2.0)


def test_decompose_single_pole():
    sigma = decompose_major(pole_major(1.0))
    (mf,) = list(sigma)
    assert mf.omega == pytest.approx(1.0)
    assert mf.residue == pytest.approx(1.0, abs=1e-8)
    assert not np.any(np.abs(mf.log_coeffs) > 1e-8)


def test_decompose_log():
    (mf,) = list(decompose_major(major_of_power(1)))
    assert mf.residue == pytest.approx(0.0, abs=1e-8)
    assert mf.log_coeffs[0] == pytest.approx(1.0, abs=1e-8)
    assert np.all(np.abs(mf.log_coeffs[1:]) < 1e-8)


def test_decompose_sum():
    alpha = math.pi / 2
    M = pole_major(1.0) + major_of_power(1, alpha=alpha)
    sigma = decompose_major(M, alpha)
    expect = ResurgentSymbol([Microfunction(1.0, 1.0), Microfunction(0.0, 0.0, GevreySeries([1.0]))])
    assert sigma.same_as(expect, tol=1e-8)


def test_reconstruct_examples():
    z = np.array([0.4 + 0.3j, -0.2 - 0.6j])
    M = reconstruct_major(ResurgentSymbol([Microfunction(0.0, 1.0)]))
    assert np.allclose(M(z), 1 / (TPI * z))
    a1, a2 = 0.7, -1.3
    M = reconstruct_major(ResurgentSymbol([Microfunction(0.0, 0.0, GevreySeries([a1, a2]))]), math.pi)
    lg = np.log(np.abs(z)) + 1j * ((np.angle(z) - math.pi) % (2 * math.pi) + math.pi)
    assert np.allclose(M(z), (a1 * lg + a2 * z * lg) / TPI)


def test_round_trip_random_symbol():
    rng = np.random.default_rng(11)
    terms = []
    for w in (0.0, 1.0 + 1.0j, -1.0 + 2.0j):
        logs = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        terms.append(Microfunction(w, complex(rng.standard_normal()), GevreySeries(logs)))
    sigma = ResurgentSymbol(terms)
    alpha = -math.pi / 2
    back = decompose_major(reconstruct_major(sigma, alpha), alpha)
    assert back.same_as(sigma, tol=1e-8)


def test_sum_reconstruction_interchange():
    q = 0.5
    sigmas = [ResurgentSymbol([Microfunction(1.0, q ** j, GevreySeries([q ** j, 0.5 * q ** j]))])
              for j in range(20)]
    res = interchange_check_sum_reconstruction(sigmas, q, [0.3 + 0.4j, 2.0 - 1j], math.pi / 2)
    assert res.ok
    assert res.tail_ratio <= 0.6


def test_nearest_singularity_of_log_minor():
    c = [1.0 / (k + 1) * 2.0 ** (-k) for k in range(60)]
    assert nearest_singularity(Minor(c)) == pytest.approx(2.0, abs=1e-3)
