import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nesskit.errors import ConfigError
from nesskit.fixtures import SIGMA_X, random_energies, random_hermitian, two_level_fixture
from nesskit.model import (AngularMomentFormFactor, ParticleSystem, PowerGaussianFormFactor,
                           ReservoirSpec, angular_moment, bose, form_factor_from_dict, gibbs_populations,
                           gibbs_vector, glue, glued_interaction_eval, moment_matrix,
                           partition_function)

# 30-digit mpmath values, see tests/oracles.py
GIBBS_E01_B1 = (0.855019636400243663580004758853, 0.518595624133095747768136084488)
FIXTURE_MOMENT = 1.70067332635054531375648944484

energies_st = st.lists(st.floats(-5, 5, allow_nan=False), min_size=1, max_size=8, unique=True).filter(
    lambda xs: len(xs) < 2 or min(np.diff(sorted(xs))) > 1e-3).map(sorted)


def test_gibbs_two_level_reference():
    p = ParticleSystem((0.0, 1.0))
    np.testing.assert_allclose(gibbs_vector(p, 1.0), GIBBS_E01_B1, rtol=0, atol=1e-15)


def test_gibbs_infinite_temperature_uniform():
    p = ParticleSystem((0.0, 1.0))
    np.testing.assert_allclose(gibbs_vector(p, 0.0), [2 ** -0.5] * 2, atol=1e-15)


@given(energies_st, st.floats(0, 50))
def test_gibbs_vector_unit_and_positive(E, beta):
    p = ParticleSystem(tuple(E))
    v = gibbs_vector(p, beta)
    assert abs(np.linalg.norm(v) - 1) < 1e-12
    assert np.all(v > 0)
    np.testing.assert_allclose(gibbs_populations(p, beta), v ** 2, atol=1e-15)


def test_partition_function_shift_covariant():
    p = ParticleSystem((0.0, 0.3, 1.1))
    q = ParticleSystem((2.0, 2.3, 3.1))
    assert math.isclose(partition_function(q, 1.7), math.exp(-3.4) * partition_function(p, 1.7),
                        rel_tol=1e-13)


@pytest.mark.parametrize("E", [(0.0, 1.0, 1.0), (1.0, 0.0), (0.0, 0.5, 0.2)])
def test_nonincreasing_energies_rejected(E):
    with pytest.raises(ConfigError, match=r"Condition \(C\) violated: degenerate spectrum"):
        ParticleSystem(E)


def test_negative_beta_p_rejected():
    with pytest.raises(ConfigError):
        ParticleSystem((0.0, 1.0), beta_p=-1.0)


def test_bohr_matrix_antisymmetric():
    p = ParticleSystem((0.0, 0.4, 1.3))
    W = p.bohr_matrix()
    np.testing.assert_array_equal(W, -W.T)
    assert W[2, 0] == 1.3
    assert p.level_gap() == pytest.approx(0.4)


def test_degenerate_bohr_pairs_detected():
    p = ParticleSystem((0.0, 1.0, 2.0))
    assert p.degenerate_bohr_pairs()
    assert not ParticleSystem((0.0, 1.0, 2.5)).degenerate_bohr_pairs()


def test_fixture_moment_closed_form():
    p, rs = two_level_fixture()
    assert angular_moment(rs[0].form_factor, p, 1, 0) == pytest.approx(FIXTURE_MOMENT, rel=1e-14)
    assert angular_moment(rs[0].form_factor, p, 0, 1) == pytest.approx(FIXTURE_MOMENT, rel=1e-14)


def test_moment_matches_sphere_quadrature(rng):
    # product Gauss-Legendre x trapezoid rule over the sphere
    n = 4
    B = random_hermitian(rng, n)
    ff = PowerGaussianFormFactor(alpha=0.8, amplitude=1.3, coupling=B)
    p = ParticleSystem((0.0, 0.3, 0.9, 1.7))
    x, w = np.polynomial.legendre.leggauss(24)
    phi = np.linspace(0, 2 * np.pi, 48, endpoint=False)
    for m, k in [(1, 0), (3, 1), (0, 2)]:
        E = abs(p.energies[m] - p.energies[k])
        total = 0.0
        for ct, wt in zip(x, w):
            st_ = math.sqrt(1 - ct * ct)
            for ph in phi:
                sigma = np.array([st_ * math.cos(ph), st_ * math.sin(ph), ct])
                total += wt * (2 * np.pi / phi.size) * abs(ff.matrix(E * sigma)[k, m]) ** 2
        assert angular_moment(ff, p, m, k) == pytest.approx(total, rel=1e-12)


def test_moment_matrix_symmetric_zero_diagonal(rng):
    p = ParticleSystem(random_energies(rng, 5))
    ff = PowerGaussianFormFactor(0.5, 1.0, random_hermitian(rng, 5))
    S = moment_matrix(ff, p)
    np.testing.assert_allclose(S, S.T, rtol=1e-14)
    assert np.all(np.diag(S) == 0)
    assert np.all(S[~np.eye(5, dtype=bool)] > 0)


def test_moment_matrix_size_mismatch():
    ff = PowerGaussianFormFactor(0.5, 1.0, SIGMA_X)
    with pytest.raises(ConfigError, match="2x2"):
        moment_matrix(ff, ParticleSystem((0.0, 1.0, 2.5)))


def test_non_hermitian_coupling_rejected():
    with pytest.raises(ConfigError, match="Hermitian"):
        PowerGaussianFormFactor(0.5, 1.0, [[0, 1], [2, 0]])


def test_nonpositive_alpha_rejected():
    with pytest.raises(ConfigError, match="alpha"):
        PowerGaussianFormFactor(0.0, 1.0, SIGMA_X)


def test_complex_pairs_parse():
    ff = PowerGaussianFormFactor(0.5, 1.0, [[[0, 0], [0, 1]], [[0, -1], [0, 0]]])
    np.testing.assert_array_equal(ff.coupling, [[0, 1j], [-1j, 0]])
    back = form_factor_from_dict(ff.to_dict())
    np.testing.assert_array_equal(back.coupling, ff.coupling)


def test_angular_moments_table_forms():
    a = AngularMomentFormFactor([[0, 0.5], [0.5, 0]])
    b = AngularMomentFormFactor({(1, 0): 0.5})
    assert a.moment(1.0, 0, 1) == b.moment(1.0, 0, 1) == 0.5
    with pytest.raises(ConfigError, match="no angular moment"):
        b.moment(1.0, 2, 0)
    with pytest.raises(ConfigError, match="differ"):
        AngularMomentFormFactor({(1, 0): 0.5, (0, 1): 0.6})
    with pytest.raises(ConfigError, match="nonnegative"):
        AngularMomentFormFactor({(1, 0): -0.5})


def test_scaled_form_factor_scales_moments():
    p, rs = two_level_fixture()
    ff = rs[0].form_factor
    assert angular_moment(ff.scaled(0.5), p, 1, 0) == pytest.approx(FIXTURE_MOMENT / 4, rel=1e-14)
    tab = AngularMomentFormFactor({(1, 0): 2.0}).scaled(3.0)
    assert tab.moment(1.0, 1, 0) == 18.0


def test_reservoir_beta_validation():
    with pytest.raises(ConfigError):
        ReservoirSpec(0.0, AngularMomentFormFactor({(1, 0): 1.0}))
    with pytest.raises(ConfigError):
        ReservoirSpec(math.inf, AngularMomentFormFactor({(1, 0): 1.0}))


@given(st.floats(0.05, 20), st.floats(1e-3, 10))
def test_bose_factor(beta, w):
    assert bose(beta, w) == pytest.approx(1 / math.expm1(beta * w), rel=1e-14)


def test_glue_branches():
    f = lambda k: complex(1.0 + k[0], 2.0)
    sigma = np.array([0.0, 0.0, 1.0])
    assert glue(f, 4.0, sigma) == 2.0 * f(4.0 * sigma)
    assert glue(f, -4.0, sigma) == -2.0 * np.conj(f(4.0 * sigma))


def test_glued_interaction_shapes_and_zero():
    p, rs = two_level_fixture()
    sigma = np.array([1.0, 0.0, 0.0])
    assert np.all(glued_interaction_eval(p, rs, "F1", 0.0, sigma, 1) == 0)
    F = glued_interaction_eval(p, rs, "F2", 0.7, sigma, 2)
    assert F.shape == (4, 4)
    with pytest.raises(ValueError):
        glued_interaction_eval(p, rs, "F1", 0.7, 2 * sigma, 1)
    with pytest.raises(ValueError):
        glued_interaction_eval(p, rs, "F3", 0.7, sigma, 1)


def test_glued_interaction_equal_temperatures_f1_equals_f2():
    # with every temperature equal the imaginary-time and delta-beta weights drop out
    p = ParticleSystem((0.0, 1.0), beta_p=2.0)
    ff = PowerGaussianFormFactor(0.5, 1.0, SIGMA_X)
    rs = [ReservoirSpec(2.0, ff), ReservoirSpec(2.0, ff)]
    sigma = np.array([0.0, 0.6, 0.8])
    for u in (-1.3, 0.4, 2.0):
        np.testing.assert_allclose(glued_interaction_eval(p, rs, "F1", u, sigma, 1),
                                   glued_interaction_eval(p, rs, "F2", u, sigma, 1), atol=1e-15)


def test_glued_interaction_left_factor():
    # the G (x) 1 part carries the thermal prefactor sqrt(u / (1 - e^{-beta u})) sqrt(u)
    p, rs = two_level_fixture()
    sigma = np.array([1.0, 0.0, 0.0])
    u = 0.9
    F = glued_interaction_eval(p, rs, "F1", u, sigma, 1)
    G = rs[0].form_factor.matrix(u * sigma)
    pref = math.sqrt(u / -math.expm1(-rs[0].beta * u)) * math.sqrt(u)
    # entry <0,0| (G (x) 1) |1,0> = G_01; the 1 (x) G^T part does not touch it
    assert F[0, 2] == pytest.approx(pref * G[0, 1], rel=1e-14)
