import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nesskit.dynamics import build_generator, stationary_distribution
from nesskit.errors import ConfigError, DegenerateKernelError, PerronFrobeniusError
from nesskit.fixtures import SIGMA_X, random_model, two_level_fixture
from nesskit.levelshift import assemble_lambda_zero
from nesskit.model import (ParticleSystem, PowerGaussianFormFactor, ReservoirSpec, angular_moment,
                           gibbs_populations, gibbs_vector)
from nesskit.ness import convert_beta_p, null_vector, positive_phase, solve_ness, two_level_closed_form

# mpmath, 30 digits (tests/oracles.py)
GAMMA_FIXTURE = (0.933491732051092652124959638827, 0.480721830322002396676729085383)
ALPHA_FIXTURE = 1.94185425576743816225474611242
GAMMA_EQUAL_BETA1 = (1.03387295678775, 0.380340605585344)


def test_fixture_gamma():
    p, rs = two_level_fixture()
    sol = solve_ness(p, rs)
    np.testing.assert_allclose(sol.gamma, GAMMA_FIXTURE, rtol=0, atol=1e-14)
    assert sol.gamma.sum() == pytest.approx(math.sqrt(2), abs=1e-15)
    np.testing.assert_allclose(sol.populations, sol.gamma / math.sqrt(2), atol=1e-16)


def test_fixture_closed_form():
    S = angular_moment(two_level_fixture()[1][0].form_factor, ParticleSystem((0.0, 1.0)), 1, 0)
    g1, g2, a = two_level_closed_form(1.0, 1.0, 0.5, S, S)
    assert a == pytest.approx(ALPHA_FIXTURE, rel=1e-14)
    assert (g1, g2) == pytest.approx(GAMMA_FIXTURE, abs=1e-14)


def test_equal_temperature_fixture():
    p, rs = two_level_fixture(1.0, 1.0)
    np.testing.assert_allclose(solve_ness(p, rs).gamma, GAMMA_EQUAL_BETA1, atol=1e-13)


@pytest.mark.parametrize("b1", [0.2, 1.0, 5.0])
@pytest.mark.parametrize("b2", [0.2, 1.0, 5.0])
@pytest.mark.parametrize("E", [0.5, 1.0, 2.0])
def test_two_level_grid(b1, b2, E):
    p = ParticleSystem((0.0, E))
    f1 = PowerGaussianFormFactor(0.5, 1.0, SIGMA_X)
    f2 = PowerGaussianFormFactor(0.7, 0.6, SIGMA_X)
    rs = [ReservoirSpec(b1, f1), ReservoirSpec(b2, f2)]
    s1, s2 = (angular_moment(f, p, 1, 0) for f in (f1, f2))
    g1, g2, _ = two_level_closed_form(E, b1, b2, E * E * s1, E * E * s2)
    np.testing.assert_allclose(solve_ness(p, rs).gamma, [g1, g2], rtol=0, atol=1e-10)


def test_closed_form_rejects_bad_input():
    with pytest.raises(ConfigError):
        two_level_closed_form(0.0, 1.0, 1.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        two_level_closed_form(1.0, 1.0, 1.0, 0.0, 0.0)


@given(st.integers(0, 10 ** 6))
def test_gibbs_limit(seed):
    rng = np.random.default_rng(seed)
    p, rs = random_model(rng, equal_betas=True)
    sol = solve_ness(p, rs)
    np.testing.assert_allclose(sol.populations, gibbs_populations(p, rs[0].beta), rtol=0, atol=1e-12)


@given(st.integers(0, 10 ** 6))
def test_weights_positive_and_normalized(seed):
    p, rs = random_model(np.random.default_rng(seed))
    sol = solve_ness(p, rs)
    assert np.all(sol.gamma > 0)
    assert sol.gamma.sum() == pytest.approx(math.sqrt(p.n), rel=1e-13)


@given(st.integers(0, 10 ** 6), st.floats(0.0, 4.0))
def test_beta_p_conversion_is_kernel_vector(seed, bp):
    p, rs = random_model(np.random.default_rng(seed))
    sol = solve_ness(p, rs)
    z = convert_beta_p(sol, bp, check=True)
    L = assemble_lambda_zero(p, rs, bp)
    assert np.linalg.norm(L.conj().T @ z) <= 1e-9 * (1 + np.linalg.norm(L, 2)) * np.linalg.norm(z)
    # normalization <Omega_p^{beta_p}, zeta*> = 1
    assert np.dot(gibbs_vector(p, bp), z) == pytest.approx(1.0, rel=1e-12)


def test_solution_at_nonzero_beta_p():
    p, rs = two_level_fixture(beta_p=2.0)
    sol = solve_ness(p, rs)
    np.testing.assert_allclose(sol.gamma, GAMMA_FIXTURE, atol=1e-13)
    np.testing.assert_allclose(sol.zeta, gibbs_vector(p, 2.0), atol=1e-15)
    assert sol.overlap == pytest.approx(1.0, rel=1e-13)
    assert max(sol.residuals) < 1e-12


@given(st.integers(0, 10 ** 6))
def test_populations_match_pauli_stationary_state(seed):
    p, rs = random_model(np.random.default_rng(seed))
    pstar = stationary_distribution(build_generator(p, rs))
    np.testing.assert_allclose(solve_ness(p, rs).populations, pstar, rtol=0, atol=1e-10)


def test_infinite_temperature_trend():
    p, rs = random_model(np.random.default_rng(3), n_min=4, n_max=4)
    devs = []
    for b2 in (1e-2, 1e-3, 1e-4):
        rs2 = [rs[0], ReservoirSpec(b2, rs[1].form_factor)]
        devs.append(np.abs(solve_ness(p, rs2).gamma - 1 / math.sqrt(p.n)).max() / b2)
    assert max(devs) / min(devs) < 1.2


def test_zero_coupling_is_degenerate():
    p = ParticleSystem((0.0, 1.0))
    ff = PowerGaussianFormFactor(0.5, 0.0, SIGMA_X)
    with pytest.raises(DegenerateKernelError):
        solve_ness(p, [ReservoirSpec(1.0, ff), ReservoirSpec(2.0, ff)])


def test_positive_phase():
    v = np.array([0.3, 0.4, 0.5]) * np.exp(1j * 0.7)
    np.testing.assert_allclose(positive_phase(v), [0.3, 0.4, 0.5], atol=1e-15)
    with pytest.raises(PerronFrobeniusError):
        positive_phase(np.array([0.5, -0.5, 0.1]))


def test_null_vector_of_singular_matrix(rng):
    A = rng.normal(size=(5, 5))
    A[:, -1] = A[:, :-1] @ rng.normal(size=4)
    v = null_vector(A)
    assert np.linalg.norm(A @ v) < 1e-12
