import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nesskit.dynamics import build_generator, stationary_flux
from nesskit.errors import ConfigError
from nesskit.fixtures import random_model, two_level_fixture
from nesskit.model import ParticleSystem, ReservoirSpec
from nesskit.ness import solve_ness
from nesskit.thermo import (SWEEP_HEADER, entropy_production, eta_prime, linear_response,
                            spectral_coupling, sweep, thermo_report, write_sweep_csv)

# mpmath, 30 digits (tests/oracles.py)
ETA_PRIME_FIXTURE = 1.64129319095174527210437299990
EP_FIXTURE_G01 = 0.00820646595475872636052186499950


def test_fixture_flux_and_entropy_production():
    p, rs = two_level_fixture()
    rep = thermo_report(p, rs, g=0.1)
    assert rep.eta_prime_1 == pytest.approx(ETA_PRIME_FIXTURE, rel=1e-13)
    assert rep.eta_prime_2 == pytest.approx(-ETA_PRIME_FIXTURE, rel=1e-13)
    assert rep.ep_leading == pytest.approx(EP_FIXTURE_G01, rel=1e-13)
    assert rep.flux_into_particle == 0.0


def test_spectral_coupling_fixture():
    p, rs = two_level_fixture()
    assert spectral_coupling(p, rs[0], 1, 0) == pytest.approx(4 * math.pi * math.exp(-2), rel=1e-14)
    with pytest.raises(ValueError):
        spectral_coupling(p, rs[0], 0, 1)


@given(st.integers(0, 10 ** 6))
def test_zero_total_flow_and_pauli_current(seed):
    p, rs = random_model(np.random.default_rng(seed))
    sol = solve_ness(p, rs)
    e1, e2 = (eta_prime(p, rs, j, sol.gamma) for j in (1, 2))
    assert abs(e1 + e2) <= 1e-10 * (abs(e1) + abs(e2) + 1)
    rm = build_generator(p, rs)
    for j, e in ((1, e1), (2, e2)):
        assert stationary_flux(rm, sol.populations, j) == pytest.approx(e, abs=1e-12 * (1 + abs(e)))


@given(st.integers(0, 10 ** 6))
def test_entropy_production_nonnegative(seed):
    p, rs = random_model(np.random.default_rng(seed))
    rep = thermo_report(p, rs, g=0.3, with_linear=False)
    assert rep.ep_leading >= -1e-12


def test_entropy_production_formula():
    assert entropy_production(2.0, 0.5, 1.0, 0.25) == pytest.approx(0.75 * 0.25 * 2.0)
    assert entropy_production(2.0, 0.0, 1.0, 0.25) == 0.0


def test_flux_sign_follows_temperature_difference():
    p, rs = two_level_fixture()
    for db in (-0.1, -0.01, 0.01, 0.1):
        rows = sweep(p, rs, [db], g=0.1)
        assert np.sign(rows[0].eta_prime_1) == np.sign(db)


def test_flux_vanishes_at_equal_temperatures(rng):
    p, rs = random_model(rng, equal_betas=True)
    rep = thermo_report(p, rs, g=1.0, with_linear=False)
    assert abs(rep.eta_prime_1) < 1e-12


def test_linear_response_fixture_ratio():
    p, rs = two_level_fixture()
    lr = linear_response(p, 1.0, rs)
    assert lr.ratio == pytest.approx(2 / (2 * math.pi), rel=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_linear_response_matches_finite_difference(seed):
    p, rs = random_model(np.random.default_rng(seed), identical=True)
    b1 = rs[0].beta
    h = 1e-4
    flux = lambda db: eta_prime(p, [rs[0], ReservoirSpec(b1 - db, rs[1].form_factor)], 1,
                                solve_ness(p, [rs[0], ReservoirSpec(b1 - db, rs[1].form_factor)]).gamma)
    fd = (flux(h) - flux(-h)) / (2 * h)
    assert linear_response(p, b1, rs).value == pytest.approx(fd, rel=1e-4)


def test_linear_response_ratio_is_beta_independent(rng):
    p, rs = random_model(rng, identical=True, n_min=3, n_max=6)
    ratios = [linear_response(p, b, rs).ratio for b in (0.5, 1.0, 2.0)]
    np.testing.assert_allclose(ratios, p.n / (2 * math.pi), rtol=1e-9)


def test_linear_response_requires_identical_couplings(rng):
    p, rs = random_model(rng, kind="angular_moments")
    with pytest.raises(ConfigError):
        linear_response(p, 1.0, rs)
    assert thermo_report(p, rs, 0.1).linear_coefficient is None


def test_sweep_grid_order_and_threads(monkeypatch):
    p, rs = two_level_fixture()
    grid = [0.3, -0.2, 0.0, 0.1]
    serial = sweep(p, rs, grid, g=0.1, threads=1)
    threaded = sweep(p, rs, grid, g=0.1, threads=3)
    assert [r.delta_beta for r in serial] == grid
    assert [r.eta_prime_1 for r in serial] == [r.eta_prime_1 for r in threaded]
    monkeypatch.setenv("NESSKIT_THREADS", "2")
    assert [r.eta_prime_1 for r in sweep(p, rs, grid, g=0.1)] == [r.eta_prime_1 for r in serial]


def test_sweep_skips_nonpositive_temperatures(caplog):
    p, rs = two_level_fixture()
    rows = sweep(p, rs, [0.5, 1.0, 1.5], g=0.1)
    assert [r.delta_beta for r in rows] == [0.5]
    assert "skipping" in caplog.text


def test_sweep_midpoint_antisymmetric():
    # identical couplings: swapping the reservoirs flips the flux
    p, rs = two_level_fixture(1.0, 1.0)
    rows = sweep(p, rs, [-0.4, 0.4], g=0.1, anchor="midpoint")
    assert rows[0].eta_prime_1 == pytest.approx(-rows[1].eta_prime_1, rel=1e-12)
    assert rows[0].ep_leading == pytest.approx(rows[1].ep_leading, rel=1e-12)


def test_sweep_beta1_anchor_reproduces_fixture():
    p, rs = two_level_fixture(1.0, 1.0)
    row = sweep(p, rs, [0.5], g=0.1)[0]
    assert (row.beta1, row.beta2) == (1.0, 0.5)
    assert row.eta_prime_1 == pytest.approx(ETA_PRIME_FIXTURE, rel=1e-13)


def test_sweep_csv_format():
    p, rs = two_level_fixture()
    buf = io.StringIO()
    write_sweep_csv(sweep(p, rs, [0.0], g=0.1), buf)
    lines = buf.getvalue().split("\n")
    assert lines[0] == ",".join(SWEEP_HEADER)
    assert lines[1] == "0,0,0,0"
    assert "\r" not in buf.getvalue()


def test_sweep_rejects_nonfinite_grid():
    p, rs = two_level_fixture()
    with pytest.raises(ConfigError):
        sweep(p, rs, [math.nan], g=0.1)
    with pytest.raises(ValueError):
        sweep(p, rs, [0.1], g=0.1, anchor="left")
