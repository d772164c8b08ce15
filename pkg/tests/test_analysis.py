from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import gamma as Gamma

from sobopatch import fixtures
from sobopatch.analysis import (
    WeightSpec,
    alpha_from_nu,
    aubin_talenti_constant,
    epsilon_branches,
    epsilon_m,
    estimate_hardy_witness,
    estimate_sobolev_witness,
    exponent_conversions,
    flatness_thresholds,
    mu_rho_weights,
    nu_from_alpha,
    potential_norm,
    schrodinger_positivity,
    sobolev_upper_bound_space,
)
from sobopatch.errors import DimensionTooLow, InvalidS, MissingRho, MOutOfRange
from sobopatch.space import unit_ball_volume


def euclid_grid(points):
    return fixtures.euclidean_radial_grid(3, points, 100.0)


def hand_quotient(space, f, lam, mu_energy, p, q):
    # independent evaluation of (sum |f|^q lam)^(p/q) / sum |df|^p w
    f = np.asarray(f, dtype=float)
    num = np.sum(np.abs(f) ** q * lam) ** (p / q)
    den = sum(w * abs(f[a] - f[b]) ** p for (a, b), w in zip(space.pairs, mu_energy))
    return num / den


# -- closed forms --------------------------------------------------------------


@pytest.mark.parametrize("m, value", [(2.0, 1.0), (4.0, 0.5), (1.5, 8 / 9)])
def test_epsilon_examples(m, value):
    assert epsilon_m(m) == pytest.approx(value, rel=1e-15)


def test_epsilon_branches_agree_at_two():
    assert epsilon_branches(2.0) == (1.0, 1.0)


@pytest.mark.parametrize("m", [1.0, 0.5, -3.0])
def test_epsilon_domain(m):
    with pytest.raises(MOutOfRange):
        epsilon_m(m)


def test_exponent_examples():
    assert exponent_conversions(4, 3.0).b3 == 3.0
    assert alpha_from_nu(5, 5.0) == 0.0
    ex = exponent_conversions(4, 4.0)
    assert ex.b3 == 6.0 and ex.gammaKato == pytest.approx(1 / 3, rel=1e-15)
    assert ex.b2 == 2.0 and ex.alpha == 0.0


def test_exponent_dimension_checks():
    with pytest.raises(DimensionTooLow):
        exponent_conversions(3, 3.0)
    with pytest.raises(DimensionTooLow):
        alpha_from_nu(2, 2.0)
    assert alpha_from_nu(3, 2.5) == pytest.approx(1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(3, 12), st.floats(0.0, 1.0))
def test_alpha_nu_roundtrip(n, t):
    nu = 2.1 + t * (n - 2.1)
    assert nu_from_alpha(n, alpha_from_nu(n, nu)) == pytest.approx(nu, rel=1e-12)


def test_flatness_examples():
    assert flatness_thresholds(4, 1.0) == 1.0
    assert flatness_thresholds(8, 2.0) == 0.25
    assert flatness_thresholds(4, 1e300) < 1e-299
    with pytest.raises(DimensionTooLow):
        flatness_thresholds(3, 1.0)


# -- weights -------------------------------------------------------------------


def test_mu_rho_beta_zero():
    rho = np.array([0.5, 1.0, 4.0])
    vol = np.array([1.0, 2.0, 3.0])
    lam, mu = mu_rho_weights((rho, vol), WeightSpec(4, 0.0))
    np.testing.assert_allclose(lam, rho**-1.0 * vol, rtol=1e-15)
    np.testing.assert_array_equal(mu, vol)


def test_mu_rho_beta_one():
    rho = np.array([0.5, 1.0, 4.0])
    vol = np.array([1.0, 2.0, 3.0])
    for n in (3, 5):
        lam, mu = mu_rho_weights((rho, vol), WeightSpec(n, 1.0))
        np.testing.assert_allclose(lam, rho * vol, rtol=1e-15)
        np.testing.assert_allclose(mu, rho * vol, rtol=1e-15)


def test_mu_rho_euclidean_constant_factor():
    sp = euclid_grid(50)
    lam, mu = mu_rho_weights(sp, WeightSpec(3, 0.0))
    ratio = lam / sp.mu
    np.testing.assert_allclose(ratio, unit_ball_volume(3) ** 2, rtol=1e-12)


def test_mu_rho_missing():
    with pytest.raises(MissingRho):
        mu_rho_weights((None, np.ones(2)), WeightSpec(3))
    with pytest.raises(MissingRho):
        mu_rho_weights((np.array([1.0, 0.0]), np.ones(2)), WeightSpec(3))


# -- Sobolev witness -----------------------------------------------------------


def test_aubin_talenti_quadrature_matches_closed_form():
    for n in (3, 4, 5):
        closed = 1 / (math.pi * n * (n - 2)) * (Gamma(n) / Gamma(n / 2)) ** (2 / n)
        assert aubin_talenti_constant(n) == pytest.approx(closed, rel=1e-9)


@pytest.fixture(scope="module")
def sobolev_1001():
    sp = euclid_grid(1001)
    return sp, estimate_sobolev_witness(sp, WeightSpec(3, 0.0))


def test_sobolev_witness_near_reference(sobolev_1001):
    # lambda = omega^2 vol turns the weighted quotient into omega^(2/3) times the flat one
    _, wb = sobolev_1001
    ref = unit_ball_volume(3) ** (2 / 3) * aubin_talenti_constant(3)
    assert abs(wb.bound / ref - 1) <= 0.10
    assert wb.bound <= ref * (1 + 1e-9)


def test_sobolev_witness_reevaluates(sobolev_1001):
    sp, wb = sobolev_1001
    spec = WeightSpec(3, 0.0)
    lam, _ = mu_rho_weights(sp, spec)
    hq = hand_quotient(sp, wb.witness, lam, sp.energy_weights(2.0), 2.0, spec.q)
    assert hq == pytest.approx(wb.bound, rel=1e-9)
    assert hand_quotient(sp, -7.5 * wb.witness, lam, sp.energy_weights(2.0), 2.0, spec.q) == pytest.approx(
        hq, rel=1e-10
    )


def test_sobolev_nested_grids_nondecreasing():
    # N -> 2N - 1 points keeps the old radii
    vals = [estimate_sobolev_witness(euclid_grid(N), WeightSpec(3, 0.0)).bound for N in (1001, 2001, 4001)]
    assert vals[0] <= vals[1] * (1 + 1e-6) and vals[1] <= vals[2] * (1 + 1e-6)


def test_sobolev_upper_bound_dominates():
    sp = fixtures.cube_lattice(2)
    spec = WeightSpec(3, 0.0)
    up, _ = sobolev_upper_bound_space(sp, spec)
    assert up >= estimate_sobolev_witness(sp, spec).bound


# -- Hardy witness -------------------------------------------------------------


def hardy_weights(sp, p):
    w = np.zeros(sp.n_points)
    pos = sp.radial > 0
    w[pos] = sp.radial[pos] ** -p * sp.mu[pos]
    return w


def test_hardy_l1_converges():
    sp = euclid_grid(10_000)
    wb = estimate_hardy_witness(sp, 1.0)
    assert abs(wb.bound / 0.5 - 1) <= 0.02
    assert wb.method == "exhaustive"
    hq = hand_quotient(sp, wb.witness, hardy_weights(sp, 1.0), sp.energy_weights(1.0), 1.0, 1.0)
    assert hq == pytest.approx(wb.bound, rel=1e-9)
    coarse = estimate_hardy_witness(euclid_grid(100), 1.0).bound
    assert abs(coarse - 0.5) > abs(wb.bound - 0.5)


def test_hardy_p2_reevaluates():
    sp = fixtures.powerlaw_radial_grid(3, 2.5, 201, 100.0)
    wb = estimate_hardy_witness(sp, 2.0)
    assert wb.method == "eigen"
    hq = hand_quotient(sp, wb.witness, hardy_weights(sp, 2.0), sp.energy_weights(2.0), 2.0, 2.0)
    assert hq == pytest.approx(wb.bound, rel=1e-9)


def powerlaw_hardy(nu, R, h=0.5):
    return estimate_hardy_witness(fixtures.powerlaw_radial_grid(3, nu, int(R / h) + 1, R), 2.0).bound


def test_hardy_powerlaw_bounded_when_nu_above_p():
    # the continuous radial constant for V = t^nu is (2/(nu-2))^2 = 16
    vals = [powerlaw_hardy(2.5, R) for R in (10.0, 100.0, 1000.0, 1e4)]
    assert all(np.isfinite(vals))
    assert max(vals) <= 16.0


def test_hardy_powerlaw_diverges_when_nu_below_p():
    # at fixed step the bound keeps growing with the outer radius, past the nu=2.5 cap
    vals = [powerlaw_hardy(1.5, R) for R in (10.0, 100.0, 1000.0, 1e4)]
    assert np.all(np.diff(vals) > 0)
    assert vals[-1] > 16.0 * 10
    # roughly R^(1/2)
    assert vals[-1] / vals[-2] > 2.5


# -- Schrodinger positivity ----------------------------------------------------


@pytest.fixture(scope="module")
def lattice():
    sp = fixtures.cube_lattice(3)
    S, _ = sobolev_upper_bound_space(sp, WeightSpec(3, 0.0))
    return sp, S


def test_zero_potential(lattice):
    sp, S = lattice
    chk = schrodinger_positivity(sp, np.zeros(sp.n_points), S, 3)
    assert chk.NV == 0.0
    assert chk.verdict == "form-positive"
    # Dirichlet Laplacian: strictly positive bottom
    assert chk.min_eigenvalue >= 0


def test_potential_norm_uses_rho(lattice):
    sp, _ = lattice
    V = np.linspace(0, 1, sp.n_points)
    direct = np.sum(V**1.5 * sp.rho * sp.mu) ** (2 / 3)
    assert potential_norm(sp, V, 3) == pytest.approx(direct, rel=1e-12)


def test_scaled_potential_inconclusive(lattice):
    sp, S = lattice
    V = np.ones(sp.n_points)
    V *= 2.0 / (S * potential_norm(sp, V, 3))
    chk = schrodinger_positivity(sp, V, S, 3, m=3.0)
    assert chk.verdict == "inconclusive"
    assert chk.threshold == pytest.approx(2 / 3)


def test_random_potentials_below_threshold(lattice):
    sp, S = lattice
    rng = np.random.default_rng(17)
    for _ in range(20):
        V = rng.exponential(1.0, sp.n_points) * (rng.random(sp.n_points) < 0.5)
        V[0] += 0.1
        V *= 0.9 / (S * potential_norm(sp, V, 3))
        chk = schrodinger_positivity(sp, V, S, 3)
        assert chk.verdict == "form-positive"
        assert chk.min_eigenvalue >= -1e-8


def test_invalid_S(lattice):
    sp, _ = lattice
    for S in (0.0, -1.0, math.inf):
        with pytest.raises(InvalidS):
            schrodinger_positivity(sp, np.zeros(sp.n_points), S, 3)
