from __future__ import annotations

import csv
import math

import numpy as np
import pytest

from sobopatch import analysis
from sobopatch.errors import DimensionTooLow, KindUnsupported, WindowEmpty
from sobopatch.manifolds import (
    cone_profile,
    curvature_field,
    decay_fit,
    euclidean_profile,
    finite_difference_curvature,
    geometric_grid,
    inverse_doubling_fit,
    powerlaw_profile,
    rho_function,
    schwarzschild_solve,
    volume_function,
    write_profile_csv,
)
from sobopatch.space import unit_ball_volume, unit_sphere_area


@pytest.fixture(scope="module")
def schw4():
    return schwarzschild_solve(4, 1.0, 1e4)


# -- Ricci-flat family --------------------------------------------------------------


def test_schwarzschild_start_values(schw4):
    assert schw4.G[0] == 1.0 and schw4.F[0] == 0.0
    # F increases to 2 gamma / (n - 3)
    assert abs(schw4.F[-1] / 2.0 - 1) <= 0.01
    assert abs(schw4.G[-1] / schw4.r[-1] - 1) <= 1e-3


@pytest.mark.parametrize("n", [4, 5, 6])
@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0])
def test_first_integral_and_monotonicity(n, gamma):
    prof = schwarzschild_solve(n, gamma, 1e4)
    fi = prof.dG**2 + (gamma / prof.G) ** (n - 3) - 1
    assert np.max(np.abs(fi)) <= 1e-9
    assert np.max(np.abs(prof.first_integral)) <= 1e-9
    assert np.all(np.diff(prof.G) > 0)
    assert np.all(np.diff(prof.F) > 0)
    sup = 2 * gamma / (n - 3)
    assert np.all(prof.F < sup) and abs(prof.F[-1] / sup - 1) <= 0.01


def test_series_start():
    n, g = 5, 1.5
    prof = schwarzschild_solve(n, g, 10.0)
    small = (prof.r > 0) & (prof.r <= 1e-3 * g)
    r = prof.r[small]
    series = g + (n - 3) / (4 * g) * r**2
    np.testing.assert_allclose(prof.G[small], series, rtol=1e-12)


def test_ricci_residual_small(schw4):
    assert np.max(curvature_field(schw4).ricci_residual) <= 1e-6


def test_kretschmann_closed_form_n4(schw4):
    # n = 4 is the Riemannian Schwarzschild metric with 2M = gamma: |Rm| = sqrt(48) M / G^3
    curv = curvature_field(schw4)
    # node 0 carries the value of node 1
    np.testing.assert_allclose(curv.riemann_norm[1:], math.sqrt(12) / schw4.G[1:] ** 3, rtol=1e-9)


def test_kretschmann_sympy_n4(schw4):
    sp = pytest.importorskip("sympy")
    r, t, th, ph = sp.symbols("r t theta phi")
    F = sp.Function("F")(r)
    G = sp.Function("G")(r)
    x = [r, t, th, ph]
    g = sp.diag(1, F**2, G**2, G**2 * sp.sin(th) ** 2)
    gi = g.inv()
    N = 4
    Gam = [[[sum(gi[a, d] * (sp.diff(g[d, c], x[b]) + sp.diff(g[d, b], x[c]) - sp.diff(g[b, c], x[d]))
                 for d in range(N)) / 2 for c in range(N)] for b in range(N)] for a in range(N)]
    K = 0
    for a in range(N):
        for b in range(N):
            for c in range(N):
                for d in range(N):
                    up = (sp.diff(Gam[a][d][b], x[c]) - sp.diff(Gam[a][c][b], x[d])
                          + sum(Gam[a][c][e] * Gam[e][d][b] - Gam[a][d][e] * Gam[e][c][b] for e in range(N)))
                    if up == 0:
                        continue
                    low = g[a, a] * up
                    K += low**2 * gi[a, a] * gi[b, b] * gi[c, c] * gi[d, d]
    syms = sp.symbols("F0 F1 F2 G0 G1 G2")
    K = K.subs({F.diff(r, 2): syms[2], G.diff(r, 2): syms[5]}).subs({F.diff(r): syms[1], G.diff(r): syms[4]})
    K = K.subs({F: syms[0], G: syms[3]}).subs(th, 0.7)
    fn = sp.lambdify(syms, K, "numpy")
    sel = slice(5, None)
    vals = fn(schw4.F[sel], schw4.dF[sel], schw4.d2F[sel], schw4.G[sel], schw4.dG[sel], schw4.d2G[sel])
    ours = curvature_field(schw4).riemann_norm[sel]
    np.testing.assert_allclose(np.sqrt(vals), ours, rtol=1e-8)


def test_finite_difference_agrees(schw4):
    exact = curvature_field(schw4)
    fd = finite_difference_curvature(schw4)
    sel = (schw4.r > 1e-2) & (schw4.r < 1e3)
    rel = np.abs(fd.riemann_norm[sel] / exact.riemann_norm[sel] - 1)
    assert np.max(rel) <= 2e-2


def test_consistency_triangle(schw4):
    V = volume_function(schw4)
    nu = inverse_doubling_fit(V, (1e2, 1e4)).nu
    curv = curvature_field(schw4)
    b = decay_fit(curv.r, curv.riemann_norm, (1e2, 1e4)).b
    assert abs(nu - 3) <= 0.05
    assert abs(b - 3) <= 0.05
    assert analysis.decay_prediction(4, 3) == 3


def test_family_needs_n4():
    with pytest.raises(DimensionTooLow):
        schwarzschild_solve(3, 1.0, 10.0)


# -- volume, rho, fits ---------------------------------------------------------------


def test_euclidean_unit_ball():
    V = volume_function(euclidean_profile(3))
    assert V(1.0) == pytest.approx(4 * math.pi / 3, rel=1e-15)


def test_powerlaw_volume():
    assert volume_function(powerlaw_profile(3, 2.5))(4.0) == pytest.approx(32.0, rel=1e-15)


@pytest.mark.parametrize("n", [4, 5])
def test_schwarzschild_volume_near_core(n):
    # r = 0 is a bolt: F ~ r and G ~ gamma, so V(t) ~ pi sigma_{n-2} gamma^(n-2) t^2
    g = 1.3
    prof = schwarzschild_solve(n, g, 10.0)
    V = volume_function(prof)
    t = 1e-2
    assert V(t) / (math.pi * unit_sphere_area(n - 2) * g ** (n - 2) * t**2) == pytest.approx(1.0, rel=1e-3)


def test_rho_euclidean():
    res = rho_function(euclidean_profile(3))
    np.testing.assert_allclose(res.rho, 3 / (4 * math.pi), rtol=1e-12)
    assert res.monotone


def test_rho_powerlaw_increasing():
    res = rho_function(powerlaw_profile(4, 3.0))
    pos = res.t > 0
    np.testing.assert_allclose(res.rho[pos], res.t[pos] ** 1.0, rtol=1e-12)
    assert np.all(np.diff(res.rho) > 0)
    assert res.monotone


@pytest.mark.parametrize("c", [0.3, 1.0])
def test_rho_cone(c):
    res = rho_function(cone_profile(3, c))
    np.testing.assert_allclose(res.rho, 1 / (c**2 * unit_ball_volume(3)), rtol=1e-12)
    assert res.monotone


def test_fit_powerlaw_exact():
    fit = inverse_doubling_fit(volume_function(powerlaw_profile(3, 2.5)), (1.0, 1e3))
    assert fit.nu == pytest.approx(2.5, rel=1e-12)
    assert fit.C_o == 1.0


def test_fit_euclidean_exact():
    fit = inverse_doubling_fit(volume_function(euclidean_profile(5)), (1.0, 1e3))
    assert fit.nu == pytest.approx(5.0, rel=1e-12)
    assert fit.C_o == 1.0


def test_fit_given_nu_reports_constant():
    fit = inverse_doubling_fit(volume_function(euclidean_profile(3)), (1.0, 1e3), nu=3.0)
    assert fit.C_o == pytest.approx(1.0, rel=1e-12)
    assert fit.A_o == pytest.approx(unit_ball_volume(3), rel=1e-12)


def test_window_empty():
    with pytest.raises(WindowEmpty):
        inverse_doubling_fit(volume_function(euclidean_profile(3, r_max=10.0)), (1e2, 1e3))


def test_decay_exact_power():
    r = geometric_grid(1e-3, 1e4)
    assert decay_fit(r, np.r_[np.inf, r[1:] ** -3.0], (1.0, 1e4)).b == pytest.approx(3.0, abs=1e-12)


def test_decay_perturbed():
    r = geometric_grid(1.0, 1e5)
    vals = np.r_[np.inf, 2.5 * r[1:] ** -2.0 * (1 + 1 / r[1:])]
    assert abs(decay_fit(r, vals, (1e3, 1e5)).b - 2) <= 0.01


def test_euclidean_flat():
    curv = curvature_field(euclidean_profile(3))
    assert np.all(curv.riemann_norm == 0)


def test_powerlaw_has_no_curvature():
    with pytest.raises(KindUnsupported):
        curvature_field(powerlaw_profile(3, 2.5))


def test_csv_columns(tmp_path, schw4):
    path = tmp_path / "p.csv"
    write_profile_csv(schw4, path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0][:7] == ["r", "F", "G", "V", "rho", "riemannNorm", "ricciResidual"]
    assert len(rows) == len(schw4.r) + 1
