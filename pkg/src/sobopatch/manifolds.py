"""Radial model geometries: closed-form profiles and a Ricci-flat family.

The Ricci-flat family is the doubly warped metric

    g = dr^2 + F(r)^2 dt^2 + G(r)^2 g_{S^(n-2)}

on R^2 x S^(n-2) with ``G(0) = gamma``, ``G'^2 + (gamma/G)^(n-3) = 1`` and
``F = 2 gamma/(n-3) * sqrt(1 - (gamma/G)^(n-3))``, where ``t`` is an angle of
period ``2 pi``.  We integrate the equivalent second-order equation
``G'' = (n-3)/2 * gamma^(n-3) G^(-(n-2))``, which is regular at ``r = 0``,
and keep the first integral as an accuracy oracle.

The radial coordinate ``r`` serves as the distance proxy for volumes and
curvature decay; fits should use windows with ``r >= 100 gamma``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp

from .errors import (
    DimensionTooLow,
    KindUnsupported,
    NonPositiveField,
    StepFailure,
    WindowEmpty,
)
from .space import unit_ball_volume, unit_sphere_area

__all__ = [
    "RadialProfile",
    "GrowthFit",
    "DecayFit",
    "CurvatureField",
    "VolumeFunction",
    "euclidean_profile",
    "cone_profile",
    "powerlaw_profile",
    "schwarzschild_solve",
    "volume_function",
    "rho_function",
    "inverse_doubling_fit",
    "curvature_field",
    "finite_difference_curvature",
    "decay_fit",
    "write_profile_csv",
    "geometric_grid",
]

NODES_PER_DECADE = 64


def geometric_grid(r_min: float, r_max: float, per_decade: int = NODES_PER_DECADE) -> np.ndarray:
    """``0`` followed by geometrically spaced radii from ``r_min`` to ``r_max``."""
    m = max(2, int(math.ceil(per_decade * math.log10(r_max / r_min))) + 1)
    return np.concatenate([[0.0], np.geomspace(r_min, r_max, m)])


@dataclass(frozen=True, eq=False)
class RadialProfile:
    n: int
    kind: str
    params: dict
    r: np.ndarray
    F: np.ndarray | None = None
    G: np.ndarray | None = None
    dF: np.ndarray | None = None
    dG: np.ndarray | None = None
    d2F: np.ndarray | None = None
    d2G: np.ndarray | None = None
    first_integral: np.ndarray | None = None

    @property
    def doubly_warped(self) -> bool:
        return self.G is not None


def _closed(kind: str, n: int, params: dict, r_max: float, r_min: float) -> RadialProfile:
    if n < 2:
        raise DimensionTooLow("dimension must be at least 2")
    return RadialProfile(n, kind, params, geometric_grid(r_min, r_max))


def euclidean_profile(n: int, r_max: float = 1e4, r_min: float = 1e-3) -> RadialProfile:
    return _closed("euclidean", n, {}, r_max, r_min)


def cone_profile(n: int, c: float, r_max: float = 1e4, r_min: float = 1e-3) -> RadialProfile:
    if not c > 0:
        raise ValueError("cone aperture c must be positive")
    return _closed("cone", n, {"c": float(c)}, r_max, r_min)


def powerlaw_profile(n: int, nu: float, r_max: float = 1e4, r_min: float = 1e-3) -> RadialProfile:
    """Synthetic profile with ``V(t) = t^nu``; it carries no metric."""
    if not nu > 0:
        raise ValueError("nu must be positive")
    return _closed("powerlaw", n, {"nu": float(nu)}, r_max, r_min)


# ---------------------------------------------------------------------------
# Ricci-flat family
# ---------------------------------------------------------------------------


def schwarzschild_solve(
    n: int,
    gamma_core: float,
    r_max: float,
    per_decade: int = NODES_PER_DECADE,
    rtol: float = 1e-13,
) -> RadialProfile:
    """Integrate the warping functions on a geometric grid up to ``r_max``.

    Below ``r0 = 1e-3 gamma`` the series ``G = gamma + a r^2 + b r^4`` is used;
    beyond it an 8th order Runge-Kutta integrator acts on ``u = G - gamma``.
    Raises :class:`StepFailure` if the integrator fails or the first integral
    ``G'^2 + (gamma/G)^(n-3) - 1`` drifts above ``1e-10``.
    """
    if n <= 3:
        raise DimensionTooLow(f"the family needs n >= 4, got {n}")
    if not (gamma_core > 0 and r_max > 0):
        raise ValueError("gamma_core and r_max must be positive")
    g = float(gamma_core)
    m = n - 3
    c = m / 2
    a = m / (4 * g)
    b = -c * (n - 2) * a / (12 * g**2)
    r0 = 1e-3 * g
    r_lo = min(r0, r_max / 10)
    r = geometric_grid(r_lo, r_max, per_decade)

    def rhs(t, y):
        G = g + y[0]
        return [y[1], c * g**m * G ** (-(n - 2))]

    y0 = [a * r0**2 + b * r0**4, 2 * a * r0 + 4 * b * r0**3]
    u = np.empty_like(r)
    du = np.empty_like(r)
    inner = r <= r0
    u[inner] = a * r[inner] ** 2 + b * r[inner] ** 4
    du[inner] = 2 * a * r[inner] + 4 * b * r[inner] ** 3
    outer = ~inner
    if np.any(outer):
        sol = solve_ivp(
            rhs, (r0, float(r[-1])), y0, method="DOP853", t_eval=r[outer],
            rtol=rtol, atol=1e-15 * max(1.0, g),
        )
        if not sol.success:
            raise StepFailure(sol.message)
        u[outer], du[outer] = sol.y
    G = g + u
    # 1 - (g/G)^m computed without cancellation
    one_minus = -np.expm1(-m * np.log1p(u / g))
    first = du**2 - one_minus
    if np.max(np.abs(first)) > 1e-10:
        raise StepFailure(f"first integral drift {np.max(np.abs(first)):.3e}")
    scale = 2 * g / m
    F = scale * np.sqrt(np.maximum(one_minus, 0.0))
    d2G = c * g**m * G ** (-(n - 2))
    d3G = -c * (n - 2) * g**m * G ** (-(n - 1)) * du
    return RadialProfile(
        n=n,
        kind="schwarzschild",
        params={"gamma_core": g, "r_max": float(r_max)},
        r=r,
        F=F,
        G=G,
        dF=scale * d2G,
        dG=du,
        d2F=scale * d3G,
        d2G=d2G,
        first_integral=first,
    )


# ---------------------------------------------------------------------------
# volumes and rho
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class VolumeFunction:
    """Sampled volume ``V(t)`` with log-log interpolation between nodes."""

    t: np.ndarray
    values: np.ndarray
    exact: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.exact is not None:
            return self.exact(t)
        pos = self.t > 0
        lt, lv = np.log(self.t[pos]), np.log(self.values[pos])
        out = np.exp(np.interp(np.log(np.maximum(t, 1e-300)), lt, lv))
        return np.where(t > 0, out, 0.0)


def volume_function(profile: RadialProfile) -> VolumeFunction:
    n, kind, prm = profile.n, profile.kind, profile.params
    w = unit_ball_volume(n)
    if kind == "euclidean":
        fn = lambda t: w * np.asarray(t, dtype=float) ** n  # noqa: E731
    elif kind == "cone":
        cc = prm["c"]
        fn = lambda t: cc ** (n - 1) * w * np.asarray(t, dtype=float) ** n  # noqa: E731
    elif kind == "powerlaw":
        nu = prm["nu"]
        fn = lambda t: np.asarray(t, dtype=float) ** nu  # noqa: E731
    elif kind == "schwarzschild":
        dens = 2 * math.pi * unit_sphere_area(n - 2) * profile.F * profile.G ** (n - 2)
        V = cumulative_simpson(dens, x=profile.r, initial=0.0)
        return VolumeFunction(profile.r, V)
    else:
        raise KindUnsupported(kind)
    return VolumeFunction(profile.r, fn(profile.r), fn)


@dataclass(frozen=True)
class RhoResult:
    t: np.ndarray
    rho: np.ndarray
    monotone: bool
    worst_decrease: float


def rho_function(profile: RadialProfile, tol: float = 1e-12) -> RhoResult:
    """``rho(t) = t^n / V(t)`` on the grid and a monotonicity verdict.

    ``rho(0)`` is the small-radius limit.  A decrease counts only if it
    exceeds ``tol`` relative to the larger value.
    """
    V = volume_function(profile)
    t = profile.r
    n = profile.n
    rho = np.empty_like(t)
    pos = t > 0
    rho[pos] = t[pos] ** n / V.values[pos]
    kind = profile.kind
    if kind == "euclidean":
        rho[~pos] = 1 / unit_ball_volume(n)
    elif kind == "cone":
        rho[~pos] = 1 / (profile.params["c"] ** (n - 1) * unit_ball_volume(n))
    elif kind == "powerlaw":
        nu = profile.params["nu"]
        rho[~pos] = 0.0 if nu < n else (1.0 if nu == n else math.inf)
    else:
        rho[~pos] = 0.0
    drops = (rho[:-1] - rho[1:]) / np.maximum(np.abs(rho[1:]), np.abs(rho[:-1]))
    drops = np.nan_to_num(drops, nan=0.0)
    worst = float(max(0.0, drops.max(initial=0.0)))
    return RhoResult(t, rho, worst <= tol, worst)


# ---------------------------------------------------------------------------
# fits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GrowthFit:
    nu: float
    C_o: float
    A_o: float
    B_o: float
    residual: float
    window: tuple[float, float]
    slope: float = math.nan
    note: str = ""

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in ("nu", "C_o", "A_o", "B_o", "residual", "slope", "note")} | {
            "window": list(self.window)
        }


def _window(t: np.ndarray, window) -> np.ndarray:
    lo, hi = window
    sel = np.flatnonzero((t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12)) & (t > 0))
    if sel.size < 2:
        raise WindowEmpty(f"fewer than two grid nodes in [{lo}, {hi}]")
    return sel


def inverse_doubling_fit(V: VolumeFunction, window, nu: float | None = None) -> GrowthFit:
    """Growth exponent from the inverse doubling condition on grid pairs.

    Without ``nu``: the smallest pairwise log-slope over the window, with
    ``C_o = 1``.  With ``nu``: ``C_o`` is the smallest value of
    ``(V(t2)/V(t1)) (t1/t2)^nu``.  ``A_o``, ``B_o`` bound ``V(t)/t^nu``.
    """
    sel = _window(V.t, window)
    t, v = V.t[sel], V.values[sel]
    if np.any(v <= 0):
        raise NonPositiveField("volume must be positive on the window")
    lt, lv = np.log(t), np.log(v)
    dt = lt[None, :] - lt[:, None]
    dv = lv[None, :] - lv[:, None]
    upper = dt > 0
    slopes = dv[upper] / dt[upper]
    if nu is None:
        fit_nu = float(slopes.min())
        C_o = 1.0
    else:
        fit_nu = float(nu)
        C_o = float(np.exp((dv[upper] - fit_nu * dt[upper]).min()))
    ratio = lv - fit_nu * lt
    A_o, B_o = float(np.exp(ratio.min())), float(np.exp(ratio.max()))
    slope, icpt = np.polyfit(lt, lv, 1)
    resid = float(np.max(np.abs(lv - (slope * lt + icpt))))
    return GrowthFit(fit_nu, C_o, A_o, B_o, resid, (float(window[0]), float(window[1])), float(slope))


@dataclass(frozen=True)
class DecayFit:
    b: float
    intercept: float
    residual: float
    window: tuple[float, float]

    def to_json(self) -> dict:
        return {"b": self.b, "intercept": self.intercept, "residual": self.residual, "window": list(self.window)}


def decay_fit(r: np.ndarray, values: np.ndarray, window) -> DecayFit:
    """Least-squares ``b`` in ``values ~ C r^(-b)`` over the window nodes."""
    r = np.asarray(r, dtype=float)
    values = np.asarray(values, dtype=float)
    sel = _window(r, window)
    y = values[sel]
    if np.any(y <= 0):
        raise NonPositiveField("field must be positive on the window")
    lx, ly = np.log(r[sel]), np.log(y)
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = float(np.max(np.abs(ly - (slope * lx + icpt))))
    return DecayFit(float(-slope), float(icpt), resid, (float(window[0]), float(window[1])))


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CurvatureField:
    r: np.ndarray
    riemann_norm: np.ndarray
    ricci_residual: np.ndarray
    sectional: dict = field(default_factory=dict)


def _warped_curvatures(n, F, G, dF, dG, d2F, d2G):
    """Sectional curvatures of the basis planes and their multiplicities."""
    with np.errstate(divide="ignore", invalid="ignore"):
        K = {
            "r-t": (-d2F / F, 1),
            "r-s": (-d2G / G, n - 2),
            "t-s": (-dF * dG / (F * G), n - 2),
            "s-s": ((1 - dG**2) / G**2, (n - 2) * (n - 3) // 2),
        }
    return K


def _assemble(n, K):
    krt, krs, kts, kss = (K[x][0] for x in ("r-t", "r-s", "t-s", "s-s"))
    with np.errstate(invalid="ignore"):
        norm = 2 * np.sqrt(sum(mult * val**2 for val, mult in K.values()))
        ric_r = krt + (n - 2) * krs
        ric_t = krt + (n - 2) * kts
        ric_s = krs + kts + (n - 3) * kss
    resid = np.maximum(np.abs(ric_r), np.maximum(np.abs(ric_t), np.abs(ric_s)))
    return norm, resid


def curvature_field(profile: RadialProfile) -> CurvatureField:
    """Riemann norm and the largest Ricci eigenvalue in absolute value.

    For the warped family the sectional curvatures of the planes spanned
    by ``d/dr``, ``d/dt`` and sphere directions come from the standard
    warped-product formulas; the curvature operator is diagonal in that
    basis, so ``|R| = 2 sqrt(sum mult K^2)``.  The value at ``r = 0`` is
    taken from the first positive node.
    """
    n, r = profile.n, profile.r
    if profile.kind == "euclidean":
        z = np.zeros_like(r)
        return CurvatureField(r, z, z.copy())
    if profile.kind == "cone":
        cc = profile.params["c"]
        with np.errstate(divide="ignore"):
            kss = np.where(r > 0, (1 - cc**2) / (cc**2 * np.where(r > 0, r, 1) ** 2), np.inf)
        mult = (n - 1) * (n - 2) // 2
        norm = 2 * np.sqrt(mult) * np.abs(kss)
        ric = (n - 2) * np.abs(kss)
        return CurvatureField(r, norm, ric, {"s-s": kss})
    if not profile.doubly_warped:
        raise KindUnsupported(f"no metric for kind {profile.kind!r}")
    K = _warped_curvatures(n, profile.F, profile.G, profile.dF, profile.dG, profile.d2F, profile.d2G)
    norm, resid = _assemble(n, K)
    norm[0], resid[0] = norm[1], resid[1]
    return CurvatureField(r, norm, resid, {k: v[0] for k, v in K.items()})


def finite_difference_curvature(profile: RadialProfile) -> CurvatureField:
    """Same quantities with derivatives of ``F`` and ``G`` taken numerically.

    Uses second-order differences on the nonuniform grid (``numpy.gradient``)
    and serves as an independent check of the closed-form derivatives.
    """
    if not profile.doubly_warped:
        raise KindUnsupported("finite differences need a doubly warped profile")
    r = profile.r
    dF = np.gradient(profile.F, r, edge_order=2)
    dG = np.gradient(profile.G, r, edge_order=2)
    d2F = np.gradient(dF, r, edge_order=2)
    d2G = np.gradient(dG, r, edge_order=2)
    K = _warped_curvatures(profile.n, profile.F, profile.G, dF, dG, d2F, d2G)
    norm, resid = _assemble(profile.n, K)
    norm[0], resid[0] = norm[1], resid[1]
    return CurvatureField(r, norm, resid, {k: v[0] for k, v in K.items()})


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------


def write_profile_csv(profile: RadialProfile, path) -> None:
    """Columns: r, F, G, V, rho, riemannNorm, ricciResidual, firstIntegral."""
    V = volume_function(profile).values
    rho = rho_function(profile).rho
    try:
        curv = curvature_field(profile)
        rn, rr = curv.riemann_norm, curv.ricci_residual
    except KindUnsupported:
        rn = rr = np.full_like(profile.r, np.nan)
    F = profile.F if profile.F is not None else np.full_like(profile.r, np.nan)
    G = profile.G if profile.G is not None else np.full_like(profile.r, np.nan)
    fi = profile.first_integral if profile.first_integral is not None else np.full_like(profile.r, np.nan)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "F", "G", "V", "rho", "riemannNorm", "ricciResidual", "firstIntegral"])
        for row in zip(profile.r, F, G, V, rho, rn, rr, fi):
            w.writerow([repr(float(x)) for x in row])
