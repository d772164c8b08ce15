"""Closed-form exponents and thresholds, weight builders and witness estimators.

Estimators here only ever produce *lower* bounds (a concrete test function
and its quotient); upper bounds come from :mod:`sobopatch.patching` or from
the certified bounds of :mod:`sobopatch.discrete`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
from scipy.integrate import quad

from .discrete import DENSE_LIMIT
from .errors import DimensionTooLow, InvalidS, MissingRho, MOutOfRange
from .patching import space_problem
from .space import FiniteMetricMeasureSpace, require_connected, unit_sphere_area

__all__ = [
    "epsilon_m",
    "epsilon_branches",
    "ExponentConversions",
    "exponent_conversions",
    "alpha_from_nu",
    "nu_from_alpha",
    "gamma_kato",
    "decay_prediction",
    "flatness_thresholds",
    "TAUB_NUT",
    "WeightSpec",
    "beta_admissible",
    "mu_rho_weights",
    "WitnessBound",
    "estimate_sobolev_witness",
    "estimate_hardy_witness",
    "aubin_talenti_constant",
    "sobolev_upper_bound_space",
    "SchrodingerCheck",
    "potential_norm",
    "schrodinger_positivity",
]


def epsilon_branches(m: float) -> tuple[float, float]:
    """Both branch formulas evaluated at ``m``: ``(2/m, (2/m)(2 - 2/m))``."""
    if not m > 1:
        raise MOutOfRange(f"m must exceed 1, got {m}")
    return 2 / m, (2 / m) * (2 - 2 / m)


def epsilon_m(m: float) -> float:
    """``2/m`` for ``m >= 2`` and ``(2/m)(2 - 2/m)`` for ``1 < m < 2``."""
    upper, lower = epsilon_branches(m)
    return upper if m >= 2 else lower


@dataclass(frozen=True)
class ExponentConversions:
    alpha: float
    b2: float
    b3: float
    gammaKato: float


def alpha_from_nu(n: int, nu: float) -> float:
    if n < 3:
        raise DimensionTooLow("need n >= 3")
    return 2 * (n - nu) / (n - 2)


def nu_from_alpha(n: int, alpha: float) -> float:
    if n < 3:
        raise DimensionTooLow("need n >= 3")
    return n - alpha * (n - 2) / 2


def gamma_kato(n: int) -> float:
    """Refined Kato exponent ``(n-3)/(n-1)``."""
    if n < 4:
        raise DimensionTooLow("need n >= 4")
    return (n - 3) / (n - 1)


def decay_prediction(n: int, nu: float) -> float:
    """Predicted curvature decay exponent ``(nu-2)(n-1)/(n-3)``."""
    if n < 4:
        raise DimensionTooLow("need n >= 4")
    return (nu - 2) * (n - 1) / (n - 3)


def exponent_conversions(n: int, nu: float) -> ExponentConversions:
    if n < 4:
        raise DimensionTooLow("need n >= 4")
    return ExponentConversions(alpha_from_nu(n, nu), 2.0, decay_prediction(n, nu), gamma_kato(n))


def flatness_thresholds(n: int, c_n: float) -> float:
    """``4 / (n c_n)``; ``c_n`` is left to the caller."""
    if n < 4:
        raise DimensionTooLow("need n >= 4")
    if not c_n > 0:
        raise ValueError("c_n must be positive")
    return 4 / (n * c_n)


# reference numbers for the four dimensional Taub-NUT metric
TAUB_NUT = {"n": 4, "volume_growth": 3, "curvature_decay": 3}


# ---------------------------------------------------------------------------
# weights
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightSpec:
    n: int
    beta: float = 0.0

    @property
    def left_exponent(self) -> float:
        return (self.n * self.beta - 2) / (self.n - 2)

    @property
    def right_exponent(self) -> float:
        return self.beta

    @property
    def q(self) -> float:
        return 2 * self.n / (self.n - 2)

    def to_json(self) -> dict:
        return {"n": self.n, "beta": self.beta}


def beta_admissible(spec: WeightSpec, nu: float) -> bool:
    """Whether ``beta > -(nu-2)/(n-nu)`` (always true when ``nu >= n``)."""
    if nu >= spec.n:
        return True
    return spec.beta > -(nu - 2) / (spec.n - nu)


def mu_rho_weights(source, spec: WeightSpec) -> tuple[np.ndarray, np.ndarray]:
    """Left and right weights ``rho^((n beta-2)/(n-2)) vol`` and ``rho^beta vol``.

    ``source`` is a space (its ``rho`` and ``mu`` are used) or a pair
    ``(rho, vol)`` of arrays.
    """
    if spec.n < 3:
        raise DimensionTooLow("need n >= 3")
    if isinstance(source, FiniteMetricMeasureSpace):
        if source.rho is None:
            raise MissingRho("space carries no rho values")
        rho, vol = source.rho, source.mu
    else:
        rho, vol = source
        if rho is None:
            raise MissingRho("rho values are required")
    rho = np.asarray(rho, dtype=float)
    vol = np.asarray(vol, dtype=float)
    if np.any(~np.isfinite(rho)) or np.any(rho <= 0):
        raise MissingRho("rho must be positive and finite everywhere")
    return rho**spec.left_exponent * vol, rho**spec.right_exponent * vol


# ---------------------------------------------------------------------------
# witnesses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WitnessBound:
    bound: float
    witness: np.ndarray
    method: str
    spec: dict

    def to_json(self) -> dict:
        return {"bound": self.bound, "method": self.method, "spec": self.spec, "bound_type": "lower"}


def _pins(space: FiniteMetricMeasureSpace) -> list[int]:
    if space.boundary:
        return list(space.boundary)
    return [int(np.argmax(space.radial))]


def _radial_seeds(space, kind: str) -> list[np.ndarray]:
    r = space.radial
    R = float(r[list(_pins(space))].min())
    scales = np.geomspace(max(space.h, R * 1e-3), R, 12)
    seeds = []
    for s in scales:
        if kind == "bubble":
            n = space.n
            b = (1 + (r / s) ** 2) ** (-(n - 2) / 2)
            f = np.maximum(b - (1 + (R / s) ** 2) ** (-(n - 2) / 2), 0.0)
        else:
            f = np.maximum(1 - r / s, 0.0)
        f[_pins(space)] = 0.0
        if np.any(f):
            seeds.append(f)
    return seeds


def estimate_sobolev_witness(
    space: FiniteMetricMeasureSpace,
    spec: WeightSpec,
    starts: int = 2,
    seed: int = 0,
) -> WitnessBound:
    """Lower bound on the weighted L^2 Sobolev constant of order n.

    Maximizes ``(sum |f|^q lam)^(2/q) / sum |df|^2 mu`` with
    ``q = 2n/(n-2)`` over functions vanishing on the boundary, starting from
    truncated bubbles ``(1 + (r/s)^2)^(-(n-2)/2)`` and random vectors.
    """
    require_connected(space)
    if spec.n < 3:
        raise DimensionTooLow("need n >= 3")
    lam, mu = mu_rho_weights(space, spec)
    prob, _ = space_problem(space, 2.0, spec.q, pinned=_pins(space), lam=lam, mu=mu)
    seeds = _radial_seeds(space, "bubble")
    ranked = sorted(seeds, key=prob.quotient, reverse=True)
    val, wit = prob.ascend(starts=starts, seed=seed, seeds=ranked[:2], maxiter=2000)
    for s in seeds:
        v = prob.quotient(s / np.abs(s).max())
        if v > val:
            val, wit = v, s / np.abs(s).max()
    return WitnessBound(float(prob.quotient(wit)), wit, "multistart-optimization", spec.to_json())


def aubin_talenti_constant(n: int) -> float:
    """``(int b^q)^(2/q) / int |b'|^2`` for the bubble ``b = (1+r^2)^(-(n-2)/2)``.

    Radial quadrature on R^n; this is the best unweighted Euclidean constant.
    """
    q = 2 * n / (n - 2)
    s = unit_sphere_area(n - 1)
    num = quad(lambda r: (1 + r * r) ** (-(n - 2) * q / 2) * r ** (n - 1), 0, np.inf, epsabs=0, epsrel=1e-13)[0]
    den = quad(
        lambda r: ((n - 2) * r * (1 + r * r) ** (-n / 2)) ** 2 * r ** (n - 1), 0, np.inf, epsabs=0, epsrel=1e-13
    )[0]
    return (s * num) ** (2 / q) / (s * den)


def estimate_hardy_witness(
    space: FiniteMetricMeasureSpace,
    p: float = 1.0,
    starts: int = 8,
    seed: int = 0,
) -> WitnessBound:
    """Lower bound on the Hardy constant ``sum |f|^p r^-p mu / sum |df|^p mu``.

    The base point gets weight zero on the left.  For ``p = 1`` every
    indicator of a ball ``r <= R`` is evaluated (these are extremal among
    radial functions by the layer-cake argument); ``p = 2`` is solved as an
    eigenproblem; other ``p > 1`` use tent seeds and a multi-start ascent.
    """
    require_connected(space)
    if not p >= 1:
        raise ValueError("p must be >= 1")
    r = space.radial
    w = np.zeros_like(r)
    pos = r > 0
    w[pos] = r[pos] ** (-p) * space.mu[pos]
    pins = _pins(space)
    prob, _ = space_problem(space, p, p, pinned=pins, lam=w, mu=space.mu)
    if p == 2:
        # exact: generalized eigenproblem
        _, f, _ = prob.eigen_sup()
        return WitnessBound(float(prob.quotient(f)), f, "eigen", {"p": p})
    best, wit = -1.0, None
    # ball indicators
    order = np.argsort(r, kind="stable")
    pinned = np.zeros(space.n_points, dtype=bool)
    pinned[pins] = True
    inside = np.zeros(space.n_points, dtype=bool)
    ew = space.energy_weights(p)
    inc: list[list[tuple[int, float]]] = [[] for _ in range(space.n_points)]
    for (a, b), we in zip(space.pairs, ew):
        inc[a].append((b, we))
        inc[b].append((a, we))
    num = cut = 0.0
    best_k = -1
    for k, v in enumerate(order):
        if pinned[v]:
            break
        for u, we in inc[v]:
            cut += -we if inside[u] else we
        inside[v] = True
        num += w[v]
        if cut > 0 and num / cut > best:
            best, best_k = num / cut, k
    if best_k >= 0:
        wit = np.zeros(space.n_points)
        wit[order[: best_k + 1]] = 1.0
        best = prob.quotient(wit)
    if p > 1:
        seeds = _radial_seeds(space, "tent")
        val, f = prob.ascend(starts=starts, seed=seed, seeds=seeds[:4])
        if val > best:
            best, wit = val, f
    if wit is None:
        return WitnessBound(0.0, np.zeros(space.n_points), "exhaustive", {"p": p})
    method = "exhaustive" if p == 1 else "multistart-optimization"
    return WitnessBound(float(prob.quotient(wit)), wit, method, {"p": p})


# ---------------------------------------------------------------------------
# Schrodinger positivity
# ---------------------------------------------------------------------------


def sobolev_upper_bound_space(space: FiniteMetricMeasureSpace, spec: WeightSpec) -> tuple[float, str]:
    """Certified upper bound on the weighted order-n L^2 Sobolev constant.

    Functions vanish on the boundary.  Uses the interpolation bound between
    the exact L^2 constant and the Green function diagonal.
    """
    lam, mu = mu_rho_weights(space, spec)
    prob, _ = space_problem(space, 2.0, spec.q, pinned=_pins(space), lam=lam, mu=mu)
    return prob.upper_bound()


def potential_norm(space: FiniteMetricMeasureSpace, potential_minus, n: int, lam=None) -> float:
    """``(sum V^(n/2) (mu/lam)^(n/2) lam)^(2/n)``.

    With ``lam = rho^(-2/(n-2)) mu`` this is ``(sum V^(n/2) rho mu)^(2/n)``;
    the general form is what the discrete Hoelder inequality needs.
    """
    V = np.asarray(potential_minus, dtype=float)
    if np.any(V < 0):
        raise ValueError("potential_minus must be nonnegative")
    if lam is None:
        lam = mu_rho_weights(space, WeightSpec(n, 0.0))[0]
    lam = np.asarray(lam, dtype=float)
    mu = space.mu
    return float(np.sum(V ** (n / 2) * (mu / lam) ** (n / 2) * lam) ** (2 / n))


@dataclass(frozen=True)
class SchrodingerCheck:
    NV: float
    S: float
    m: float | None
    threshold: float | None
    min_eigenvalue: float
    verdict: str

    def to_json(self) -> dict:
        return {
            "NV": self.NV, "S": self.S, "m": self.m, "threshold": self.threshold,
            "min_eigenvalue": self.min_eigenvalue, "verdict": self.verdict,
        }


def schrodinger_positivity(
    space: FiniteMetricMeasureSpace,
    potential_minus,
    S: float,
    n: int,
    lam=None,
    m: float | None = None,
) -> SchrodingerCheck:
    """Positivity of ``Q(f) = sum |df|^2 mu - sum V f^2 mu`` on functions vanishing on the boundary.

    ``min_eigenvalue`` is the bottom of ``Q`` relative to ``sum f^2 mu``.
    The verdict is ``form-positive`` when ``S NV < 1`` and the minimum is at
    least ``-1e-8``, ``violated`` when ``S NV < 1`` yet the minimum is lower
    (only possible if ``S`` is not a valid constant), and ``inconclusive``
    otherwise.
    """
    if not (S > 0 and math.isfinite(S)):
        raise InvalidS(f"S must be positive and finite, got {S}")
    V = np.asarray(potential_minus, dtype=float)
    NV = potential_norm(space, V, n, lam)
    pins = set(_pins(space))
    free = np.array([x for x in range(space.n_points) if x not in pins], dtype=np.intp)
    prob, _ = space_problem(space, 2.0, 2.0)
    mu = space.mu
    if len(free) < DENSE_LIMIT:
        L = prob.laplacian()[np.ix_(free, free)]
        A = L - np.diag(V[free] * mu[free])
        lo = float(scipy.linalg.eigh(A, np.diag(mu[free]), eigvals_only=True, subset_by_index=[0, 0])[0])
    else:
        L = prob.laplacian(sparse=True)[free][:, free]
        A = (L - scipy.sparse.diags(V[free] * mu[free])).tocsc()
        M = scipy.sparse.diags(mu[free]).tocsc()
        lo = float(scipy.sparse.linalg.eigsh(A, k=1, M=M, sigma=-1.0, which="LM", return_eigenvectors=False)[0])
    if S * NV < 1:
        verdict = "form-positive" if lo >= -1e-8 else "violated"
    else:
        verdict = "inconclusive"
    return SchrodingerCheck(NV, S, m, None if m is None else epsilon_m(m), lo, verdict)

