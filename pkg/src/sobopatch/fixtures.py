"""Constructed spaces used by tests, the acceptance suite and the CLI."""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .space import FiniteMetricMeasureSpace, make_space, unit_ball_volume

__all__ = [
    "chain_space",
    "ray_fixture",
    "uniform_chain",
    "random_chain",
    "polar_grid",
    "random_annuli",
    "disk_lattice",
    "cactus",
    "radial_grid",
    "euclidean_radial_grid",
    "powerlaw_radial_grid",
    "cube_lattice",
    "FIXTURES",
]


def chain_space(
    radii: Sequence[float],
    lam: Sequence[float] | None = None,
    mu: Sequence[float] | None = None,
    n: int = 1,
    boundary: Sequence[int] = (),
) -> FiniteMetricMeasureSpace:
    """Points on a ray, consecutive ones paired; counting measures by default."""
    r = np.asarray(radii, dtype=float)
    if np.any(np.diff(r) <= 0):
        raise ValueError("chain radii must be strictly increasing")
    ones = np.ones(len(r))
    pairs = [(i, i + 1) for i in range(len(r) - 1)]
    lengths = np.diff(r)
    h = float(lengths.min()) if len(lengths) else 1.0
    return make_space(
        r, ones if lam is None else lam, ones if mu is None else mu, pairs, n=n, h=h,
        pair_length=lengths, boundary=boundary,
    )


def ray_fixture() -> FiniteMetricMeasureSpace:
    """Base point plus radii 0.5, 1.5, ..., 9.5 on a chain."""
    return chain_space([0.0] + [k + 0.5 for k in range(10)])


def uniform_chain(length: int = 64) -> FiniteMetricMeasureSpace:
    """Integer points 0..length, counting measures."""
    return chain_space(np.arange(length + 1, dtype=float))


def random_chain(seed: int, size: int = 40) -> FiniteMetricMeasureSpace:
    """Chain with random spacings in [0.5, 1.5] and random weights in [0.5, 2]."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 101]))
    r = np.concatenate([[0.0], np.cumsum(rng.uniform(0.5, 1.5, size))])
    w = rng.uniform(0.5, 2.0, size + 1)
    return chain_space(r, w, w)


def polar_grid(
    rings: int,
    h: float = 1.0,
    weights: Callable[[np.ndarray], np.ndarray] | None = None,
    min_per_ring: int = 6,
) -> FiniteMetricMeasureSpace:
    """Planar grid of concentric rings at radii ``h, 2h, ..., rings*h``.

    Ring ``j`` carries about ``2 pi j`` equally spaced points; each point is
    paired with its ring neighbours and with the nearest-angle points of the
    adjacent rings.  ``mu`` is the area of the polar cell, ``lam`` defaults to
    ``mu`` and ``weights`` (if given) multiplies both pointwise in radius.
    """
    xs, ys, rad, area, ring_of = [0.0], [0.0], [0.0], [math.pi * (h / 2) ** 2], [0]
    angles: list[np.ndarray] = [np.zeros(1)]
    first: list[int] = [0]
    for j in range(1, rings + 1):
        m = max(min_per_ring, int(round(2 * math.pi * j)))
        th = 2 * math.pi * (np.arange(m) + 0.5 * (j % 2)) / m
        first.append(len(rad))
        angles.append(th)
        r = j * h
        cell = math.pi * ((r + h / 2) ** 2 - (r - h / 2) ** 2) / m
        for t in th:
            xs.append(r * math.cos(t))
            ys.append(r * math.sin(t))
            rad.append(r)
            area.append(cell)
            ring_of.append(j)
    first.append(len(rad))
    pairs = set()
    for j in range(1, rings + 1):
        base, m = first[j], len(angles[j])
        for a in range(m):
            pairs.add((base + a, base + (a + 1) % m))
        if j == 1:
            for a in range(m):
                pairs.add((0, base + a))
            continue
        prev, th_prev = first[j - 1], angles[j - 1]
        for a, t in enumerate(angles[j]):
            d = np.abs(np.angle(np.exp(1j * (th_prev - t))))
            pairs.add((prev + int(np.argmin(d)), base + a))
        for b, t in enumerate(th_prev):
            d = np.abs(np.angle(np.exp(1j * (angles[j] - t))))
            pairs.add((prev + b, base + int(np.argmin(d))))
    coords = np.column_stack([xs, ys])
    pairs = sorted((min(a, b), max(a, b)) for a, b in pairs if a != b)
    lengths = [float(np.linalg.norm(coords[a] - coords[b])) for a, b in pairs]
    mu = np.asarray(area)
    if weights is not None:
        mu = mu * weights(np.asarray(rad))
    outer = range(first[rings], first[rings + 1])
    return make_space(rad, mu, mu, pairs, n=2, h=h, pair_length=lengths, boundary=outer, coords=coords)


def random_annuli(seed: int, rings: int = 7) -> FiniteMetricMeasureSpace:
    """Polar grid whose cell areas are perturbed by random factors in [0.5, 2]."""
    g = polar_grid(rings)
    rng = np.random.default_rng(np.random.SeedSequence([seed, 202]))
    f = rng.uniform(0.5, 2.0, g.n_points)
    return g.with_weights(lam=g.lam * f, mu=g.mu * f)


def disk_lattice(radius: float, h: float = 1.0) -> FiniteMetricMeasureSpace:
    """Square lattice points inside a disk, 8-neighbour pairs, cell area ``h^2``."""
    m = int(math.floor(radius / h))
    pts = [(a, b) for a in range(-m, m + 1) for b in range(-m, m + 1) if (a * a + b * b) * h * h <= radius**2]
    pts.sort(key=lambda t: (t[0] ** 2 + t[1] ** 2, t))
    index = {p: i for i, p in enumerate(pts)}
    pairs, lengths = [], []
    for (a, b), i in index.items():
        for da, db in ((1, 0), (0, 1), (1, 1), (1, -1)):
            j = index.get((a + da, b + db))
            if j is not None:
                pairs.append((i, j))
                lengths.append(h * math.hypot(da, db))
    coords = h * np.asarray(pts, dtype=float)
    rad = np.hypot(coords[:, 0], coords[:, 1])
    mu = np.full(len(pts), h * h)
    rmax = rad.max()
    outer = [i for i in range(len(pts)) if rad[i] > rmax - h]
    return make_space(rad, mu, mu, pairs, n=2, h=h, pair_length=lengths, boundary=outer, coords=coords)


def cactus() -> FiniteMetricMeasureSpace:
    """A trunk that splits into two long branches, plus one short side branch.

    Spacing 0.5 along every branch.  The trunk runs from the base point to
    radius 3.5; branches A and B continue from there to radius 15.5; the side
    branch C leaves the trunk at radius 3.0 and stops at radius 6.0, so with
    ``kappa = 2`` its part in the annulus (4, 8] never reaches (8, 16].
    """
    rad: list[float] = []
    pairs: list[tuple[int, int]] = []

    def grow(start: int | None, radii):
        prev = start
        for r in radii:
            rad.append(r)
            cur = len(rad) - 1
            if prev is not None:
                pairs.append((prev, cur))
            prev = cur
        return prev

    step = 0.5
    trunk = [k * step for k in range(8)]  # 0 .. 3.5
    grow(None, trunk)
    fork, side_root = 7, 6  # radius 3.5 and 3.0
    tail = [4.0 + k * step for k in range(24)]  # 4.0 .. 15.5
    grow(fork, tail)
    grow(fork, tail)
    grow(side_root, [3.5 + k * step for k in range(6)])  # 3.5 .. 6.0
    ones = np.ones(len(rad))
    return make_space(rad, ones, ones, pairs, n=1, h=step)


def radial_grid(
    radii: Sequence[float],
    volume: Callable[[np.ndarray], np.ndarray],
    n: int,
    rho: Callable[[np.ndarray], np.ndarray] | None = None,
) -> FiniteMetricMeasureSpace:
    """One point per radius; ``mu`` is the volume of the dual shell.

    Dual shells are bounded by midpoints between consecutive radii (and the
    last radius itself), so ``mu`` summed over ``r <= R`` tracks ``V(R)``.
    The last point is the outer boundary.
    """
    r = np.asarray(radii, dtype=float)
    if r[0] != 0 or np.any(np.diff(r) <= 0):
        raise ValueError("radii must start at 0 and increase")
    edges = np.concatenate([[0.0], 0.5 * (r[1:] + r[:-1]), [r[-1]]])
    V = volume(edges)
    mu = np.diff(V)
    mu[-1] = max(mu[-1], 0.5 * mu[-2])
    pairs = [(i, i + 1) for i in range(len(r) - 1)]
    lengths = np.diff(r)
    rho_vals = None
    if rho is not None:
        rho_vals = rho(r)
    return make_space(
        r, mu, mu, pairs, n=n, h=float(lengths.min()), pair_length=lengths,
        boundary=[len(r) - 1], rho=rho_vals,
    )


def euclidean_radial_grid(n: int, points: int, r_max: float, graded: bool = False) -> FiniteMetricMeasureSpace:
    """Radial discretization of R^n; ``graded`` spaces radii geometrically."""
    if graded:
        inner = np.geomspace(r_max / points * 10, r_max, points - 1)
        radii = np.concatenate([[0.0], np.linspace(0, inner[0], 11)[1:-1], inner])
    else:
        radii = np.linspace(0.0, r_max, points)
    w = unit_ball_volume(n)
    return radial_grid(radii, lambda t: w * t**n, n, rho=lambda t: np.full_like(t, 1 / w))


def powerlaw_radial_grid(n: int, nu: float, points: int, r_max: float) -> FiniteMetricMeasureSpace:
    """Radial grid with the synthetic volume ``V(t) = t^nu``."""
    radii = np.linspace(0.0, r_max, points)

    def rho(t):
        out = np.empty_like(t)
        pos = t > 0
        out[pos] = t[pos] ** (n - nu)
        out[~pos] = (t[1] / 2) ** (n - nu)
        return out

    return radial_grid(radii, lambda t: t**nu, n, rho=rho)


def cube_lattice(half: int, h: float = 1.0) -> FiniteMetricMeasureSpace:
    """Cubic lattice ``{-half..half}^3`` with 6-neighbour pairs.

    ``mu`` is ``h^3``, the outer layer is the boundary and ``rho`` is the
    Euclidean constant ``1 / omega_3``.
    """
    rng = range(-half, half + 1)
    pts = sorted(((a, b, c) for a in rng for b in rng for c in rng), key=lambda t: (sum(x * x for x in t), t))
    index = {p: i for i, p in enumerate(pts)}
    pairs = []
    for (a, b, c), i in index.items():
        for d in ((1, 0, 0), (0, 1, 0), (0, 0, 1)):
            j = index.get((a + d[0], b + d[1], c + d[2]))
            if j is not None:
                pairs.append((i, j))
    coords = h * np.asarray(pts, dtype=float)
    rad = np.linalg.norm(coords, axis=1)
    mu = np.full(len(pts), h**3)
    outer = [i for i, p in enumerate(pts) if max(abs(x) for x in p) == half]
    rho = np.full(len(pts), 1 / unit_ball_volume(3))
    return make_space(rad, mu, mu, pairs, n=3, h=h, boundary=outer, rho=rho, coords=coords)


FIXTURES: dict[str, Callable[[], FiniteMetricMeasureSpace]] = {
    "ray": ray_fixture,
    "chain64": uniform_chain,
    "cactus": cactus,
    "disk": lambda: disk_lattice(12.0),
    "annuli": lambda: polar_grid(10),
    "cube": lambda: cube_lattice(3),
    "euclid3": lambda: euclidean_radial_grid(3, 2000, 100.0),
}
