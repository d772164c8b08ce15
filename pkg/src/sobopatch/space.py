"""Finite metric-measure spaces: the desk-scale stand-in for a manifold.

A space is a finite point set with a symmetric neighbour relation, the
distance of every point to a base point, and two positive measures
``lam`` and ``mu``.  Each neighbour pair also carries a length (the mesh
scale ``h`` unless given), and the p-energy of a function is

    sum_pairs |f(x) - f(y)|^p * max(mu(x), mu(y)) / length^p

which is the max-rule graph energy rescaled to approximate ``int |df|^p dmu``.
An optional ``boundary`` set marks the outer rim where compactly supported
test functions must vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import Disconnected, IndexOutOfRange, NonPositiveMeasure, SelfLoop
from .graph import WeightedGraph, build_graph

__all__ = [
    "FiniteMetricMeasureSpace",
    "make_space",
    "dumps_space",
    "loads_space",
    "read_space",
    "write_space",
    "empirical_rho",
    "require_connected",
    "unit_ball_volume",
    "unit_sphere_area",
]


def _ro(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMetricMeasureSpace:
    radial: np.ndarray
    lam: np.ndarray
    mu: np.ndarray
    pairs: np.ndarray
    pair_length: np.ndarray
    n: int
    h: float = 1.0
    base: int = 0
    boundary: tuple[int, ...] = ()
    rho: np.ndarray | None = None
    coords: np.ndarray | None = None
    _adj: tuple[tuple[int, ...], ...] = field(default=(), repr=False)

    @property
    def n_points(self) -> int:
        return len(self.radial)

    def neighbors(self, x: int) -> tuple[int, ...]:
        return self._adj[x]

    def energy_weights(self, p: float, weight: np.ndarray | None = None) -> np.ndarray:
        w = self.mu if weight is None else np.asarray(weight, dtype=float)
        i, j = self.pairs[:, 0], self.pairs[:, 1]
        return np.maximum(w[i], w[j]) / self.pair_length**p

    def energy(self, f, p: float, weight: np.ndarray | None = None) -> float:
        f = np.asarray(f, dtype=float)
        d = f[self.pairs[:, 0]] - f[self.pairs[:, 1]]
        return float(np.dot(self.energy_weights(p, weight), np.abs(d) ** p))

    def with_weights(self, lam=None, mu=None, rho=None) -> "FiniteMetricMeasureSpace":
        return make_space(
            self.radial,
            self.lam if lam is None else lam,
            self.mu if mu is None else mu,
            self.pairs,
            n=self.n,
            h=self.h,
            pair_length=self.pair_length,
            boundary=self.boundary,
            rho=self.rho if rho is None else rho,
            coords=self.coords,
            allow_zero_at_base=True,
        )

    def point_graph(self, weight: np.ndarray | None = None) -> WeightedGraph:
        """The neighbour graph with vertex measure ``weight`` (default ``mu``)."""
        w = self.mu if weight is None else weight
        return build_graph(w, [tuple(e) for e in self.pairs])

    def components(self, members: Iterable[int]) -> list[list[int]]:
        """Connected components of the neighbour graph restricted to ``members``.

        Components are sorted by smallest member, and members within a
        component are sorted, so the output is deterministic.
        """
        allowed = set(int(x) for x in members)
        seen: set[int] = set()
        out = []
        for s in sorted(allowed):
            if s in seen:
                continue
            comp = [s]
            seen.add(s)
            stack = [s]
            while stack:
                v = stack.pop()
                for u in self._adj[v]:
                    if u in allowed and u not in seen:
                        seen.add(u)
                        comp.append(u)
                        stack.append(u)
            out.append(sorted(comp))
        return out

    def is_connected(self, members: Iterable[int] | None = None) -> bool:
        pts = range(self.n_points) if members is None else members
        return len(self.components(pts)) <= 1


def make_space(
    radial: Sequence[float],
    lam: Sequence[float],
    mu: Sequence[float],
    pairs: Iterable[Sequence[int]],
    n: int,
    h: float = 1.0,
    pair_length: Sequence[float] | None = None,
    boundary: Iterable[int] = (),
    rho: Sequence[float] | None = None,
    coords=None,
    allow_zero_at_base: bool = False,
) -> FiniteMetricMeasureSpace:
    """Validate and build a space.

    Exactly one point must have radial value 0 (the base point).  Pairs are
    stored once with ``i < j``; repeated pairs are dropped, self pairs
    rejected.
    """
    r = np.asarray(radial, dtype=float)
    npts = len(r)
    if npts == 0:
        raise IndexOutOfRange("space has no points")
    zeros = np.flatnonzero(r == 0)
    if len(zeros) != 1 or np.any(r < 0) or not np.all(np.isfinite(r)):
        raise ValueError("exactly one point must have radial value 0, the rest positive")
    base = int(zeros[0])
    lam = np.asarray(lam, dtype=float)
    mu = np.asarray(mu, dtype=float)
    for name, w in (("lam", lam), ("mu", mu)):
        if w.shape != (npts,):
            raise IndexOutOfRange(f"{name} needs one value per point")
        bad = ~(np.isfinite(w) & (w > 0))
        if allow_zero_at_base:
            bad[base] = bad[base] and not w[base] == 0
        if np.any(bad):
            raise NonPositiveMeasure(f"{name} must be positive (points {np.flatnonzero(bad)[:5].tolist()})")
    lengths = {}
    given = None if pair_length is None else list(pair_length)
    for k, e in enumerate(pairs):
        i, j = int(e[0]), int(e[1])
        if not (0 <= i < npts and 0 <= j < npts):
            raise IndexOutOfRange(f"pair ({i}, {j}) outside 0..{npts - 1}")
        if i == j:
            raise SelfLoop(f"point {i} paired with itself")
        key = (min(i, j), max(i, j))
        ln = float(h) if given is None else float(given[k])
        if not ln > 0:
            raise ValueError("pair lengths must be positive")
        lengths.setdefault(key, ln)
    keys = sorted(lengths)
    P = np.array(keys, dtype=np.intp).reshape(-1, 2)
    P.setflags(write=False)
    adj: list[list[int]] = [[] for _ in range(npts)]
    for i, j in keys:
        adj[i].append(j)
        adj[j].append(i)
    bnd = tuple(sorted(set(int(b) for b in boundary)))
    for b in bnd:
        if not 0 <= b < npts:
            raise IndexOutOfRange(f"boundary point {b} out of range")
    if base in bnd:
        raise ValueError("the base point cannot lie on the boundary")
    return FiniteMetricMeasureSpace(
        radial=_ro(r),
        lam=_ro(lam),
        mu=_ro(mu),
        pairs=P,
        pair_length=_ro([lengths[k] for k in keys]),
        n=int(n),
        h=float(h),
        base=base,
        boundary=bnd,
        rho=None if rho is None else _ro(rho),
        coords=None if coords is None else _ro(coords),
        _adj=tuple(tuple(sorted(a)) for a in adj),
    )


def require_connected(space: FiniteMetricMeasureSpace) -> None:
    if not space.is_connected():
        raise Disconnected("space is not connected through its neighbour pairs")


def empirical_rho(space: FiniteMetricMeasureSpace) -> np.ndarray:
    """``r^n / V(r)`` with ``V(r)`` the ``mu``-mass of points at radius <= r.

    The base point gets the value of its nearest neighbour in radius.
    """
    r = space.radial
    order = np.argsort(r, kind="stable")
    cum = np.cumsum(space.mu[order])
    # points sharing a radius get the full mass at that radius
    rs = r[order]
    last = np.searchsorted(rs, rs, side="right") - 1
    V = np.empty_like(cum)
    V[order] = cum[last]
    rho = np.where(r > 0, r ** space.n / V, np.nan)
    pos = r > 0
    if np.any(pos):
        rho[space.base] = rho[pos][np.argmin(r[pos])]
    return rho


# -- text format -------------------------------------------------------------


def dumps_space(space: FiniteMetricMeasureSpace) -> str:
    lines = [f"space {space.n_points} {space.n} {space.h!r}"]
    lines += [
        f"p {i} {float(r)!r} {float(a)!r} {float(b)!r}"
        for i, (r, a, b) in enumerate(zip(space.radial, space.lam, space.mu))
    ]
    for (i, j), ln in zip(space.pairs, space.pair_length):
        lines.append(f"nb {i} {j}" if ln == space.h else f"nb {i} {j} {float(ln)!r}")
    lines += [f"bd {b}" for b in space.boundary]
    if space.rho is not None:
        lines += [f"rho {i} {float(v)!r}" for i, v in enumerate(space.rho)]
    return "\n".join(lines) + "\n"


def loads_space(text: str) -> FiniteMetricMeasureSpace:
    """Parse the point-cloud format.

    Records: ``space N n [h]``, ``p i radial lam mu``, ``nb i j [length]``,
    plus optional ``bd i`` (boundary point) and ``rho i value``.
    """
    header = None
    pts: dict[int, tuple[float, float, float]] = {}
    pairs, lengths, bnd, rho = [], [], [], {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.split()
        if not tok or tok[0].startswith("#"):
            continue
        try:
            if tok[0] == "space":
                header = (int(tok[1]), int(tok[2]), float(tok[3]) if len(tok) > 3 else 1.0)
            elif tok[0] == "p":
                pts[int(tok[1])] = (float(tok[2]), float(tok[3]), float(tok[4]))
            elif tok[0] == "nb":
                pairs.append((int(tok[1]), int(tok[2])))
                lengths.append(float(tok[3]) if len(tok) > 3 else None)
            elif tok[0] == "bd":
                bnd.append(int(tok[1]))
            elif tok[0] == "rho":
                rho[int(tok[1])] = float(tok[2])
            else:
                raise ValueError(f"unknown record {tok[0]!r}")
        except (IndexError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if header is None:
        raise ValueError("missing 'space <N> <n>' header")
    npts, n, h = header
    if sorted(pts) != list(range(npts)):
        raise IndexOutOfRange(f"expected point records for 0..{npts - 1}")
    arr = np.array([pts[i] for i in range(npts)]).reshape(npts, 3)
    lens = [h if ln is None else ln for ln in lengths]
    rho_arr = None
    if rho:
        if sorted(rho) != list(range(npts)):
            raise IndexOutOfRange("rho records must cover every point")
        rho_arr = [rho[i] for i in range(npts)]
    return make_space(arr[:, 0], arr[:, 1], arr[:, 2], pairs, n=n, h=h, pair_length=lens,
                      boundary=bnd, rho=rho_arr)


def read_space(path) -> FiniteMetricMeasureSpace:
    with open(path, encoding="utf-8") as fh:
        return loads_space(fh.read())


def write_space(space: FiniteMetricMeasureSpace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_space(space))


def unit_ball_volume(n: int) -> float:
    """omega_n, the volume of the unit ball in R^n."""
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def unit_sphere_area(n: int) -> float:
    """Area of the unit sphere S^n in R^(n+1)."""
    return 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)

