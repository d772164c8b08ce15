"""Good coverings of finite metric-measure spaces by pieces of annuli.

A covering is a list of pieces, each a nested triple ``U <= Ustar <= Usharp``
of point sets.  Two point sets *touch* when a point of one equals, or is a
neighbour of, a point of the other; this is the finite stand-in for
intersecting closures.

The annuli construction cuts the space into levels ``kappa^(i-1) < r <=
kappa^i``, takes connected components inside each level, and glues every
component that does not reach the next level onto a touching component one
level down.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import Disconnected, EmptyLevel, KappaOutOfRange, NuNotAbovePorder
from .graph import WeightedGraph, build_graph
from .space import FiniteMetricMeasureSpace

__all__ = [
    "Piece",
    "GoodCovering",
    "ValidationReport",
    "build_annuli_covering",
    "validate_covering",
    "covering_graph",
    "rca_branch_bound",
    "covering_from_sets",
    "level_index",
]


@dataclass(frozen=True)
class Piece:
    index: int
    level: int
    label: int
    U: tuple[int, ...]
    Ustar: tuple[int, ...]
    Usharp: tuple[int, ...]


@dataclass(frozen=True)
class GoodCovering:
    pieces: tuple[Piece, ...]
    kappa: float
    merge_map: dict[tuple[int, int], int]
    q1: int
    q2: float
    merges: tuple[tuple[int, int, int], ...] = ()
    touching: tuple[tuple[int, int], ...] = field(default=())

    @property
    def n_pieces(self) -> int:
        return len(self.pieces)

    def levels(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for pc in self.pieces:
            out.setdefault(pc.level, []).append(pc.index)
        return dict(sorted(out.items()))

    def outermost(self) -> list[int]:
        top = max(pc.level for pc in self.pieces)
        return [pc.index for pc in self.pieces if pc.level == top]

    def to_json(self) -> dict:
        return {
            "kappa": self.kappa,
            "q1": self.q1,
            "q2": self.q2,
            "pieces": [
                {
                    "index": pc.index,
                    "level": pc.level,
                    "label": pc.label,
                    "U": list(pc.U),
                    "Ustar": list(pc.Ustar),
                    "Usharp": list(pc.Usharp),
                }
                for pc in self.pieces
            ],
            "merge_map": [[i, j, k] for (i, j), k in sorted(self.merge_map.items())],
            "merges": [list(m) for m in self.merges],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, doc: dict) -> "GoodCovering":
        pieces = tuple(
            Piece(d["index"], d["level"], d["label"], tuple(d["U"]), tuple(d["Ustar"]), tuple(d["Usharp"]))
            for d in doc["pieces"]
        )
        mm = {(i, j): k for i, j, k in doc["merge_map"]}
        return cls(
            pieces, float(doc["kappa"]), mm, int(doc["q1"]), float(doc["q2"]),
            tuple(tuple(m) for m in doc.get("merges", [])), tuple(sorted(mm)),
        )


# -- helpers -------------------------------------------------------------------


def _extend(space: FiniteMetricMeasureSpace, pts) -> set[int]:
    out = set(pts)
    for x in pts:
        out.update(space.neighbors(x))
    return out


def _touch_pairs(space: FiniteMetricMeasureSpace, owner: np.ndarray) -> set[tuple[int, int]]:
    """Pairs of distinct owners joined by a neighbour pair (``owner`` per point)."""
    a = owner[space.pairs[:, 0]]
    b = owner[space.pairs[:, 1]]
    mask = (a != b) & (a >= 0) & (b >= 0)
    return {(int(min(x, y)), int(max(x, y))) for x, y in zip(a[mask], b[mask])}


def level_index(r: float, kappa: float) -> int:
    """Smallest ``i`` with ``kappa^i >= r`` (for ``r > 0``)."""
    i = math.ceil(math.log(r) / math.log(kappa))
    while kappa ** (i - 1) >= r:
        i -= 1
    while kappa**i < r:
        i += 1
    return i


# -- construction --------------------------------------------------------------


def build_annuli_covering(space: FiniteMetricMeasureSpace, kappa: float) -> GoodCovering:
    """Annuli covering with the merging rule.

    The central piece is the ball ``r <= kappa^i0`` around the base point,
    where ``i0`` is the level of the smallest positive radius, grown through
    any empty levels that follow it.  Empty levels further out raise
    :class:`EmptyLevel`.  The outermost level is never merged down since
    there is no next level for it to reach.
    """
    if not (kappa > 1 and math.isfinite(kappa)):
        raise KappaOutOfRange(f"kappa must exceed 1, got {kappa}")
    if not space.is_connected():
        raise Disconnected("space is not connected")
    r = space.radial
    pos = np.flatnonzero(r > 0)
    if pos.size == 0:
        pieces = (Piece(0, 0, 0, (space.base,), (space.base,), (space.base,)),)
        return GoodCovering(pieces, float(kappa), {}, 1, 1.0)
    lev = np.full(space.n_points, -(10**9), dtype=np.int64)
    for x in pos:
        lev[x] = level_index(float(r[x]), kappa)
    i_min = int(lev[pos].min())
    i_max = int(lev[pos].max())
    occupied = set(int(v) for v in lev[pos])
    i0 = i_min
    while i0 + 1 <= i_max and (i0 + 1) not in occupied:
        i0 += 1
    for i in range(i0 + 1, i_max + 1):
        if i not in occupied:
            raise EmptyLevel(f"annulus ({kappa ** (i - 1):g}, {kappa ** i:g}] holds no points")
    lev[pos[lev[pos] <= i0]] = i0
    lev[space.base] = i0

    # raw components per level
    comps: dict[int, list[list[int]]] = {}
    for i in range(i0, i_max + 1):
        members = np.flatnonzero(lev == i)
        comps[i] = space.components(members) if i > i0 else [sorted(members.tolist())]

    lam = space.lam
    # pieces under construction: list of (level, set)
    groups: list[tuple[int, set[int]]] = []
    owner = np.full(space.n_points, -1, dtype=np.int64)

    def add_group(level, pts):
        groups.append((level, set(pts)))
        owner[list(pts)] = len(groups) - 1

    merges: list[tuple[int, int, int]] = []
    for c in comps[i0]:
        add_group(i0, c)
    for i in range(i0 + 1, i_max + 1):
        nxt = set(np.flatnonzero(lev == i + 1).tolist()) if i < i_max else set()
        for c in comps[i]:
            if i == i_max or _extend(space, c) & nxt:
                add_group(i, c)
                continue
            hosts = {int(owner[u]) for x in c for u in space.neighbors(x) if owner[u] >= 0}
            hosts = {g for g in hosts if groups[g][0] < i}
            if not hosts:
                add_group(i, c)
                continue
            top = max(groups[g][0] for g in hosts)
            cand = sorted(g for g in hosts if groups[g][0] == top)
            host = max(cand, key=lambda g: (float(np.sum(lam[list(groups[g][1])])), -g))
            groups[host][1].update(c)
            owner[c] = host
            merges.append((i, min(c), host))

    # final indexing: by level, then smallest point
    order = sorted(range(len(groups)), key=lambda g: (groups[g][0], min(groups[g][1])))
    remap = {g: k for k, g in enumerate(order)}
    sets = [sorted(groups[g][1]) for g in order]
    levels = [groups[g][0] for g in order]
    merges = [(i, x, remap[h]) for i, x, h in merges]
    return covering_from_sets(space, sets, levels, kappa, merges)


def covering_from_sets(
    space: FiniteMetricMeasureSpace,
    sets: Sequence[Sequence[int]],
    levels: Sequence[int],
    kappa: float,
    merges: Sequence[tuple[int, int, int]] = (),
) -> GoodCovering:
    """Derive ``Ustar``, ``Usharp``, the merge map and tight ``q1``, ``q2``."""
    npc = len(sets)
    owner = np.full(space.n_points, -1, dtype=np.int64)
    for k, s in enumerate(sets):
        owner[list(s)] = k
    touching = sorted(_touch_pairs(space, owner))
    nbr: list[set[int]] = [{k} for k in range(npc)]
    for a, b in touching:
        nbr[a].add(b)
        nbr[b].add(a)
    ustar = [sorted(set().union(*(sets[j] for j in nbr[k]))) for k in range(npc)]
    ext_star = [_extend(space, us) for us in ustar]
    star_sets = [set(us) for us in ustar]
    usharp = []
    for k in range(npc):
        acc: set[int] = set()
        for j in range(npc):
            if ext_star[k] & star_sets[j]:
                acc |= star_sets[j]
        usharp.append(sorted(acc))
    labels: dict[int, int] = {}
    pieces = []
    for k in range(npc):
        lab = labels.get(levels[k], 0)
        labels[levels[k]] = lab + 1
        pieces.append(Piece(k, int(levels[k]), lab, tuple(sets[k]), tuple(ustar[k]), tuple(usharp[k])))
    lam_u = [float(np.sum(space.lam[list(s)])) for s in sets]
    mu_u = [float(np.sum(space.mu[list(s)])) for s in sets]
    lam_s = [float(np.sum(space.lam[list(s)])) for s in ustar]
    mu_s = [float(np.sum(space.mu[list(s)])) for s in ustar]
    merge_map = {}
    for a, b in touching:
        def ratio(k):
            return max(lam_s[k] / min(lam_u[a], lam_u[b]), mu_s[k] / min(mu_u[a], mu_u[b]))

        merge_map[(a, b)] = min((a, b), key=lambda k: (ratio(k), k))
    cov = GoodCovering(tuple(pieces), float(kappa), merge_map, 0, 0.0, tuple(merges), tuple(touching))
    q1, q2 = _tight_constants(space, cov)
    return GoodCovering(tuple(pieces), float(kappa), merge_map, q1, q2, tuple(merges), tuple(touching))


def _tight_constants(space, cov: GoodCovering, lam=None, mu=None) -> tuple[int, float]:
    lam = space.lam if lam is None else lam
    mu = space.mu if mu is None else mu
    sharp = [set(pc.Usharp) for pc in cov.pieces]
    q1 = 0
    for a in range(len(sharp)):
        q1 = max(q1, sum(1 for b in range(len(sharp)) if sharp[a] & sharp[b]))
    q2 = 1.0
    for (a, b), k in cov.merge_map.items():
        for w in (lam, mu):
            wa = float(np.sum(w[list(cov.pieces[a].U)]))
            wb = float(np.sum(w[list(cov.pieces[b].U)]))
            wk = float(np.sum(w[list(cov.pieces[k].Ustar)]))
            q2 = max(q2, wk / min(wa, wb))
    return q1, q2


# -- validation ----------------------------------------------------------------


@dataclass(frozen=True)
class ValidationReport:
    q1: int
    q2: float
    violations: tuple[dict, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {"q1": self.q1, "q2": self.q2, "violations": list(self.violations)}


def validate_covering(space: FiniteMetricMeasureSpace, cov: GoodCovering) -> ValidationReport:
    """Recheck conditions (i)-(v) of a good covering from scratch.

    (i) the U's are disjoint and cover every point except possibly the base
    point; (ii) nesting; (iii) the stated q1 bounds the Usharp overlap count;
    (iv) touching pieces have a merge piece whose Ustar holds both U's;
    (v) the stated q2 bounds the volume ratios.  Violations are returned as
    data.
    """
    viol: list[dict] = []
    seen: dict[int, int] = {}
    for pc in cov.pieces:
        for x in pc.U:
            if x in seen:
                viol.append({"condition": "i", "detail": "overlap", "indices": [seen[x], pc.index], "point": x})
            seen[x] = pc.index
    missing = [x for x in range(space.n_points) if x not in seen and x != space.base]
    if missing:
        viol.append({"condition": "i", "detail": "uncovered", "points": missing[:20]})
    for pc in cov.pieces:
        if not set(pc.U) <= set(pc.Ustar) <= set(pc.Usharp):
            viol.append({"condition": "ii", "indices": [pc.index]})
    owner = np.full(space.n_points, -1, dtype=np.int64)
    for pc in cov.pieces:
        owner[list(pc.U)] = pc.index
    touching = sorted(_touch_pairs(space, owner))
    for a, b in touching:
        k = cov.merge_map.get((a, b))
        if k is None or not (set(cov.pieces[a].U) | set(cov.pieces[b].U)) <= set(cov.pieces[k].Ustar):
            # any piece satisfying (iv) would do; report the pair when none does
            ok = any(
                (set(cov.pieces[a].U) | set(cov.pieces[b].U)) <= set(pc.Ustar) for pc in cov.pieces
            )
            if k is None or not ok:
                viol.append({"condition": "iv", "indices": [a, b]})
    mm = dict(cov.merge_map)
    for a, b in touching:
        if (a, b) not in mm:
            cands = [pc.index for pc in cov.pieces
                     if (set(cov.pieces[a].U) | set(cov.pieces[b].U)) <= set(pc.Ustar)]
            if cands:
                mm[(a, b)] = cands[0]
    probe = GoodCovering(cov.pieces, cov.kappa, mm, 0, 0.0)
    q1, q2 = _tight_constants(space, probe)
    if q1 > cov.q1:
        viol.append({"condition": "iii", "stated": cov.q1, "tight": q1})
    if q2 > cov.q2 * (1 + 1e-12):
        viol.append({"condition": "v", "stated": cov.q2, "tight": q2})
    return ValidationReport(q1, q2, tuple(viol))


# -- covering graph --------------------------------------------------------------


def covering_graph(
    cov: GoodCovering,
    space: FiniteMetricMeasureSpace,
    weight: np.ndarray | Callable[[np.ndarray], np.ndarray] | None = None,
) -> WeightedGraph:
    """One vertex per piece with measure ``sum_{x in U} weight(x)``.

    ``weight`` is an array over points, a function of the radial
    coordinate, or ``None`` for ``lam``.  Edges join touching pieces.
    """
    if weight is None:
        w = space.lam
    elif callable(weight):
        w = np.asarray(weight(space.radial), dtype=float)
    else:
        w = np.asarray(weight, dtype=float)
    meas = [float(np.sum(w[list(pc.U)])) for pc in cov.pieces]
    owner = np.full(space.n_points, -1, dtype=np.int64)
    for pc in cov.pieces:
        owner[list(pc.U)] = pc.index
    return build_graph(meas, sorted(_touch_pairs(space, owner)))


# -- RCA branch length -----------------------------------------------------------


def rca_branch_bound(p: float, C_D: float, C_P: float, C_o: float, nu: float) -> tuple[int, float]:
    """Branch-length bound ``Lmax`` and scale ``kappa0 = 2^(Lmax + 2)``.

    ``Lmax`` is the least integer ``L >= 3`` with
    ``2^p C_P C_D^2 121^(log2 C_D) 2^nu / C_o <= 2^(L (nu - p))``.
    The volume constant enters inverted: a weaker lower bound on volumes
    (smaller ``C_o``) must allow longer branches.
    """
    if not nu > p:
        raise NuNotAbovePorder(f"nu={nu} must exceed p={p}")
    if not (C_D >= 1 and C_P > 0 and C_o > 0):
        raise ValueError("need C_D >= 1, C_P > 0 and C_o > 0")
    log2 = (
        p
        + math.log2(C_P)
        + 2 * math.log2(C_D)
        + math.log2(C_D) * math.log2(121)
        + nu
        - math.log2(C_o)
    )
    L = math.ceil(log2 / (nu - p) - 1e-12)
    L = max(L, 3)
    return L, float(2 ** (L + 2))
