"""Patching local and discrete constants into a global Sobolev constant.

The closed forms combine a local (continuous) Neumann constant ``Sc``
valid on every piece of a good covering, a discrete constant ``Sd`` of the
covering graph, and the covering constants ``q1``, ``q2``.
:func:`certify_global` runs the whole pipeline on a finite space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .covering import GoodCovering, build_annuli_covering, covering_graph
from .discrete import (
    EXHAUSTIVE_LIMIT,
    INF,
    QuotientProblem,
    _graph_problem,
    best_sobolev_constant,
    check_order,
    isoperimetric_constant,
    l1_to_lp_constant,
    target_exponent,
)
from .errors import OrderingViolated, PieceDisconnected
from .graph import degree_and_comparability, is_connected
from .space import FiniteMetricMeasureSpace

__all__ = [
    "PatchInput",
    "InequalityCertificate",
    "patch_dirichlet_constant",
    "patch_neumann_constant",
    "patch_mixed_constant",
    "local_neumann_constant",
    "certify_global",
    "space_problem",
]


@dataclass(frozen=True)
class PatchInput:
    Sc: float
    Sd: float
    q1: float
    q2: float
    p: float
    k: float = INF
    variant: str = "dirichlet"

    def __post_init__(self):
        check_order(self.p, self.k)
        for name in ("Sc", "q1", "q2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.Sd >= 0:
            raise ValueError("Sd must be nonnegative")
        if self.variant not in ("dirichlet", "neumann"):
            raise ValueError("variant must be dirichlet or neumann")


def _patch_core(inp: PatchInput, extra_power: float) -> float:
    p, k = inp.p, inp.k
    if math.isinf(k):
        a, b, pk = 1.0, 1.0, 0.0
    else:
        a, b, pk = k / (k - p), (k - p) / k, p / k
    inner = (inp.Sc * inp.q1) ** a + inp.Sd * inp.q2 * (2**p * inp.Sc * inp.q1**3) ** a
    return 2 ** (extra_power + pk) * inner**b


def patch_dirichlet_constant(inp: PatchInput) -> float:
    """``2^(p-1+p/k) ((Sc q1)^(k/(k-p)) + Sd q2 (2^p Sc q1^3)^(k/(k-p)))^((k-p)/k)``."""
    return _patch_core(inp, inp.p - 1)


def patch_neumann_constant(inp: PatchInput) -> float:
    """The Dirichlet value times ``2^p``."""
    return _patch_core(inp, 2 * inp.p - 1)


def patch_mixed_constant(
    Sc: float, ScPrime: float, Sd: float, q1: float, q2: float, p: float, r: float, q: float
) -> float:
    """Mixed-exponent Dirichlet constant for ``1 <= p <= r <= q <= inf``.

    ``q`` is the Lebesgue exponent of the left side (order ``k = qp/(q-p)``),
    ``Sd`` the L^r discrete constant and ``ScPrime`` the local constant of
    order ``pr/(r-p)``.  ``q = inf`` is the limit of the closed form.
    """
    if not (1 <= p <= r <= q):
        raise OrderingViolated(f"need 1 <= p <= r <= q, got p={p}, r={r}, q={q}")
    a = q1 * Sc
    b = (Sd * q2 * 2**r * ScPrime ** (r / p)) ** (1 / r) * q1 ** (3 / p)
    if math.isinf(q):
        return 2**p * max(a ** (1 / p), b) ** p
    # (a^(q/p) + b^q)^(p/q), written to avoid overflow for large q
    m = max(a ** (1 / p), b)
    if m == 0:
        return 0.0
    s = (a ** (1 / p) / m) ** q + (b / m) ** q
    return 2 ** (p - p / q) * m**p * s ** (p / q)


# ---------------------------------------------------------------------------
# local constants
# ---------------------------------------------------------------------------


def space_problem(
    space: FiniteMetricMeasureSpace,
    p: float,
    q: float,
    domain: Sequence[int] | None = None,
    numerator: Sequence[int] | None = None,
    centered: bool = False,
    pinned: Sequence[int] = (),
    lam: np.ndarray | None = None,
    mu: np.ndarray | None = None,
) -> tuple[QuotientProblem, np.ndarray]:
    """Quotient problem of the space restricted to ``domain``.

    The numerator is taken over ``numerator`` (default the domain) with
    weights ``lam``; the energy uses pairs inside the domain with weights
    ``max(mu) / length^p``.  Returns the problem and the domain indices.
    """
    lam = space.lam if lam is None else np.asarray(lam, dtype=float)
    mu = space.mu if mu is None else np.asarray(mu, dtype=float)
    dom = np.arange(space.n_points) if domain is None else np.asarray(sorted(set(domain)), dtype=np.intp)
    pos = np.full(space.n_points, -1, dtype=np.intp)
    pos[dom] = np.arange(len(dom))
    P = space.pairs
    keep = (pos[P[:, 0]] >= 0) & (pos[P[:, 1]] >= 0)
    edges = pos[P[keep]]
    w = space.energy_weights(p, mu)[keep]
    num = dom if numerator is None else np.asarray(sorted(set(numerator)), dtype=np.intp)
    if np.any(pos[num] < 0):
        raise ValueError("numerator set must lie inside the domain")
    pins = pos[np.asarray(sorted(set(pinned) & set(dom.tolist())), dtype=np.intp)]
    prob = QuotientProblem(
        n=len(dom), edges=edges, edge_w=w, num_idx=pos[num], num_w=lam[num], p=p, q=q,
        centered=centered, pinned=pins,
    )
    return prob, dom


@dataclass(frozen=True)
class LocalConstant:
    piece: int
    pair: str
    constant: float
    method: str
    bound: str

    def to_json(self) -> dict:
        return {
            "piece": self.piece,
            "pair": self.pair,
            "constant": "inf" if math.isinf(self.constant) else self.constant,
            "method": self.method,
            "bound": self.bound,
        }


def local_neumann_constant(
    space: FiniteMetricMeasureSpace,
    inner: Sequence[int],
    outer: Sequence[int],
    p: float,
    k: float,
    mode: str = "certified",
    lam=None,
    mu=None,
    seed: int = 0,
) -> tuple[float, str, str]:
    """Neumann constant for the pair (mean and left side on ``inner``, energy on ``outer``).

    ``mode="certified"`` returns an exact value or a guaranteed upper bound,
    ``mode="estimate"`` a multi-start lower bound when no exact route exists.
    Returns ``(value, method, bound)``.
    """
    q = target_exponent(p, k)
    if len(outer) > 1 and not space.is_connected(outer):
        raise PieceDisconnected(f"piece with {len(outer)} points is not connected")
    prob, _ = space_problem(space, p, q, outer, inner, centered=True, lam=lam, mu=mu)
    if len(set(inner)) <= 1 or np.sum(prob.num_w > 0) <= 1:
        return 0.0, "formula", "exact"
    if p == 2 and q == 2:
        val, _, _ = prob.eigen_sup()
        return val, "eigen", "exact"
    if mode == "estimate":
        val, _ = prob.ascend(starts=8, seed=seed)
        return val, "multistart-optimization", "lower"
    val, method = prob.upper_bound()
    return val, method, "exact" if method == "eigen" else "upper"


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------


def _num(x):
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return x


@dataclass(frozen=True)
class InequalityCertificate:
    kind: str
    p: float
    k: float
    weight: dict
    constant: float
    status: str
    provenance: dict
    cross_check: dict | None = None

    @property
    def cross_check_ok(self) -> bool | None:
        if self.cross_check is None:
            return None
        return self.cross_check["value"] <= self.constant * (1 + 1e-9)

    def to_json(self) -> dict:
        doc = {
            "kind": self.kind,
            "p": self.p,
            "k": _num(self.k),
            "weight": self.weight,
            "constant": _num(self.constant),
            "status": self.status,
            "provenance": self.provenance,
        }
        if self.cross_check is not None:
            doc["cross_check"] = dict(self.cross_check, ok=self.cross_check_ok)
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _discrete_constant(graph, q: float, boundary: list[int], mode: str, seed: int):
    """L^q Dirichlet constant of order infinity on the covering graph."""
    n = graph.n_vertices
    if n == len(boundary):
        return 0.0, "formula", "exact"
    if graph.n_edges == 0 or not is_connected(graph):
        return INF, "formula", "upper"
    if q == 2 or (q == 1 and n <= EXHAUSTIVE_LIMIT):
        rep = best_sobolev_constant(graph, q, INF, "dirichlet", boundary=boundary or None, seed=seed)
        return rep.constant, rep.method, rep.bound
    if mode == "estimate":
        rep = best_sobolev_constant(graph, q, INF, "dirichlet", boundary=boundary or None, seed=seed)
        return rep.constant, rep.method, rep.bound
    cands = []
    if n <= EXHAUSTIVE_LIMIT:
        iso = isoperimetric_constant(graph, INF, boundary or None)
        d, C = degree_and_comparability(graph)
        cands.append((l1_to_lp_constant(iso.constant, q, INF, d, C) ** q, "formula"))
    pins = boundary or [0]
    prob = _graph_problem(graph, q, q, "dirichlet", pins)
    v, method = prob.upper_bound()
    if not boundary:
        v = max(_graph_problem(graph, q, q, "dirichlet", [b]).upper_bound()[0] for b in range(n))
    cands.append((v, method))
    val, method = min(cands)
    return val, method, "upper"


def certify_global(
    space: FiniteMetricMeasureSpace,
    kappa: float,
    p: float,
    k: float = INF,
    lam: np.ndarray | None = None,
    mu: np.ndarray | None = None,
    kind: str = "sobolev-dirichlet",
    weight: dict | None = None,
    mode: str = "certified",
    cross_check: bool = True,
    covering: GoodCovering | None = None,
    seed: int = 0,
) -> InequalityCertificate:
    """Certified global Dirichlet-type constant of the space.

    Steps: build the annuli covering; bound the local Neumann constants on
    the pairs (U, Ustar) and (Ustar, Usharp) of every piece; compute the
    discrete L^q constant of order infinity of the covering graph with
    measure ``lam(U)``; combine with :func:`patch_dirichlet_constant`.

    Test functions vanish on the union of the U's of the outermost level,
    which is also the Dirichlet boundary of the covering graph.  The cross
    check evaluates the same global quotient directly (exactly when
    ``p = 2`` and ``k`` is infinite, by multi-start ascent otherwise).
    """
    q = target_exponent(p, k)
    lam = space.lam if lam is None else np.asarray(lam, dtype=float)
    mu = space.mu if mu is None else np.asarray(mu, dtype=float)
    if np.any(lam < 0) or np.any(mu <= 0):
        raise ValueError("weights must be positive (lam may vanish at the base point)")
    work = space.with_weights(lam=lam, mu=mu)
    cov = covering if covering is not None else build_annuli_covering(work, kappa)

    locals_: list[LocalConstant] = []
    for pc in cov.pieces:
        for label, inner, outer in (("U,Ustar", pc.U, pc.Ustar), ("Ustar,Usharp", pc.Ustar, pc.Usharp)):
            val, method, bound = local_neumann_constant(work, inner, outer, p, k, mode, seed=seed)
            locals_.append(LocalConstant(pc.index, label, float(val), method, bound))
    worst = max(locals_, key=lambda c: c.constant)
    Sc = max(worst.constant, 1e-300)

    graph = covering_graph(cov, work, lam)
    outer_pieces = cov.outermost() if cov.n_pieces > 1 else []
    Sd, sd_method, sd_bound = _discrete_constant(graph, q, outer_pieces, mode, seed)
    inp = PatchInput(Sc, Sd, cov.q1, cov.q2, p, k)
    S = patch_dirichlet_constant(inp) if math.isfinite(Sd) else INF

    bounds = {c.bound for c in locals_} | {sd_bound}
    status = "heuristic" if "lower" in bounds else "certified"
    boundary_pts = sorted(x for i in outer_pieces for x in cov.pieces[i].U)
    prov = {
        "covering": {"kappa": cov.kappa, "pieces": cov.n_pieces, "q1": cov.q1, "q2": cov.q2,
                     "merges": [list(m) for m in cov.merges]},
        "local": [c.to_json() for c in locals_],
        "Sc": {"value": Sc, "piece": worst.piece, "pair": worst.pair, "method": worst.method,
               "bound": worst.bound},
        "Sd": {"value": _num(Sd), "method": sd_method, "bound": sd_bound, "order": "inf", "exponent": q,
               "graph_boundary": outer_pieces},
        "formula": "patch_dirichlet_constant",
        "dirichlet_points": len(boundary_pts),
    }
    check = None
    if cross_check and boundary_pts:
        prob, _ = space_problem(work, p, q, pinned=boundary_pts)
        if p == 2 and q == 2:
            val, wit, _ = prob.eigen_sup()
            check = {"value": val, "method": "eigen", "bound": "exact"}
        else:
            val, wit = prob.ascend(starts=8, seed=seed)
            check = {"value": val, "method": "multistart-optimization", "bound": "lower"}
    return InequalityCertificate(
        kind=kind,
        p=float(p),
        k=k,
        weight=weight or {"tag": "space"},
        constant=float(S),
        status=status,
        provenance=prov,
        cross_check=check,
    )

