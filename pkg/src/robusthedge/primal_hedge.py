"""Primal superhedging: strategy extraction, verification, Doob-Meyer split.

The primal LP minimizes the initial capital subject to terminal wealth
dominating the claim on every non-polar path; its optimum matches the dual
DP value (strong duality on finite trees).  The strategy extracted from the
DP dual multipliers achieves that optimum path by path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

from . import simplex
from .market_tree import NEG_INF, MarketTree
from .measure_families import (
    ALL,
    MARTINGALE,
    VAR_BOUNDED,
    FamilySpec,
    MeasureError,
    TreeMeasure,
    chargeable_children,
    in_family,
    polar_paths,
)

HEDGE_TOL = 1e-9


class HedgeError(MeasureError):
    pass


@dataclass
class Strategy:
    """Hedge vectors per non-leaf node; flagged nodes are polar-excluded
    (their h is 0 by convention and never enters a checked inequality)."""

    h: dict
    flagged: set = field(default_factory=set)

    def at(self, nid: int) -> tuple:
        return self.h[nid]


@dataclass
class HedgeReport:
    ok: bool
    min_slack: Optional[float]
    violations: list
    polar: list
    slacks: dict


def extract_strategy(tree: MarketTree, Y: Mapping, fam: FamilySpec) -> Strategy:
    """One-step dual multipliers of the value field as a hedge."""
    from .dual_dp import one_step_sup

    if Y[tree.root] == NEG_INF:
        raise HedgeError("family is empty below the root: no hedge is defined")
    h, flagged = {}, set()
    zero = tuple([0.0] * tree.dim)
    for nid in tree.internal_nodes:
        if Y[nid] == NEG_INF:
            h[nid] = zero
            flagged.add(nid)
            continue
        sol = one_step_sup(tree, nid, {c: Y[c] for c in tree.children(nid)}, fam)
        h[nid] = sol.h
    return Strategy(h=h, flagged=flagged)


def wealth(tree: MarketTree, X0, H: Strategy, path: Sequence[int]):
    """X0 plus the accumulated hedge gains along the path."""
    total = X0
    for i in range(len(path) - 1):
        n, c = path[i], path[i + 1]
        hn = H.h[n]
        step = tree.step(n, c)
        for k in range(tree.dim):
            total += hn[k] * step[k]
    return total


def verify_superhedge(tree: MarketTree, X0, H: Strategy, xi: Mapping, fam: FamilySpec, tol: float = HEDGE_TOL) -> HedgeReport:
    """Wealth >= claim on every non-polar path (the quasi-sure inequality).

    Polar paths are excluded from the check and listed in the report.
    """
    polar = polar_paths(tree, fam, xi)
    polar_leaves = {p[-1] for p in polar}
    slacks, violations = {}, []
    min_slack = None
    for path in tree.paths():
        leaf = path[-1]
        if leaf in polar_leaves:
            continue
        if xi[leaf] == NEG_INF:
            # non-polar -inf leaf: dominated trivially, not a constraint
            continue
        s = wealth(tree, X0, H, path) - xi[leaf]
        slacks[leaf] = s
        if min_slack is None or s < min_slack:
            min_slack = s
        if s < -tol:
            violations.append(path)
    return HedgeReport(
        ok=not violations,
        min_slack=min_slack,
        violations=violations,
        polar=polar,
        slacks=slacks,
    )


# -- the primal LP -------------------------------------------------------


def _alive_nodes(tree, xi, fam):
    """Nodes below which some family kernel avoids the -inf region, computed
    without the dual recursion (vertex-based feasibility, bottom-up)."""
    from .oracle_lp import enumerate_vertex_kernels

    alive = set()
    for nid in reversed(range(len(tree.nodes))):
        if tree.is_leaf(nid):
            if xi[nid] != NEG_INF:
                alive.add(nid)
            continue
        ok = False
        for v in enumerate_vertex_kernels(tree, nid, fam.unrestricted()):
            if all(c in alive for c in v.support()):
                ok = True
                break
        if ok:
            alive.add(nid)
    return alive


def primal_lp(tree: MarketTree, xi: Mapping, fam: FamilySpec, exact: bool = True):
    """(minimal initial capital, optimal Strategy).

    MARTINGALE / ALL: path-wise wealth constraints (ALL additionally
    constrains the hedge to the admissible cone h . step <= 0).  VAR_BOUNDED
    hedging needs variance instruments, so it uses the equivalent node-value
    formulation with per-node variance-position variables.
    """
    if fam.cls == VAR_BOUNDED:
        return _primal_lp_var_bounded(tree, xi, fam, exact)
    polar = polar_paths(tree, fam, xi)
    polar_leaves = {p[-1] for p in polar}
    paths = [
        p
        for p in tree.paths()
        if p[-1] not in polar_leaves and xi[p[-1]] != NEG_INF
    ]
    if not paths:
        return NEG_INF, Strategy(
            h={n: tuple([0.0] * tree.dim) for n in tree.internal_nodes},
            flagged=set(tree.internal_nodes),
        )
    d = tree.dim
    hedge_nodes = sorted({n for p in paths for n in p[:-1]})
    var_index = {"X0": 0}
    for n in hedge_nodes:
        for k in range(d):
            var_index[(n, k)] = len(var_index)
    nv = len(var_index)
    A_ub, b_ub = [], []
    for p in paths:
        row = [0] * nv
        row[0] = -1
        for i in range(len(p) - 1):
            n, c = p[i], p[i + 1]
            step = tree.step(n, c)
            for k in range(d):
                row[var_index[(n, k)]] -= step[k]
        A_ub.append(row)
        b_ub.append(-xi[p[-1]])
    if fam.cls == ALL:
        # admissible cone: no strategy may profit in conditional mean
        for n in hedge_nodes:
            for c in tree.children(n):
                step = tree.step(n, c)
                row = [0] * nv
                for k in range(d):
                    row[var_index[(n, k)]] = step[k]
                A_ub.append(row)
                b_ub.append(0)
    c_obj = [0] * nv
    c_obj[0] = 1
    x = _solve_min(c_obj, A_ub, b_ub, list(range(nv)), exact)
    X0 = x[0]
    h = {}
    flagged = set()
    zero = tuple([0.0] * d)
    for n in tree.internal_nodes:
        if n in hedge_nodes:
            h[n] = tuple(x[var_index[(n, k)]] for k in range(d))
        else:
            h[n] = zero
            flagged.add(n)
    return X0, Strategy(h=h, flagged=flagged)


def _primal_lp_var_bounded(tree, xi, fam, exact):
    alive = _alive_nodes(tree, xi, fam)
    if tree.root not in alive:
        return NEG_INF, Strategy(
            h={n: tuple([0.0] * tree.dim) for n in tree.internal_nodes},
            flagged=set(tree.internal_nodes),
        )
    internal = [n for n in tree.internal_nodes if n in alive]
    var_index = {}
    for n in internal:
        var_index[("W", n)] = len(var_index)
        var_index[("h", n)] = len(var_index)
        var_index[("lhi", n)] = len(var_index)
        var_index[("llo", n)] = len(var_index)
    nv = len(var_index)
    free = [var_index[("W", n)] for n in internal] + [
        var_index[("h", n)] for n in internal
    ]
    A_ub, b_ub = [], []
    for n in internal:
        xn = tree.spot1(n)
        for c in tree.children(n):
            if c not in alive:
                continue
            dx = tree.spot1(c) - xn
            row = [0] * nv
            rhs = 0
            row[var_index[("W", n)]] = -1
            row[var_index[("h", n)]] = -dx
            row[var_index[("lhi", n)]] = fam.var_hi - dx * dx
            row[var_index[("llo", n)]] = dx * dx - fam.var_lo
            if tree.is_leaf(c):
                rhs = -xi[c]
            else:
                row[var_index[("W", c)]] = 1
            A_ub.append(row)
            b_ub.append(rhs)
    c_obj = [0] * nv
    c_obj[var_index[("W", tree.root)]] = 1
    x = _solve_min(c_obj, A_ub, b_ub, free, exact)
    X0 = x[var_index[("W", tree.root)]]
    h, flagged = {}, set()
    zero = tuple([0.0] * tree.dim)
    for n in tree.internal_nodes:
        if n in alive:
            h[n] = (x[var_index[("h", n)]],)
        else:
            h[n] = zero
            flagged.add(n)
    return X0, Strategy(h=h, flagged=flagged)


def _solve_min(c_obj, A_ub, b_ub, free, exact):
    if exact:
        res = simplex.solve_lp(
            c_obj, A_ub=A_ub, b_ub=b_ub, maximize=False, free_vars=free
        )
        if res.status != "optimal":
            raise HedgeError(f"primal LP status {res.status}")
        return res.x
    import numpy as np
    from scipy.optimize import linprog

    freeset = set(free)
    bounds = [(None, None) if j in freeset else (0, None) for j in range(len(c_obj))]
    res = linprog(
        c=[float(v) for v in c_obj],
        A_ub=np.array([[float(v) for v in row] for row in A_ub]),
        b_ub=[float(v) for v in b_ub],
        bounds=bounds,
        method="highs",
        options={
            "primal_feasibility_tolerance": 1e-10,
            "dual_feasibility_tolerance": 1e-10,
        },
    )
    if not res.success:
        raise HedgeError(f"primal LP failed: {res.message}")
    return list(res.x)


# -- Doob-Meyer and admissibility ----------------------------------------


def doob_meyer(tree: MarketTree, Y: Mapping, H: Strategy, P: TreeMeasure, tol: float = HEDGE_TOL) -> dict:
    """Cumulative compensator K along P-charged edges; K(root) = 0.

    An increment below -tol means the hedge fails its one-step inequality
    on a charged edge, which is a solver bug, so it raises.
    """
    mass = P.node_mass(tree)
    K = {tree.root: 0}
    for nid in tree.subtree_nodes(tree.root):
        if tree.is_leaf(nid) or mass[nid] == 0:
            continue
        if Y[nid] == NEG_INF:
            raise HedgeError(f"charged node {nid} has value -inf")
        for c in tree.children(nid):
            if P.prob(nid, c) == 0:
                continue
            if Y[c] == NEG_INF:
                raise HedgeError(f"charged child {c} has value -inf")
            step = tree.step(nid, c)
            inc = Y[nid] - Y[c]
            for k in range(tree.dim):
                inc += H.h[nid][k] * step[k]
            if inc < -tol:
                raise HedgeError(
                    f"negative compensator increment {inc} on edge {nid}->{c}"
                )
            K[c] = K[nid] + inc
    return K


def check_admissible(tree: MarketTree, H: Strategy, fam: FamilySpec, xi: Optional[Mapping] = None, tol: float = 1e-12) -> bool:
    """Conditional hedge gains are non-positive under a vertex-generated set
    of family measures (the supermartingale requirement on wealth)."""
    from .oracle_lp import enumerate_vertex_kernels

    verts = {
        n: enumerate_vertex_kernels(tree, n, fam.unrestricted())
        for n in tree.internal_nodes
    }
    if any(not v for v in verts.values()):
        return True  # empty family: nothing to check
    width = max(len(v) for v in verts.values())
    for k in range(width):
        P = TreeMeasure({n: verts[n][k % len(verts[n])] for n in verts})
        if fam.claim is not None or xi is not None:
            claim = fam.claim if fam.claim is not None else xi
            law = P.leaf_law(tree)
            if any(law[l] > 0 and claim.get(l) == NEG_INF for l in law):
                continue
        mass = P.node_mass(tree)
        for n in tree.internal_nodes:
            if mass[n] == 0:
                continue
            gain = 0
            for c in tree.children(n):
                p = P.prob(n, c)
                if p == 0:
                    continue
                step = tree.step(n, c)
                for kk in range(tree.dim):
                    gain += p * H.h[n][kk] * step[kk]
            if gain > tol:
                return False
    return True
