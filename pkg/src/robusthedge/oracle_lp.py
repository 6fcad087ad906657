"""Independent brute-force oracles: vertex enumeration and the global path LP.

These deliberately avoid the backward recursion in dual_dp.  The global LP
optimizes directly over leaf probabilities subject to the linear rows that
characterize induced laws of family measures, and vertex enumeration solves
square subsystems exactly in rationals.  Agreement between the two routes is
the main acceptance gate.
"""

from __future__ import annotations

import itertools
from typing import Mapping, Optional, Sequence

from . import simplex
from .market_tree import NEG_INF, MarketTree, shift_claim
from .measure_families import (
    ALL,
    MARTINGALE,
    VAR_BOUNDED,
    FamilySpec,
    Kernel,
    MeasureError,
    TreeMeasure,
    in_family,
)
from .simplex import RAT, rat

ORACLE_MAX_CHILDREN = 12
ORACLE_MAX_LEAVES = 2000


class OracleScaleError(MeasureError):
    pass


# -- exact linear algebra helpers ----------------------------------------


def _solve_unique(A, b):
    """Unique exact solution of A x = b (possibly overdetermined), or None."""
    m, n = len(A), len(A[0]) if A else 0
    M = [[rat(v) for v in row] + [rat(bb)] for row, bb in zip(A, b)]
    piv_rows = 0
    piv_cols = []
    for col in range(n):
        piv = next((r for r in range(piv_rows, m) if M[r][col] != 0), None)
        if piv is None:
            continue
        M[piv_rows], M[piv] = M[piv], M[piv_rows]
        inv = 1 / M[piv_rows][col]
        M[piv_rows] = [v * inv for v in M[piv_rows]]
        for r in range(m):
            if r != piv_rows and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * bb for a, bb in zip(M[r], M[piv_rows])]
        piv_cols.append(col)
        piv_rows += 1
    if piv_rows < n:
        return None  # underdetermined
    for r in range(piv_rows, m):
        if M[r][n] != 0:
            return None  # inconsistent
    x = [RAT(0)] * n
    for r, col in enumerate(piv_cols):
        x[col] = M[r][n]
    return x


def enumerate_polytope_vertices(n: int, A_eq, b_eq, A_ub=(), b_ub=(), max_active_ub: Optional[int] = None):
    """All vertices of {x >= 0, A_eq x = b_eq, A_ub x <= b_ub}, exact.

    Enumerates supports and active inequality subsets; intended for small
    instances only (oracle scale).
    """
    A_eq = [[rat(v) for v in row] for row in A_eq]
    b_eq = [rat(v) for v in b_eq]
    A_ub = [[rat(v) for v in row] for row in A_ub]
    b_ub = [rat(v) for v in b_ub]
    n_ub = len(A_ub)
    if max_active_ub is None:
        max_active_ub = n_ub
    seen, out = set(), []
    for k_act in range(min(n_ub, max_active_ub) + 1):
        for act in itertools.combinations(range(n_ub), k_act):
            rows = A_eq + [A_ub[i] for i in act]
            rhs = b_eq + [b_ub[i] for i in act]
            r = len(rows)
            for size in range(1, min(n, r) + 1):
                for support in itertools.combinations(range(n), size):
                    sub = [[row[j] for j in support] for row in rows]
                    sol = _solve_unique(sub, rhs)
                    if sol is None or any(v < 0 for v in sol):
                        continue
                    x = [RAT(0)] * n
                    for j, v in zip(support, sol):
                        x[j] = v
                    ok = all(
                        sum(a * xx for a, xx in zip(A_ub[i], x)) <= b_ub[i]
                        for i in range(n_ub)
                    )
                    if not ok:
                        continue
                    key = tuple(x)
                    if key not in seen:
                        seen.add(key)
                        out.append(x)
    out.sort()
    return out


# -- one-step vertex oracle ----------------------------------------------


def _one_step_rows(tree, nid, children, fam):
    d = tree.dim
    xn = tree.spot(nid)
    A_eq = [[1] * len(children)]
    b_eq = [1]
    if fam.cls in (MARTINGALE, VAR_BOUNDED):
        for k in range(d):
            A_eq.append([tree.spot(c)[k] - xn[k] for c in children])
            b_eq.append(0)
    A_ub, b_ub = [], []
    if fam.cls == VAR_BOUNDED:
        if d != 1:
            raise MeasureError("VAR_BOUNDED is implemented for d = 1 only")
        g = [(tree.spot1(c) - tree.spot1(nid)) ** 2 for c in children]
        A_ub.append(g)
        b_ub.append(fam.var_hi)
        A_ub.append([-v for v in g])
        b_ub.append(-fam.var_lo)
    return A_eq, b_eq, A_ub, b_ub


def enumerate_vertex_kernels(tree: MarketTree, nid: int, fam: FamilySpec) -> list:
    """All vertices of the one-step kernel polytope at `nid`, exact, sorted
    lexicographically by probability vector over child-id order."""
    children = tree.children(nid)
    if not children:
        raise MeasureError(f"node {nid} is a leaf")
    if len(children) > ORACLE_MAX_CHILDREN:
        raise OracleScaleError(
            f"{len(children)} children exceeds the oracle limit {ORACLE_MAX_CHILDREN}"
        )
    A_eq, b_eq, A_ub, b_ub = _one_step_rows(tree, nid, children, fam)
    verts = enumerate_polytope_vertices(len(children), A_eq, b_eq, A_ub, b_ub)
    return [
        Kernel(nid, {c: p for c, p in zip(children, v) if p > 0}) for v in verts
    ]


def lex_smallest_kernel(tree: MarketTree, nid: int, fam: FamilySpec) -> Kernel:
    """Deterministic completion kernel for uncharged nodes."""
    verts = enumerate_vertex_kernels(tree, nid, fam)
    if not verts:
        raise MeasureError(f"no feasible family kernel at node {nid}")
    return verts[0]


def leaf_chargeable(tree: MarketTree, fam: FamilySpec, leaf: int) -> bool:
    """Does some family measure (claim filter included) charge this leaf?"""
    xi = fam.claim or {}
    if xi.get(leaf) == NEG_INF:
        return False
    leaves, A_eq, b_eq, A_ub, b_ub, _ = _build_path_lp(tree, xi, fam, tree.root)
    if leaf not in leaves:
        return False
    c = [1 if l == leaf else 0 for l in leaves]
    res = simplex.solve_lp(c, A_eq, b_eq, A_ub or None, b_ub or None)
    return res.status == "optimal" and res.value > 0


# -- global path LP ------------------------------------------------------


def _build_path_lp(tree, xi, fam, start):
    """Rows of the leaf-law LP below `start`.  -inf leaves are dropped
    (their probability is forced to zero)."""
    all_leaves = tree.leaves_below(start)
    leaves = [l for l in all_leaves if xi.get(l, 0) != NEG_INF]
    d = tree.dim
    internal = [n for n in tree.subtree_nodes(start) if not tree.is_leaf(n)]
    below = {n: set(tree.leaves_below(n)) for n in internal}
    # step taken at node n on the way to leaf l: spot(child on path) - spot(n)
    child_on_path = {}
    for l in all_leaves:
        path = tree.path_to(l)
        for i, n in enumerate(path[:-1]):
            child_on_path[(n, l)] = path[i + 1]
    A_eq = [[1] * len(leaves)]
    b_eq = [1]
    A_ub, b_ub = [], []
    for n in internal:
        xn = tree.spot(n)
        for k in range(d):
            if fam.cls in (MARTINGALE, VAR_BOUNDED):
                row = []
                for l in leaves:
                    if l in below[n]:
                        c = child_on_path[(n, l)]
                        row.append(tree.spot(c)[k] - xn[k])
                    else:
                        row.append(0)
                A_eq.append(row)
                b_eq.append(0)
        if fam.cls == VAR_BOUNDED:
            hi_row, lo_row = [], []
            for l in leaves:
                if l in below[n]:
                    c = child_on_path[(n, l)]
                    g = (tree.spot1(c) - tree.spot1(n)) ** 2
                    hi_row.append(g - fam.var_hi)
                    lo_row.append(fam.var_lo - g)
                else:
                    hi_row.append(0)
                    lo_row.append(0)
            A_ub.append(hi_row)
            b_ub.append(0)
            A_ub.append(lo_row)
            b_ub.append(0)
    c_obj = [xi.get(l, 0) for l in leaves]
    return leaves, A_eq, b_eq, A_ub, b_ub, c_obj


def _factorize_leaf_law(tree, fam, leaves, q, start):
    """Conditional kernels from a leaf law; deterministic completion at
    uncharged nodes."""
    mass = {n: RAT(0) for n in tree.subtree_nodes(start)}
    for l, ql in zip(leaves, q):
        path = tree.path_to(l)
        i0 = path.index(start)
        for n in path[i0:]:
            mass[n] += ql
    kernels = {}
    for n in tree.subtree_nodes(start):
        if tree.is_leaf(n):
            continue
        if mass[n] > 0:
            probs = {}
            for c in tree.children(n):
                p = mass[c] / mass[n]
                if p > 0:
                    probs[c] = p
            kernels[n] = Kernel(n, probs)
        else:
            kernels[n] = lex_smallest_kernel(tree, n, fam.unrestricted())
    return TreeMeasure(kernels)


def global_sup_lp(tree: MarketTree, xi: Mapping, fam: FamilySpec, start: Optional[int] = None, exact: bool = True):
    """sup of E[xi] over the family below `start` plus an optimal measure.

    Returns (value, TreeMeasure); (-inf, None) when no family measure avoids
    the -inf leaves.  Exact mode solves in rationals; float mode uses scipy.
    """
    start = tree.root if start is None else start
    if len(tree.leaves_below(start)) > ORACLE_MAX_LEAVES:
        raise OracleScaleError("tree exceeds the oracle leaf limit")
    xi_sub = shift_claim(tree, xi, start) if start != tree.root else dict(xi)
    leaves, A_eq, b_eq, A_ub, b_ub, c_obj = _build_path_lp(tree, xi_sub, fam, start)
    if not leaves:
        return NEG_INF, None
    if exact:
        res = simplex.solve_lp(c_obj, A_eq, b_eq, A_ub or None, b_ub or None)
        if res.status == "infeasible":
            return NEG_INF, None
        if res.status != "optimal":  # pragma: no cover
            raise MeasureError(f"path LP status {res.status}")
        q, value = res.x, res.value
    else:
        import numpy as np
        from scipy.optimize import linprog

        res = linprog(
            c=[-float(v) for v in c_obj],
            A_eq=np.array([[float(v) for v in row] for row in A_eq]),
            b_eq=[float(v) for v in b_eq],
            A_ub=np.array([[float(v) for v in row] for row in A_ub]) if A_ub else None,
            b_ub=[float(v) for v in b_ub] if A_ub else None,
            bounds=(0, None),
            method="highs",
            options={
                "primal_feasibility_tolerance": 1e-10,
                "dual_feasibility_tolerance": 1e-10,
            },
        )
        if res.status == 2:
            return NEG_INF, None
        if not res.success:  # pragma: no cover
            raise MeasureError(f"path LP failed: {res.message}")
        # clamp solver noise so the factorized kernels stay well conditioned
        q = [rat(v) if v > 1e-11 else RAT(0) for v in res.x]
        total = sum(q)
        q = [v / total for v in q]
        value = float(-res.fun)
    measure = _factorize_leaf_law(tree, fam, leaves, q, start)
    if not exact:
        measure = TreeMeasure(
            {
                n: Kernel(n, {c: float(p) for c, p in k.probs.items()})
                for n, k in measure.kernels.items()
            }
        )
    return value, measure


# -- concave envelope (d = 1 cross-check) --------------------------------


def upper_concave_envelope(points, x0):
    """Smallest concave function over the points, evaluated at x0.

    Independent of the one-step solver: upper convex hull by monotone chain,
    then linear interpolation.  Returns -inf when x0 lies outside the convex
    range of the abscissae (no dominating measure exists there).
    """
    best = {}
    for x, v in points:
        if v == NEG_INF:
            continue
        if x not in best or v > best[x]:
            best[x] = v
    pts = sorted(best.items())
    if not pts:
        return NEG_INF
    if x0 < pts[0][0] or x0 > pts[-1][0]:
        return NEG_INF
    hull = []
    for p in pts:
        while len(hull) >= 2:
            (x1, v1), (x2, v2) = hull[-2], hull[-1]
            # drop x2 if it lies on or below segment x1 -> p
            if (v2 - v1) * (p[0] - x1) <= (p[1] - v1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    for (x1, v1), (x2, v2) in zip(hull, hull[1:]):
        if x1 <= x0 <= x2:
            if x1 == x2:
                return max(v1, v2)
            lam = (x0 - x1) / (x2 - x1)
            return v1 + lam * (v2 - v1)
    return hull[0][1] if x0 == hull[0][0] else hull[-1][1]


# -- ess-sup and upward directedness -------------------------------------


def ess_sup_check(tree: MarketTree, xi: Mapping, fam: FamilySpec, tau, P: TreeMeasure, tol: float = 1e-9) -> bool:
    """At every tau-node charged by P, the DP value equals the subtree LP sup."""
    from .dual_dp import backward_value

    ok, why = in_family(tree, P, fam)
    if not ok:
        raise MeasureError(f"P is not in the family: {why}")
    mass = P.node_mass(tree)
    for m in sorted(set(tau)):
        if mass[m] == 0:
            continue
        dp = backward_value(tree, xi, fam, start=m)[m]
        lp, _ = global_sup_lp(tree, xi, fam, start=m)
        if dp == NEG_INF or lp == NEG_INF:
            if dp != lp:
                return False
        elif abs(dp - lp) > tol:
            return False
    return True


def upward_directed_check(tree: MarketTree, xi: Mapping, fam: FamilySpec, nid: int, P1: TreeMeasure, P2: TreeMeasure, tol: float = 1e-12) -> bool:
    """Bifurcating toward the better conditional expectation dominates both."""
    from .measure_families import bifurcate

    level = tree.node(nid).t
    tau = tree.nodes_at(level)
    e1 = {m: P1.expectation(tree, xi, start=m) for m in tau}
    e2 = {m: P2.expectation(tree, xi, start=m) for m in tau}
    A = {m for m in tau if _le_ext(e2[m], e1[m])}
    Pbar = bifurcate(tree, P1, P2, tau, A)
    mass = Pbar.node_mass(tree)
    for m in tau:
        if mass[m] == 0:
            continue
        eb = Pbar.expectation(tree, xi, start=m)
        target = e1[m] if m in A else e2[m]
        best = max(
            (v for v in (e1[m], e2[m]) if v != NEG_INF), default=NEG_INF
        )
        if e1[m] == NEG_INF and e2[m] == NEG_INF:
            best = NEG_INF
        if eb == NEG_INF or best == NEG_INF:
            if eb != best:
                return False
        elif abs(eb - best) > tol or abs(eb - target) > tol:
            return False
    return True


def _le_ext(a, b):
    if a == NEG_INF:
        return True
    if b == NEG_INF:
        return False
    return a <= b
