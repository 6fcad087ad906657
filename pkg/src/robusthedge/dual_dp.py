"""Backward dynamic programming for the dual value field.

Y(leaf) = claim; Y(n) = sup of the expected child values over the one-step
family polytope at n.  On a finite tree this recursion attains the global
sup of E[claim] over the measure family at the root, which the LP oracles
cross-check independently.

-inf is handled symbolically: a kernel may never put mass on a -inf child,
and a node is worth -inf exactly when no family kernel avoids all of them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional

from . import simplex
from .market_tree import NEG_INF, MarketTree
from .measure_families import (
    ALL,
    MARTINGALE,
    VAR_BOUNDED,
    FamilySpec,
    Kernel,
    MeasureError,
    TreeMeasure,
    chargeable_children,
    in_family,
)

FEAS_TOL = 1e-12
OPT_TOL = 1e-10
PROP_TOL = 1e-9


@dataclass
class OneStepSolution:
    """Value, optimizing kernel, and the dual certificate of one node solve."""

    value: object
    kernel: Optional[Kernel]
    h: tuple
    slack: dict
    var_duals: Optional[tuple] = None


def _is_exact(values) -> bool:
    return not any(isinstance(v, float) and v != NEG_INF for v in values)


def _finite_children(tree, nid, child_values):
    fin, dead = [], []
    for c in tree.children(nid):
        if c not in child_values:
            raise MeasureError(f"missing child value for node {c}")
        (dead if child_values[c] == NEG_INF else fin).append(c)
    return fin, dead


def _as_mode(x, exact):
    if exact or x == NEG_INF:
        return x
    return float(x)


def _infeasible(d):
    return OneStepSolution(NEG_INF, None, tuple([0.0] * d), {})


def _h_interval_midpoint(deltas, values, value, chargeable):
    """Supergradient of the one-step value in d = 1: midpoint of the
    subdifferential interval when it is compact, else its point closest to 0."""
    lo, hi = None, None
    for c, dc in deltas.items():
        if c not in chargeable or values[c] == NEG_INF:
            continue
        if dc > 0:
            bound = (values[c] - value) / dc
            lo = bound if lo is None else max(lo, bound)
        elif dc < 0:
            bound = (values[c] - value) / dc
            hi = bound if hi is None else min(hi, bound)
    if lo is not None and hi is not None:
        return (lo + hi) / 2
    if lo is not None:
        return max(lo, 0)
    if hi is not None:
        return min(hi, 0)
    return 0


def one_step_sup(tree: MarketTree, nid: int, child_values: Mapping, fam: FamilySpec, tol: float = FEAS_TOL) -> OneStepSolution:
    """Maximize the expected child value over family kernels at `nid`.

    Mass is forced to zero on -inf children.  The returned h is a dual
    multiplier: value + h.(x_c - x_n) >= V_c at every chargeable child
    (plus variance-dual terms for VAR_BOUNDED, reported in var_duals).
    """
    d = tree.dim
    fin, _dead = _finite_children(tree, nid, child_values)
    exact = _is_exact([child_values[c] for c in fin]) and _is_exact(
        [v for c in fin for v in tree.spot(c)]
    )
    if not fin:
        return _infeasible(d)

    if fam.cls == ALL:
        best = max(fin, key=lambda c: (child_values[c], -c))
        value = child_values[best]
        h = tuple([0] * d) if exact else tuple([0.0] * d)
        kernel = Kernel(nid, {best: 1 if exact else 1.0})
        slack = {c: value - child_values[c] for c in fin}
        return OneStepSolution(_as_mode(value, exact), kernel, h, slack)

    if fam.cls == MARTINGALE and d == 1:
        xn = tree.spot1(nid)
        deltas = {c: tree.spot1(c) - xn for c in tree.children(nid)}
        if exact:
            deltas = {c: simplex.rat(v) for c, v in deltas.items()}
        candidates = []
        for c in fin:
            if deltas[c] == 0:
                candidates.append((child_values[c], (c,), {c: 1}))
        for a in fin:
            if deltas[a] >= 0:
                continue
            for b in fin:
                if deltas[b] <= 0:
                    continue
                da, db = deltas[a], deltas[b]
                pa = db / (db - da)
                pb = -da / (db - da)
                val = pa * child_values[a] + pb * child_values[b]
                candidates.append((val, (a, b), {a: pa, b: pb}))
        if not candidates:
            return _infeasible(d)
        best_val = max(v for v, _, _ in candidates)
        value, support, probs = min(
            (cand for cand in candidates if cand[0] == best_val),
            key=lambda cand: (len(cand[1]), cand[1]),
        )
        chargeable = chargeable_children(tree, nid, fam.unrestricted())
        h1 = _h_interval_midpoint(deltas, child_values, value, chargeable)
        if not exact:
            value = float(value)
            h1 = float(h1)
            probs = {c: float(p) for c, p in probs.items()}
        slack = {
            c: value + h1 * deltas[c] - child_values[c]
            for c in fin
        }
        return OneStepSolution(value, Kernel(nid, probs), (h1,), slack)

    return _one_step_lp(tree, nid, child_values, fam, fin, exact)


def _one_step_lp(tree, nid, child_values, fam, fin, exact):
    d = tree.dim
    xn = tree.spot(nid)
    deltas = {c: tuple(tree.spot(c)[k] - xn[k] for k in range(d)) for c in fin}
    c_obj = [simplex.rat(child_values[c]) for c in fin]
    A_eq = [[1] * len(fin)]
    b_eq = [1]
    for k in range(d):
        A_eq.append([deltas[c][k] for c in fin])
        b_eq.append(0)
    A_ub, b_ub = [], []
    if fam.cls == VAR_BOUNDED:
        if d != 1:
            raise MeasureError("VAR_BOUNDED is implemented for d = 1 only")
        g = [deltas[c][0] ** 2 for c in fin]
        A_ub.append(g)
        b_ub.append(fam.var_hi)
        A_ub.append([-v for v in g])
        b_ub.append(-fam.var_lo)
    res = simplex.solve_lp(c_obj, A_eq, b_eq, A_ub or None, b_ub or None)
    if res.status == "infeasible":
        return _infeasible(d)
    if res.status != "optimal":  # pragma: no cover
        raise MeasureError(f"one-step LP ended with status {res.status}")
    value = res.value
    probs = {c: p for c, p in zip(fin, res.x) if p > 0}
    h = tuple(res.y_eq[1 + k] for k in range(d))
    var_duals = tuple(res.y_ub) if A_ub else None
    if not exact:
        value = float(value)
        probs = {c: float(p) for c, p in probs.items()}
        h = tuple(float(v) for v in h)
        if var_duals:
            var_duals = tuple(float(v) for v in var_duals)
    slack = {}
    for c in fin:
        s = value - child_values[c]
        for k in range(d):
            s += h[k] * deltas[c][k]
        if var_duals:
            s += (var_duals[0] - var_duals[1]) * deltas[c][0] ** 2
            s -= var_duals[0] * fam.var_hi - var_duals[1] * fam.var_lo
        slack[c] = s
    return OneStepSolution(value, Kernel(nid, probs), h, slack, var_duals)


def backward_solve(tree: MarketTree, xi: Mapping, fam: FamilySpec, start: Optional[int] = None) -> tuple:
    """Run the recursion below `start`; returns (values, solutions)."""
    start = tree.root if start is None else start
    order = tree.subtree_nodes(start)
    values, solutions = {}, {}
    for nid in reversed(order):
        if tree.is_leaf(nid):
            values[nid] = xi[nid]
        else:
            sol = one_step_sup(tree, nid, values, fam)
            values[nid] = sol.value
            solutions[nid] = sol
    return values, solutions


def backward_value(tree: MarketTree, xi: Mapping, fam: FamilySpec, start: Optional[int] = None) -> dict:
    """The dual value field: node id -> sup over the family below that node."""
    values, _ = backward_solve(tree, xi, fam, start)
    return values


def optimizer_measure(tree: MarketTree, xi: Mapping, fam: FamilySpec) -> Optional[TreeMeasure]:
    """Measure built from the per-node optimizing kernels (None if root -inf).

    Kernels at -inf nodes are completed arbitrarily only when the node is
    unreachable under the optimizer; reachable nodes always have one.
    """
    values, solutions = backward_solve(tree, xi, fam)
    if values[tree.root] == NEG_INF:
        return None
    kernels = {}
    for nid in tree.internal_nodes:
        sol = solutions[nid]
        if sol.kernel is not None:
            kernels[nid] = sol.kernel
    return TreeMeasure(kernels)


def check_supermartingale(tree: MarketTree, Y: Mapping, P: TreeMeasure, fam: FamilySpec, tol: float = PROP_TOL) -> tuple:
    """Is Y a P-supermartingale?  Returns (ok, worst_node)."""
    ok_mem, why = in_family(tree, P, fam)
    if not ok_mem:
        raise MeasureError(f"P is not in the family: {why}")
    mass = P.node_mass(tree)
    worst_node, worst_gap = None, None
    for nid in tree.internal_nodes:
        if mass[nid] == 0:
            continue
        lhs = 0
        for c in tree.children(nid):
            p = P.prob(nid, c)
            if p == 0:
                continue
            if Y[c] == NEG_INF:
                lhs = NEG_INF
                break
            lhs += p * Y[c]
        gap = -1 if lhs == NEG_INF else lhs - (Y[nid] if Y[nid] != NEG_INF else lhs)
        if worst_gap is None or gap > worst_gap:
            worst_gap, worst_node = gap, nid
        if Y[nid] == NEG_INF and lhs != NEG_INF:
            return False, nid
        if lhs != NEG_INF and lhs > Y[nid] + tol:
            return False, nid
    return True, worst_node


def check_tower(tree: MarketTree, xi: Mapping, fam: FamilySpec, sigma, tau, tol: float = OPT_TOL) -> bool:
    """Re-optimizing from sigma with terminal data Y|tau reproduces Y|sigma."""
    from .market_tree import stopping_time_below, validate_stopping_time

    for S in (sigma, tau):
        ok, why = validate_stopping_time(tree, S)
        if not ok:
            raise MeasureError(f"invalid stopping time: {why}")
    if not stopping_time_below(tree, sigma, tau):
        raise MeasureError("sigma must come at or before tau on every path")
    Y = backward_value(tree, xi, fam)
    tau = set(tau)
    memo = {}

    def val(nid):
        if nid in tau:
            return Y[nid]
        if nid not in memo:
            child_vals = {c: val(c) for c in tree.children(nid)}
            memo[nid] = one_step_sup(tree, nid, child_vals, fam).value
        return memo[nid]

    for m in sigma:
        lhs, rhs = val(m), Y[m]
        if lhs == NEG_INF or rhs == NEG_INF:
            if lhs != rhs:
                return False
        elif abs(lhs - rhs) > tol:
            return False
    return True


def eps_optimal_selection(tree: MarketTree, Y: Mapping, fam: FamilySpec, eps=0) -> dict:
    """Per-node kernels achieving at least Y(n) - eps (exact optimum here).

    Nodes with Y = -inf are absent: no kernel can be selected there.
    """
    if eps < 0:
        raise MeasureError("eps must be >= 0")
    out = {}
    for nid in tree.internal_nodes:
        if Y[nid] == NEG_INF:
            continue
        sol = one_step_sup(tree, nid, {c: Y[c] for c in tree.children(nid)}, fam)
        if sol.kernel is not None:
            out[nid] = sol.kernel
    return out
