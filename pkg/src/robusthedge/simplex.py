"""Small dense exact-rational simplex solver.

Solves  max/min c.x  s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0 (selected
variables may be free).  All arithmetic is exact over rationals (gmpy2.mpq
when available, fractions.Fraction otherwise), so oracle comparisons are
bit-reproducible.  Dantzig pivoting with a Bland's-rule fallback guarantees
termination on degenerate instances.

Scale target: a few hundred rows/columns.  Not a general-purpose LP code.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

try:
    from gmpy2 import mpq as _RAT  # noqa: N811
except ImportError:  # pragma: no cover
    from fractions import Fraction as _RAT

RAT = _RAT
_ZERO = RAT(0)
_ONE = RAT(1)


def rat(x):
    """Exact rational from int/float/Fraction/mpq (floats convert exactly)."""
    if isinstance(x, type(_ZERO)):
        return x
    return RAT(x)


class SimplexError(RuntimeError):
    pass


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[list] = None
    value: Optional[object] = None
    y_eq: Optional[list] = None
    y_ub: Optional[list] = None


def _pivot(T, basis, row, col):
    piv = T[row][col]
    inv = _ONE / piv
    T[row] = [v * inv for v in T[row]]
    prow = T[row]
    for i in range(len(T)):
        if i == row:
            continue
        f = T[i][col]
        if f:
            T[i] = [a - f * b for a, b in zip(T[i], prow)]
    basis[row] = col


def _run_simplex(T, basis, c, blocked) -> str:
    m = len(T)
    ncols = len(T[0]) - 1
    iters = 0
    bland_after = 200 + 20 * (m + ncols)
    while True:
        bset = set(basis)
        cb = [c[b] for b in basis]
        enter, best = -1, _ZERO
        bland = iters > bland_after
        for j in range(ncols):
            if j in blocked or j in bset:
                continue
            r = c[j]
            for i in range(m):
                if cb[i]:
                    r -= cb[i] * T[i][j]
            if r > 0:
                if bland:
                    enter = j
                    break
                if r > best:
                    best, enter = r, j
        if enter < 0:
            return "optimal"
        leave, best_ratio = -1, None
        for i in range(m):
            a = T[i][enter]
            if a > 0:
                ratio = T[i][-1] / a
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[leave])
                ):
                    best_ratio, leave = ratio, i
        if leave < 0:
            return "unbounded"
        _pivot(T, basis, leave, enter)
        iters += 1


def solve_lp(
    c: Sequence,
    A_eq: Optional[Sequence] = None,
    b_eq: Optional[Sequence] = None,
    A_ub: Optional[Sequence] = None,
    b_ub: Optional[Sequence] = None,
    maximize: bool = True,
    free_vars: Sequence[int] = (),
) -> LPResult:
    """Solve the LP and return primal solution plus row duals.

    Duals are reported for the stated (maximization) problem: y_eq free,
    y_ub >= 0, with dual feasibility c_j - y.A_j <= 0 for x_j >= 0.  For
    minimize the returned value and duals refer to the original problem.
    """
    nv = len(c)
    c = [rat(v) for v in c]
    if not maximize:
        c = [-v for v in c]
    A_eq = [[rat(v) for v in row] for row in (A_eq or [])]
    b_eq = [rat(v) for v in (b_eq or [])]
    A_ub = [[rat(v) for v in row] for row in (A_ub or [])]
    b_ub = [rat(v) for v in (b_ub or [])]
    free = sorted(set(free_vars))

    # Column layout: nv primary, then one negative copy per free var, then
    # one slack per ub row, then one artificial per row.
    neg_of = {j: nv + i for i, j in enumerate(free)}
    n_slack = len(A_ub)
    slack0 = nv + len(free)
    art0 = slack0 + n_slack
    m = len(A_eq) + len(A_ub)
    ncols = art0 + m

    rows, rhs, flips = [], [], []
    for arow, b in list(zip(A_eq, b_eq)) + list(zip(A_ub, b_ub)):
        rows.append(list(arow))
        rhs.append(b)
        flips.append(_ONE)
    for i, (arow, b) in enumerate(zip(rows, rhs)):
        full = [_ZERO] * ncols
        for j, v in enumerate(arow):
            full[j] = v
            if j in neg_of:
                full[neg_of[j]] = -v
        if i >= len(A_eq):
            full[slack0 + (i - len(A_eq))] = _ONE
        if b < 0:
            full = [-v for v in full]
            b = -b
            flips[i] = -_ONE
        full[art0 + i] = _ONE
        rows[i] = full + [b]
        rhs[i] = b
    T = rows
    basis = [art0 + i for i in range(m)]

    # Phase 1: drive artificials to zero.
    c1 = [_ZERO] * ncols
    for i in range(m):
        c1[art0 + i] = -_ONE
    status = _run_simplex(T, basis, c1, blocked=set())
    if status != "optimal":  # pragma: no cover - phase 1 is always bounded
        raise SimplexError("phase 1 did not terminate at an optimum")
    infeas = sum(T[i][-1] for i in range(m) if basis[i] >= art0)
    if infeas > 0:
        return LPResult(status="infeasible")

    # Phase 2 on the real objective; artificials may not re-enter.
    c2 = [_ZERO] * ncols
    for j in range(nv):
        c2[j] = c[j]
    for j in free:
        c2[neg_of[j]] = -c[j]
    blocked = set(range(art0, ncols))
    status = _run_simplex(T, basis, c2, blocked=blocked)
    if status == "unbounded":
        return LPResult(status="unbounded")

    x = [_ZERO] * nv
    for i, b in enumerate(basis):
        val = T[i][-1]
        if b < nv:
            x[b] += val
        elif b < slack0:
            x[free[b - nv]] -= val
    value = sum(ci * xi for ci, xi in zip(c, x))

    # Row duals from the artificial columns: y = c_B . B^{-1}.
    cb = [c2[b] for b in basis]
    y = []
    for i in range(m):
        col = art0 + i
        yi = sum(cb[k] * T[k][col] for k in range(m) if cb[k])
        y.append(yi * flips[i])
    y_eq = y[: len(A_eq)]
    y_ub = y[len(A_eq):]
    if not maximize:
        value = -value
        y_eq = [-v for v in y_eq]
        y_ub = [-v for v in y_ub]
    return LPResult(status="optimal", x=x, value=value, y_eq=y_eq, y_ub=y_ub)
