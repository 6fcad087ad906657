#!/usr/bin/env python3
"""Small worked instances: dual recursion vs LP oracle vs primal hedge.

Run from the repo root after installing the package:

    python3 scripts/run_duality_demo.py
"""

from robusthedge import (
    FamilySpec,
    MARTINGALE,
    VAR_BOUNDED,
    backward_value,
    build_tree,
    extract_strategy,
    global_sup_lp,
    make_claim,
    primal_lp,
    verify_superhedge,
)
from robusthedge.simplex import RAT


def show(label, tree, xi, fam, exact=True):
    Y = backward_value(tree, xi, fam)
    dp = Y[tree.root]
    lp, _ = global_sup_lp(tree, xi, fam, exact=exact)
    pv, _ = primal_lp(tree, xi, fam, exact=exact)
    print(f"{label:45s} dual={dp} oracle={lp} primal={pv}")
    if fam.cls == MARTINGALE and dp != float("-inf"):
        H = extract_strategy(tree, Y, fam)
        rep = verify_superhedge(tree, dp, H, xi, fam)
        print(f"{'':45s} superhedge min slack = {rep.min_slack}, "
              f"{len(rep.polar)} polar paths")


def main():
    tree = build_tree({"dim": 1, "depth": 2, "generator": {"kind": "trinomial"}})
    xi = make_claim(tree, {"kind": "abs"}, exact=True)
    show("trinomial N=2, |terminal|, martingale", tree, xi, FamilySpec(cls=MARTINGALE))
    fam_var = FamilySpec(cls=VAR_BOUNDED, var_lo=RAT(1, 5), var_hi=RAT(3, 5))
    show("trinomial N=2, |terminal|, var in [1/5, 3/5]", tree, xi, fam_var)

    bino = build_tree(
        {"dim": 1, "depth": 1, "generator": {"kind": "explicit", "offsets": [-1, 2]}}
    )
    xi2 = {leaf: bino.spot1(leaf) ** 2 for leaf in bino.leaves}
    show("binomial {-1,+2}, squared terminal", bino, xi2, FamilySpec(cls=MARTINGALE))

    # one -inf leaf makes its path polar under the claim-restricted family
    tri1 = build_tree({"dim": 1, "depth": 1, "generator": {"kind": "trinomial"}})
    xi3 = make_claim(
        tri1,
        {"kind": "table", "values": {"1": 1, "2": "-inf", "3": 1}},
        exact=True,
    )
    fam3 = FamilySpec(cls=MARTINGALE).with_claim(xi3)
    show("trinomial N=1, one -inf leaf, restricted", tri1, xi3, fam3)


if __name__ == "__main__":
    main()
