import pytest
from hypothesis import given, settings, strategies as st

from robusthedge.dual_dp import backward_value, one_step_sup
from robusthedge.market_tree import NEG_INF, build_tree
from robusthedge.measure_families import (
    ALL,
    MARTINGALE,
    VAR_BOUNDED,
    FamilySpec,
    in_family,
)
from robusthedge.oracle_lp import (
    OracleScaleError,
    enumerate_vertex_kernels,
    ess_sup_check,
    global_sup_lp,
    lex_smallest_kernel,
    upper_concave_envelope,
)
from robusthedge.random_instances import (
    random_claim,
    random_family,
    random_measure,
    random_stopping_time,
    random_tree,
)
from robusthedge.simplex import RAT

from conftest import seeded

MART = FamilySpec(cls=MARTINGALE)


def one_step_tree(offsets):
    return build_tree(
        {"dim": 1, "depth": 1, "generator": {"kind": "explicit", "offsets": offsets}}
    )


# -- vertex enumeration --------------------------------------------------


def test_unique_martingale_vertex():
    tree = one_step_tree([-1, 1])
    verts = enumerate_vertex_kernels(tree, 0, MART)
    assert len(verts) == 1
    assert sorted(verts[0].probs.values()) == [RAT(1, 2), RAT(1, 2)]


def test_trinomial_martingale_vertices():
    tree = one_step_tree([-1, 0, 1])
    verts = enumerate_vertex_kernels(tree, 0, MART)
    supports = sorted(
        tuple(sorted(tree.spot1(c) for c in v.support())) for v in verts
    )
    assert supports == [(-1, 1), (0,)]


def test_all_family_vertices_are_diracs():
    tree = one_step_tree([-1, 0, 1])
    verts = enumerate_vertex_kernels(tree, 0, FamilySpec(cls=ALL))
    assert sorted(len(v.support()) for v in verts) == [1, 1, 1]


def test_infeasible_node_has_no_vertices():
    tree = one_step_tree([1, 2])
    assert enumerate_vertex_kernels(tree, 0, MART) == []


def test_lex_smallest_kernel_is_deterministic():
    tree = one_step_tree([-1, 0, 1])
    k1 = lex_smallest_kernel(tree, 0, MART)
    k2 = lex_smallest_kernel(tree, 0, MART)
    assert k1.probs == k2.probs


# -- global LP oracle ----------------------------------------------------


def test_global_lp_binomial_abs(binomial1):
    xi = {leaf: abs(binomial1.spot1(leaf)) for leaf in binomial1.leaves}
    val, P = global_sup_lp(binomial1, xi, MART)
    assert val == 1
    assert P.expectation(binomial1, xi) == 1


def test_global_lp_trinomial_abs(trinomial1):
    xi = {leaf: abs(trinomial1.spot1(leaf)) for leaf in trinomial1.leaves}
    val, P = global_sup_lp(trinomial1, xi, MART)
    assert val == 1
    mid = next(l for l in trinomial1.leaves if trinomial1.spot1(l) == 0)
    assert P.prob(trinomial1.root, mid) == 0


def test_global_lp_forces_zero_on_restricted_leaf(trinomial1):
    mid = next(l for l in trinomial1.leaves if trinomial1.spot1(l) == 0)
    xi = {leaf: (NEG_INF if leaf == mid else 1) for leaf in trinomial1.leaves}
    fam = MART.with_claim(xi)
    val, P = global_sup_lp(trinomial1, xi, fam)
    assert val == 1
    assert P.prob(trinomial1.root, mid) == 0


def test_global_lp_empty_family_is_neg_inf():
    tree = one_step_tree([1, 2])
    xi = {leaf: 1.0 for leaf in tree.leaves}
    val, P = global_sup_lp(tree, xi, MART)
    assert val == NEG_INF and P is None


def test_global_lp_optimizer_stays_in_family():
    for i in range(15):
        rng = seeded(300 + i)
        tree = random_tree(rng, max_depth=3, max_branch=3)
        xi = random_claim(tree, rng, exact=True)
        fam = random_family(tree, rng, exact=True)
        val, P = global_sup_lp(tree, xi, fam)
        if val == NEG_INF:
            continue
        ok, why = in_family(tree, P, fam.with_claim(xi))
        assert ok, why
        assert P.expectation(tree, xi) == val


def test_oracle_scale_guard():
    tree = build_tree(
        {"dim": 1, "depth": 1, "generator": {"kind": "explicit", "offsets": list(range(-6, 8))}}
    )
    with pytest.raises(OracleScaleError):
        enumerate_vertex_kernels(tree, 0, MART)


# -- concave envelope ----------------------------------------------------


def test_envelope_interpolates_hull():
    pts = [(-1.0, 1.0), (0.0, 0.0), (1.0, 1.0)]
    assert upper_concave_envelope(pts, 0.0) == 1.0
    assert upper_concave_envelope(pts, 0.5) == 1.0
    assert upper_concave_envelope(pts, -1.0) == 1.0
    assert upper_concave_envelope(pts, 2.0) == NEG_INF  # outside the hull


def test_envelope_ignores_neg_inf_points():
    pts = [(-1.0, 1.0), (0.0, NEG_INF), (1.0, 1.0)]
    assert upper_concave_envelope(pts, 0.0) == 1.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_envelope_matches_one_step_solver(seed):
    rng = seeded(seed)
    k = rng.randint(2, 6)
    offs = sorted({round(rng.uniform(-3, 3), 6) for _ in range(k)})
    if len(offs) < 2:
        offs = [-1.0, 1.0]
    tree = one_step_tree(offs)
    V = {leaf: rng.uniform(-2, 2) for leaf in tree.leaves}
    sol = one_step_sup(tree, 0, V, MART)
    env = upper_concave_envelope([(tree.spot1(l), V[l]) for l in tree.leaves], 0.0)
    if sol.value == NEG_INF or env == NEG_INF:
        assert sol.value == env
    else:
        assert abs(sol.value - env) <= 1e-10


# -- subtree representation ----------------------------------------------


def test_ess_sup_trivial_stopping_times(trinomial2):
    rng = seeded(21)
    xi = random_claim(trinomial2, rng)
    P = random_measure(trinomial2, rng, MART)
    assert ess_sup_check(trinomial2, xi, MART, {trinomial2.root}, P)
    assert ess_sup_check(trinomial2, xi, MART, set(trinomial2.leaves), P)


def test_ess_sup_random_pairs():
    for i in range(15):
        rng = seeded(400 + i)
        tree = random_tree(rng, max_depth=3, max_branch=3)
        xi = random_claim(tree, rng)
        fam = random_family(tree, rng)
        tau = random_stopping_time(tree, rng)
        P = random_measure(tree, rng, fam)
        assert ess_sup_check(tree, xi, fam, tau, P)


# -- dp vs lp agreement --------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.booleans())
def test_dp_equals_global_lp(seed, exact):
    rng = seeded(seed)
    tree = random_tree(rng, max_depth=3, max_branch=3)
    xi = random_claim(tree, rng, exact=exact)
    fam = random_family(tree, rng, exact=exact)
    dp = backward_value(tree, xi, fam)[tree.root]
    lp, _ = global_sup_lp(tree, xi, fam, exact=exact)
    if dp == NEG_INF or lp == NEG_INF:
        assert dp == lp
    elif exact:
        assert dp == lp
    else:
        assert dp == pytest.approx(lp, abs=1e-9)
