import pytest
from hypothesis import given, strategies as st

from robusthedge.market_tree import (
    TreeError,
    build_tree,
    concat_path,
    shift_claim,
    split_path,
    stopping_time_below,
    tree_spec,
    validate_stopping_time,
)
from robusthedge.random_instances import random_stopping_time, random_tree

from conftest import seeded


def test_binomial_depth1_shape(binomial1):
    assert len(binomial1.nodes) == 3
    assert sorted(binomial1.spot1(leaf) for leaf in binomial1.leaves) == [-1, 1]
    assert binomial1.spot(binomial1.root) == (0,)


def test_trinomial_depth2_shape(trinomial2):
    assert len(trinomial2.nodes) == 13  # 1 + 3 + 9
    for t in range(3):
        assert len(trinomial2.nodes_at(t)) == 3**t
    assert all(trinomial2.node(leaf).t == 2 for leaf in trinomial2.leaves)


def test_explicit_positive_children_tree_is_valid():
    # no martingale kernel exists here; the tree itself is still fine
    tree = build_tree(
        {"dim": 1, "depth": 1, "generator": {"kind": "explicit", "offsets": [1, 2]}}
    )
    assert sorted(tree.spot1(leaf) for leaf in tree.leaves) == [1, 2]


def test_build_tree_rejects_bad_specs():
    with pytest.raises(TreeError):
        build_tree({"dim": 1, "depth": 0, "generator": {"kind": "binomial"}})
    with pytest.raises(TreeError):
        build_tree({"dim": 1, "depth": 1, "generator": {"kind": "weird"}})
    with pytest.raises(TreeError):
        build_tree(
            {"dim": 1, "depth": 1, "generator": {"kind": "explicit", "offsets": []}}
        )
    with pytest.raises(TreeError):
        build_tree(
            {
                "dim": 1,
                "depth": 1,
                "generator": {"kind": "explicit", "offsets": [float("nan"), 1.0]},
            }
        )


def test_spec_round_trip(trinomial2):
    rebuilt = build_tree(tree_spec(trinomial2))
    assert rebuilt.nodes == trinomial2.nodes


def test_concat_identity_cases(trinomial2):
    p = trinomial2.paths()[0]
    assert concat_path(trinomial2, [trinomial2.root], p) == p
    assert concat_path(trinomial2, p, [p[-1]]) == p


def test_concat_mid_tree_splice(trinomial2):
    path = trinomial2.paths()[4]
    mid = path[1]
    prefix, suffix = split_path(trinomial2, path, mid)
    assert concat_path(trinomial2, prefix, suffix) == path


def test_concat_rejects_mismatch(trinomial2):
    p = trinomial2.paths()
    with pytest.raises(TreeError):
        concat_path(trinomial2, p[0][:2], p[-1][1:])
    with pytest.raises(TreeError):
        concat_path(trinomial2, [], p[0])


def test_shift_claim_root_and_leaf(trinomial2):
    xi = {leaf: abs(trinomial2.spot1(leaf)) for leaf in trinomial2.leaves}
    assert shift_claim(trinomial2, xi, trinomial2.root) == xi
    leaf = trinomial2.leaves[0]
    assert shift_claim(trinomial2, xi, leaf) == {leaf: xi[leaf]}


def test_shift_claim_mid_node(trinomial2):
    xi = {leaf: abs(trinomial2.spot1(leaf)) for leaf in trinomial2.leaves}
    mid = trinomial2.children(trinomial2.root)[0]
    piece = shift_claim(trinomial2, xi, mid)
    assert set(piece) == set(trinomial2.leaves_below(mid))
    assert all(piece[leaf] == abs(trinomial2.spot1(leaf)) for leaf in piece)


def test_stopping_time_validation(trinomial2):
    ok, _ = validate_stopping_time(trinomial2, {trinomial2.root})
    assert ok
    ok, _ = validate_stopping_time(trinomial2, set(trinomial2.leaves))
    assert ok
    ok, why = validate_stopping_time(
        trinomial2, {trinomial2.root, trinomial2.leaves[0]}
    )
    assert not ok and "ancestor" in why
    ok, why = validate_stopping_time(trinomial2, {trinomial2.leaves[0]})
    assert not ok  # misses most paths


def test_stopping_time_order(trinomial2):
    mids = set(trinomial2.nodes_at(1))
    assert stopping_time_below(trinomial2, {trinomial2.root}, mids)
    assert stopping_time_below(trinomial2, mids, set(trinomial2.leaves))
    assert not stopping_time_below(trinomial2, set(trinomial2.leaves), mids)


@given(st.integers(0, 500))
def test_random_stopping_times_are_valid(seed):
    rng = seeded(seed)
    tree = random_tree(rng, max_depth=3, max_branch=3)
    tau = random_stopping_time(tree, rng)
    ok, why = validate_stopping_time(tree, tau)
    assert ok, why


@given(st.integers(0, 200))
def test_split_concat_round_trip(seed):
    rng = seeded(seed)
    tree = random_tree(rng, max_depth=3, max_branch=3)
    path = tree.paths()[rng.randrange(len(tree.paths()))]
    nid = path[rng.randrange(len(path))]
    prefix, suffix = split_path(tree, path, nid)
    assert concat_path(tree, prefix, suffix) == path
