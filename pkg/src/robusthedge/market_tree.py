"""Finite scenario trees: paths, stopping times, claim shifting.

A tree models the discrete market: each node carries a spot vector, the
root spot is zero, and every leaf sits at the terminal time N.  Trees are
non-recombining, so a node id identifies the whole path prefix and any
path-dependent payoff is a function of the leaf id alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

NEG_INF = float("-inf")


class TreeError(ValueError):
    pass


@dataclass(frozen=True)
class Node:
    id: int
    t: int
    x: tuple
    parent: Optional[int]
    children: tuple


@dataclass(frozen=True)
class MarketTree:
    """Immutable non-recombining tree with breadth-first integer node ids."""

    dim: int
    nodes: tuple
    root: int = 0
    spec: Optional[dict] = field(default=None, compare=False)

    # -- basic accessors -------------------------------------------------

    def node(self, nid: int) -> Node:
        return self.nodes[nid]

    def spot(self, nid: int) -> tuple:
        return self.nodes[nid].x

    def spot1(self, nid: int):
        """Scalar spot, d = 1 convenience."""
        return self.nodes[nid].x[0]

    def children(self, nid: int) -> tuple:
        return self.nodes[nid].children

    def parent(self, nid: int) -> Optional[int]:
        return self.nodes[nid].parent

    def is_leaf(self, nid: int) -> bool:
        return not self.nodes[nid].children

    @property
    def depth(self) -> int:
        return max(n.t for n in self.nodes)

    @property
    def leaves(self) -> tuple:
        return tuple(n.id for n in self.nodes if not n.children)

    @property
    def internal_nodes(self) -> tuple:
        return tuple(n.id for n in self.nodes if n.children)

    def nodes_at(self, t: int) -> tuple:
        return tuple(n.id for n in self.nodes if n.t == t)

    # -- path structure --------------------------------------------------

    def path_to(self, nid: int) -> list:
        """Node ids from the root down to `nid` inclusive."""
        out = []
        cur: Optional[int] = nid
        while cur is not None:
            out.append(cur)
            cur = self.nodes[cur].parent
        out.reverse()
        return out

    def paths(self) -> list:
        return [self.path_to(leaf) for leaf in self.leaves]

    def is_ancestor(self, a: int, b: int) -> bool:
        """True iff `a` is a weak ancestor of `b` (a == b counts)."""
        cur: Optional[int] = b
        while cur is not None:
            if cur == a:
                return True
            cur = self.nodes[cur].parent
        return False

    def subtree_nodes(self, nid: int) -> list:
        """All ids weakly below `nid`, breadth-first."""
        out, queue = [], [nid]
        while queue:
            cur = queue.pop(0)
            out.append(cur)
            queue.extend(self.nodes[cur].children)
        return out

    def leaves_below(self, nid: int) -> list:
        return [m for m in self.subtree_nodes(nid) if self.is_leaf(m)]

    def step(self, nid: int, child: int) -> tuple:
        """Spot increment along the edge nid -> child."""
        xn, xc = self.spot(nid), self.spot(child)
        return tuple(xc[k] - xn[k] for k in range(self.dim))


def _offsets_from_generator(gen: Mapping) -> list:
    kind = gen.get("kind")
    if kind == "binomial":
        u = gen.get("up", 1)
        return [(-u,), (u,)]
    if kind == "trinomial":
        u = gen.get("step", 1)
        return [(-u,), (0 * u,), (u,)]
    if kind == "explicit":
        offs = gen.get("offsets")
        if not offs:
            raise TreeError("explicit generator needs a nonempty 'offsets' list")
        return [tuple(o) if isinstance(o, (list, tuple)) else (o,) for o in offs]
    raise TreeError(f"unknown generator kind {kind!r}")


def build_tree(spec: Mapping) -> MarketTree:
    """Build a tree from a JSON-style spec.

    Schema: {"dim": d, "depth": N, "generator": {"kind": "binomial"|"trinomial"
    |"explicit", ...}}.  The same child offsets are applied at every non-leaf
    node; node ids are assigned breadth-first so outputs are reproducible.
    """
    dim = int(spec.get("dim", 1))
    depth = int(spec["depth"])
    if depth < 1:
        raise TreeError("depth must be >= 1")
    offsets = _offsets_from_generator(spec["generator"])
    for off in offsets:
        if len(off) != dim:
            raise TreeError(f"offset {off} has wrong dimension (expected {dim})")
        for v in off:
            if isinstance(v, float) and not (v == v and abs(v) != float("inf")):
                raise TreeError(f"non-finite spot offset {v}")

    nodes = [dict(id=0, t=0, x=tuple(0 for _ in range(dim)), parent=None, children=[])]
    frontier = [0]
    for t in range(1, depth + 1):
        nxt = []
        for pid in frontier:
            px = nodes[pid]["x"]
            for off in offsets:
                nid = len(nodes)
                x = tuple(px[k] + off[k] for k in range(dim))
                nodes.append(dict(id=nid, t=t, x=x, parent=pid, children=[]))
                nodes[pid]["children"].append(nid)
                nxt.append(nid)
        frontier = nxt
    frozen = tuple(
        Node(n["id"], n["t"], n["x"], n["parent"], tuple(n["children"])) for n in nodes
    )
    return MarketTree(dim=dim, nodes=frozen, spec=dict(spec))


def tree_spec(tree: MarketTree) -> dict:
    """Round-trip companion of build_tree."""
    if tree.spec is None:
        raise TreeError("tree was not built from a spec document")
    return dict(tree.spec)


def concat_path(tree: MarketTree, prefix: Sequence[int], suffix: Sequence[int]) -> list:
    """Concatenate a root-to-n prefix with a path starting at n."""
    if not prefix or not suffix:
        raise TreeError("empty path segment")
    if prefix[-1] != suffix[0]:
        raise TreeError(
            f"suffix starts at node {suffix[0]}, expected {prefix[-1]}"
        )
    return list(prefix) + list(suffix[1:])


def split_path(tree: MarketTree, path: Sequence[int], nid: int) -> tuple:
    """Inverse of concat_path: cut a path at node `nid` (which must lie on it)."""
    if nid not in path:
        raise TreeError(f"node {nid} not on path")
    i = list(path).index(nid)
    return list(path[: i + 1]), list(path[i:])


def shift_claim(tree: MarketTree, xi: Mapping, nid: int) -> dict:
    """Restrict a claim to the leaves below `nid` (values unchanged)."""
    return {leaf: xi[leaf] for leaf in tree.leaves_below(nid)}


def validate_stopping_time(tree: MarketTree, members: Iterable[int]) -> tuple:
    """Check the antichain / exactly-one-hit-per-path property.

    Returns (ok, report); report is None when ok, otherwise a short string
    naming the first violation.
    """
    S = set(members)
    for nid in S:
        if not (0 <= nid < len(tree.nodes)):
            return False, f"unknown node id {nid}"
    for a in sorted(S):
        for b in sorted(S):
            if a != b and tree.is_ancestor(a, b):
                return False, f"{a} is an ancestor of {b}"
    for path in tree.paths():
        hits = [n for n in path if n in S]
        if len(hits) != 1:
            return False, f"path to leaf {path[-1]} meets the set {len(hits)} times"
    return True, None


def stopping_time_below(tree: MarketTree, sigma: Iterable[int], tau: Iterable[int]) -> bool:
    """True iff every path meets sigma at or before tau."""
    sig, ta = set(sigma), set(tau)
    for path in tree.paths():
        i_s = next(i for i, n in enumerate(path) if n in sig)
        i_t = next(i for i, n in enumerate(path) if n in ta)
        if i_s > i_t:
            return False
    return True
