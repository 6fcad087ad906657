"""Named payoffs on tree leaves.

A claim is a mapping leaf id -> value in [-inf, +inf); +inf never occurs.
Named payoffs read the first spot coordinate; explicit tables may contain
"-inf" entries to exercise the claim-restricted family.
"""

from __future__ import annotations

from typing import Mapping

from .market_tree import NEG_INF, MarketTree
from .simplex import rat

NAMED_KINDS = ("call", "abs", "lookback", "asian", "digital", "linear")


class ClaimError(ValueError):
    pass


def _pos(v):
    return v if v > 0 else 0 * v


def make_claim(tree: MarketTree, spec: Mapping, exact: bool = False) -> dict:
    """Build a claim from a JSON-style spec: {"kind": ..., "strike": k} or
    {"kind": "table", "values": {leaf_id: value | "-inf"}}."""
    kind = spec.get("kind")
    if kind == "table":
        values = spec["values"]
        out = {}
        for leaf in tree.leaves:
            key = str(leaf)
            if key not in values and leaf not in values:
                raise ClaimError(f"table claim misses leaf {leaf}")
            v = values.get(key, values.get(leaf))
            if v == "-inf":
                out[leaf] = NEG_INF
            else:
                out[leaf] = rat(v) if exact else float(v)
        return out
    if kind not in NAMED_KINDS:
        raise ClaimError(f"unknown claim kind {kind!r}")
    strike = spec.get("strike", 0)
    k = rat(strike) if exact else float(strike)
    out = {}
    for leaf in tree.leaves:
        path = tree.path_to(leaf)
        spots = [tree.spot(n)[0] for n in path]
        if exact:
            spots = [rat(s) for s in spots]
        else:
            spots = [float(s) for s in spots]
        terminal = spots[-1]
        if kind == "call":
            out[leaf] = _pos(terminal - k)
        elif kind == "abs":
            out[leaf] = abs(terminal)
        elif kind == "lookback":
            out[leaf] = _pos(max(spots) - k)
        elif kind == "asian":
            avg = sum(spots) / len(spots)
            out[leaf] = _pos(avg - k)
        elif kind == "digital":
            one = rat(1) if exact else 1.0
            out[leaf] = one if terminal >= k else 0 * one
        elif kind == "linear":
            out[leaf] = terminal
    return out


def claim_to_doc(xi: Mapping) -> dict:
    return {
        "kind": "table",
        "values": {
            str(leaf): ("-inf" if v == NEG_INF else float(v))
            for leaf, v in sorted(xi.items())
        },
    }
