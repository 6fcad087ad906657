import random

import pytest

from robusthedge.market_tree import build_tree
from robusthedge.measure_families import Kernel, TreeMeasure


@pytest.fixture
def binomial1():
    return build_tree({"dim": 1, "depth": 1, "generator": {"kind": "binomial"}})


@pytest.fixture
def binomial2():
    return build_tree({"dim": 1, "depth": 2, "generator": {"kind": "binomial"}})


@pytest.fixture
def trinomial1():
    return build_tree({"dim": 1, "depth": 1, "generator": {"kind": "trinomial"}})


@pytest.fixture
def trinomial2():
    return build_tree({"dim": 1, "depth": 2, "generator": {"kind": "trinomial"}})


def fair_measure(tree):
    """Uniform kernel at every internal node."""
    kernels = {}
    for nid in tree.internal_nodes:
        ch = tree.children(nid)
        kernels[nid] = Kernel(nid, {c: 1.0 / len(ch) for c in ch})
    return TreeMeasure(kernels)


def seeded(i=0):
    return random.Random(20260823 + i)
