import itertools

import pytest

from esep.graphs import Dmg, n_pairs


def all_dgs(d):
    """Every directed graph on d nodes, ascending code order."""
    for code in range(1 << (d * d)):
        yield Dmg.from_masks(d, code)


def all_dmgs(d):
    """Every directed mixed graph on d nodes (no bidirected self-loops)."""
    for code in range(1 << (d * d + n_pairs(d))):
        yield Dmg.from_masks(d, code & ((1 << (d * d)) - 1), code >> (d * d))


def subsets(nodes):
    nodes = sorted(nodes)
    for r in range(len(nodes) + 1):
        for combo in itertools.combinations(nodes, r):
            yield frozenset(combo)


@pytest.fixture(scope="session")
def branching_cycle():
    """Four nodes: 0 feeds 1 and 2; 1 and 3 form a feedback pair."""
    return Dmg(4, [(0, 1), (0, 2), (1, 3), (3, 1)])


@pytest.fixture(scope="session", autouse=True)
def _warm_kernel():
    # first kernel call JIT-compiles; keep that cost out of individual tests
    from esep import _kernel

    _kernel.fingerprint_bits(Dmg(2, [(0, 1)]), "e")
