"""Constraint-based structure discovery over lifted edge triples.

The search starts from a working set of lifted directed edges (by default
those of the complete graph with self-loops, since the algorithm only ever
deletes) and sweeps conditioning sets of growing size.  A conditioning set
K is eligible for the ordered pair (i, j) only while every k in K still
has its past-to-future edge k0 -> j1 in the working set.  When the
conditional-independence oracle accepts (i, j, K), all three lifted images
of the base edge (i, j) are removed together.  The surviving base edge set
is read off the past-to-future images.

With an oracle that answers exactly from a ground-truth graph, the output
is the greatest element of the truth's equivalence class; for acyclic
truths (self-loops allowed) that class is a singleton, so the truth itself
is recovered.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

from .graphs import Dmg, complete_dg
from .separation import e_separated

# an oracle answers "is j's future independent of i's past given K's paths"
CiOracle = Callable[[int, int, frozenset[int]], bool]


class OracleError(RuntimeError):
    """Raised when an oracle call fails; carries the offending query."""

    def __init__(self, i: int, j: int, k: frozenset[int]):
        self.query = (i, j, k)
        super().__init__(f"oracle failed on query (i={i}, j={j}, K={sorted(k)})")


@dataclass
class LiftedEdgeState:
    """Working set of lifted directed edges over past/future node copies.

    The three lifted images of a base edge are inserted and removed
    together; ``collapse`` checks that invariant before reading the result.
    """

    d: int
    edges: set[tuple[int, int]] = field(default_factory=set)

    @classmethod
    def from_graph(cls, g: Dmg) -> "LiftedEdgeState":
        state = cls(d=g.d)
        for i, j in g.directed:
            state.edges |= {(i, j), (i, g.d + j), (g.d + i, g.d + j)}
        return state

    def has_past_future(self, k: int, j: int) -> bool:
        return (k, self.d + j) in self.edges

    def remove_triple(self, i: int, j: int) -> None:
        self.edges -= {(i, j), (i, self.d + j), (self.d + i, self.d + j)}

    def collapse(self) -> Dmg:
        d = self.d
        base = []
        for i in range(d):
            for j in range(d):
                images = [(i, j) in self.edges, (i, d + j) in self.edges,
                          (d + i, d + j) in self.edges]
                if any(images) != all(images):
                    raise ValueError(f"lifted images of ({i}, {j}) are inconsistent")
                if images[1]:
                    base.append((i, j))
        return Dmg(d, directed=base)


@dataclass(frozen=True)
class QueryRecord:
    i: int
    j: int
    k: tuple[int, ...]
    size: int
    accepted: bool


def ct_pc(
    d: int,
    oracle: CiOracle,
    start: Optional[Dmg] = None,
    log: Optional[list[QueryRecord]] = None,
) -> Dmg:
    """Run the discovery sweep and return the surviving base graph.

    ``start`` defaults to the complete graph with self-loops.  Ordered
    pairs include i == j, so self-loops are tested like any other edge.
    Conditioning sets of each size are swept in ascending bitmask order;
    the first accepted set wins for a pair at that size.  The working set
    only shrinks, so at most d*d*2**(d-1) oracle calls are made.
    """
    if start is None:
        start = complete_dg(d)
    elif start.d != d or not start.is_dg:
        raise ValueError("start must be a directed graph on d nodes")
    state = LiftedEdgeState.from_graph(start)
    nodes = list(range(d))
    # conditioning sets of one size, as ascending bitmasks over V \ {i}
    masks_by_size: dict[int, list[int]] = {c: [] for c in range(d)}
    for mask in range(1 << d):
        c = bin(mask).count("1")
        if c < d:
            masks_by_size[c].append(mask)
    for size in range(d):
        for i in nodes:
            for j in nodes:
                for mask in masks_by_size[size]:
                    if mask >> i & 1:
                        continue
                    combo = tuple(k for k in nodes if mask >> k & 1)
                    if not all(state.has_past_future(k, j) for k in combo):
                        continue
                    k_set = frozenset(combo)
                    try:
                        accepted = bool(oracle(i, j, k_set))
                    except Exception as e:
                        raise OracleError(i, j, k_set) from e
                    if log is not None:
                        log.append(
                            QueryRecord(i=i, j=j, k=tuple(combo), size=size, accepted=accepted)
                        )
                    if accepted:
                        state.remove_triple(i, j)
                        break
    return state.collapse()


def graph_oracle(g_true: Dmg) -> CiOracle:
    """Exact oracle: answers every query from the truth's separation relation."""

    def oracle(i: int, j: int, k: frozenset[int]) -> bool:
        return e_separated(g_true, {i}, {j}, k)

    return oracle


def fingerprint_oracle(fp) -> CiOracle:
    """Exact oracle backed by a precomputed fingerprint (fast bulk runs)."""

    def oracle(i: int, j: int, k: frozenset[int]) -> bool:
        return fp.singleton(i, j, k)

    return oracle
