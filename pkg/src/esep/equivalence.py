"""Markov equivalence of graphs under the asymmetric separation criterion.

Two graphs are Markov equivalent when they induce the same independence
model, i.e. have equal fingerprints.  For directed graphs the class has a
purely graphical characterization (same strongly connected components,
same parent sets of singleton components including self-loop status, same
outside parent sets of larger components) and always contains a greatest
element, constructed here in closed form.  For general mixed graphs a
greatest element is searched for explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .graphs import Dmg
from .independence import Fingerprint, fingerprint


def markov_equivalent(g1: Dmg, g2: Dmg, criterion: str = "e") -> bool:
    """Fingerprint equality."""
    if g1.d != g2.d:
        raise ValueError(f"node count mismatch: {g1.d} vs {g2.d}")
    return fingerprint(g1, criterion) == fingerprint(g2, criterion)


def dg_equivalent_characterization(g1: Dmg, g2: Dmg) -> bool:
    """Graphical test for equivalence of two directed graphs.

    Equivalent iff (i) the strongly connected components coincide, (ii)
    singleton components have identical parent sets (which covers self-loop
    status), and (iii) components of size two or more have identical parent
    sets outside the component.
    """
    if not (g1.is_dg and g2.is_dg):
        raise ValueError("defined for directed graphs only")
    if g1.d != g2.d:
        raise ValueError(f"node count mismatch: {g1.d} vs {g2.d}")
    p1, p2 = g1.scc_partition, g2.scc_partition
    comps1 = {frozenset(c) for c in p1.components}
    comps2 = {frozenset(c) for c in p2.components}
    if comps1 != comps2:
        return False
    for comp in p1.components:
        members = frozenset(comp)
        pa1, pa2 = g1.parents(members), g2.parents(members)
        if len(members) == 1:
            if pa1 != pa2:
                return False
        else:
            if pa1 - members != pa2 - members:
                return False
    return True


def greatest_element_dg(g: Dmg) -> Dmg:
    """The unique maximal member of a directed graph's equivalence class.

    Closure rules: components of size two or more become complete (all
    internal edges, self-loops included); a node outside a component with
    at least one edge into it gets edges onto every member; singleton
    components keep their exact in-edges and self-loop status.
    """
    if not g.is_dg:
        raise ValueError("defined for directed graphs only")
    part = g.scc_partition
    assign = part.assignment
    size = [len(part.components[c]) for c in range(len(part.components))]
    edges = []
    for i in range(g.d):
        enters = {assign[j] for j in g.out_neighbors(i)}
        for j in range(g.d):
            ci, cj = assign[i], assign[j]
            if ci == cj:
                present = size[ci] >= 2 or (i == j and g.has_directed(i, i))
            else:
                present = cj in enters
            if present:
                edges.append((i, j))
    return Dmg(g.d, directed=edges)


def is_maximal(g: Dmg, criterion: str = "e") -> bool:
    """No absent directed edge can be added without changing the model."""
    fp = fingerprint(g, criterion)
    for i in range(g.d):
        for j in range(g.d):
            if not g.has_directed(i, j):
                if fingerprint(g.add_directed(i, j), criterion) == fp:
                    return False
    return True


def edge_move_preserves(g: Dmg, edge: tuple[int, int]) -> bool:
    """Whether adding the absent directed edge keeps the model unchanged.

    Purely structural classification: an edge inside a component preserves;
    a cross edge preserves iff its source already has an edge into the
    target component; a self-loop preserves iff its node sits in a
    component of size two or more.
    """
    i, j = edge
    if g.has_directed(i, j):
        raise ValueError(f"edge {edge} already present")
    if i == j:
        return len(g.scc_of(j)) >= 2
    if g.same_scc(i, j):
        return True
    scc_j = g.scc_of(j)
    return any(u in scc_j for u in g.out_neighbors(i))


def bidirected_move_preserves(g: Dmg, pair: tuple[int, int], criterion: str = "e") -> bool:
    """Whether adding the absent bidirected pair keeps the model unchanged.

    When the two endpoints lie in different components already linked by a
    bidirected edge, preservation holds structurally; otherwise the
    fingerprints are compared directly (there is no structural converse).
    """
    i, j = pair
    if g.has_bidirected(i, j):
        raise ValueError(f"bidirected pair {pair} already present")
    if i != j and not g.same_scc(i, j):
        scc_i, scc_j = g.scc_of(i), g.scc_of(j)
        for u, v in g.bidirected:
            if (u in scc_i and v in scc_j) or (u in scc_j and v in scc_i):
                return True
    return markov_equivalent(g, g.add_bidirected(i, j), criterion)


@dataclass(frozen=True)
class EquivalenceClass:
    """A Markov equivalence class with an optional greatest element.

    ``greatest`` indexes into ``members`` when present; every member then
    is a subgraph of it.
    """

    criterion: str
    fingerprint: Fingerprint
    members: tuple[Dmg, ...]
    greatest: Optional[int] = None

    def __post_init__(self):
        if self.greatest is not None:
            top = self.members[self.greatest]
            assert all(m.is_subgraph_of(top) for m in self.members)


def find_greatest_in_class(members: Sequence[Dmg]) -> Optional[int]:
    """Index of the member that is a supergraph of all members, or None.

    A greatest element, when it exists, must carry the union of all member
    edge sets, so it suffices to check whether that union is a member.
    """
    if not members:
        return None
    d = members[0].d
    dir_u = bi_u = biself_u = 0
    for m in members:
        if m.d != d:
            raise ValueError("members must share one node count")
        dir_u |= m.dir_mask
        bi_u |= m.bi_mask
        biself_u |= m.bi_self_mask
    for k, m in enumerate(members):
        if (m.dir_mask, m.bi_mask, m.bi_self_mask) == (dir_u, bi_u, biself_u):
            return k
    return None


def class_of(g: Dmg, criterion: str = "e") -> EquivalenceClass:
    """Materialize the full equivalence class of a small graph by enumeration."""
    from .enumeration import enumerate_and_group, graph_to_code, code_to_graph

    kind = "dg" if g.is_dg else "dmg"
    if g.bi_self_mask:
        raise ValueError("class enumeration does not cover bidirected self-loops")
    grouping = enumerate_and_group(g.d, kind, criterion)
    code = graph_to_code(g, kind)
    codes = grouping.class_members_of(code)
    members = tuple(code_to_graph(c, g.d, kind) for c in codes)
    return EquivalenceClass(
        criterion=criterion,
        fingerprint=fingerprint(g, criterion),
        members=members,
        greatest=find_greatest_in_class(members),
    )
