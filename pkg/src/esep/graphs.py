"""Directed mixed graphs as immutable values.

Nodes are the integers ``0..d-1``.  A graph carries a set of directed edges
``(i, j)`` (self-loops allowed) and a set of bidirected edges ``{i, j}``.
Graphs are never mutated after construction, so they are safe to share
across threads and workers; every edge change produces a new graph.

Edge sets are stored as integer bit masks: directed edge ``(i, j)`` occupies
bit ``i*d + j``, a bidirected pair ``{i, j}`` with ``i < j`` its canonical
pair index, and bidirected self-loops ``{v, v}`` (which only arise as
outputs of latent projection) a separate per-node bit.  Masks keep graph
equality, hashing and subset tests constant-time, which the exhaustive
enumeration relies on.  Node counts are capped at 16.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

MAX_NODES = 16


def pair_index(d: int, i: int, j: int) -> int:
    """Canonical index of the unordered pair {i, j} with i < j."""
    if not 0 <= i < j < d:
        raise ValueError(f"need 0 <= i < j < d, got i={i}, j={j}, d={d}")
    return i * d - i * (i + 1) // 2 + (j - i - 1)


def iter_pairs(d: int) -> Iterator[tuple[int, int]]:
    """Unordered pairs {i, j}, i < j, in canonical index order."""
    for i in range(d):
        for j in range(i + 1, d):
            yield i, j


def n_pairs(d: int) -> int:
    return d * (d - 1) // 2


class Dmg:
    """Immutable directed mixed graph on nodes 0..d-1."""

    def __init__(
        self,
        d: int,
        directed: Iterable[tuple[int, int]] = (),
        bidirected: Iterable[tuple[int, int]] = (),
    ):
        if not 0 <= d <= MAX_NODES:
            raise ValueError(f"node count must be in 0..{MAX_NODES}, got {d}")
        dir_mask = 0
        for i, j in directed:
            self._check_node(d, i)
            self._check_node(d, j)
            dir_mask |= 1 << (i * d + j)
        bi_mask = 0
        bi_self_mask = 0
        for p in bidirected:
            i, j = p
            self._check_node(d, i)
            self._check_node(d, j)
            if i == j:
                bi_self_mask |= 1 << i
            else:
                if i > j:
                    i, j = j, i
                bi_mask |= 1 << pair_index(d, i, j)
        self.d = d
        self.dir_mask = dir_mask
        self.bi_mask = bi_mask
        self.bi_self_mask = bi_self_mask

    @staticmethod
    def _check_node(d: int, v: int) -> None:
        if not 0 <= v < d:
            raise ValueError(f"node index {v} out of range for d={d}")

    @classmethod
    def from_masks(cls, d: int, dir_mask: int, bi_mask: int = 0, bi_self_mask: int = 0) -> "Dmg":
        g = cls.__new__(cls)
        g.d = d
        g.dir_mask = dir_mask
        g.bi_mask = bi_mask
        g.bi_self_mask = bi_self_mask
        return g

    # -- identity ---------------------------------------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dmg):
            return NotImplemented
        return (self.d, self.dir_mask, self.bi_mask, self.bi_self_mask) == (
            other.d,
            other.dir_mask,
            other.bi_mask,
            other.bi_self_mask,
        )

    def __hash__(self) -> int:
        return hash((self.d, self.dir_mask, self.bi_mask, self.bi_self_mask))

    def __repr__(self) -> str:
        return f"Dmg({self.d}, directed={list(self.directed)}, bidirected={list(self.bidirected)})"

    # -- edge access ------------------------------------------------------

    @property
    def directed(self) -> tuple[tuple[int, int], ...]:
        """Directed edges in canonical (i, j) order."""
        d = self.d
        return tuple(
            (i, j) for i in range(d) for j in range(d) if self.dir_mask >> (i * d + j) & 1
        )

    @property
    def bidirected(self) -> tuple[tuple[int, int], ...]:
        """Bidirected pairs (i, j) with i <= j in canonical order."""
        strict = tuple(p for p in iter_pairs(self.d) if self.bi_mask >> pair_index(self.d, *p) & 1)
        selfs = tuple((v, v) for v in range(self.d) if self.bi_self_mask >> v & 1)
        return tuple(sorted(strict + selfs))

    def has_directed(self, i: int, j: int) -> bool:
        self._check_node(self.d, i)
        self._check_node(self.d, j)
        return bool(self.dir_mask >> (i * self.d + j) & 1)

    def has_bidirected(self, i: int, j: int) -> bool:
        self._check_node(self.d, i)
        self._check_node(self.d, j)
        if i == j:
            return bool(self.bi_self_mask >> i & 1)
        if i > j:
            i, j = j, i
        return bool(self.bi_mask >> pair_index(self.d, i, j) & 1)

    @property
    def is_dg(self) -> bool:
        return self.bi_mask == 0 and self.bi_self_mask == 0

    def n_directed(self) -> int:
        return bin(self.dir_mask).count("1")

    def n_bidirected(self) -> int:
        return bin(self.bi_mask).count("1") + bin(self.bi_self_mask).count("1")

    # -- adjacency (cached; the graph is immutable) ------------------------

    @cached_property
    def _out(self) -> tuple[tuple[int, ...], ...]:
        d = self.d
        return tuple(
            tuple(j for j in range(d) if self.dir_mask >> (i * d + j) & 1) for i in range(d)
        )

    @cached_property
    def _in(self) -> tuple[tuple[int, ...], ...]:
        d = self.d
        return tuple(
            tuple(i for i in range(d) if self.dir_mask >> (i * d + j) & 1) for j in range(d)
        )

    @cached_property
    def _bi(self) -> tuple[tuple[int, ...], ...]:
        nbrs: list[list[int]] = [[] for _ in range(self.d)]
        for i, j in self.bidirected:
            if i == j:
                nbrs[i].append(i)
            else:
                nbrs[i].append(j)
                nbrs[j].append(i)
        return tuple(tuple(sorted(ns)) for ns in nbrs)

    def out_neighbors(self, v: int) -> tuple[int, ...]:
        return self._out[v]

    def in_neighbors(self, v: int) -> tuple[int, ...]:
        return self._in[v]

    def bi_neighbors(self, v: int) -> tuple[int, ...]:
        return self._bi[v]

    # -- structural queries -------------------------------------------------

    def parents(self, s: Iterable[int]) -> frozenset[int]:
        """Union of parents of the given nodes (w such that w -> v)."""
        nodes = self._node_set(s)
        out: set[int] = set()
        for v in nodes:
            out.update(self._in[v])
        return frozenset(out)

    def children(self, s: Iterable[int]) -> frozenset[int]:
        nodes = self._node_set(s)
        out: set[int] = set()
        for v in nodes:
            out.update(self._out[v])
        return frozenset(out)

    def ancestors(self, s: Iterable[int]) -> frozenset[int]:
        """Nodes with a directed path into s; trivial paths mean s is included."""
        return self._closure(s, self._in)

    def descendants(self, s: Iterable[int]) -> frozenset[int]:
        """Nodes reachable from s along directed edges, s included."""
        return self._closure(s, self._out)

    def _closure(self, s: Iterable[int], adj: tuple[tuple[int, ...], ...]) -> frozenset[int]:
        seen = set(self._node_set(s))
        frontier = list(seen)
        while frontier:
            v = frontier.pop()
            for u in adj[v]:
                if u not in seen:
                    seen.add(u)
                    frontier.append(u)
        return frozenset(seen)

    def _node_set(self, s: Iterable[int]) -> frozenset[int]:
        nodes = frozenset(s)
        for v in nodes:
            self._check_node(self.d, v)
        return nodes

    @cached_property
    def scc_partition(self) -> "SccPartition":
        """Strongly connected components, with the condensation DAG.

        Components are ordered by their smallest node.  Self-loops never
        merge components; a node is in a component with another node iff
        each is an ancestor of the other.
        """
        comp = _tarjan(self.d, self._out)
        order = sorted(range(max(comp) + 1 if comp else 0), key=lambda c: min(
            v for v in range(self.d) if comp[v] == c))
        relabel = {old: new for new, old in enumerate(order)}
        assignment = tuple(relabel[c] for c in comp)
        k = len(order)
        members: list[list[int]] = [[] for _ in range(k)]
        for v in range(self.d):
            members[assignment[v]].append(v)
        cond_edges = set()
        for i, j in self.directed:
            if assignment[i] != assignment[j]:
                cond_edges.add((assignment[i], assignment[j]))
        return SccPartition(
            assignment=assignment,
            components=tuple(tuple(m) for m in members),
            condensation=Dmg(k, directed=sorted(cond_edges)),
        )

    def scc_of(self, v: int) -> frozenset[int]:
        part = self.scc_partition
        return frozenset(part.components[part.assignment[v]])

    def same_scc(self, u: int, v: int) -> bool:
        a = self.scc_partition.assignment
        return a[u] == a[v]

    # -- derived graphs -----------------------------------------------------

    def lift(self) -> "LiftedDmg":
        """Two-layer past/future copy of the graph.

        Node k has a past copy k (layer 0) and a future copy d+k (layer 1).
        A directed edge (u, v) lifts to u0->v0, u0->v1, u1->v1; a bidirected
        pair {u, v} lifts to all four cross-layer pairs.  No directed edge
        ever runs from layer 1 back to layer 0.
        """
        d = self.d
        ldir = []
        for u, v in self.directed:
            ldir += [(u, v), (u, d + v), (d + u, d + v)]
        lbi = []
        for u, v in self.bidirected:
            if u == v:
                lbi += [(u, u), (u, d + u), (d + u, d + u)]
            else:
                lbi += [(u, v), (u, d + v), (d + u, v), (d + u, d + v)]
        return LiftedDmg(base=self, graph=Dmg(2 * d, directed=ldir, bidirected=lbi))

    def acyclify(self) -> "Dmg":
        """Acyclic surrogate: drop intra-component edges, fan cross edges out.

        An edge v -> w is present iff v lies outside w's strongly connected
        component and v has an edge into some member of that component.
        Only defined for graphs without bidirected edges.
        """
        if not self.is_dg:
            raise ValueError("acyclification is only defined for directed graphs")
        part = self.scc_partition
        edges = []
        for v in range(self.d):
            hit = {part.assignment[w] for w in self._out[v]} - {part.assignment[v]}
            for c in hit:
                for w in part.components[c]:
                    edges.append((v, w))
        return Dmg(self.d, directed=sorted(edges))

    def induced_subgraph(self, s: Iterable[int]) -> "Dmg":
        """Subgraph on s, relabeled to 0..len(s)-1 in sorted node order."""
        keep = sorted(self._node_set(s))
        relabel = {v: k for k, v in enumerate(keep)}
        dir_edges = [(relabel[i], relabel[j]) for i, j in self.directed if i in relabel and j in relabel]
        bi_edges = [(relabel[i], relabel[j]) for i, j in self.bidirected if i in relabel and j in relabel]
        return Dmg(len(keep), directed=dir_edges, bidirected=bi_edges)

    def latent_projection(self, v_obs: Iterable[int]) -> tuple["Dmg", dict[int, int]]:
        """Marginalize latent nodes, keeping v_obs.

        Returns the projected graph (relabeled to 0..|v_obs|-1 in sorted
        order) together with the old->new relabeling map.  A directed edge
        survives iff some directed walk between observed endpoints runs
        entirely through latent interior nodes; a bidirected edge iff some
        collider-free walk with arrowheads at both observed endpoints does.
        Confounding of a node with itself through a latent ancestor yields a
        bidirected self-loop.
        """
        obs = sorted(self._node_set(v_obs))
        if not obs:
            raise ValueError("observed node set must be non-empty")
        lat = [v for v in range(self.d) if v not in set(obs)]
        relabel = {v: k for k, v in enumerate(obs)}

        lat_reach = self._latent_directed_reach(lat)
        dir_edges = []
        for v1 in obs:
            targets: set[int] = set(u for u in self._out[v1] if u in relabel)
            for l in self._out[v1]:
                if l in relabel:
                    continue
                for l2 in lat_reach[l]:
                    targets.update(u for u in self._out[l2] if u in relabel)
            for v2 in sorted(targets):
                dir_edges.append((relabel[v1], relabel[v2]))

        bi_edges = self._project_bidirected(obs, set(lat), relabel)
        return Dmg(len(obs), directed=dir_edges, bidirected=bi_edges), relabel

    def _latent_directed_reach(self, lat: list[int]) -> dict[int, frozenset[int]]:
        """lat node -> latent nodes reachable from it via latent-only directed walks (reflexive)."""
        lat_set = set(lat)
        reach: dict[int, frozenset[int]] = {}
        for l in lat:
            seen = {l}
            frontier = [l]
            while frontier:
                x = frontier.pop()
                for u in self._out[x]:
                    if u in lat_set and u not in seen:
                        seen.add(u)
                        frontier.append(u)
            reach[l] = frozenset(seen)
        return reach

    def _project_bidirected(
        self, obs: list[int], lat: set[int], relabel: dict[int, int]
    ) -> list[tuple[int, int]]:
        # Walk search over (latent node, mark at that node of the last edge).
        # A collider-free walk needs arrowheads at both observed endpoints and
        # only latent interiors; a conditioned mark never appears since latent
        # nodes are never conditioned.  head-head at an interior is a collider
        # and is forbidden; everything else passes.
        HEAD, TAIL = 0, 1
        pairs: set[tuple[int, int]] = set()
        for i, j in self.bidirected:
            if i in relabel and j in relabel:
                pairs.add((relabel[i], relabel[j]))
        for v1 in obs:
            # first edge must put an arrowhead at v1
            start: list[tuple[int, int]] = []
            for w in self._in[v1]:
                if w in lat:
                    start.append((w, TAIL))
            for w in self._bi[v1]:
                if w in lat:
                    start.append((w, HEAD))
            seen = set(start)
            frontier = list(start)
            endpoints: set[int] = set()
            while frontier:
                l, m = frontier.pop()
                # terminate into an observed node with an arrowhead there
                for u in self._out[l]:
                    if u not in lat:
                        endpoints.add(u)
                for u in self._bi[l]:
                    if u not in lat and m == TAIL:
                        endpoints.add(u)
                # continue through latent nodes
                for u in self._out[l]:
                    if u in lat and (u, HEAD) not in seen:
                        seen.add((u, HEAD))
                        frontier.append((u, HEAD))
                if m == TAIL:
                    for u in self._in[l]:
                        if u in lat and (u, TAIL) not in seen:
                            seen.add((u, TAIL))
                            frontier.append((u, TAIL))
                    for u in self._bi[l]:
                        if u in lat and (u, HEAD) not in seen:
                            seen.add((u, HEAD))
                            frontier.append((u, HEAD))
            for v2 in endpoints:
                a, b = relabel[v1], relabel[v2]
                pairs.add((min(a, b), max(a, b)))
        return sorted(pairs)

    # -- order and edits ----------------------------------------------------

    def is_subgraph_of(self, other: "Dmg") -> bool:
        """Edge-set inclusion on both edge kinds; node counts must match."""
        if self.d != other.d:
            raise ValueError(f"node count mismatch: {self.d} vs {other.d}")
        return (
            self.dir_mask & ~other.dir_mask == 0
            and self.bi_mask & ~other.bi_mask == 0
            and self.bi_self_mask & ~other.bi_self_mask == 0
        )

    def add_directed(self, i: int, j: int) -> "Dmg":
        self._check_node(self.d, i)
        self._check_node(self.d, j)
        return Dmg.from_masks(
            self.d, self.dir_mask | 1 << (i * self.d + j), self.bi_mask, self.bi_self_mask
        )

    def add_bidirected(self, i: int, j: int) -> "Dmg":
        self._check_node(self.d, i)
        self._check_node(self.d, j)
        if i == j:
            return Dmg.from_masks(self.d, self.dir_mask, self.bi_mask, self.bi_self_mask | 1 << i)
        if i > j:
            i, j = j, i
        return Dmg.from_masks(
            self.d, self.dir_mask, self.bi_mask | 1 << pair_index(self.d, i, j), self.bi_self_mask
        )

    def union(self, other: "Dmg") -> "Dmg":
        if self.d != other.d:
            raise ValueError(f"node count mismatch: {self.d} vs {other.d}")
        return Dmg.from_masks(
            self.d,
            self.dir_mask | other.dir_mask,
            self.bi_mask | other.bi_mask,
            self.bi_self_mask | other.bi_self_mask,
        )


def _tarjan(d: int, out: tuple[tuple[int, ...], ...]) -> list[int]:
    """Iterative Tarjan; returns a component id per node (ids unordered)."""
    index = [-1] * d
    low = [0] * d
    on_stack = [False] * d
    stack: list[int] = []
    comp = [-1] * d
    counter = 0
    n_comp = 0
    for root in range(d):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, pi = work[-1]
            if pi == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            for k in range(pi, len(out[v])):
                u = out[v][k]
                if index[u] == -1:
                    work[-1] = (v, k + 1)
                    work.append((u, 0))
                    advanced = True
                    break
                if on_stack[u]:
                    low[v] = min(low[v], index[u])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp[w] = n_comp
                    if w == v:
                        break
                n_comp += 1
            if work:
                p, _ = work[-1]
                low[p] = min(low[p], low[v])
    return comp


@dataclass(frozen=True)
class SccPartition:
    """Partition of nodes into strongly connected components.

    ``assignment[v]`` is the component id of node v, ``components[c]`` the
    sorted members of component c, and ``condensation`` the acyclic graph
    on component ids induced by cross-component directed edges.
    """

    assignment: tuple[int, ...]
    components: tuple[tuple[int, ...], ...]
    condensation: Dmg


@dataclass(frozen=True)
class LiftedDmg:
    """Past/future split of a graph: node k of the base becomes k (past) and base.d + k (future)."""

    base: Dmg
    graph: Dmg

    def past(self, k: int) -> int:
        return k

    def future(self, k: int) -> int:
        return self.base.d + k

    def layer(self, node: int) -> int:
        return 0 if node < self.base.d else 1

    def base_node(self, node: int) -> int:
        return node if node < self.base.d else node - self.base.d


def complete_dg(d: int) -> Dmg:
    """All d*d directed edges, self-loops included."""
    return Dmg.from_masks(d, (1 << (d * d)) - 1)


def complete_dmg(d: int) -> Dmg:
    """All directed edges plus all d*(d-1)/2 bidirected pairs."""
    return Dmg.from_masks(d, (1 << (d * d)) - 1, (1 << n_pairs(d)) - 1)


def empty_graph(d: int) -> Dmg:
    return Dmg.from_masks(d, 0)


# -- text and JSON serialization ------------------------------------------
#
# Text format, 1-based node indices:
#     nodes 3
#     1 -> 2
#     2 <-> 3
# '#' starts a comment.  Several graphs may follow each other in one file,
# each introduced by its own 'nodes' line.  JSON uses 0-based indices under
# keys "d", "directed", "bidirected".


class GraphFormatError(ValueError):
    pass


def format_graph_text(g: Dmg) -> str:
    lines = [f"nodes {g.d}"]
    for i, j in g.directed:
        lines.append(f"{i + 1} -> {j + 1}")
    for i, j in g.bidirected:
        lines.append(f"{i + 1} <-> {j + 1}")
    return "\n".join(lines) + "\n"


def parse_graphs_text(text: str) -> list[Dmg]:
    graphs: list[Dmg] = []
    d = None
    directed: list[tuple[int, int]] = []
    bidirected: list[tuple[int, int]] = []

    def flush():
        if d is not None:
            graphs.append(Dmg(d, directed=directed, bidirected=bidirected))

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "nodes":
            if len(parts) != 2 or not parts[1].isdigit():
                raise GraphFormatError(f"line {lineno}: expected 'nodes <d>'")
            flush()
            d = int(parts[1])
            directed, bidirected = [], []
            continue
        if d is None:
            raise GraphFormatError(f"line {lineno}: edge before any 'nodes' line")
        if len(parts) != 3 or parts[1] not in ("->", "<->"):
            raise GraphFormatError(f"line {lineno}: expected '<i> -> <j>' or '<i> <-> <j>'")
        try:
            i, j = int(parts[0]) - 1, int(parts[2]) - 1
        except ValueError as e:
            raise GraphFormatError(f"line {lineno}: bad node index") from e
        if not (0 <= i < d and 0 <= j < d):
            raise GraphFormatError(f"line {lineno}: node index out of range for d={d}")
        if parts[1] == "->":
            directed.append((i, j))
        else:
            bidirected.append((i, j))
    flush()
    if not graphs:
        raise GraphFormatError("no graph found")
    return graphs


def parse_graph_text(text: str) -> Dmg:
    return parse_graphs_text(text)[0]


def graph_to_json_dict(g: Dmg) -> dict:
    return {
        "d": g.d,
        "directed": [list(e) for e in g.directed],
        "bidirected": [list(e) for e in g.bidirected],
    }


def graph_from_json_dict(data: dict) -> Dmg:
    try:
        d = int(data["d"])
        directed = [tuple(e) for e in data.get("directed", [])]
        bidirected = [tuple(e) for e in data.get("bidirected", [])]
    except (KeyError, TypeError) as e:
        raise GraphFormatError(f"malformed graph JSON: {e}") from e
    return Dmg(d, directed=directed, bidirected=bidirected)


def load_graph_file(path) -> Dmg:
    """Read a graph from a text or JSON file (sniffed from the first character)."""
    import json

    with open(path) as f:
        text = f.read()
    if text.lstrip().startswith("{"):
        return graph_from_json_dict(json.loads(text))
    return parse_graph_text(text)
