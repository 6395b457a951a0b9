import pytest

from esep.graphs import Dmg, complete_dg
from esep.discovery import (
    LiftedEdgeState,
    OracleError,
    ct_pc,
    fingerprint_oracle,
    graph_oracle,
)
from esep.equivalence import greatest_element_dg, markov_equivalent
from esep.independence import fingerprint

from .conftest import all_dgs


class TestCollapse:
    def test_full_state_collapses_to_complete(self):
        state = LiftedEdgeState.from_graph(complete_dg(3))
        assert state.collapse() == complete_dg(3)

    def test_empty_state(self):
        assert LiftedEdgeState(d=3).collapse() == Dmg(3)

    def test_single_removal(self):
        state = LiftedEdgeState.from_graph(complete_dg(3))
        state.remove_triple(0, 2)
        assert state.collapse() == Dmg(
            3, [(i, j) for i in range(3) for j in range(3) if (i, j) != (0, 2)]
        )

    def test_inconsistent_images_rejected(self):
        state = LiftedEdgeState.from_graph(complete_dg(2))
        state.edges.discard((0, 3))  # break one image of edge (0, 1)
        with pytest.raises(ValueError):
            state.collapse()


class TestGraphOracle:
    def test_branching_cycle_answers(self, branching_cycle):
        oracle = graph_oracle(branching_cycle)
        assert not oracle(0, 2, frozenset())
        assert oracle(2, 0, frozenset())

    def test_single_edge_conditioning_on_target(self):
        oracle = graph_oracle(Dmg(2, [(0, 1)]))
        assert not oracle(0, 1, frozenset({1}))

    def test_empty_graph_everything_separable(self):
        oracle = graph_oracle(Dmg(3))
        assert all(oracle(i, j, frozenset()) for i in range(3) for j in range(3) if i != j)

    def test_fingerprint_oracle_agrees(self, branching_cycle):
        slow = graph_oracle(branching_cycle)
        fast = fingerprint_oracle(fingerprint(branching_cycle, "e"))
        for i in range(4):
            for j in range(4):
                for code in range(8):
                    k = frozenset(
                        v for v, bit in zip([x for x in range(4) if x != i], range(3)) if code >> bit & 1
                    )
                    assert slow(i, j, k) == fast(i, j, k)


class TestCtPc:
    def test_chain_recovered_exactly(self):
        truth = Dmg(3, [(0, 1), (1, 2)])
        assert ct_pc(3, graph_oracle(truth)) == truth

    def test_two_cycle_gives_complete_with_self_loops(self):
        truth = Dmg(2, [(0, 1), (1, 0)])
        out = ct_pc(2, graph_oracle(truth))
        assert out == complete_dg(2)
        assert out == greatest_element_dg(truth)

    def test_benchmark_adjacency_equivalent_to_truth(self):
        truth = Dmg(3, [(0, 0), (0, 1), (1, 1), (2, 1), (1, 2), (2, 2)])
        out = ct_pc(3, graph_oracle(truth))
        assert markov_equivalent(out, truth)
        assert out == greatest_element_dg(truth)

    def test_exhaustive_d2_outputs_greatest(self):
        for truth in all_dgs(2):
            assert ct_pc(2, graph_oracle(truth)) == greatest_element_dg(truth)

    def test_oracle_call_budget(self):
        calls = []

        def counting(i, j, k):
            calls.append((i, j, k))
            return graph_oracle(truth)(i, j, k)

        truth = Dmg(3, [(0, 1), (1, 2), (2, 1)])
        ct_pc(3, counting)
        assert len(calls) <= 3 * 3 * 4

    def test_oracle_failure_carries_query(self):
        def broken(i, j, k):
            raise RuntimeError("boom")

        with pytest.raises(OracleError) as info:
            ct_pc(2, broken)
        assert info.value.query == (0, 0, frozenset())

    def test_bad_start_rejected(self):
        with pytest.raises(ValueError):
            ct_pc(2, graph_oracle(Dmg(2)), start=Dmg(3))

    def test_start_restricts_search(self):
        truth = Dmg(2, [(0, 1)])
        out = ct_pc(2, graph_oracle(truth), start=Dmg(2, [(0, 1)]))
        assert out == truth

    def test_output_commutes_with_node_relabeling(self):
        # permuting labels permutes the sweep order; the result must follow suit
        import itertools
        import random

        rng = random.Random(31)

        def relabel(g, perm):
            return Dmg(g.d, [(perm[i], perm[j]) for i, j in g.directed])

        for _ in range(25):
            truth = Dmg.from_masks(3, rng.getrandbits(9))
            base = ct_pc(3, graph_oracle(truth))
            for perm in itertools.permutations(range(3)):
                permuted = ct_pc(3, graph_oracle(relabel(truth, perm)))
                assert permuted == relabel(base, perm), (truth, perm)
