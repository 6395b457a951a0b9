import itertools
import random

import pytest

from esep.graphs import Dmg, complete_dg
from esep.equivalence import (
    EquivalenceClass,
    bidirected_move_preserves,
    class_of,
    dg_equivalent_characterization,
    edge_move_preserves,
    find_greatest_in_class,
    greatest_element_dg,
    is_maximal,
    markov_equivalent,
)
from esep.independence import fingerprint

from .conftest import all_dgs


def four_node_feedback_class():
    """Twelve graphs sharing one model: a feedback pair fed by a root.

    Members vary the root's entry points into the pair and the pair's
    self-loops; node 2 keeps the single parent 1 throughout.
    """
    members = []
    for entry in ([(0, 1)], [(0, 3)], [(0, 1), (0, 3)]):
        for loops in itertools.chain.from_iterable(
            itertools.combinations([(1, 1), (3, 3)], r) for r in range(3)
        ):
            members.append(Dmg(4, [(1, 3), (3, 1), (1, 2)] + entry + list(loops)))
    return members


class TestMarkovEquivalent:
    def test_reflexive(self, branching_cycle):
        assert markov_equivalent(branching_cycle, branching_cycle)

    def test_self_loop_inside_feedback_pair_is_invisible(self):
        assert markov_equivalent(Dmg(2, [(0, 1), (1, 0)]), Dmg(2, [(0, 1), (1, 0), (0, 0)]))

    def test_edge_direction_distinguishes_dags(self):
        assert not markov_equivalent(Dmg(2, [(0, 1)]), Dmg(2, [(1, 0)]))

    def test_node_count_mismatch(self):
        with pytest.raises(ValueError):
            markov_equivalent(Dmg(2), Dmg(3))


class TestCharacterization:
    def test_matches_fingerprints_exhaustive_d2(self):
        graphs = list(all_dgs(2))
        fps = [fingerprint(g, "e") for g in graphs]
        for i, g1 in enumerate(graphs):
            for j, g2 in enumerate(graphs):
                assert dg_equivalent_characterization(g1, g2) == (fps[i] == fps[j])

    def test_matches_fingerprints_sampled_d3_pairs(self):
        rng = random.Random(11)
        graphs = list(all_dgs(3))
        fps = {g: fingerprint(g, "e") for g in graphs}
        for _ in range(4000):
            g1, g2 = rng.choice(graphs), rng.choice(graphs)
            assert dg_equivalent_characterization(g1, g2) == (fps[g1] == fps[g2]), (g1, g2)

    def test_feedback_class_pairwise_equivalent(self):
        members = four_node_feedback_class()
        assert len(members) == 12
        for g1, g2 in itertools.combinations(members, 2):
            assert dg_equivalent_characterization(g1, g2)
            assert markov_equivalent(g1, g2)

    def test_acyclic_no_self_loop_graphs_equivalent_iff_identical(self):
        for g1 in all_dgs(2):
            if any(i == j for i, j in g1.directed):
                continue
            if any(len(c) > 1 for c in g1.scc_partition.components):
                continue
            for g2 in all_dgs(2):
                if any(i == j for i, j in g2.directed):
                    continue
                if any(len(c) > 1 for c in g2.scc_partition.components):
                    continue
                assert dg_equivalent_characterization(g1, g2) == (g1 == g2)

    def test_rejects_bidirected(self):
        with pytest.raises(ValueError):
            dg_equivalent_characterization(Dmg(2, [], [(0, 1)]), Dmg(2))


class TestGreatestElement:
    def test_acyclic_without_self_loops_is_its_own_greatest(self):
        g = Dmg(3, [(0, 1), (1, 2)])
        assert greatest_element_dg(g) == g

    def test_two_cycle_completes(self):
        assert greatest_element_dg(Dmg(2, [(0, 1), (1, 0)])) == complete_dg(2)

    def test_feedback_class_greatest(self):
        expected = Dmg(4, [(0, 1), (0, 3), (1, 1), (1, 2), (1, 3), (3, 1), (3, 3)])
        members = four_node_feedback_class()
        for m in members:
            assert greatest_element_dg(m) == expected
        assert not expected.has_directed(0, 0)
        assert not expected.has_directed(3, 2)
        idx = find_greatest_in_class(members + [expected])
        assert (members + [expected])[idx] == expected

    def test_greatest_is_equivalent_and_above_exhaustive_d3(self):
        for g in all_dgs(3):
            top = greatest_element_dg(g)
            assert markov_equivalent(g, top), g
            assert g.is_subgraph_of(top), g

    def test_greatest_is_maximal_sampled_d3(self):
        rng = random.Random(23)
        for _ in range(30):
            g = Dmg.from_masks(3, rng.getrandbits(9))
            assert is_maximal(greatest_element_dg(g))

    def test_two_cycle_not_maximal(self):
        assert not is_maximal(Dmg(2, [(0, 1), (1, 0)]))

    def test_complete_is_maximal(self):
        assert is_maximal(complete_dg(2))
        assert is_maximal(complete_dg(3))


class TestDeletionFromGreatest:
    @staticmethod
    def _deletable(g, edge):
        # the three deletion moves that stay inside the class
        v, w = edge
        if v == w:
            return len(g.scc_of(w)) >= 2
        if g.same_scc(v, w):
            trimmed = Dmg(g.d, [e for e in g.directed if e != edge])
            return trimmed.scc_of(w) == g.scc_of(w)
        scc_w = g.scc_of(w)
        return sum(1 for u in g.out_neighbors(v) if u in scc_w) >= 2

    def test_deletion_cases_match_fingerprints_exhaustive_d3(self):
        import numpy as np

        from esep import _kernel

        for d in (2, 3):
            tops, trimmed, expects = [], [], []
            seen = set()
            for g in all_dgs(d):
                top = greatest_element_dg(g)
                if top in seen:
                    continue
                seen.add(top)
                for edge in top.directed:
                    tops.append(top.dir_mask)
                    trimmed.append(top.dir_mask & ~(1 << (edge[0] * d + edge[1])))
                    expects.append(self._deletable(top, edge))
            w_top = _kernel.fingerprint_words_batch(d, np.array(tops, dtype=np.int64))
            w_cut = _kernel.fingerprint_words_batch(d, np.array(trimmed, dtype=np.int64))
            for row, expect in enumerate(expects):
                preserved = bool(np.array_equal(w_top[row], w_cut[row]))
                assert preserved == expect, (d, tops[row], trimmed[row])


class TestEdgeMoves:
    def test_second_entry_into_component_preserves(self):
        g = Dmg(3, [(0, 1), (1, 2), (2, 1)])
        assert edge_move_preserves(g, (0, 2))

    def test_self_loop_on_singleton_changes(self):
        assert not edge_move_preserves(Dmg(2, [(0, 1)]), (1, 1))

    def test_self_loop_in_feedback_pair_preserves(self):
        assert edge_move_preserves(Dmg(2, [(0, 1), (1, 0)]), (0, 0))

    def test_present_edge_rejected(self):
        with pytest.raises(ValueError):
            edge_move_preserves(Dmg(2, [(0, 1)]), (0, 1))

    def test_matches_fingerprints_for_every_absent_edge_exhaustive_d2(self):
        for g in all_dgs(2):
            fp = fingerprint(g, "e")
            for i in range(2):
                for j in range(2):
                    if g.has_directed(i, j):
                        continue
                    same = fingerprint(g.add_directed(i, j), "e") == fp
                    assert edge_move_preserves(g, (i, j)) == same, (g, i, j)


class TestBidirectedMoves:
    def test_parallel_confounding_between_linked_components(self):
        g = Dmg(4, [(0, 1), (1, 0), (2, 3), (3, 2)], [(0, 2)])
        assert bidirected_move_preserves(g, (1, 3))
        assert markov_equivalent(g, g.add_bidirected(1, 3))

    def test_no_existing_link_falls_back_to_comparison(self):
        g = Dmg(2, [(0, 1)])
        assert bidirected_move_preserves(g, (0, 1)) == markov_equivalent(
            g, g.add_bidirected(0, 1)
        )

    def test_same_component_falls_back(self):
        g = Dmg(2, [(0, 1), (1, 0)])
        assert bidirected_move_preserves(g, (0, 1)) == markov_equivalent(
            g, g.add_bidirected(0, 1)
        )

    def test_present_pair_rejected(self):
        with pytest.raises(ValueError):
            bidirected_move_preserves(Dmg(2, [], [(0, 1)]), (0, 1))


class TestClassScan:
    def test_class_of_two_cycle(self):
        cls = class_of(Dmg(2, [(0, 1), (1, 0)]))
        assert cls.greatest is not None
        assert cls.members[cls.greatest] == complete_dg(2)
        assert all(markov_equivalent(m, cls.members[0]) for m in cls.members)

    def test_greatest_none_for_incomparable_members(self):
        members = (Dmg(2, [(0, 1)]), Dmg(2, [(1, 0)]))
        assert find_greatest_in_class(members) is None

    def test_equivalence_class_invariant_checked(self):
        with pytest.raises(AssertionError):
            EquivalenceClass(
                criterion="e",
                fingerprint=fingerprint(Dmg(2), "e"),
                members=(Dmg(2, [(0, 1)]), Dmg(2, [(1, 0)])),
                greatest=0,
            )
