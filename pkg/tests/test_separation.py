import random

import pytest

from esep.graphs import Dmg
from esep.separation import (
    SeparationQuery,
    Walk,
    d_separated,
    e_separated,
    find_inducing_path,
    open_walk_witness,
    separated,
    separated_oracle,
    sigma_implies_d_on_acyclification,
    sigma_separated,
)

from .conftest import all_dgs, all_dmgs, subsets


class TestDSeparation:
    def test_chain_blocked_by_middle(self):
        assert d_separated(Dmg(3, [(0, 1), (1, 2)]), {0}, {2}, {1})

    def test_collider_blocks_unconditionally(self):
        g = Dmg(3, [(0, 1), (2, 1)])
        assert d_separated(g, {0}, {2}, set())
        assert not d_separated(g, {0}, {2}, {1})

    def test_fork_connects(self):
        assert not d_separated(Dmg(3, [(1, 0), (1, 2)]), {0}, {2}, set())


class TestSigmaSeparation:
    def test_feedback_right_chain_stays_open(self):
        # conditioning on 1 cannot block 0 -> 1 -> 2 when 2 feeds back into 1
        g = Dmg(3, [(0, 1), (1, 2), (2, 1)])
        assert not sigma_separated(g, {0}, {2}, {1})

    def test_acyclic_sigma_equals_d_exhaustive(self):
        for g in all_dgs(3):
            if any(len(c) > 1 for c in g.scc_partition.components):
                continue
            if any(i == j for i, j in g.directed):
                continue
            for a in range(3):
                for b in range(3):
                    for c_set in subsets(range(3)):
                        assert sigma_separated(g, {a}, {b}, c_set) == d_separated(
                            g, {a}, {b}, c_set
                        )

    def test_direct_edge_connects(self):
        g = Dmg(2, [(0, 1)])
        assert not sigma_separated(g, {0}, {1}, set())


class TestESeparation:
    def test_branching_cycle_direction_matters(self, branching_cycle):
        assert not e_separated(branching_cycle, {0}, {2}, set())
        assert e_separated(branching_cycle, {2}, {0}, set())

    def test_feeding_the_future_component(self, branching_cycle):
        for c_set in subsets({1, 2, 3}):
            assert not e_separated(branching_cycle, {0}, {1}, c_set)
            assert not e_separated(branching_cycle, {0}, {3}, c_set)

    def test_conditioning_on_target_does_not_separate(self):
        # the future copy of the target is dropped from the conditioning set
        assert not e_separated(Dmg(2, [(0, 1)]), {0}, {1}, {1})

    def test_source_in_conditioning_set_separates_its_walks(self):
        g = Dmg(2, [(0, 1), (1, 1)])
        assert e_separated(g, {0}, {1}, {0})
        assert not e_separated(g, {0, 1}, {1}, {0})  # other sources stay live


class TestOracleAgreement:
    def test_exhaustive_d2_dmgs_all_queries(self):
        node_sets = list(subsets(range(2)))
        for g in all_dmgs(2):
            for crit, fn in (("d", d_separated), ("sigma", sigma_separated), ("e", e_separated)):
                for a in node_sets:
                    for b in node_sets:
                        for c in node_sets:
                            q = SeparationQuery(a, b, c, crit)
                            assert separated_oracle(g, q) == fn(g, a, b, c), q

    def test_exhaustive_d3_dgs_singleton_queries(self):
        for g in all_dgs(3):
            for crit, fn in (("d", d_separated), ("sigma", sigma_separated), ("e", e_separated)):
                for a in range(3):
                    for b in range(3):
                        for c in subsets(range(3)):
                            q = SeparationQuery(frozenset({a}), frozenset({b}), c, crit)
                            assert separated_oracle(g, q) == fn(g, {a}, {b}, c), (g, q)

    def test_random_d4_dmgs_set_queries(self):
        rng = random.Random(2024)
        fns = {"d": d_separated, "sigma": sigma_separated, "e": e_separated}
        for _ in range(3000):
            g = Dmg.from_masks(4, rng.getrandbits(16), rng.getrandbits(6))
            crit = rng.choice(["d", "sigma", "e"])
            a = frozenset(rng.sample(range(4), rng.randint(1, 2)))
            b = frozenset(rng.sample(range(4), rng.randint(1, 2)))
            c = frozenset(v for v in range(4) if rng.random() < 0.4)
            q = SeparationQuery(a, b, c, crit)
            assert separated_oracle(g, q) == fns[crit](g, a, b, c), (g, q)


class TestAsymmetricSetAlgebra:
    def test_target_side_monotone_under_shrinking(self):
        rng = random.Random(41)
        for _ in range(150):
            g = Dmg.from_masks(4, rng.getrandbits(16), rng.getrandbits(6))
            a = frozenset(rng.sample(range(4), rng.randint(1, 2)))
            b = frozenset(rng.sample(range(4), rng.randint(1, 3)))
            c = frozenset(v for v in range(4) if rng.random() < 0.4)
            if e_separated(g, a, b, c):
                for b_sub in subsets(b):
                    assert e_separated(g, a, b_sub, c), (g, a, b, b_sub, c)

    def test_composes_over_singletons(self):
        rng = random.Random(42)
        for _ in range(100):
            g = Dmg.from_masks(4, rng.getrandbits(16), rng.getrandbits(6))
            a = frozenset(rng.sample(range(4), rng.randint(1, 2)))
            b = frozenset(rng.sample(range(4), rng.randint(1, 2)))
            c = frozenset(v for v in range(4) if rng.random() < 0.4)
            per_pair = all(e_separated(g, {x}, {y}, c) for x in a for y in b)
            assert e_separated(g, a, b, c) == per_pair, (g, a, b, c)


class TestWitness:
    def test_witness_is_valid_and_open(self, branching_cycle):
        walk = open_walk_witness(branching_cycle, {0}, {3}, {1}, "e")
        assert walk is not None
        assert walk.is_valid_in(branching_cycle.lift().graph)

    def test_no_witness_when_separated(self, branching_cycle):
        assert open_walk_witness(branching_cycle, {2}, {0}, set(), "e") is None

    def test_trivial_witness(self):
        walk = open_walk_witness(Dmg(2), {0}, {0}, set(), "d")
        assert walk == Walk((0,), ())


class TestInducingPaths:
    def test_single_edge_is_inducing(self):
        walk = find_inducing_path(Dmg(2, [(0, 1)]), 0, 1)
        assert walk is not None and walk.nodes == (0, 1)

    def test_bidirected_chain_with_ancestral_collider(self):
        g = Dmg(3, [(1, 2)], [(0, 1), (1, 2)])
        walk = find_inducing_path(g, 0, 2)
        assert walk is not None
        for c_set in subsets({1, 2}):
            assert not e_separated(g, {0}, {2}, c_set)

    def test_pure_collider_has_none(self):
        assert find_inducing_path(Dmg(3, [(0, 1), (2, 1)]), 0, 2) is None

    def test_self_loop_induces_self_path(self):
        walk = find_inducing_path(Dmg(1, [(0, 0)]), 0, 0)
        assert walk is not None

    def test_feedback_member_self_inducing(self):
        g = Dmg(2, [(0, 1), (1, 0)])
        assert find_inducing_path(g, 0, 0) is not None

    def test_found_paths_imply_inseparability_random(self):
        rng = random.Random(5)
        for _ in range(400):
            g = Dmg.from_masks(3, rng.getrandbits(9), rng.getrandbits(3))
            v, w = rng.randrange(3), rng.randrange(3)
            if find_inducing_path(g, v, w) is None:
                continue
            for c_set in subsets(set(range(3)) - {v}):
                assert not e_separated(g, {v}, {w}, c_set), (g, v, w, c_set)

    def test_paths_propagate_to_component_members(self):
        # reaching one node of a component means reaching all of it
        rng = random.Random(6)
        for _ in range(600):
            g = Dmg.from_masks(4, rng.getrandbits(16), rng.getrandbits(6))
            v, w = rng.randrange(4), rng.randrange(4)
            if find_inducing_path(g, v, w) is None:
                continue
            for u in g.scc_of(w):
                assert find_inducing_path(g, v, u) is not None, (g, v, w, u)


class TestAcyclificationImplication:
    def test_holds_exhaustively_d3(self):
        for g in all_dgs(3):
            for a in range(3):
                for b in range(3):
                    for c_set in subsets(range(3)):
                        q = SeparationQuery(frozenset({a}), frozenset({b}), c_set, "sigma")
                        assert sigma_implies_d_on_acyclification(g, q)

    def test_two_cycle_vacuous(self):
        g = Dmg(2, [(0, 1), (1, 0)])
        q = SeparationQuery(frozenset({0}), frozenset({1}), frozenset(), "sigma")
        assert not sigma_separated(g, {0}, {1}, set())
        assert sigma_implies_d_on_acyclification(g, q)

    def test_rejects_bidirected(self):
        with pytest.raises(ValueError):
            sigma_implies_d_on_acyclification(
                Dmg(2, [], [(0, 1)]),
                SeparationQuery(frozenset({0}), frozenset({1}), frozenset(), "sigma"),
            )


def test_separated_dispatch(branching_cycle):
    assert separated(branching_cycle, {2}, {0}, set(), "e")
    assert not separated(branching_cycle, {0}, {2}, set(), "e")
    with pytest.raises(ValueError):
        separated(branching_cycle, {0}, {1}, set(), "m")
