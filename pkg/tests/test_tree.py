import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strategies import trees
from topdown_rst.errors import MalformedOrderError, MalformedTreeError
from topdown_rst.tree import (
    EDU,
    CanonicalOrder,
    Internal,
    Leaf,
    NaryNode,
    Nuclearity,
    Segment,
    all_nodes,
    binarize_right_heavy,
    gold_derivation,
    internal_nodes,
    leaves,
    match_gold,
    order_to_tree,
    random_binary_tree,
    random_shape_split,
    tree_to_order,
    validate_tree,
)

NS, SN, NN = Nuclearity.NS, Nuclearity.SN, Nuclearity.NN


def node(left, right, nuc=NS, rel="elaboration"):
    return Internal(left, right, nuc, rel)


# ((E1,E2),(E3,E4)) with r1 on the left pair, r2 at the root, r3 on the right pair
BALANCED = node(node(Leaf(1), Leaf(2), NS, "r1"), node(Leaf(3), Leaf(4), SN, "r3"), NN, "r2")
BALANCED_ORDER = tree_to_order(BALANCED)


def subtree_at(tree, span):
    for n in all_nodes(tree):
        if n.span == span:
            return n
    return None


class TestTypes:
    def test_edu_rejects_bad_input(self):
        with pytest.raises(ValueError):
            EDU(0, ("a",), ("NN",))
        with pytest.raises(ValueError):
            EDU(1, (), ())
        with pytest.raises(ValueError):
            EDU(1, ("a", "b"), ("NN",))

    def test_nuclearity_has_three_values(self):
        assert [n.value for n in Nuclearity] == ["NS", "SN", "NN"]

    @pytest.mark.parametrize("left,right,expected", [("N", "S", NS), ("S", "N", SN), ("N", "N", NN)])
    def test_from_statuses(self, left, right, expected):
        assert Nuclearity.from_statuses(left, right) is expected
        assert expected.statuses == (left, right)

    def test_internal_span_and_split(self):
        assert BALANCED.span == (1, 4)
        assert BALANCED.split == 2
        assert BALANCED.label == (NN, "r2")

    def test_non_adjacent_children_rejected(self):
        with pytest.raises(MalformedTreeError):
            Internal(Leaf(1), Leaf(3), NS, "x")

    def test_segment(self):
        assert Segment(2, 5).splittable
        assert not Segment(3, 3).splittable

    def test_validate_tree_checks_coverage(self):
        validate_tree(BALANCED, 4)
        with pytest.raises(MalformedTreeError):
            validate_tree(BALANCED, 5)


class TestBinarization:
    def test_binary_input_unchanged(self):
        assert binarize_right_heavy(BALANCED) == BALANCED

    def test_ternary_multinuclear(self):
        tree = binarize_right_heavy(NaryNode((Leaf(1), Leaf(2), Leaf(3)), "NNN", "list"))
        assert tree == Internal(Leaf(1), Internal(Leaf(2), Leaf(3), NN, "list"), NN, "list")

    def test_four_children_form_right_chain(self):
        tree = binarize_right_heavy(NaryNode(tuple(Leaf(i) for i in range(1, 5)), "NNNN", "joint"))
        depth, cur = 0, tree
        while isinstance(cur, Internal):
            assert isinstance(cur.left, Leaf)
            depth += 1
            cur = cur.right
        assert depth == 3

    def test_mixed_statuses(self):
        # satellite, nucleus, satellite: the remainder (N,S) contains a nucleus
        tree = binarize_right_heavy(NaryNode((Leaf(1), Leaf(2), Leaf(3)), "SNS", "elaboration"))
        assert tree.nuclearity is SN
        assert tree.right.nuclearity is NS

    @pytest.mark.parametrize("children", [(), (Leaf(1),)])
    def test_too_few_children(self, children):
        with pytest.raises(MalformedTreeError):
            binarize_right_heavy(NaryNode(children, "N" * len(children), "x"))

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_preserves_leaves_and_counts(self, seed):
        rng = np.random.default_rng(seed)
        counter = iter(range(1, 10_000))

        def nary(depth):
            if depth == 0 or rng.random() < 0.3:
                return Leaf(next(counter))
            k = int(rng.integers(2, 5))
            kids = tuple(nary(depth - 1) for _ in range(k))
            statuses = "".join(rng.choice(["N", "S"], size=k))
            if "N" not in statuses:
                statuses = "N" + statuses[1:]
            return NaryNode(kids, statuses, "r")

        tree = binarize_right_heavy(nary(4))
        q = tree.end
        assert leaves(tree) == list(range(1, q + 1))
        assert len(internal_nodes(tree)) == q - 1


class TestCanonicalOrder:
    def test_balanced_example(self):
        assert BALANCED_ORDER.ranks == (2, 1, 3, None)
        assert BALANCED_ORDER.labels == ((NS, "r1"), (NN, "r2"), (SN, "r3"), None)

    def test_single_split(self):
        assert tree_to_order(node(Leaf(1), Leaf(2))).ranks == (1, None)

    def test_left_nested(self):
        tree = node(node(Leaf(1), node(Leaf(2), Leaf(3))), Leaf(4))
        assert tree_to_order(tree).ranks == (2, 3, 1, None)

    def test_single_edu(self):
        assert tree_to_order(Leaf(1)).ranks == (None,)
        assert order_to_tree(CanonicalOrder((None,), (None,))) == Leaf(1)

    def test_inverse_of_example(self):
        assert order_to_tree(BALANCED_ORDER) == BALANCED

    @pytest.mark.parametrize(
        "ranks",
        [(1, 1, 2, None), (1, 2, None, None), (0, 1, 2, None), (1, 2, 4, None)],
    )
    def test_malformed_orders(self, ranks):
        labels = tuple((NS, "x") if r is not None else None for r in ranks)
        with pytest.raises(MalformedOrderError):
            order_to_tree(CanonicalOrder(ranks, labels))

    def test_permutation_that_is_not_preorder(self):
        # root at E2, but the right child's split (E3) is ranked before the left child's (E1)
        order = CanonicalOrder((3, 1, 2, None), ((NS, "x"),) * 3 + (None,))
        with pytest.raises(MalformedOrderError):
            order_to_tree(order)
        assert order_to_tree(order, strict=False).span == (1, 4)

    @settings(max_examples=200, deadline=None)
    @given(trees(max_q=40))
    def test_round_trip(self, tree):
        assert order_to_tree(tree_to_order(tree)) == tree

    @given(trees(max_q=30))
    def test_ranks_are_permutation(self, tree):
        order = tree_to_order(tree)
        q = tree.end
        assert order.ranks[-1] is None and order.labels[-1] is None
        assert sorted(order.ranks[:-1]) == list(range(1, q))
        assert all((r is None) == (lab is None) for r, lab in zip(order.ranks, order.labels))


class TestMatchGold:
    @pytest.mark.parametrize(
        "seg,split,label",
        [((1, 3), 2, (NN, "r2")), ((3, 4), 3, (SN, "r3")), ((1, 4), 2, (NN, "r2")), ((1, 2), 1, (NS, "r1"))],
    )
    def test_examples(self, seg, split, label):
        assert match_gold(Segment(*seg), BALANCED_ORDER) == (split, label)

    def test_unsplittable(self):
        with pytest.raises(ValueError):
            match_gold(Segment(2, 2), BALANCED_ORDER)

    @given(trees(min_q=2, max_q=30))
    def test_gold_derivation_rebuilds_tree(self, tree):
        derivation = gold_derivation(tree_to_order(tree))
        assert len(derivation) == tree.end - 1
        by_span = {n.span: n for n in internal_nodes(tree)}
        for seg, split, label in derivation:
            gold = by_span[tuple(seg)]
            assert (split, label) == (gold.split, gold.label)

    @given(trees(min_q=2, max_q=30))
    def test_subtree_preservation(self, tree):
        order = tree_to_order(tree)

        def rebuild(m, n):
            if m == n:
                return Leaf(m)
            s, (nuc, rel) = match_gold(Segment(m, n), order)
            return Internal(rebuild(m, s), rebuild(s + 1, n), nuc, rel)

        for sub in internal_nodes(tree):
            assert rebuild(*sub.span) == sub


class TestRandomTrees:
    def test_deterministic(self):
        a = random_binary_tree(np.random.default_rng(5), 15, ("a", "b"))
        b = random_binary_tree(np.random.default_rng(5), 15, ("a", "b"))
        assert a == b

    def test_shape_distribution_is_uniform(self):
        # five binary shapes over four leaves; each should be close to 1/5
        rng = np.random.default_rng(0)
        counts = {}
        for _ in range(5000):
            shape = tree_to_order(random_binary_tree(rng, 4)).ranks
            counts[shape] = counts.get(shape, 0) + 1
        assert len(counts) == 5
        assert all(abs(c / 5000 - 0.2) < 0.03 for c in counts.values())

    def test_split_inside_segment_for_large_q(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            s = random_shape_split(rng, 1, 80)
            assert 1 <= s < 80
