"""RST tree data model.

Binary trees are built from two immutable node types, :class:`Leaf` and
:class:`Internal`.  A tree over ``q`` EDUs has a one-to-one correspondence
with its *canonical order*: for every EDU ``i < q`` the pre-order rank of
the internal node that splits right after ``i``, together with that node's
``(nuclearity, relation)`` label.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import comb
from typing import NamedTuple, Optional, Sequence, Union

from .errors import MalformedOrderError, MalformedTreeError


class Nuclearity(str, enum.Enum):
    NS = "NS"
    SN = "SN"
    NN = "NN"

    @property
    def statuses(self) -> tuple[str, str]:
        """Status ("N" or "S") of the left and right child."""
        return self.value[0], self.value[1]

    @classmethod
    def from_statuses(cls, left: str, right: str) -> "Nuclearity":
        pair = left + right
        if pair == "SS":
            # two satellites never form a valid relation; treat as multinuclear
            return cls.NN
        return cls(pair)


Label = tuple  # (Nuclearity, relation name)


@dataclass(frozen=True)
class EDU:
    index: int
    tokens: tuple[str, ...]
    pos_tags: tuple[str, ...]
    paragraph_final: bool = False
    sentence_final: bool = False

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "pos_tags", tuple(self.pos_tags))
        if self.index < 1:
            raise ValueError(f"EDU index must be >= 1, got {self.index}")
        if not self.tokens:
            raise ValueError(f"EDU {self.index} has no tokens")
        if len(self.pos_tags) != len(self.tokens):
            raise ValueError(
                f"EDU {self.index}: {len(self.tokens)} tokens but {len(self.pos_tags)} POS tags"
            )


@dataclass(frozen=True)
class Leaf:
    edu: int

    @property
    def start(self) -> int:
        return self.edu

    @property
    def end(self) -> int:
        return self.edu

    @property
    def span(self) -> tuple[int, int]:
        return (self.edu, self.edu)

    def __len__(self):
        return 1


@dataclass(frozen=True)
class Internal:
    left: "RSTTree"
    right: "RSTTree"
    nuclearity: Nuclearity
    relation: str
    start: int = field(init=False, compare=False, repr=False)
    end: int = field(init=False, compare=False, repr=False)

    def __post_init__(self):
        if self.left.end + 1 != self.right.start:
            raise MalformedTreeError(
                f"children spans {self.left.span} and {self.right.span} are not adjacent"
            )
        object.__setattr__(self, "nuclearity", Nuclearity(self.nuclearity))
        object.__setattr__(self, "start", self.left.start)
        object.__setattr__(self, "end", self.right.end)

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def split(self) -> int:
        """Last EDU of the left child."""
        return self.left.end

    @property
    def label(self) -> Label:
        return (self.nuclearity, self.relation)

    def __len__(self):
        return self.end - self.start + 1


RSTTree = Union[Leaf, Internal]


class Segment(NamedTuple):
    """Inclusive EDU range ``m..n``."""

    m: int
    n: int

    @property
    def splittable(self) -> bool:
        return self.n > self.m

    def __len__(self):
        return self.n - self.m + 1


@dataclass(frozen=True)
class NaryNode:
    """Possibly non-binary node as found in treebanks.

    ``statuses`` holds one "N"/"S" per child.
    """

    children: tuple
    statuses: str
    relation: str

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class CanonicalOrder:
    """Per-EDU split ranks and labels; the last entry of each is ``None``."""

    ranks: tuple[Optional[int], ...]
    labels: tuple[Optional[Label], ...]

    def __post_init__(self):
        object.__setattr__(self, "ranks", tuple(self.ranks))
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self):
        return len(self.ranks)

    def validate(self) -> None:
        q = len(self.ranks)
        if q == 0:
            raise MalformedOrderError("empty order")
        if len(self.labels) != q:
            raise MalformedOrderError(f"{q} ranks but {len(self.labels)} labels")
        if self.ranks[-1] is not None or self.labels[-1] is not None:
            raise MalformedOrderError("last EDU must carry no rank and no label")
        head = self.ranks[:-1]
        if any(r is None for r in head) or sorted(head) != list(range(1, q)):
            raise MalformedOrderError(f"ranks {list(head)} are not a permutation of 1..{q - 1}")
        if any(lab is None for lab in self.labels[:-1]):
            raise MalformedOrderError("every ranked EDU needs a label")


# ---------------------------------------------------------------------------
# traversal helpers


def internal_nodes(tree: RSTTree) -> list[Internal]:
    """Internal nodes in pre-order (root, left subtree, right subtree)."""
    out = []
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Internal):
            out.append(node)
            stack.append(node.right)
            stack.append(node.left)
    return out


def all_nodes(tree: RSTTree) -> list[RSTTree]:
    out = []
    stack = [tree]
    while stack:
        node = stack.pop()
        out.append(node)
        if isinstance(node, Internal):
            stack.append(node.right)
            stack.append(node.left)
    return out


def leaves(tree: RSTTree) -> list[int]:
    return [n.edu for n in all_nodes(tree) if isinstance(n, Leaf)]


def validate_tree(tree: RSTTree, q: Optional[int] = None) -> None:
    """Check leaves are 1..q in order; raises :class:`MalformedTreeError`."""
    got = leaves(tree)
    expected = list(range(tree.start, tree.end + 1))
    if got != expected:
        raise MalformedTreeError(f"leaves {got} are not contiguous")
    if q is not None and tree.span != (1, q):
        raise MalformedTreeError(f"tree spans {tree.span}, expected (1, {q})")


# ---------------------------------------------------------------------------
# binarization


def binarize_right_heavy(node) -> RSTTree:
    """Turn an n-ary tree into a binary one with right-branching chains.

    ``node(c1..ck)`` becomes ``Internal(c1, node(c2..ck))``; the new nodes keep
    the original relation and take their nuclearity from the status of the
    left child and the combined status of the remainder (N if any child in
    it is a nucleus).
    """
    if isinstance(node, (Leaf, Internal)):
        if isinstance(node, Internal):
            return Internal(
                binarize_right_heavy(node.left),
                binarize_right_heavy(node.right),
                node.nuclearity,
                node.relation,
            )
        return node
    if not isinstance(node, NaryNode):
        raise MalformedTreeError(f"unexpected node type {type(node).__name__}")
    k = len(node.children)
    if k < 2:
        raise MalformedTreeError(f"internal node with {k} child(ren)")
    if len(node.statuses) != k or set(node.statuses) - {"N", "S"}:
        raise MalformedTreeError(f"statuses {node.statuses!r} do not match {k} children")
    children = [binarize_right_heavy(c) for c in node.children]

    right = children[-1]
    right_status = node.statuses[-1]
    for i in range(k - 2, -1, -1):
        nuc = Nuclearity.from_statuses(node.statuses[i], right_status)
        right = Internal(children[i], right, nuc, node.relation)
        right_status = "N" if "N" in node.statuses[i:] else "S"
    return right


# ---------------------------------------------------------------------------
# canonical order


def tree_to_order(tree: RSTTree) -> CanonicalOrder:
    """Pre-order split ranks and labels, indexed by split EDU."""
    q = tree.end - tree.start + 1
    offset = tree.start
    ranks: list = [None] * q
    labels: list = [None] * q
    for rank, node in enumerate(internal_nodes(tree), start=1):
        s = node.split - offset
        ranks[s] = rank
        labels[s] = node.label
    return CanonicalOrder(tuple(ranks), tuple(labels))


def match_gold(seg: Segment, order: CanonicalOrder):
    """Best reachable gold split for ``seg``: lowest rank among ``m..n-1``.

    Returns ``(split, label)``.
    """
    m, n = seg
    if n <= m:
        raise ValueError(f"segment {tuple(seg)} cannot be split")
    ranks = order.ranks
    split = min(range(m, n), key=lambda i: ranks[i - 1])
    return split, order.labels[split - 1]


def order_to_tree(order: CanonicalOrder, strict: bool = True) -> RSTTree:
    """Rebuild the tree described by ``order``.

    With ``strict`` the ranks must be exactly a pre-order numbering; a
    permutation that is not raises :class:`MalformedOrderError`.
    """
    order.validate()
    q = len(order)

    def build(m: int, n: int) -> RSTTree:
        if m == n:
            return Leaf(m)
        s, (nuc, rel) = match_gold(Segment(m, n), order)
        return Internal(build(m, s), build(s + 1, n), nuc, rel)

    tree = build(1, q)
    if strict and tree_to_order(tree).ranks != order.ranks:
        raise MalformedOrderError("ranks are not a pre-order numbering of any tree")
    return tree


def gold_derivation(order: CanonicalOrder) -> list[tuple[Segment, int, Label]]:
    """Segments visited by the FIFO split procedure following ``order``."""
    from collections import deque

    q = len(order)
    out = []
    queue = deque([Segment(1, q)] if q > 1 else [])
    while queue:
        seg = queue.popleft()
        split, label = match_gold(seg, order)
        out.append((seg, split, label))
        for child in (Segment(seg.m, split), Segment(split + 1, seg.n)):
            if child.splittable:
                queue.append(child)
    return out


# ---------------------------------------------------------------------------
# random trees


def _catalan(n: int) -> int:
    return comb(2 * n, n) // (n + 1)


def random_shape_split(rng, m: int, n: int) -> int:
    """Split point for a uniformly random binary shape over ``m..n``."""
    leaves_n = n - m + 1
    # weight of left size k: C(k-1) * C(leaves_n-k-1)
    weights = [_catalan(k - 1) * _catalan(leaves_n - k - 1) for k in range(1, leaves_n)]
    total = sum(weights)
    r = int(rng.integers(0, total)) if total < 2**63 else _big_randint(rng, total)
    acc = 0
    for k, w in enumerate(weights, start=1):
        acc += w
        if r < acc:
            return m + k - 1
    raise AssertionError("unreachable")


def _big_randint(rng, total: int) -> int:
    bits = total.bit_length()
    while True:
        words = rng.integers(0, 2**32, size=(bits + 31) // 32, dtype="uint64")
        value = 0
        for w in words:
            value = (value << 32) | int(w)
        value >>= 32 * len(words) - bits
        if value < total:
            return value


def random_binary_tree(
    rng,
    q: int,
    relations: Sequence[str] = ("elaboration",),
    start: int = 1,
) -> RSTTree:
    """Uniformly random binary shape over ``q`` EDUs with random labels."""
    if q < 1:
        raise ValueError("q must be >= 1")
    nucs = list(Nuclearity)

    def build(m: int, n: int) -> RSTTree:
        if m == n:
            return Leaf(m)
        s = random_shape_split(rng, m, n)
        nuc = nucs[int(rng.integers(0, 3))]
        rel = relations[int(rng.integers(0, len(relations)))]
        return Internal(build(m, s), build(s + 1, n), nuc, rel)

    return build(start, start + q - 1)
