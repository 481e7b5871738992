"""Frequent-itemset mining via FP-Growth.

The algorithm takes two passes over the transaction database: the first
counts item supports and fixes the frequency-descending item order, the
second compresses the transactions into a prefix tree whose header table
chains all nodes of each item.  Mining then recurses over conditional
pattern bases, with a direct combination enumeration once a (sub)tree
degenerates to a single path.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import Callable, Iterable, Sequence

from .model import ConfigError, FrequentItemset, TransactionDB

FList = list[tuple[int, int]]
"""Frequent items as (item_id, support) pairs, support descending, id ascending."""


def absolute_minsup(minsup_rel: float, n: int) -> int:
    """Smallest absolute count satisfying a relative support threshold.

    Uses the ceiling of minsup_rel * n, with a guard so that products that
    are mathematically integral (0.2 * 5) do not round up off a one-ulp
    float excess.  Clamped to at least 1.
    """
    if not 0 < minsup_rel <= 1:
        raise ConfigError(f"relative minimum support must be in (0, 1], got {minsup_rel!r}")
    t = minsup_rel * n
    nearest = round(t)
    count = nearest if abs(t - nearest) <= 1e-9 * max(1.0, abs(t)) else math.ceil(t)
    return max(1, count)


class FPNode:
    __slots__ = ("item", "count", "parent", "children", "next_link")

    def __init__(self, item: int | None, count: int, parent: "FPNode | None"):
        self.item = item
        self.count = count
        self.parent = parent
        self.children: dict[int, FPNode] = {}
        self.next_link: FPNode | None = None


class _Header:
    __slots__ = ("total", "head", "tail")

    def __init__(self) -> None:
        self.total = 0
        self.head: FPNode | None = None
        self.tail: FPNode | None = None

    def append(self, node: FPNode) -> None:
        if self.tail is None:
            self.head = node
        else:
            self.tail.next_link = node
        self.tail = node


class FPTree:
    """Prefix tree over frequent items with per-item node-link chains."""

    def __init__(self, order: FList, minsup_abs: int):
        self.root = FPNode(None, 0, None)
        self.order = order
        self.minsup_abs = minsup_abs
        self.header: dict[int, _Header] = {item: _Header() for item, _ in order}
        self._rank = {item: r for r, (item, _) in enumerate(order)}

    def insert(self, items: Sequence[int], count: int) -> None:
        """Insert one transaction or prefix path already in F-list order."""
        node = self.root
        for item in items:
            child = node.children.get(item)
            if child is None:
                child = FPNode(item, 0, node)
                node.children[item] = child
                self.header[item].append(child)
            child.count += count
            node = child

    def add_filtered(self, items: Iterable[int], count: int = 1) -> None:
        """Filter to frequent items, reorder per F-list, then insert."""
        rank = self._rank
        kept = sorted((i for i in items if i in rank), key=rank.__getitem__)
        if kept:
            self.insert(kept, count)
        for item in kept:
            self.header[item].total += count

    @classmethod
    def from_paths(cls, paths: Sequence[tuple[Sequence[int], int]], minsup_abs: int) -> "FPTree":
        """Build a conditional tree, re-deriving the local F-list from `paths`."""
        counts: dict[int, int] = {}
        for items, count in paths:
            for item in items:
                counts[item] = counts.get(item, 0) + count
        order = sorted(
            ((i, c) for i, c in counts.items() if c >= minsup_abs),
            key=lambda ic: (-ic[1], ic[0]),
        )
        tree = cls(order, minsup_abs)
        for items, count in paths:
            tree.add_filtered(items, count)
        return tree

    def single_path(self) -> list[tuple[int, int]] | None:
        """Return the (item, count) chain if the tree is one path, else None."""
        path: list[tuple[int, int]] = []
        node = self.root
        while node.children:
            if len(node.children) > 1:
                return None
            node = next(iter(node.children.values()))
            path.append((node.item, node.count))  # type: ignore[arg-type]
        return path

    def prefix_paths(self, item: int) -> list[tuple[list[int], int]]:
        """Conditional pattern base: prefix paths of every node of `item`."""
        paths = []
        node = self.header[item].head
        while node is not None:
            prefix: list[int] = []
            parent = node.parent
            while parent is not None and parent.item is not None:
                prefix.append(parent.item)
                parent = parent.parent
            if prefix:
                prefix.reverse()
                paths.append((prefix, node.count))
            node = node.next_link
        return paths


def build_flist(db: TransactionDB, minsup_rel: float) -> tuple[FList, int]:
    """First scan: frequent items sorted by support descending, id ascending."""
    minsup_abs = absolute_minsup(minsup_rel, db.n)
    counts: dict[int, int] = {}
    for t in db.transactions:
        for item in t.items:
            counts[item] = counts.get(item, 0) + 1
    flist = sorted(
        ((i, c) for i, c in counts.items() if c >= minsup_abs),
        key=lambda ic: (-ic[1], ic[0]),
    )
    return flist, minsup_abs


def build_fptree(db: TransactionDB, flist: FList, minsup_abs: int) -> FPTree:
    """Second scan: compress the database into the FP-tree."""
    tree = FPTree(flist, minsup_abs)
    rank = {item: r for r, (item, _) in enumerate(flist)}
    for t in db.transactions:
        kept = sorted((i for i in t.items if i in rank), key=rank.__getitem__)
        if kept:
            tree.insert(kept, 1)
    for item, support in flist:
        tree.header[item].total = support
    return tree


def mine(tree: FPTree) -> list[FrequentItemset]:
    """All itemsets with support >= the tree's threshold, canonically sorted.

    Canonical order is ascending lexicographic on the item-id tuples, which
    makes the output independent of recursion order.
    """
    out: list[FrequentItemset] = []
    _grow(tree, (), out)
    out.sort(key=lambda f: f.items)
    return out


def _grow(tree: FPTree, suffix: tuple[int, ...], out: list[FrequentItemset]) -> None:
    path = tree.single_path()
    if path is not None:
        items = [i for i, _ in path]
        counts = [c for _, c in path]
        for r in range(1, len(path) + 1):
            for combo in combinations(range(len(path)), r):
                # counts never increase along a single path, so the deepest
                # chosen node carries the combination's support
                itemset = tuple(sorted(suffix + tuple(items[j] for j in combo)))
                out.append(FrequentItemset(itemset, counts[combo[-1]]))
        return
    for item, _ in reversed(tree.order):
        support = tree.header[item].total
        new_suffix = tuple(sorted(suffix + (item,)))
        out.append(FrequentItemset(new_suffix, support))
        base = tree.prefix_paths(item)
        if not base:
            continue
        cond = FPTree.from_paths(base, tree.minsup_abs)
        if cond.order:
            _grow(cond, new_suffix, out)


def frequent_itemsets(db: TransactionDB, minsup_rel: float) -> tuple[list[FrequentItemset], int]:
    """Run both scans and the mining pass; returns (itemsets, minsup_abs)."""
    flist, minsup_abs = build_flist(db, minsup_rel)
    tree = build_fptree(db, flist, minsup_abs)
    return mine(tree), minsup_abs


# ---------------------------------------------------------------------------
# Text format: frequent-itemset dump
# ---------------------------------------------------------------------------


def itemsets_text(frequents: Sequence[FrequentItemset], n: int, label_of: Callable[[int], str]) -> str:
    """One line per itemset: `label1,label2,...<TAB>support<TAB>rsupp`.

    Itemsets are emitted in canonical order; rsupp keeps full float
    precision so the transaction count is recoverable from any line.
    """
    lines = []
    for f in sorted(frequents, key=lambda f: f.items):
        labels = ",".join(label_of(i) for i in f.items)
        lines.append(f"{labels}\t{f.support}\t{f.support / n!r}")
    return "\n".join(lines) + ("\n" if lines else "")


def parse_itemsets(text: str, id_of: Callable[[str], int]) -> tuple[list[FrequentItemset], int]:
    """Parse an itemset dump; returns the itemsets and the transaction count."""
    from .model import DataError  # local import avoids a cycle at module load

    frequents: list[FrequentItemset] = []
    n: int | None = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise DataError(f"itemset dump line {lineno}: expected 3 tab-separated fields")
        labels, raw_support, raw_rsupp = parts
        support = int(raw_support)
        rsupp = float(raw_rsupp)
        if rsupp <= 0:
            raise DataError(f"itemset dump line {lineno}: non-positive relative support")
        line_n = round(support / rsupp)
        if n is None:
            n = line_n
        elif line_n != n:
            raise DataError(f"itemset dump line {lineno}: inconsistent transaction count")
        items = tuple(sorted(id_of(l) for l in labels.split(",") if l))
        frequents.append(FrequentItemset(items, support))
    if n is None:
        raise DataError("itemset dump is empty; transaction count is unrecoverable")
    return frequents, n
