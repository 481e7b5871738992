"""Reference implementations used to cross-check the mining engine.

Everything here recounts supports straight from the raw transactions and
shares no code with the FP-Growth path, including its own copy of the
relative-to-absolute threshold conversion.  The brute-force counter is the
ground truth for small inputs; the level-wise Apriori doubles as the
benchmark baseline and is deliberately left without candidate hash trees.
"""

from __future__ import annotations

import math
from itertools import combinations

from .model import (
    AssociationRule,
    ConfigError,
    FrequentItemset,
    RuleMetrics,
    TransactionDB,
)

_BRUTE_FORCE_MAX_ITEMS = 24


def _absolute_minsup(minsup_rel: float, n: int) -> int:
    # independent copy of the threshold convention: ceil(minsup_rel * n)
    # with a guard for mathematically integral products, minimum 1
    if not 0 < minsup_rel <= 1:
        raise ConfigError(f"relative minimum support must be in (0, 1], got {minsup_rel!r}")
    t = minsup_rel * n
    nearest = round(t)
    count = nearest if abs(t - nearest) <= 1e-9 * max(1.0, abs(t)) else math.ceil(t)
    return max(1, count)


def brute_force_frequent(db: TransactionDB, minsup_rel: float) -> list[FrequentItemset]:
    """Enumerate every subset of the occurring items and count by full scans.

    Refuses databases with more than 24 occurring items; the enumeration is
    exponential by design.
    """
    occurring = sorted({i for t in db.transactions for i in t.items})
    if len(occurring) > _BRUTE_FORCE_MAX_ITEMS:
        raise ConfigError(
            f"brute force bounded to {_BRUTE_FORCE_MAX_ITEMS} items, got {len(occurring)}"
        )
    minsup_abs = _absolute_minsup(minsup_rel, db.n)
    bit = {item: 1 << pos for pos, item in enumerate(occurring)}
    tx_masks = [sum(bit[i] for i in t.items) for t in db.transactions]
    out = []
    for mask in range(1, 1 << len(occurring)):
        support = sum(1 for tm in tx_masks if tm & mask == mask)
        if support >= minsup_abs:
            items = tuple(i for i in occurring if bit[i] & mask)
            out.append(FrequentItemset(items, support))
    out.sort(key=lambda f: f.items)
    return out


def _join_and_prune(level: list[tuple[int, ...]]) -> list[tuple[int, ...]]:
    """Candidates one longer than `level`: prefix join, then subset prune."""
    level_set = set(level)
    candidates = []
    by_prefix: dict[tuple[int, ...], list[int]] = {}
    for itemset in level:
        by_prefix.setdefault(itemset[:-1], []).append(itemset[-1])
    for prefix, lasts in by_prefix.items():
        lasts.sort()
        for a, b in combinations(lasts, 2):
            candidate = prefix + (a, b)
            if all(
                candidate[:j] + candidate[j + 1 :] in level_set for j in range(len(candidate))
            ):
                candidates.append(candidate)
    candidates.sort()
    return candidates


def apriori(db: TransactionDB, minsup_rel: float) -> list[FrequentItemset]:
    """Level-wise mining: generate candidates, then scan the dataset per level."""
    minsup_abs = _absolute_minsup(minsup_rel, db.n)
    counts: dict[int, int] = {}
    for t in db.transactions:
        for item in t.items:
            counts[item] = counts.get(item, 0) + 1
    frequent = {(i,): c for i, c in counts.items() if c >= minsup_abs}
    out = [FrequentItemset(items, c) for items, c in frequent.items()]
    live_items = {i for (i,) in frequent}
    tx_items = [tuple(i for i in t.items if i in live_items) for t in db.transactions]

    level = sorted(frequent)
    k = 1
    while level:
        candidates = _join_and_prune(level)
        if not candidates:
            break
        k += 1
        candidate_set = set(candidates)
        tallies: dict[tuple[int, ...], int] = dict.fromkeys(candidates, 0)
        for items in tx_items:
            if len(items) < k:
                continue
            if math.comb(len(items), k) <= 4 * len(candidate_set):
                for combo in combinations(items, k):
                    if combo in candidate_set:
                        tallies[combo] += 1
            else:
                item_set = set(items)
                for candidate in candidates:
                    if item_set.issuperset(candidate):
                        tallies[candidate] += 1
        level = sorted(c for c, tally in tallies.items() if tally >= minsup_abs)
        out.extend(FrequentItemset(c, tallies[c]) for c in level)
    out.sort(key=lambda f: f.items)
    return out


def oracle_rules(db: TransactionDB, minsup_rel: float, min_conf: float) -> list[AssociationRule]:
    """Exhaustive rule enumeration scored by direct transaction scans.

    Candidates are all 2-partitions of the brute-force frequent itemsets;
    every support in the metrics is recounted from the raw transactions.
    """
    if not 0 <= min_conf <= 1:
        raise ConfigError(f"min_conf must be in [0, 1], got {min_conf!r}")
    frequents = brute_force_frequent(db, minsup_rel)
    tx_sets = [set(t.items) for t in db.transactions]
    n = db.n

    def count(items: tuple[int, ...]) -> int:
        needed = set(items)
        return sum(1 for ts in tx_sets if needed.issubset(ts))

    out = []
    for f in frequents:
        z = f.items
        if len(z) < 2:
            continue
        for size in range(1, len(z)):
            for consequent in combinations(z, size):
                antecedent = tuple(i for i in z if i not in consequent)
                supp_union = count(z)
                supp_x = count(antecedent)
                supp_y = count(consequent)
                confidence = supp_union / supp_x
                if confidence < min_conf:
                    continue
                metrics = RuleMetrics(
                    support_abs=supp_union,
                    rsupp=supp_union / n,
                    confidence=confidence,
                    lift=confidence / (supp_y / n),
                )
                out.append(AssociationRule(antecedent, consequent, metrics))
    out.sort(
        key=lambda r: (-r.metrics.lift, -r.metrics.confidence, r.antecedent, r.consequent)
    )
    return out
