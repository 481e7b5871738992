"""Association-rule generation and scoring over mined frequent itemsets.

Candidate rules are the 2-partitions of each frequent itemset of size two or
more.  Metrics come from exact support counts, divided only at the last
step: rsupp = supp(X u Y)/n, confidence = supp(X u Y)/supp(X) and
lift = confidence / rsupp(Y).  Thresholds compare with >= and no epsilon.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Sequence

from .model import (
    AssociationRule,
    ConfigError,
    FrequentItemset,
    ItemClass,
    Itemset,
    MiningConsistencyError,
    RuleMetrics,
)

SupportIndex = dict[Itemset, int]


@dataclass(frozen=True)
class RuleFilter:
    """Constraints applied while generating rules.

    `max_consequent_size=None` lifts the single-item default and enumerates
    every proper subset as a consequent.
    """

    min_conf: float
    min_lift: float | None = None
    consequent_classes: frozenset[ItemClass] | None = None
    max_consequent_size: int | None = 1

    def __post_init__(self) -> None:
        if not 0 <= self.min_conf <= 1:
            raise ConfigError(f"min_conf must be in [0, 1], got {self.min_conf!r}")
        if self.min_lift is not None and self.min_lift < 0:
            raise ConfigError("min_lift must be non-negative")
        if self.max_consequent_size is not None and self.max_consequent_size < 1:
            raise ConfigError("max_consequent_size must be >= 1")


def build_index(frequents: Iterable[FrequentItemset]) -> SupportIndex:
    return {f.items: f.support for f in frequents}


def support_lookup(itemset: Itemset, index: SupportIndex) -> int:
    """Exact absolute support of a mined itemset.

    Downward closure guarantees every subset of a frequent itemset was
    mined, so a miss indicates a mining bug rather than bad input.
    """
    try:
        return index[itemset]
    except KeyError:
        raise MiningConsistencyError(
            f"itemset {itemset!r} missing from the frequent-itemset index"
        ) from None


def score(antecedent: Itemset, consequent: Itemset, index: SupportIndex, n: int) -> RuleMetrics:
    """Metrics for antecedent -> consequent from the support index."""
    union = tuple(sorted(antecedent + consequent))
    support_abs = support_lookup(union, index)
    supp_x = support_lookup(antecedent, index)
    supp_y = support_lookup(consequent, index)
    if supp_x == 0:
        raise MiningConsistencyError("zero-support antecedent; confidence undefined")
    confidence = support_abs / supp_x
    return RuleMetrics(
        support_abs=support_abs,
        rsupp=support_abs / n,
        confidence=confidence,
        lift=confidence / (supp_y / n),
    )


def _canonical_sort(rules: list[AssociationRule]) -> None:
    rules.sort(
        key=lambda r: (-r.metrics.lift, -r.metrics.confidence, r.antecedent, r.consequent)
    )


def _passes(
    rule_filter: RuleFilter,
    consequent: Itemset,
    metrics: RuleMetrics,
    class_of: Callable[[int], ItemClass] | None,
) -> bool:
    if metrics.confidence < rule_filter.min_conf:
        return False
    if rule_filter.min_lift is not None and metrics.lift < rule_filter.min_lift:
        return False
    if rule_filter.consequent_classes is not None:
        assert class_of is not None
        if any(class_of(i) not in rule_filter.consequent_classes for i in consequent):
            return False
    return True


def generate_rules(
    frequents: Sequence[FrequentItemset],
    n: int,
    rule_filter: RuleFilter,
    class_of: Callable[[int], ItemClass] | None = None,
) -> list[AssociationRule]:
    """Generate scored rules from each frequent itemset's 2-partitions.

    Output is sorted by lift descending, then confidence descending, then
    antecedent and consequent item ids.  `class_of` is required when the
    filter constrains consequent classes.
    """
    if rule_filter.consequent_classes is not None and class_of is None:
        raise ConfigError("consequent class filter requires an item class lookup")
    index = build_index(frequents)
    rules: list[AssociationRule] = []
    for f in frequents:
        z = f.items
        if len(z) < 2:
            continue
        max_size = len(z) - 1
        if rule_filter.max_consequent_size is not None:
            max_size = min(max_size, rule_filter.max_consequent_size)
        for size in range(1, max_size + 1):
            for consequent in combinations(z, size):
                antecedent = tuple(i for i in z if i not in consequent)
                metrics = score(antecedent, consequent, index, n)
                if _passes(rule_filter, consequent, metrics, class_of):
                    rules.append(AssociationRule(antecedent, consequent, metrics))
    _canonical_sort(rules)
    return rules


def refilter_rules(
    rules: Sequence[AssociationRule],
    rule_filter: RuleFilter,
    class_of: Callable[[int], ItemClass] | None = None,
) -> list[AssociationRule]:
    """Apply a stricter filter to already generated rules, keeping the order."""
    if rule_filter.consequent_classes is not None and class_of is None:
        raise ConfigError("consequent class filter requires an item class lookup")
    kept = [
        r
        for r in rules
        if (
            rule_filter.max_consequent_size is None
            or len(r.consequent) <= rule_filter.max_consequent_size
        )
        and _passes(rule_filter, r.consequent, r.metrics, class_of)
    ]
    return kept


# ---------------------------------------------------------------------------
# Text formats: rule table and scatter data
# ---------------------------------------------------------------------------

RULES_HEADER = "antecedent;consequent;support;confidence;lift"


def _fmt_metric(x: float, full_precision: bool) -> str:
    return repr(x) if full_precision else f"{x:.3f}"


def rules_table_text(
    rules: Sequence[AssociationRule],
    label_of: Callable[[int], str],
    *,
    full_precision: bool = False,
) -> str:
    """Semicolon-delimited rule table; itemsets are |-joined labels.

    Metrics render with 3 decimals by default, full float precision on
    request.
    """
    lines = [RULES_HEADER]
    for r in rules:
        ante = "|".join(label_of(i) for i in r.antecedent)
        cons = "|".join(label_of(i) for i in r.consequent)
        m = r.metrics
        lines.append(
            ";".join(
                (
                    ante,
                    cons,
                    _fmt_metric(m.rsupp, full_precision),
                    _fmt_metric(m.confidence, full_precision),
                    _fmt_metric(m.lift, full_precision),
                )
            )
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RuleRow:
    """One parsed rule-table row, by label."""

    antecedent: tuple[str, ...]
    consequent: tuple[str, ...]
    support: float
    confidence: float
    lift: float


def parse_rules_table(text: str) -> list[RuleRow]:
    from .model import DataError

    lines = text.splitlines()
    if not lines or lines[0] != RULES_HEADER:
        raise DataError(f"rule table: missing header {RULES_HEADER!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(";")
        if len(parts) != 5:
            raise DataError(f"rule table line {lineno}: expected 5 fields")
        ante, cons, supp, conf, lift = parts
        try:
            rows.append(
                RuleRow(
                    antecedent=tuple(ante.split("|")),
                    consequent=tuple(cons.split("|")),
                    support=float(supp),
                    confidence=float(conf),
                    lift=float(lift),
                )
            )
        except ValueError:
            raise DataError(f"rule table line {lineno}: unparseable metric") from None
    return rows
