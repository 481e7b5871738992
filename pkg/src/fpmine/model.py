"""Core domain types for the mining pipeline.

Items are dense integer ids managed by an :class:`ItemCatalog`; transactions
are canonical (sorted, deduplicated) id tuples.  Support is always carried as
an absolute transaction count, with relative support derived on demand, so the
mining side stays in exact integer arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator


class FPMineError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(FPMineError):
    """Invalid configuration or usage (CLI exit code 1)."""


class DataError(FPMineError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class MiningConsistencyError(FPMineError):
    """Internal invariant violated; signals a bug in the mining path."""


class ItemClass(Enum):
    """Thematic class of an item, fixed by its source column."""

    SPECIES = "species"
    CLIMATE = "climate"
    SOIL = "soil"
    EARTH_OBS = "earth_obs"

    @classmethod
    def from_prefix(cls, prefix: str) -> "ItemClass":
        try:
            return _PREFIX_CLASSES[prefix]
        except KeyError:
            raise DataError(f"no item class for column prefix {prefix!r}") from None


_PREFIX_CLASSES = {
    "C": ItemClass.CLIMATE,
    "S": ItemClass.SOIL,
    "E": ItemClass.EARTH_OBS,
}

# Separators used by the text export formats; labels must not contain them.
_FORBIDDEN_IN_LABELS = (",", "|", "\t", "\n", "\r", ";")


Itemset = tuple[int, ...]
"""An itemset: strictly ascending tuple of item ids."""


def canonical_itemset(items: Iterable[int]) -> Itemset:
    """Sort and deduplicate `items` into the canonical tuple form."""
    return tuple(sorted(set(items)))


class ItemCatalog:
    """Bidirectional map between item labels and dense integer ids.

    Ids are assigned in first-seen order, so a catalog built from the same
    input in the same order is identical across runs.  Mutable only during
    ingestion; treat as read-only once a TransactionDB is built.
    """

    def __init__(self) -> None:
        self._labels: list[str] = []
        self._classes: list[ItemClass] = []
        self._ids: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self._labels)

    def __iter__(self) -> Iterator[tuple[int, str, ItemClass]]:
        for item_id, label in enumerate(self._labels):
            yield item_id, label, self._classes[item_id]

    def intern(self, label: str, item_class: ItemClass) -> int:
        """Return the id for `label`, assigning the next dense id if new.

        Re-interning a known label with a different class is a catalog
        inconsistency and raises DataError.
        """
        if not label:
            raise DataError("item label must be non-empty")
        for ch in _FORBIDDEN_IN_LABELS:
            if ch in label:
                raise DataError(f"item label {label!r} contains reserved character {ch!r}")
        item_id = self._ids.get(label)
        if item_id is not None:
            if self._classes[item_id] is not item_class:
                raise DataError(
                    f"label {label!r} already interned as {self._classes[item_id].value}, "
                    f"cannot re-intern as {item_class.value}"
                )
            return item_id
        item_id = len(self._labels)
        self._labels.append(label)
        self._classes.append(item_class)
        self._ids[label] = item_id
        return item_id

    def id_of(self, label: str) -> int:
        try:
            return self._ids[label]
        except KeyError:
            raise DataError(f"unknown item label {label!r}") from None

    def label_of(self, item_id: int) -> str:
        try:
            return self._labels[item_id]
        except IndexError:
            raise DataError(f"unknown item id {item_id}") from None

    def class_of(self, item_id: int) -> ItemClass:
        try:
            return self._classes[item_id]
        except IndexError:
            raise DataError(f"unknown item id {item_id}") from None

    def __contains__(self, label: str) -> bool:
        return label in self._ids

    def labels_for(self, items: Iterable[int]) -> tuple[str, ...]:
        return tuple(self.label_of(i) for i in items)


@dataclass(frozen=True)
class Transaction:
    """One observation unit (a plot): a tid plus its canonical item ids."""

    tid: str
    items: Itemset

    @classmethod
    def from_items(cls, tid: str, items: Iterable[int]) -> "Transaction":
        return cls(tid, canonical_itemset(items))

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.items, self.items[1:])):
            raise DataError(f"transaction {self.tid!r}: items not strictly ascending")


@dataclass(frozen=True)
class TransactionDB:
    """Immutable transaction dataset over a fixed catalog."""

    catalog: ItemCatalog
    transactions: tuple[Transaction, ...]

    def __post_init__(self) -> None:
        n_items = len(self.catalog)
        seen_tids: set[str] = set()
        for t in self.transactions:
            if t.tid in seen_tids:
                raise DataError(f"duplicate transaction id {t.tid!r}")
            seen_tids.add(t.tid)
            if t.items and t.items[-1] >= n_items:
                raise DataError(f"transaction {t.tid!r} references item id outside catalog")

    @property
    def n(self) -> int:
        return len(self.transactions)


@dataclass(frozen=True)
class FrequentItemset:
    """An itemset together with its exact absolute support count."""

    items: Itemset
    support: int

    def rsupp(self, n: int) -> float:
        return self.support / n


@dataclass(frozen=True)
class RuleMetrics:
    support_abs: int
    rsupp: float
    confidence: float
    lift: float


@dataclass(frozen=True)
class AssociationRule:
    """Implication antecedent -> consequent over disjoint itemsets."""

    antecedent: Itemset
    consequent: Itemset
    metrics: RuleMetrics

    def __post_init__(self) -> None:
        if not self.antecedent or not self.consequent:
            raise MiningConsistencyError("rule sides must be non-empty")
        if set(self.antecedent) & set(self.consequent):
            raise MiningConsistencyError("rule sides must be disjoint")
