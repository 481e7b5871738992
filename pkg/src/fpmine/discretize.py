"""Table ingestion, discretization and transaction encoding.

Continuous variables are binned by one of three schemes (fixed width,
percentile, even range); categorical variables pass through.  Bin intervals
are half-open [lo, hi) with the final bin closed, so each variable's bins
partition its observed range.  Every surviving row becomes one transaction
holding its present species plus exactly one class item per configured
variable.
"""

from __future__ import annotations

import csv
import math
import re
import statistics
from bisect import bisect_right
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

from .model import (
    ConfigError,
    DataError,
    ItemCatalog,
    ItemClass,
    Transaction,
    TransactionDB,
)

_COLUMN_RE = re.compile(r"^[PSCE]_[A-Za-z0-9]+$")
_MISSING_TOKENS = frozenset({"", "na", "nan", "null", "none"})
_TRUE_TOKENS = frozenset({"1", "true", "yes", "t", "y"})
_FALSE_TOKENS = frozenset({"0", "false", "no", "f", "n"})

# Hard cap on bins per variable; a tiny width over a wide range is a config
# mistake, not a dataset to materialize.
_MAX_BINS = 1_000_000


@dataclass(frozen=True, kw_only=True)
class FixedWidth:
    """Bins of a fixed width anchored at multiples of that width."""

    width: float
    expected_classes: int | None = None
    display: str | None = None
    unit: str = ""

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise ConfigError("fixed-width scheme requires width > 0")
        if self.expected_classes is not None and self.expected_classes < 1:
            raise ConfigError("expected_classes must be >= 1")


@dataclass(frozen=True, kw_only=True)
class Percentile:
    """Bins at equally spaced quantiles of the observed values."""

    n_bins: int
    display: str | None = None
    unit: str = ""

    def __post_init__(self) -> None:
        if self.n_bins < 2:
            raise ConfigError("percentile scheme requires n_bins >= 2")


@dataclass(frozen=True, kw_only=True)
class EvenRange:
    """Equal-width bins spanning exactly [min, max] of the observed values."""

    n_bins: int
    display: str | None = None
    unit: str = ""

    def __post_init__(self) -> None:
        if self.n_bins < 2:
            raise ConfigError("even-range scheme requires n_bins >= 2")


@dataclass(frozen=True, kw_only=True)
class Categorical:
    """Pass-through for variables that are already categorical."""

    display: str | None = None


BinScheme = Union[FixedWidth, Percentile, EvenRange, Categorical]


@dataclass(frozen=True)
class BinEdges:
    """Fitted bin boundaries and rendered labels for one variable.

    `edges` has one more entry than `labels`; bin i covers
    [edges[i], edges[i+1]) except the last bin, which is closed.  A single
    degenerate bin with lo == hi (zero-spread input) is the one permitted
    exception to strict edge monotonicity.
    """

    variable: str
    edges: tuple[float, ...]
    labels: tuple[str, ...]
    display: str = ""

    def __post_init__(self) -> None:
        if len(self.edges) < 2:
            raise DataError(f"{self.variable}: need at least two bin edges")
        if len(self.labels) != len(self.edges) - 1:
            raise DataError(f"{self.variable}: label count does not match bin count")
        degenerate = len(self.edges) == 2 and self.edges[0] == self.edges[1]
        if not degenerate and any(b <= a for a, b in zip(self.edges, self.edges[1:])):
            raise DataError(f"{self.variable}: bin edges not strictly increasing")

    @property
    def n_bins(self) -> int:
        return len(self.labels)

    def item_label(self, bin_label: str) -> str:
        return f"{self.display} {bin_label}" if self.display else bin_label


def _fmt_bound(x: float) -> str:
    s = f"{x:.1f}"
    return "0.0" if s == "-0.0" else s


def _bin_labels(edges: Sequence[float], unit: str) -> tuple[str, ...]:
    return tuple(
        f"({_fmt_bound(lo)}-{_fmt_bound(hi)}){unit}" for lo, hi in zip(edges, edges[1:])
    )


def default_display(variable: str) -> str:
    """Display name used in item labels: the column name minus its prefix."""
    return variable[2:] if _COLUMN_RE.match(variable) else variable


def _width_multiple_floor(value: float, width: float) -> int:
    # round() guards against quotients like 0.3/0.1 landing just below an
    # integer in binary floating point
    return math.floor(round(value / width, 9))


def fixed_width_edges(
    values: Sequence[float],
    width: float,
    *,
    variable: str = "",
    display: str | None = None,
    unit: str = "",
) -> BinEdges:
    """Fit fixed-width bins anchored at multiples of `width`.

    The first edge is the largest multiple of `width` not exceeding the
    minimum value; the last edge is the smallest multiple strictly greater
    than the maximum.  Zero-spread input yields the single anchored bin
    containing the value.
    """
    if not values:
        raise DataError(f"{variable or 'fixed-width'}: no values to bin")
    if not width > 0:
        raise ConfigError("width must be > 0")
    lo_k = _width_multiple_floor(min(values), width)
    hi_k = _width_multiple_floor(max(values), width) + 1
    if hi_k - lo_k > _MAX_BINS:
        raise DataError(f"{variable}: width {width} over observed range yields too many bins")
    edges = tuple(k * width for k in range(lo_k, hi_k + 1))
    return BinEdges(
        variable=variable,
        edges=edges,
        labels=_bin_labels(edges, unit),
        display=default_display(variable) if display is None else display,
    )


def _dedupe_edges(edges: Iterable[float]) -> list[float]:
    out: list[float] = []
    for e in edges:
        if not out or e != out[-1]:
            out.append(e)
    return out


def _degenerate_edges(
    variable: str, value: float, unit: str, display: str | None
) -> BinEdges:
    return BinEdges(
        variable=variable,
        edges=(value, value),
        labels=_bin_labels((value, value), unit),
        display=default_display(variable) if display is None else display,
    )


def percentile_edges(
    values: Sequence[float],
    n_bins: int,
    *,
    variable: str = "",
    display: str | None = None,
    unit: str = "",
) -> BinEdges:
    """Fit bins at quantiles k/n_bins using linear interpolation.

    Duplicate consecutive quantiles collapse into wider bins, so heavily
    tied data yields fewer than `n_bins` bins; zero-spread input yields a
    single degenerate bin.
    """
    if not values:
        raise DataError(f"{variable or 'percentile'}: no values to bin")
    if n_bins < 2:
        raise ConfigError("n_bins must be >= 2")
    lo, hi = min(values), max(values)
    if lo == hi:
        return _degenerate_edges(variable, lo, unit, display)
    cuts = statistics.quantiles(values, n=n_bins, method="inclusive")
    edges = tuple(_dedupe_edges([lo, *cuts, hi]))
    return BinEdges(
        variable=variable,
        edges=edges,
        labels=_bin_labels(edges, unit),
        display=default_display(variable) if display is None else display,
    )


def even_range_edges(
    values: Sequence[float],
    n_bins: int,
    *,
    variable: str = "",
    display: str | None = None,
    unit: str = "",
) -> BinEdges:
    """Fit `n_bins` equal-width bins spanning exactly [min, max]."""
    if not values:
        raise DataError(f"{variable or 'even-range'}: no values to bin")
    if n_bins < 2:
        raise ConfigError("n_bins must be >= 2")
    lo, hi = min(values), max(values)
    if lo == hi:
        return _degenerate_edges(variable, lo, unit, display)
    span = hi - lo
    edges = tuple(
        _dedupe_edges(
            [lo, *(lo + span * k / n_bins for k in range(1, n_bins)), hi]
        )
    )
    return BinEdges(
        variable=variable,
        edges=edges,
        labels=_bin_labels(edges, unit),
        display=default_display(variable) if display is None else display,
    )


def assign_bin(value: float, edges: BinEdges) -> str:
    """Return the label of the bin containing `value`.

    Values outside [first edge, last edge] are a range error; the final edge
    belongs to the last bin.
    """
    e = edges.edges
    if value == e[-1]:
        return edges.labels[-1]
    if value < e[0] or value > e[-1]:
        raise DataError(
            f"{edges.variable or 'variable'}: value {value!r} outside binned range "
            f"[{e[0]!r}, {e[-1]!r}]"
        )
    return edges.labels[bisect_right(e, value) - 1]


def edges_for_scheme(variable: str, values: Sequence[float], scheme: BinScheme) -> BinEdges:
    if isinstance(scheme, FixedWidth):
        return fixed_width_edges(
            values, scheme.width, variable=variable, display=scheme.display, unit=scheme.unit
        )
    if isinstance(scheme, Percentile):
        return percentile_edges(
            values, scheme.n_bins, variable=variable, display=scheme.display, unit=scheme.unit
        )
    if isinstance(scheme, EvenRange):
        return even_range_edges(
            values, scheme.n_bins, variable=variable, display=scheme.display, unit=scheme.unit
        )
    raise ConfigError(f"{variable}: scheme {scheme!r} does not define numeric bins")


# ---------------------------------------------------------------------------
# Table ingestion
# ---------------------------------------------------------------------------


@dataclass
class RawTable:
    """Column-major view of the input table, restricted to used columns.

    Rows with a missing or unparseable cell in any configured column are
    dropped at load time and tallied in `drop_counts`.
    """

    id_column: str
    plot_ids: list[str]
    numeric: dict[str, list[float]]
    categorical: dict[str, list[str]]
    presence: dict[str, list[bool]]
    n_dropped: int = 0
    drop_counts: dict[str, int] = field(default_factory=dict)

    @property
    def n_rows(self) -> int:
        return len(self.plot_ids)


def _parse_presence(token: str) -> bool | None:
    """Presence flag for a species cell; None means unparseable."""
    t = token.strip().lower()
    if t in _MISSING_TOKENS or t in _FALSE_TOKENS:
        return False
    if t in _TRUE_TOKENS:
        return True
    try:
        return float(t) != 0.0
    except ValueError:
        return None


def load_table(
    path: str | Path,
    schemes: Mapping[str, BinScheme],
    species_columns: Sequence[str],
    *,
    id_column: str = "idplot",
    delimiter: str = ",",
) -> RawTable:
    """Parse a delimited plot-by-variable table.

    Every non-id column name must carry a P/S/C/E prefix.  Numeric scheme
    columns are parsed as reals and categorical scheme columns kept as text;
    a row missing any scheme value, or with an unparseable numeric or
    species cell, is dropped and tallied.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file, expected a header row") from None
        rows = list(reader)

    header = [h.strip() for h in header]
    seen: set[str] = set()
    for name in header:
        if name in seen:
            raise DataError(f"{path}: duplicate column {name!r}")
        seen.add(name)
        if name != id_column and not _COLUMN_RE.match(name):
            raise DataError(
                f"{path}: column {name!r} does not match the <prefix>_<name> "
                "naming convention (prefix one of P, S, C, E)"
            )
    if id_column not in seen:
        raise DataError(f"{path}: id column {id_column!r} not found in header")

    col_index = {name: i for i, name in enumerate(header)}
    for var in schemes:
        if var not in col_index:
            raise ConfigError(f"configured variable {var!r} not present in {path}")
        if var in species_columns:
            raise ConfigError(f"column {var!r} listed both as species and as a scheme variable")
    for col in species_columns:
        if col not in col_index:
            raise ConfigError(f"configured species column {col!r} not present in {path}")

    numeric_cols = [v for v, s in schemes.items() if not isinstance(s, Categorical)]
    categorical_cols = [v for v, s in schemes.items() if isinstance(s, Categorical)]

    table = RawTable(
        id_column=id_column,
        plot_ids=[],
        numeric={v: [] for v in numeric_cols},
        categorical={v: [] for v in categorical_cols},
        presence={c: [] for c in species_columns},
    )
    id_idx = col_index[id_column]
    seen_ids: set[str] = set()

    for lineno, row in enumerate(rows, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        bad_column: str | None = None
        num_values: dict[str, float] = {}
        cat_values: dict[str, str] = {}
        pres_values: dict[str, bool] = {}
        for var in numeric_cols:
            token = row[col_index[var]].strip()
            if token.lower() in _MISSING_TOKENS:
                bad_column = var
                break
            try:
                num_values[var] = float(token)
            except ValueError:
                bad_column = var
                break
        if bad_column is None:
            for var in categorical_cols:
                token = row[col_index[var]].strip()
                if token.lower() in _MISSING_TOKENS:
                    bad_column = var
                    break
                cat_values[var] = token
        if bad_column is None:
            for col in species_columns:
                flag = _parse_presence(row[col_index[col]])
                if flag is None:
                    bad_column = col
                    break
                pres_values[col] = flag
        if bad_column is not None:
            table.n_dropped += 1
            table.drop_counts[bad_column] = table.drop_counts.get(bad_column, 0) + 1
            continue

        pid = row[id_idx].strip()
        if not pid:
            raise DataError(f"{path}:{lineno}: empty plot id")
        if pid in seen_ids:
            raise DataError(f"{path}:{lineno}: duplicate plot id {pid!r}")
        seen_ids.add(pid)
        table.plot_ids.append(pid)
        for var, v in num_values.items():
            table.numeric[var].append(v)
        for var, v in cat_values.items():
            table.categorical[var].append(v)
        for col, v in pres_values.items():
            table.presence[col].append(v)

    return table


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------


@dataclass
class VariableReport:
    """Per-variable binning audit entry."""

    variable: str
    kind: str
    n_bins: int
    n_used: int
    expected_classes: int | None
    edges: BinEdges | None


@dataclass
class EncodingReport:
    variables: list[VariableReport]
    n_rows: int
    n_dropped: int
    drop_counts: dict[str, int]
    empty_tids: list[str]
    warnings: list[str]


def _species_label(column: str) -> str:
    return default_display(column)


def encode_transactions(
    table: RawTable,
    schemes: Mapping[str, BinScheme],
    species_columns: Sequence[str],
) -> tuple[TransactionDB, EncodingReport]:
    """One-hot encode a raw table into a transaction database.

    Each row becomes one transaction holding an item per present species and
    exactly one class item per configured variable.  Catalog ids follow
    first-seen order over a fixed row-major scan, so re-encoding the same
    table reproduces the database exactly.  Empty transactions are kept and
    flagged in the report.
    """
    for col in species_columns:
        if col not in table.presence:
            raise ConfigError(f"species column {col!r} missing from loaded table")
    fitted: dict[str, BinEdges] = {}
    for var, scheme in schemes.items():
        if isinstance(scheme, Categorical):
            if var not in table.categorical:
                raise ConfigError(f"categorical variable {var!r} missing from loaded table")
            continue
        if var not in table.numeric:
            raise ConfigError(f"numeric variable {var!r} missing from loaded table")
        if var[0] == "P":
            raise ConfigError(f"{var!r}: plot-info columns carry no item class and cannot be encoded")
        fitted[var] = edges_for_scheme(var, table.numeric[var], scheme)

    catalog = ItemCatalog()
    transactions: list[Transaction] = []
    used_bins: dict[str, set[str]] = {var: set() for var in schemes}
    empty_tids: list[str] = []

    for row in range(table.n_rows):
        items: list[int] = []
        for col in species_columns:
            if table.presence[col][row]:
                items.append(catalog.intern(_species_label(col), ItemClass.SPECIES))
        for var, scheme in schemes.items():
            if isinstance(scheme, Categorical):
                value = table.categorical[var][row]
                display = scheme.display if scheme.display is not None else default_display(var)
                label = f"{display} {value}" if display else value
            else:
                edges = fitted[var]
                bin_label = assign_bin(table.numeric[var][row], edges)
                label = edges.item_label(bin_label)
            used_bins[var].add(label)
            items.append(catalog.intern(label, ItemClass.from_prefix(var[0])))
        if not items:
            empty_tids.append(table.plot_ids[row])
        transactions.append(Transaction.from_items(table.plot_ids[row], items))

    variables: list[VariableReport] = []
    warnings: list[str] = []
    for var, scheme in schemes.items():
        if isinstance(scheme, Categorical):
            n_used = len(used_bins[var])
            variables.append(VariableReport(var, "categorical", n_used, n_used, None, None))
            continue
        edges = fitted[var]
        n_used = len(used_bins[var])
        expected = scheme.expected_classes if isinstance(scheme, FixedWidth) else None
        kind = type(scheme).__name__.lower()
        variables.append(VariableReport(var, kind, edges.n_bins, n_used, expected, edges))
        if expected is not None and n_used != expected:
            warnings.append(
                f"{var}: realized {n_used} classes, scheme expects {expected} "
                "(realized counts depend on the data range)"
            )
    if empty_tids:
        warnings.append(f"{len(empty_tids)} transaction(s) carry no items")

    db = TransactionDB(catalog=catalog, transactions=tuple(transactions))
    report = EncodingReport(
        variables=variables,
        n_rows=table.n_rows,
        n_dropped=table.n_dropped,
        drop_counts=dict(table.drop_counts),
        empty_tids=empty_tids,
        warnings=warnings,
    )
    return db, report


# ---------------------------------------------------------------------------
# Text formats: transaction file and catalog sidecar
# ---------------------------------------------------------------------------


def transactions_text(db: TransactionDB) -> str:
    """Serialize transactions as `tid<TAB>label1,label2,...` lines.

    Labels appear in catalog (item id) order, which transactions already
    store.
    """
    lines = []
    for t in db.transactions:
        labels = ",".join(db.catalog.label_of(i) for i in t.items)
        lines.append(f"{t.tid}\t{labels}")
    return "\n".join(lines) + ("\n" if lines else "")


def catalog_text(catalog: ItemCatalog) -> str:
    """Serialize the catalog sidecar as `item_id,label,class` CSV."""
    rows = ["item_id,label,class"]
    for item_id, label, item_class in catalog:
        rows.append(f"{item_id},{label},{item_class.value}")
    return "\n".join(rows) + "\n"


def parse_catalog(text: str) -> ItemCatalog:
    catalog = ItemCatalog()
    lines = text.splitlines()
    if not lines or lines[0] != "item_id,label,class":
        raise DataError("catalog sidecar: missing item_id,label,class header")
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise DataError(f"catalog sidecar line {lineno}: expected 3 fields")
        raw_id, label, class_name = parts
        try:
            item_class = ItemClass(class_name)
        except ValueError:
            raise DataError(f"catalog sidecar line {lineno}: unknown class {class_name!r}") from None
        item_id = catalog.intern(label, item_class)
        if str(item_id) != raw_id:
            raise DataError(f"catalog sidecar line {lineno}: ids not dense or out of order")
    return catalog


def parse_transactions(text: str, catalog: ItemCatalog) -> TransactionDB:
    transactions = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line:
            continue
        tid, sep, labels = line.partition("\t")
        if not sep:
            raise DataError(f"transaction file line {lineno}: missing tab separator")
        items = [catalog.id_of(l) for l in labels.split(",") if l]
        transactions.append(Transaction.from_items(tid, items))
    return TransactionDB(catalog=catalog, transactions=tuple(transactions))
