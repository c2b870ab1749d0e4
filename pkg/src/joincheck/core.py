"""Shared value model: SQL values, literals, three-valued logic, result sets.

SQL values are represented by plain Python objects:

    NULL    -> None
    INT     -> int
    FLOAT   -> float        (approximate; sign of zero is preserved)
    DECIMAL -> decimal.Decimal
    TEXT    -> str

Python's numeric tower already gives the comparison semantics we need for
result multisets: ints, floats and Decimals compare and hash by exact
numeric value (so 2 == 2.0 == Decimal('2') and -0.0 == 0.0), while text
never equals a number under ==. Predicate evaluation goes through
sql_equal / sql_compare instead, which add NULL propagation and the
text-to-number coercion rule.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation

VALUE_KINDS = ("int", "decimal", "float", "text", "null")


def kind_of(v):
    if v is None:
        return "null"
    if isinstance(v, bool):
        raise TypeError("bool is not a SQL value")
    if isinstance(v, int):
        return "int"
    if isinstance(v, float):
        return "float"
    if isinstance(v, Decimal):
        return "decimal"
    if isinstance(v, str):
        return "text"
    raise TypeError(f"not a SQL value: {v!r}")


def render_literal(v) -> str:
    """Render a value as a SQL literal.

    The three numeric kinds stay distinguishable in text form: ints are bare
    digits, decimals always carry a decimal point and no exponent, floats
    always carry an exponent (the SQL approximate-numeric form). A signed
    zero therefore renders as -0.0e0, keeping its sign. parse_literal
    inverts this for every kind.
    """
    k = kind_of(v)
    if k == "null":
        return "NULL"
    if k == "int":
        return str(v)
    if k == "float":
        if not math.isfinite(v):
            raise ValueError(f"non-finite float not representable: {v!r}")
        s = repr(v)
        return s if ("e" in s or "E" in s) else s + "e0"
    if k == "decimal":
        if not v.is_finite():
            raise ValueError(f"non-finite decimal not representable: {v!r}")
        s = format(v, "f")
        return s if "." in s else s + ".0"
    # text: double embedded single quotes
    return "'" + v.replace("'", "''") + "'"


def parse_literal(s: str):
    """Inverse of render_literal. Raises ValueError on malformed input."""
    if s == "NULL":
        return None
    if s.startswith("'"):
        if len(s) < 2 or not s.endswith("'"):
            raise ValueError(f"unterminated text literal: {s!r}")
        return s[1:-1].replace("''", "'")
    if "e" in s or "E" in s:
        return float(s)
    if "." in s:
        return Decimal(s)
    return int(s)


def _as_number(text: str):
    # SQL-style coercion for text-vs-number comparison: the whole string
    # must parse as a number, otherwise no coercion.
    try:
        return Decimal(text.strip())
    except InvalidOperation:
        return None


def _ordered(a, b):
    """Three-way compare for non-NULL values; None when incomparable."""
    ka, kb = kind_of(a), kind_of(b)
    if ka == "text" and kb == "text":
        return -1 if a < b else (1 if a > b else 0)
    if ka == "text":
        a = _as_number(a)
        if a is None:
            return None
    if kb == "text":
        b = _as_number(b)
        if b is None:
            return None
    # numeric vs numeric: Python compares int/float/Decimal exactly
    return -1 if a < b else (1 if a > b else 0)


def sql_equal(a, b):
    """SQL equality: True, False, or None for unknown (any NULL operand)."""
    if a is None or b is None:
        return None
    c = _ordered(a, b)
    if c is None:
        return False
    return c == 0


def sql_compare(a, op: str, b):
    """Evaluate `a op b` under three-valued logic.

    op is one of =, <>, <, <=, >, >=. Returns True/False/None. An
    incomparable pair (text that does not coerce vs a number) is False for
    every operator, matching the equality rule.
    """
    if a is None or b is None:
        return None
    c = _ordered(a, b)
    if c is None:
        return False
    if op == "=":
        return c == 0
    if op == "<>":
        return c != 0
    if op == "<":
        return c < 0
    if op == "<=":
        return c <= 0
    if op == ">":
        return c > 0
    if op == ">=":
        return c >= 0
    raise ValueError(f"unknown comparison operator {op!r}")


@dataclass
class ResultSet:
    """Unordered multiset of result rows. rows are tuples of values."""

    columns: tuple
    rows: list
    ordered: bool = False


@dataclass
class CompareOutcome:
    match: bool
    missing: list = field(default_factory=list)  # rows in want but not got
    extra: list = field(default_factory=list)    # rows in got but not want

    def __bool__(self):
        return self.match


def _row_counter(rows):
    from collections import Counter

    # Tuples of values are usable Counter keys directly: equal numerics of
    # any kind hash equal, NULL (None) is identical to NULL, text never
    # collides with numbers. This is exactly the comparator's
    # NULL-as-identical multiset semantics.
    return Counter(tuple(r) for r in rows)


def multiset_compare(got: ResultSet, want: ResultSet, mode: str) -> CompareOutcome:
    """Compare result multisets. mode is 'full' or 'subset'.

    full: multiset equality. subset: every row of want appears in got with
    at least its multiplicity (cross-join verification). An arity mismatch
    is a generator bug, not an engine bug, and raises.
    """
    if mode not in ("full", "subset"):
        raise ValueError(f"unknown compare mode {mode!r}")
    arities = {len(r) for r in got.rows} | {len(r) for r in want.rows}
    if len(arities) > 1:
        raise ValueError(f"row arity mismatch: {sorted(arities)}")
    cg, cw = _row_counter(got.rows), _row_counter(want.rows)
    missing = list((cw - cg).elements())
    extra = list((cg - cw).elements()) if mode == "full" else []
    ok = not missing and not extra
    return CompareOutcome(ok, missing, extra)


def result_to_text(rs: ResultSet) -> str:
    """Canonical sorted text form, for golden files and report diffs."""
    lines = sorted("\t".join(render_literal(v) for v in row) for row in rs.rows)
    header = "\t".join(rs.columns)
    return "\n".join([header] + lines)


@dataclass(frozen=True)
class FunctionalDependency:
    lhs: tuple
    rhs: tuple

    def __post_init__(self):
        if not self.lhs or not self.rhs:
            raise ValueError("FD sides must be non-empty")
        if set(self.lhs) & set(self.rhs):
            raise ValueError("FD sides must be disjoint")

    def __str__(self):
        return ",".join(self.lhs) + " -> " + ",".join(self.rhs)


class WideTable:
    """The denormalized source-of-truth table.

    Every row carries an explicit RowID; RowIDs are dense 0..N-1 at
    construction and later insertions append N, N+1, ... so a RowID always
    equals the row's position.
    """

    def __init__(self, columns, coltypes, rows, row_ids=None):
        self.columns = list(columns)
        self.coltypes = list(coltypes)
        if len(self.columns) != len(self.coltypes):
            raise ValueError("columns and coltypes length mismatch")
        bad = set(self.coltypes) - {"int", "float", "decimal", "text"}
        if bad:
            raise ValueError(f"unknown column types: {sorted(bad)}")
        self.rows = [list(r) for r in rows]
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError("row arity mismatch")
        self.row_ids = list(row_ids) if row_ids is not None else list(range(len(self.rows)))
        if self.row_ids != list(range(len(self.rows))):
            raise ValueError("RowIDs must be dense 0..N-1")

    @property
    def next_row_id(self):
        return len(self.rows)

    def col(self, name: str) -> int:
        return self.columns.index(name)

    def coltype(self, name: str) -> str:
        return self.coltypes[self.col(name)]

    def column_values(self, name: str):
        i = self.col(name)
        return [r[i] for r in self.rows]

    def append_row(self, values) -> int:
        if len(values) != len(self.columns):
            raise ValueError("row arity mismatch")
        rid = self.next_row_id
        self.rows.append(list(values))
        self.row_ids.append(rid)
        return rid

    def clone(self) -> "WideTable":
        return WideTable(self.columns, self.coltypes, [list(r) for r in self.rows])

    def __len__(self):
        return len(self.rows)


def load_csv(path) -> WideTable:
    """Load a wide table from CSV: header row names the columns, the literal
    token NULL means NULL, column types are inferred as int, then float,
    then text."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty CSV: missing header") from None
        raw = [row for row in reader]
    for row in raw:
        if len(row) != len(header):
            raise ValueError("CSV row arity mismatch")

    def infer(values):
        cells = [v for v in values if v != "NULL"]
        for typ, conv in (("int", int), ("float", float)):
            try:
                for v in cells:
                    conv(v)
                return typ
            except ValueError:
                continue
        return "text"

    cols = list(zip(*raw)) if raw else [()] * len(header)
    coltypes = [infer(c) for c in cols]
    conv = {"int": int, "float": float, "text": str}
    rows = [
        [None if v == "NULL" else conv[t](v) for v, t in zip(row, coltypes)]
        for row in raw
    ]
    return WideTable(header, coltypes, rows)
