"""Wide-table normalization: FD discovery, 3NF synthesis, row provenance.

discover_fds finds all minimal functional dependencies (lhs size capped)
that hold exactly on the table, by stripped-partition refinement. decompose
selects a non-redundant subset of them, synthesizes one table per group of
equivalent determinants plus a root table for the candidate key, and
builds the two provenance structures everything downstream relies on: the
RowID map (wide row -> per-table row id) and the join bitmap index.

Determinant equivalence needs one extra rule the textbook synthesis lacks:
when two determinant sets imply each other (a bijection like an id column
and a unique name column), the reverse dependency pointing at the
earlier-sorted determinant is dropped before right-reduction. Without this
the equivalent groups merge into one table; with it each determinant keeps
its own table and the chain id -> name -> dependent decomposes into two
joinable tables.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .bitmap import JoinBitmapIndex
from .core import FunctionalDependency, WideTable

MAX_DISCOVER_COLUMNS = 16

_NULLS = object()  # NULLs form a single partition group


def _canon(v):
    return _NULLS if v is None else v


def _column_partition(t: WideTable, col: str):
    groups = {}
    i = t.col(col)
    for r, row in enumerate(t.rows):
        groups.setdefault(_canon(row[i]), []).append(r)
    return [g for g in groups.values() if len(g) > 1]


def _product(p1, p2, n: int):
    marker = [None] * n
    for i, cls in enumerate(p1):
        for r in cls:
            marker[r] = i
    out = []
    for cls in p2:
        bucket = {}
        for r in cls:
            m = marker[r]
            if m is not None:
                bucket.setdefault(m, []).append(r)
        out.extend(rows for rows in bucket.values() if len(rows) > 1)
    return out


def _error(p):
    return sum(len(c) - 1 for c in p)


def discover_fds(t: WideTable, max_lhs: int = 3, max_columns: int = MAX_DISCOVER_COLUMNS):
    """All minimal FDs with |lhs| <= max_lhs holding exactly on t.

    Output is grouped by lhs and deterministically ordered by
    (lhs size, lhs names); NULLs compare as one value.
    """
    if len(t.columns) > max_columns:
        raise ValueError(
            f"{len(t.columns)} columns exceeds the discovery limit of {max_columns}"
        )
    cols = sorted(t.columns)
    n = len(t.rows)
    parts = {(c,): _column_partition(t, c) for c in cols}
    errors = {lhs: _error(p) for lhs, p in parts.items()}
    minimal = {c: [] for c in cols}  # rhs column -> minimal determinant sets

    def has_smaller_determinant(lhs_set, a):
        return any(d <= lhs_set for d in minimal[a])

    from itertools import combinations

    level = [(c,) for c in cols]
    for size in range(1, max_lhs + 1):
        if size > 1:
            nxt = []
            for lhs in combinations(cols, size):
                head, tail = lhs[:-1], lhs[-1:]
                if head not in parts or tail not in parts:
                    continue
                parts[lhs] = _product(parts[head], parts[tail], n)
                errors[lhs] = _error(parts[lhs])
                nxt.append(lhs)
            level = nxt
        for lhs in level:
            lhs_set = frozenset(lhs)
            for a in cols:
                if a in lhs_set or has_smaller_determinant(lhs_set, a):
                    continue
                joint = _product(parts[lhs], parts[(a,)], n)
                if _error(joint) == errors[lhs]:
                    minimal[a].append(lhs_set)

    pairs = sorted(
        (tuple(sorted(lhs)), a) for a, ds in minimal.items() for lhs in ds
    )
    grouped = {}
    for lhs, a in pairs:
        grouped.setdefault(lhs, []).append(a)
    out = [
        FunctionalDependency(lhs, tuple(sorted(rhs)))
        for lhs, rhs in grouped.items()
    ]
    out.sort(key=lambda fd: (len(fd.lhs), fd.lhs))
    return out


def split_pairs(fds):
    """Flatten grouped FDs into (lhs frozenset, rhs column) pairs."""
    return [(frozenset(fd.lhs), a) for fd in fds for a in fd.rhs]


def fd_closure(attrs, pairs) -> frozenset:
    closed = set(attrs)
    changed = True
    while changed:
        changed = False
        for lhs, a in pairs:
            if a not in closed and lhs <= closed:
                closed.add(a)
                changed = True
    return frozenset(closed)


def candidate_key(columns, pairs):
    """Greedy key minimization, trying to shed columns in descending name
    order first; returns the key in the table's column order."""
    everything = frozenset(columns)
    key = set(columns)
    for col in sorted(columns, reverse=True):
        if col in key and fd_closure(key - {col}, pairs) == everything:
            key.remove(col)
    return tuple(c for c in columns if c in key)


def _validate_fds(t: WideTable, pairs):
    for lhs, a in pairs:
        idx = [t.col(c) for c in sorted(lhs)]
        ai = t.col(a)
        seen = {}
        for row in t.rows:
            k = tuple(_canon(row[i]) for i in idx)
            v = _canon(row[ai])
            if seen.setdefault(k, v) != v:
                raise ValueError(
                    f"FD {','.join(sorted(lhs))} -> {a} does not hold on the table"
                )


def select_cover(pairs):
    """Reduce FD pairs to the decomposition cover.

    Step 1 breaks determinant-equivalence cycles: drop X -> a when an
    equivalent determinant Y sorted before X contains a. Step 2 removes
    right-redundant pairs (a derivable from X through the rest) in
    deterministic order.
    """
    entries = sorted({(tuple(sorted(l)), a) for l, a in pairs})
    all_pairs = [(frozenset(l), a) for l, a in entries]
    lhss = sorted({l for l, _ in entries}, key=lambda l: (len(l), l))
    closures = {l: fd_closure(l, all_pairs) for l in lhss}

    def equivalent(x, y):
        return set(y) <= closures[x] and set(x) <= closures[y]

    kept = []
    for lhs, a in entries:
        earlier_equiv = [
            y for y in lhss
            if y != lhs and (len(y), y) < (len(lhs), lhs) and equivalent(lhs, y) and a in y
        ]
        if not earlier_equiv:
            kept.append((lhs, a))

    # right-reduction over the surviving pairs
    working = list(kept)
    for entry in list(working):
        lhs, a = entry
        rest = [(frozenset(l), b) for l, b in working if (l, b) != entry]
        if a in fd_closure(lhs, rest):
            working.remove(entry)
    return working


@dataclass(frozen=True)
class TableDef:
    name: str
    columns: tuple   # data columns, RowID not included
    pk: tuple
    coltypes: tuple

    def coltype(self, col):
        return self.coltypes[self.columns.index(col)]


@dataclass(frozen=True)
class ForeignKey:
    child: str
    column: str
    parent: str


@dataclass
class DecompositionPlan:
    selected: list   # grouped FunctionalDependency list actually used
    key: tuple       # candidate key of the wide table
    pairs: list = field(default_factory=list)  # selected, flattened


@dataclass
class NormalizedSchema:
    tables: list
    fks: list
    plan: DecompositionPlan | None = None

    def table(self, name: str) -> TableDef:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(f"unknown table {name!r}")

    def table_names(self):
        return [t.name for t in self.tables]

    def fk_between(self, a: str, b: str):
        """The fk linking tables a and b in either direction, or None."""
        for fk in self.fks:
            if {fk.child, fk.parent} == {a, b}:
                return fk
        return None


class RowIdMapTable:
    """Wide row -> per-table row id, with a maintained inverse index."""

    def __init__(self, table_names):
        self.table_names = list(table_names)
        self._vectors = []   # per wide row: {table: rowid}
        self._inverse = {t: {} for t in self.table_names}

    def append_row(self, entries: dict):
        r = len(self._vectors)
        self._vectors.append(dict(entries))
        for t, j in entries.items():
            self._inverse[t].setdefault(j, set()).add(r)
        return r

    def get(self, r: int, table: str):
        return self._vectors[r].get(table)

    def vector(self, r: int):
        return [self._vectors[r].get(t) for t in self.table_names]

    def set_entry(self, r: int, table: str, j: int):
        self.clear_entry(r, table)
        self._vectors[r][table] = j
        self._inverse[table].setdefault(j, set()).add(r)

    def clear_entry(self, r: int, table: str):
        j = self._vectors[r].pop(table, None)
        if j is not None:
            self._inverse[table][j].discard(r)

    def inverse(self, table: str, j: int):
        """Wide rows whose provenance includes row j of the table."""
        return sorted(self._inverse[table].get(j, ()))

    def __len__(self):
        return len(self._vectors)


@dataclass
class SchemaBundle:
    """Everything downstream consumes: the (mutable) wide table, the
    normalized schema, materialized table rows, and the two provenance
    structures kept in sync with all of it."""

    wide: WideTable
    schema: NormalizedSchema
    rows: dict            # table name -> list of rows (RowID = list index)
    rowmap: RowIdMapTable
    bitmap: JoinBitmapIndex

    def table_rows(self, name: str):
        return self.rows[name]


def decompose(t: WideTable, fds) -> SchemaBundle:
    """3NF synthesis with provenance. fds must hold on t (checked)."""
    pairs = split_pairs(fds)
    _validate_fds(t, pairs)
    key = candidate_key(t.columns, pairs)
    cover = select_cover(pairs)
    cover_sets = [(frozenset(l), a) for l, a in cover]

    # group surviving determinants by closure equivalence under the cover
    lhss = sorted({l for l, _ in cover}, key=lambda l: (len(l), l))
    classes = {}
    for lhs in lhss:
        ck = fd_closure(lhs, cover_sets)
        classes.setdefault(ck, []).append(lhs)

    def in_wide_order(cols):
        return tuple(c for c in t.columns if c in cols)

    specs = []  # (columns tuple, pk tuple)
    for ck in sorted(classes, key=lambda c: min((len(l), l) for l in classes[c])):
        members = set(classes[ck])
        rep = min(members, key=lambda l: (len(l), l))
        cols = set().union(*(set(l) for l in members))
        cols |= {a for l, a in cover if l in members}
        pk = in_wide_order(rep)
        ordered = pk + tuple(c for c in in_wide_order(cols) if c not in pk)
        specs.append((ordered, pk))

    root_at = next((i for i, (cols, _) in enumerate(specs) if set(key) <= set(cols)), None)
    if root_at is None:
        specs.insert(0, (in_wide_order(key), in_wide_order(key)))
        root_at = 0

    # fk edges on indices: child references parent when the parent's
    # single-column pk appears among the child's columns
    def edges_from(i):
        cols, _ = specs[i]
        for j, (_, pk) in enumerate(specs):
            if j != i and len(pk) == 1 and pk[0] in cols:
                yield j

    reach = {}
    for i in range(len(specs)):
        seen = set()
        frontier = [i]
        while frontier:
            x = frontier.pop()
            for y in edges_from(x):
                if y not in seen:
                    seen.add(y)
                    frontier.append(y)
        reach[i] = seen - {i}

    order = [root_at]
    placed = {root_at}
    frontier = [root_at]
    while frontier:
        nxt = []
        for i in frontier:
            for j in edges_from(i):
                if j not in placed:
                    nxt.append(j)
        nxt = sorted(set(nxt), key=lambda j: (len(reach[j]), specs[j][1]))
        order.extend(nxt)
        placed.update(nxt)
        frontier = nxt
    leftovers = sorted(set(range(len(specs))) - placed, key=lambda j: specs[j][1])
    order.extend(leftovers)

    tables = []
    for pos, i in enumerate(order):
        cols, pk = specs[i]
        tables.append(
            TableDef(
                name=f"T{pos + 1}",
                columns=cols,
                pk=pk,
                coltypes=tuple(t.coltype(c) for c in cols),
            )
        )

    fks = []
    for child in tables:
        for parent in tables:
            if parent.name != child.name and len(parent.pk) == 1 and parent.pk[0] in child.columns:
                fks.append(ForeignKey(child.name, parent.pk[0], parent.name))

    grouped = {}
    for lhs, a in cover:
        grouped.setdefault(lhs, []).append(a)
    selected = [FunctionalDependency(l, tuple(sorted(r))) for l, r in sorted(grouped.items())]
    selected.sort(key=lambda fd: (len(fd.lhs), fd.lhs))
    plan = DecompositionPlan(selected=selected, key=key, pairs=cover_sets)
    schema = NormalizedSchema(tables=tables, fks=fks, plan=plan)

    # materialize rows, dedup on pk, and record provenance
    rows = {tb.name: [] for tb in tables}
    seen_pk = {tb.name: {} for tb in tables}
    rowmap = RowIdMapTable(schema.table_names())
    bitmap = JoinBitmapIndex(schema.table_names(), 0)
    col_at = {c: t.col(c) for c in t.columns}
    for row in t.rows:
        entries = {}
        for tb in tables:
            pkvals = tuple(row[col_at[c]] for c in tb.pk)
            if any(v is None for v in pkvals):
                continue
            k = tuple(_canon(v) for v in pkvals)
            if k not in seen_pk[tb.name]:
                seen_pk[tb.name][k] = len(rows[tb.name])
                rows[tb.name].append([row[col_at[c]] for c in tb.columns])
            entries[tb.name] = seen_pk[tb.name][k]
        r = rowmap.append_row(entries)
        bitmap.append_row()
        for tname, j in entries.items():
            bitmap.set_bit(tname, r)

    return SchemaBundle(wide=t, schema=schema, rows=rows, rowmap=rowmap, bitmap=bitmap)


def lossless_check(bundle: SchemaBundle) -> bool:
    """Natural-joining all tables along fk edges reproduces the wide table's
    distinct tuples. Tables with no fk path from the root are checked as
    distinct projections instead (they cannot extend the join)."""
    t = bundle.wide
    schema = bundle.schema
    root = schema.tables[0]
    acc = [dict(zip(root.columns, row)) for row in bundle.rows[root.name]]
    joined = {root.name}
    progress = True
    while progress:
        progress = False
        for fk in schema.fks:
            if fk.child in joined and fk.parent not in joined:
                parent = schema.table(fk.parent)
                by_pk = {}
                for row in bundle.rows[parent.name]:
                    by_pk[_canon(row[parent.columns.index(fk.column)])] = row
                nxt = []
                for d in acc:
                    prow = by_pk.get(_canon(d[fk.column]))
                    if prow is None:
                        return False  # fk not total: join loses the row
                    merged = dict(d)
                    for c, v in zip(parent.columns, prow):
                        if c in merged:
                            if _canon(merged[c]) != _canon(v):
                                return False
                        else:
                            merged[c] = v
                    nxt.append(merged)
                acc = nxt
                joined.add(fk.parent)
                progress = True

    for tb in schema.tables:
        if tb.name in joined:
            continue
        want = {tuple(_canon(r[t.col(c)]) for c in tb.columns) for r in t.rows}
        got = {tuple(_canon(v) for v in row) for row in bundle.rows[tb.name]}
        if got != want:
            return False

    joined_cols = [c for c in t.columns if any(c in schema.table(n).columns for n in joined)]
    want = {tuple(_canon(r[t.col(c)]) for c in joined_cols) for r in t.rows}
    got = {tuple(_canon(d[c]) for c in joined_cols) for d in acc}
    return got == want


_DDL_TYPES = {
    "ansi": {"int": "BIGINT", "float": "DOUBLE PRECISION", "decimal": "DECIMAL", "text": "TEXT"},
    "mysql": {"int": "BIGINT", "float": "DOUBLE", "decimal": "DECIMAL(65,10)", "text": "TEXT"},
}


def ddl_statements(schema: NormalizedSchema, dialect: str = "ansi", declare_fks: bool = False):
    """CREATE TABLE statements: explicit RowID column plus the data columns.

    PK/FK relationships stay metadata unless declare_fks is set; the tested
    engines join on column names, not on declared constraints.
    """
    types = _DDL_TYPES.get(dialect, _DDL_TYPES["ansi"])
    out = []
    for tb in schema.tables:
        cols = ["RowID BIGINT NOT NULL"]
        cols += [f"{c} {types[tt]}" for c, tt in zip(tb.columns, tb.coltypes)]
        cols.append("PRIMARY KEY (RowID)")
        if declare_fks:
            for fk in schema.fks:
                if fk.child == tb.name:
                    cols.append(
                        f"FOREIGN KEY ({fk.column}) REFERENCES {fk.parent} ({fk.column})"
                    )
        body = ",\n  ".join(cols)
        out.append(f"CREATE TABLE {tb.name} (\n  {body}\n);")
    return out
