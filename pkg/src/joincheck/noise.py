"""Key-noise injection that keeps the wide table an exact oracle.

Two cases, both of which append one new wide row per injected value:

pk noise (col is the target table's single-column pk): the table cell gets
the noisy value; a new wide row carries the noisy key plus the dependent
columns copied from one affected wide row; every previously-referencing
wide row has its dependent columns nulled and its provenance for the
dependent tables cleared. The old key value keeps appearing in the wide
table rows while the table no longer carries it.

fk noise (col is a foreign-key column of a child table): a new wide row
preserves the dangling parent content (old key plus dependents copied),
then the child cell and the referencing wide rows flip to the noisy value
with dependents nulled and parent-side provenance cleared.

The noise planner only proposes targets for which this bookkeeping is
exactly representable: pk noise on single-column-pk tables, fk noise on
cells whose value occurs exactly once in the child column (otherwise the
preserved dangling row would double-count provenance under right or full
outer joins). Hand-written plans can bypass these rules.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from decimal import Decimal

from .core import WideTable, parse_literal, render_literal
from .normalize import (
    SchemaBundle,
    candidate_key,
    decompose,
    discover_fds,
    fd_closure,
    select_cover,
    split_pairs,
)

INT64_MAX = 2**63 - 1
FLOAT_MAX = 1.7976931348623157e308

# widths commonly used for integer columns; clean() treats all of them as
# boundary values, injection itself always walks down from the widest
_INT_BOUNDARIES = {2**15 - 1, 2**16 - 1, 2**31 - 1, 2**32 - 1, 2**63 - 1}


def is_boundary(v, coltype: str) -> bool:
    if v is None:
        return False
    if coltype == "int":
        return v in _INT_BOUNDARIES
    if coltype == "float":
        import math

        return v == FLOAT_MAX or v == -FLOAT_MAX or (v == 0.0 and math.copysign(1, v) < 0)
    if coltype == "decimal":
        return abs(v) >= Decimal(10) ** 18
    if coltype == "text":
        return len(v) > 0 and set(v) == {"Z"}
    raise ValueError(f"unknown column type {coltype!r}")


def boundary_constants(coltype: str, width: int = 10):
    """Boundary values of a type, used both for noise and for biased
    predicate constants."""
    if coltype == "int":
        return [INT64_MAX, 2**16 - 1]
    if coltype == "float":
        return [-0.0, FLOAT_MAX]
    if coltype == "decimal":
        return [Decimal(10) ** 20]
    if coltype == "text":
        return ["Z" * width]
    raise ValueError(f"unknown column type {coltype!r}")


def clean(t: WideTable, key_columns) -> WideTable:
    """Drop rows carrying NULL or boundary values on any key column;
    surviving rows are renumbered densely from 0."""
    key_idx = [(t.col(c), t.coltypes[t.col(c)]) for c in key_columns]
    kept = [
        row
        for row in t.rows
        if not any(row[i] is None or is_boundary(row[i], tt) for i, tt in key_idx)
    ]
    return WideTable(t.columns, t.coltypes, [list(r) for r in kept])


def key_columns_of(wide: WideTable, fds) -> set:
    """Columns acting as a pk or fk somewhere: the candidate key plus every
    selected determinant."""
    pairs = split_pairs(fds)
    cols = set(candidate_key(wide.columns, pairs))
    for lhs, _ in select_cover(pairs):
        cols.update(lhs)
    return cols


def build_clean_bundle(wide: WideTable, max_lhs: int = 3) -> SchemaBundle:
    """The ingestion pipeline: discover, clean on key columns, re-discover
    on the cleaned rows (cleaning can only strengthen FDs), decompose."""
    fds = discover_fds(wide, max_lhs)
    cleaned = clean(wide, key_columns_of(wide, fds))
    return decompose(cleaned, discover_fds(cleaned, max_lhs))


@dataclass(frozen=True)
class NoiseTarget:
    table: str
    row: int
    column: str
    kind: str            # 'pk' or 'fk'
    replacement: object  # a value; None means SQL NULL


@dataclass
class NoisePlan:
    epsilon: float
    seed: int
    targets: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "epsilon": self.epsilon,
                "seed": self.seed,
                "targets": [
                    {
                        "table": t.table,
                        "row": t.row,
                        "column": t.column,
                        "kind": t.kind,
                        "replacement": render_literal(t.replacement),
                    }
                    for t in self.targets
                ],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "NoisePlan":
        d = json.loads(text)
        return cls(
            epsilon=d["epsilon"],
            seed=d["seed"],
            targets=[
                NoiseTarget(
                    table=t["table"],
                    row=t["row"],
                    column=t["column"],
                    kind=t["kind"],
                    replacement=parse_literal(t["replacement"]),
                )
                for t in d["targets"]
            ],
        )


_NULL_TAKEN = object()


def _fresh_value(coltype: str, taken: set, rng: random.Random, width: int):
    """A replacement value: NULL or a boundary value, never colliding (by
    SQL equality) with anything already in the column or in the plan."""
    options = []
    if _NULL_TAKEN not in taken:
        options.append(None)
    ladder = None
    if coltype == "int":
        ladder = (INT64_MAX - i for i in range(10**6))
    elif coltype == "float":
        ladder = iter([-0.0] + [FLOAT_MAX / 2**i for i in range(900)])
    elif coltype == "decimal":
        ladder = (Decimal(10) ** 20 + i for i in range(10**6))
    elif coltype == "text":
        ladder = ("Z" * (width + i) for i in range(10**6))
    for v in ladder:
        if v not in taken:
            options.append(v)
            break
    if not options:
        raise ValueError(f"replacement domain exhausted for type {coltype}")
    return rng.choice(options)


def plan_noise(bundle: SchemaBundle, epsilon: float, seed: int) -> NoisePlan:
    """Pick ceil-ish epsilon fractions of rows per eligible key column.

    Eligibility is documented on the module; every eligible column gets at
    least one target when epsilon > 0, and epsilon = 0 plans nothing.
    Replacements are unique per column across domain and plan, with at most
    one NULL per column.
    """
    plan = NoisePlan(epsilon=epsilon, seed=seed)
    if epsilon <= 0:
        return plan
    rng = random.Random(f"{seed}/noise")
    wide = bundle.wide
    schema = bundle.schema

    taken_by_col = {}

    def taken(col):
        if col not in taken_by_col:
            taken_by_col[col] = {v for v in wide.column_values(col) if v is not None}
        return taken_by_col[col]

    def pick(col, coltype):
        t = taken(col)
        longest = max((len(v) for v in t if isinstance(v, str)), default=0)
        v = _fresh_value(coltype, t, rng, width=max(10, longest + 1))
        t.add(_NULL_TAKEN if v is None else v)
        return v

    def count(eligible_rows):
        return min(len(eligible_rows), max(1, round(epsilon * len(eligible_rows))))

    for tb in schema.tables:
        if len(tb.pk) != 1:
            continue
        col = tb.pk[0]
        rows = bundle.rows[tb.name]
        if not rows:
            continue
        for j in sorted(rng.sample(range(len(rows)), count(rows))):
            plan.targets.append(
                NoiseTarget(tb.name, j, col, "pk", pick(col, tb.coltype(col)))
            )

    for fk in schema.fks:
        child = schema.table(fk.child)
        if fk.column in child.pk:
            continue  # the pk rule above already covers this cell
        ci = child.columns.index(fk.column)
        rows = bundle.rows[child.name]
        counts = {}
        for row in rows:
            if row[ci] is not None:
                counts[row[ci]] = counts.get(row[ci], 0) + 1
        eligible = [j for j, row in enumerate(rows) if row[ci] is not None and counts[row[ci]] == 1]
        if not eligible:
            continue
        for j in sorted(rng.sample(eligible, count(eligible))):
            plan.targets.append(
                NoiseTarget(child.name, j, fk.column, "fk", pick(fk.column, child.coltype(fk.column)))
            )
    return plan


def _dependents(bundle: SchemaBundle, col: str):
    closure = fd_closure({col}, bundle.schema.plan.pairs)
    cbar = sorted(closure - {col})
    cdep = [
        tb.name
        for tb in bundle.schema.tables
        if set(tb.columns) <= set(closure) | {col}
    ]
    return cbar, cdep


def inject(bundle: SchemaBundle, target: NoiseTarget):
    """Apply one noise target, keeping the wide table, the normalized rows,
    the RowID map and the bitmaps synchronized."""
    schema = bundle.schema
    tb = schema.table(target.table)
    if target.column not in tb.columns:
        raise ValueError(f"{target.column} is not a column of {tb.name}")
    if target.kind == "pk":
        if tb.pk != (target.column,):
            raise ValueError(
                f"pk noise needs a single-column pk; {tb.name} has pk {tb.pk}"
            )
    elif target.kind == "fk":
        if not any(fk.child == tb.name and fk.column == target.column for fk in schema.fks):
            raise ValueError(f"{tb.name}.{target.column} is not a foreign key column")
    else:
        raise ValueError(f"target column kind must be pk or fk, got {target.kind!r}")

    rows = bundle.rows[tb.name]
    if not 0 <= target.row < len(rows):
        raise ValueError(f"{tb.name} has no row {target.row}")
    wide = bundle.wide
    col_at = {c: wide.col(c) for c in wide.columns}
    cbar, cdep = _dependents(bundle, target.column)

    rbar = bundle.rowmap.inverse(tb.name, target.row)
    rep = rbar[0] if rbar else None

    new_row = [None] * len(wide.columns)
    if target.kind == "pk":
        new_row[col_at[target.column]] = target.replacement
        if rep is not None:
            for c in cbar:
                new_row[col_at[c]] = wide.rows[rep][col_at[c]]
    else:
        # preserve the dangling parent content: old key value and dependents
        if rep is not None:
            for c in [target.column, *cbar]:
                new_row[col_at[c]] = wide.rows[rep][col_at[c]]
        else:
            new_row[col_at[target.column]] = rows[target.row][tb.columns.index(target.column)]

    r_new = wide.append_row(new_row)
    bundle.bitmap.append_row()
    entries = {}
    if rep is not None:
        for tname in cdep:
            j = bundle.rowmap.get(rep, tname)
            if j is not None:
                entries[tname] = j
    elif target.kind == "pk":
        entries[tb.name] = target.row
    bundle.rowmap.append_row(entries)
    for tname in entries:
        bundle.bitmap.set_bit(tname, r_new)

    if target.kind == "pk":
        rows[target.row][tb.columns.index(target.column)] = target.replacement
        for r in rbar:
            for c in cbar:
                wide.rows[r][col_at[c]] = None
            for tname in cdep:
                bundle.rowmap.clear_entry(r, tname)
                bundle.bitmap.clear_bit(tname, r)
    else:
        rows[target.row][tb.columns.index(target.column)] = target.replacement
        for r in rbar:
            wide.rows[r][col_at[target.column]] = target.replacement
            for c in cbar:
                wide.rows[r][col_at[c]] = None
            for tname in cdep:
                bundle.rowmap.clear_entry(r, tname)
                bundle.bitmap.clear_bit(tname, r)


def apply_plan(bundle: SchemaBundle, plan: NoisePlan) -> SchemaBundle:
    for target in plan.targets:
        inject(bundle, target)
    return bundle


def verify_consistency(bundle: SchemaBundle) -> bool:
    """True iff the bitmap oracle agrees with brute-force execution over the
    noisy normalized tables, for a probe set covering every table, every fk
    edge under all seven join operators in both directions, and a
    three-table chain when the schema has one."""
    from .core import multiset_compare
    from .oracle import consistency_probes, ground_truth, naive_execute

    for ast in consistency_probes(bundle.schema):
        gt = ground_truth(ast, bundle)
        got = naive_execute(ast, bundle.schema, bundle.rows)
        if not multiset_compare(got, gt.result, gt.mode).match:
            return False
    return True
