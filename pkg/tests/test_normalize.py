"""FD discovery, cover selection, 3NF synthesis, provenance structures."""

import itertools
import random

import pytest

from joincheck.core import FunctionalDependency, WideTable
from joincheck.datasets import numeric_mix_table, shopping_table
from joincheck.normalize import (
    RowIdMapTable,
    candidate_key,
    ddl_statements,
    decompose,
    discover_fds,
    fd_closure,
    lossless_check,
    select_cover,
    split_pairs,
)


def brute_force_minimal_fds(t: WideTable, max_lhs: int):
    """Independent oracle: check every lhs subset against every rhs column
    by direct grouping, then keep the minimal ones."""

    def canon(v):
        return ("null",) if v is None else v

    def holds(lhs, a):
        seen = {}
        li = [t.col(c) for c in lhs]
        ai = t.col(a)
        for row in t.rows:
            k = tuple(canon(row[i]) for i in li)
            v = canon(row[ai])
            if seen.setdefault(k, v) != v:
                return False
        return True

    all_holding = {
        a: [
            frozenset(lhs)
            for size in range(1, max_lhs + 1)
            for lhs in itertools.combinations(sorted(t.columns), size)
            if a not in lhs and holds(lhs, a)
        ]
        for a in t.columns
    }
    pairs = set()
    for a, dets in all_holding.items():
        for lhs in dets:
            if not any(other < lhs for other in dets):
                pairs.add((tuple(sorted(lhs)), a))
    return pairs


class TestDiscoverFds:
    def test_shopping_includes_goods_dependencies(self):
        fds = discover_fds(shopping_table())
        as_map = {fd.lhs: fd.rhs for fd in fds}
        assert as_map[("goodsId",)] == ("goodsName", "price")
        assert as_map[("userId",)] == ("userName",)
        # the name column is unique per goods id on this data, so the
        # reverse dependency is real and must be discovered too
        assert as_map[("goodsName",)] == ("goodsId", "price")
        assert len(fds) == 3

    def test_single_column_table(self):
        t = WideTable(["a"], ["int"], [[1], [2]])
        assert discover_fds(t) == []

    def test_matches_brute_force_on_random_tables(self):
        rng = random.Random(2024)
        for _ in range(25):
            ncols = rng.randint(2, 6)
            cols = [f"c{i}" for i in range(ncols)]
            rows = [
                [rng.randint(0, 3) for _ in cols] for _ in range(rng.randint(1, 50))
            ]
            t = WideTable(cols, ["int"] * ncols, rows)
            got = {(fd.lhs, a) for fd in discover_fds(t) for a in fd.rhs}
            assert got == brute_force_minimal_fds(t, 3)

    def test_nulls_group_as_one_value(self):
        t = WideTable(["a", "b"], ["int", "int"], [[None, 1], [None, 1], [2, 3]])
        fds = {fd.lhs: fd.rhs for fd in discover_fds(t)}
        assert fds[("a",)] == ("b",)

    def test_column_guard(self):
        cols = [f"c{i}" for i in range(17)]
        t = WideTable(cols, ["int"] * 17, [])
        with pytest.raises(ValueError):
            discover_fds(t)

    def test_max_lhs_respected(self):
        # xor-style column: only the pair determines it
        rows = [[a, b, a ^ b] for a in (0, 1) for b in (0, 1)]
        t = WideTable(["a", "b", "x"], ["int"] * 3, rows)
        with_pairs = {fd.lhs for fd in discover_fds(t, max_lhs=2)}
        assert ("a", "b") in with_pairs
        only_singles = {fd.lhs for fd in discover_fds(t, max_lhs=1)}
        assert all(len(l) == 1 for l in only_singles)


def test_fd_closure_and_candidate_key():
    fds = discover_fds(shopping_table())
    pairs = split_pairs(fds)
    assert fd_closure({"goodsId"}, pairs) == {"goodsId", "goodsName", "price"}
    key = candidate_key(shopping_table().columns, pairs)
    assert key == ("orderId", "goodsId", "userId")


def test_select_cover_breaks_the_name_id_cycle():
    fds = discover_fds(shopping_table())
    cover = select_cover(split_pairs(fds))
    assert cover == [
        (("goodsId",), "goodsName"),
        (("goodsName",), "price"),
        (("userId",), "userName"),
    ]


class TestDecomposeShopping:
    def setup_method(self):
        t = shopping_table()
        self.bundle = decompose(t, discover_fds(t))
        self.schema = self.bundle.schema

    def test_four_tables_with_expected_shapes(self):
        shapes = [(t.name, t.columns, t.pk) for t in self.schema.tables]
        assert shapes == [
            ("T1", ("orderId", "goodsId", "userId"), ("orderId", "goodsId", "userId")),
            ("T2", ("userId", "userName"), ("userId",)),
            ("T3", ("goodsId", "goodsName"), ("goodsId",)),
            ("T4", ("goodsName", "price"), ("goodsName",)),
        ]

    def test_three_fk_edges(self):
        got = [(fk.child, fk.column, fk.parent) for fk in self.schema.fks]
        assert got == [
            ("T1", "userId", "T2"),
            ("T1", "goodsId", "T3"),
            ("T3", "goodsName", "T4"),
        ]

    def test_table_rows_dedup_on_pk(self):
        assert self.bundle.rows["T2"] == [[1, "Sven"], [2, "Bob"], [3, "Sven"]]
        assert self.bundle.rows["T3"] == [[101, "flower"], [102, "book"], [103, "pen"]]
        assert self.bundle.rows["T4"] == [["flower", 10], ["book", 20], ["pen", 20]]
        assert len(self.bundle.rows["T1"]) == 8

    def test_map_row_five(self):
        assert self.bundle.rowmap.vector(5) == [5, 1, 2, 2]

    def test_bitmap_all_set_before_noise(self):
        for name in self.schema.table_names():
            assert list(self.bundle.bitmap.bit_of(name).ones()) == list(range(8))

    def test_inverse_map(self):
        assert self.bundle.rowmap.inverse("T2", 0) == [0, 1, 2]
        assert self.bundle.rowmap.inverse("T3", 1) == [1, 4, 7]

    def test_lossless(self):
        assert lossless_check(self.bundle)

    def test_selected_cover_recorded(self):
        sel = [str(fd) for fd in self.schema.plan.selected]
        assert sel == ["goodsId -> goodsName", "goodsName -> price", "userId -> userName"]
        assert self.schema.plan.key == ("orderId", "goodsId", "userId")


def test_decompose_no_fds_single_table():
    t = WideTable(["a", "b"], ["int", "int"], [[1, 2], [3, 4]])
    bundle = decompose(t, [])
    assert len(bundle.schema.tables) == 1
    only = bundle.schema.tables[0]
    assert only.name == "T1" and only.columns == ("a", "b") and only.pk == ("a", "b")
    assert bundle.rows["T1"] == [[1, 2], [3, 4]]
    assert bundle.schema.fks == []
    assert lossless_check(bundle)


def test_decompose_rejects_violated_fd():
    t = WideTable(["a", "b"], ["int", "int"], [[1, 2], [1, 3]])
    with pytest.raises(ValueError):
        decompose(t, [FunctionalDependency(("a",), ("b",))])


def test_decompose_numeric_mix_shape():
    t = numeric_mix_table()
    bundle = decompose(t, discover_fds(t))
    shapes = [(tb.name, tb.columns, tb.pk) for tb in bundle.schema.tables]
    assert shapes == [
        ("T1", ("rid", "tkey", "ikey"), ("rid",)),
        ("T2", ("ikey", "idep"), ("ikey",)),
        ("T3", ("tkey", "fval", "tdep"), ("tkey",)),
    ]
    got = {(fk.child, fk.column, fk.parent) for fk in bundle.schema.fks}
    assert got == {("T1", "ikey", "T2"), ("T1", "tkey", "T3")}
    assert lossless_check(bundle)


def test_decompose_random_tables_lossless():
    rng = random.Random(7)
    for _ in range(20):
        ncols = rng.randint(2, 5)
        cols = [f"c{i}" for i in range(ncols)]
        rows = {tuple(rng.randint(0, 4) for _ in cols) for _ in range(rng.randint(2, 40))}
        t = WideTable(cols, ["int"] * ncols, [list(r) for r in rows])
        bundle = decompose(t, discover_fds(t))
        assert lossless_check(bundle)
        # provenance invariants: every table row referenced, bits match map
        for tb in bundle.schema.tables:
            hit = set()
            for r in range(len(t)):
                j = bundle.rowmap.get(r, tb.name)
                assert (j is not None) == bundle.bitmap.bit_of(tb.name).get(r)
                if j is not None:
                    hit.add(j)
            assert hit == set(range(len(bundle.rows[tb.name])))


def test_rowid_map_table_updates():
    m = RowIdMapTable(["A", "B"])
    m.append_row({"A": 0, "B": 1})
    m.append_row({"A": 0})
    assert m.vector(1) == [0, None]
    assert m.inverse("A", 0) == [0, 1]
    m.clear_entry(0, "A")
    assert m.inverse("A", 0) == [1]
    m.set_entry(0, "A", 2)
    assert m.get(0, "A") == 2
    assert m.inverse("A", 2) == [0]


def test_ddl_statements():
    t = shopping_table()
    bundle = decompose(t, discover_fds(t))
    ddl = ddl_statements(bundle.schema)
    assert len(ddl) == 4
    assert ddl[0].startswith("CREATE TABLE T1 (")
    assert "RowID BIGINT NOT NULL" in ddl[0]
    assert "orderId BIGINT" in ddl[0]
    assert "FOREIGN KEY" not in ddl[0]
    with_fks = ddl_statements(bundle.schema, declare_fks=True)
    assert any("FOREIGN KEY (userId) REFERENCES T2 (userId)" in s for s in with_fks)
    mysql = ddl_statements(bundle.schema, dialect="mysql")
    assert "TEXT" in mysql[1]
