"""Join bitmaps: WAH-style compression, fold algebra, jump intersection.

One bit array per normalized table, logical length = wide-table row count.
Bit (r, T) set means wide row r has provenance in table T. The fold rules
turn a left-deep join chain into a single bitmap plus a verification mode:

    inner  acc & B        full
    left   acc            full
    right  B              full
    full   acc | B        full
    cross  acc & B        subset (engine may return a superset)
    semi   acc & B        full
    anti   acc & ~B       full

Arrays longer than WAH_THRESHOLD logical bits are stored compressed
(32-bit words, 31 payload bits, fill words carry a run count); shorter
arrays stay raw. Encoding and decoding are exact inverses at any length.
"""

from __future__ import annotations

from dataclasses import dataclass

WAH_THRESHOLD = 4096
_PAYLOAD = 31
_ALL = (1 << _PAYLOAD) - 1
_FILL = 1 << 31
_FILLVAL = 1 << 30
_MAXRUN = _FILLVAL - 1

JOIN_OPS = ("inner", "left", "right", "full", "cross", "semi", "anti")


def wah_encode(n: int, bits: int) -> list:
    """Encode n logical bits (little-endian int) into WAH words."""
    if bits < 0 or bits >> max(n, 0):
        raise ValueError("bits wider than logical length")
    words = []
    groups = (n + _PAYLOAD - 1) // _PAYLOAD
    i = 0
    while i < groups:
        g = (bits >> (i * _PAYLOAD)) & _ALL
        if g == 0 or g == _ALL:
            run = 1
            while i + run < groups and run < _MAXRUN:
                if ((bits >> ((i + run) * _PAYLOAD)) & _ALL) != g:
                    break
                run += 1
            words.append(_FILL | (_FILLVAL if g else 0) | run)
            i += run
        else:
            words.append(g)
            i += 1
    return words


def wah_decode(n: int, words) -> int:
    bits = 0
    pos = 0
    for w in words:
        if w & _FILL:
            run = w & _MAXRUN
            if w & _FILLVAL:
                bits |= ((1 << (run * _PAYLOAD)) - 1) << pos
            pos += run * _PAYLOAD
        else:
            bits |= w << pos
            pos += _PAYLOAD
    groups = (n + _PAYLOAD - 1) // _PAYLOAD
    if pos != groups * _PAYLOAD:
        raise ValueError("word stream does not cover the logical length")
    return bits & ((1 << n) - 1) if n else 0


def _runs(words):
    # normalize a word stream into (is_fill, value, group_count) runs
    for w in words:
        if w & _FILL:
            yield True, (1 if w & _FILLVAL else 0), w & _MAXRUN
        else:
            yield False, w, 1


def wah_and(a_words, b_words) -> list:
    """AND two WAH streams of equal logical length, run-aware: fill regions
    are consumed in whole runs without touching the other side's payload
    group by group."""
    out = []

    def emit_fill(val, count):
        if out and (out[-1] & _FILL) and bool(out[-1] & _FILLVAL) == bool(val):
            room = _MAXRUN - (out[-1] & _MAXRUN)
            take = min(room, count)
            out[-1] += take
            count -= take
        while count:
            take = min(count, _MAXRUN)
            out.append(_FILL | (_FILLVAL if val else 0) | take)
            count -= take

    def emit_literal(g):
        if g == 0 or g == _ALL:
            emit_fill(1 if g else 0, 1)
        else:
            out.append(g)

    ra, rb = _runs(a_words), _runs(b_words)
    a = next(ra, None)
    b = next(rb, None)
    while a is not None and b is not None:
        fa, va, ca = a
        fb, vb, cb = b
        take = min(ca, cb)
        if fa and fb:
            emit_fill(va & vb, take)
        elif fa:
            # fill meets literal: take is 1 unless the fill absorbs it
            emit_fill(0, take) if va == 0 else emit_literal(vb)
        elif fb:
            emit_fill(0, take) if vb == 0 else emit_literal(va)
        else:
            emit_literal(va & vb)
        ca -= take
        cb -= take
        a = (fa, va, ca) if ca else next(ra, None)
        b = (fb, vb, cb) if cb else next(rb, None)
    if a is not None or b is not None:
        raise ValueError("length mismatch between WAH streams")
    return out


def wah_popcount(words) -> int:
    total = 0
    for is_fill, val, count in _runs(words):
        if is_fill:
            total += val * count * _PAYLOAD
        else:
            total += val.bit_count()
    return total


class BitArray:
    """Fixed-length bit array over wide-table RowIDs.

    The logical bits live in a Python int; the WAH word stream is
    materialized on demand and cached (mutations invalidate it). Arrays
    above WAH_THRESHOLD report themselves as compressed storage, which is
    what jump_intersect and the snapshot format consume.
    """

    __slots__ = ("n", "_bits", "_words")

    def __init__(self, n: int, bits: int = 0):
        if n < 0:
            raise ValueError("negative length")
        if bits >> n if n else bits:
            raise ValueError("bits wider than length")
        self.n = n
        self._bits = bits
        self._words = None

    @classmethod
    def from_ones(cls, n: int, ones) -> "BitArray":
        bits = 0
        for r in ones:
            if not 0 <= r < n:
                raise ValueError(f"bit {r} out of range")
            bits |= 1 << r
        return cls(n, bits)

    @property
    def bits(self) -> int:
        return self._bits

    @property
    def compressed(self) -> bool:
        return self.n > WAH_THRESHOLD

    def words(self) -> list:
        if self._words is None:
            self._words = wah_encode(self.n, self._bits)
        return self._words

    def get(self, r: int) -> bool:
        if not 0 <= r < self.n:
            raise IndexError(r)
        return bool(self._bits >> r & 1)

    def set_bit(self, r: int):
        if not 0 <= r < self.n:
            raise IndexError(r)
        self._bits |= 1 << r
        self._words = None

    def clear_bit(self, r: int):
        if not 0 <= r < self.n:
            raise IndexError(r)
        self._bits &= ~(1 << r)
        self._words = None

    def append(self, value: bool = False):
        if value:
            self._bits |= 1 << self.n
        self.n += 1
        self._words = None

    def popcount(self) -> int:
        return self._bits.bit_count()

    def ones(self):
        """Yield set bit positions in ascending order."""
        bits = self._bits
        while bits:
            low = bits & -bits
            yield low.bit_length() - 1
            bits ^= low

    def hex_dump(self) -> str:
        width = (self.n + 3) // 4
        return format(self._bits, f"0{max(width, 1)}x")

    def __and__(self, other: "BitArray") -> "BitArray":
        self._check(other)
        if self.compressed and other.compressed:
            return BitArray(self.n, wah_decode(self.n, wah_and(self.words(), other.words())))
        return BitArray(self.n, self._bits & other._bits)

    def __or__(self, other: "BitArray") -> "BitArray":
        self._check(other)
        return BitArray(self.n, self._bits | other._bits)

    def complement(self) -> "BitArray":
        mask = (1 << self.n) - 1 if self.n else 0
        return BitArray(self.n, self._bits ^ mask)

    def _check(self, other):
        if self.n != other.n:
            raise ValueError(f"length mismatch: {self.n} vs {other.n}")

    def __eq__(self, other):
        return isinstance(other, BitArray) and self.n == other.n and self._bits == other._bits

    def __hash__(self):
        return hash((self.n, self._bits))

    def __repr__(self):
        return f"BitArray(n={self.n}, ones={list(self.ones())[:16]}...)"


class JoinBitmapIndex:
    """One bit array per table, all of logical length = wide row count."""

    def __init__(self, table_names, n: int = 0):
        self.table_names = list(table_names)
        self.arrays = {t: BitArray(n) for t in self.table_names}
        self.n = n

    def bit_of(self, table: str) -> BitArray:
        try:
            return self.arrays[table]
        except KeyError:
            raise KeyError(f"unknown table {table!r}") from None

    def set_bit(self, table: str, r: int):
        self.bit_of(table).set_bit(r)

    def clear_bit(self, table: str, r: int):
        self.bit_of(table).clear_bit(r)

    def append_row(self):
        for a in self.arrays.values():
            a.append(False)
        self.n += 1

    def hex_dump(self) -> str:
        return "\n".join(f"{t} 0x{self.arrays[t].hex_dump()}" for t in self.table_names)


@dataclass(frozen=True)
class JoinBitmapExpr:
    """Left-deep join chain: base table then (op, operand) steps. A semi or
    anti operand may itself be a JoinBitmapExpr (correlated subquery chain);
    every other operand is a table name."""

    base: object
    steps: tuple = ()

    def tables(self):
        yield self.base if not isinstance(self.base, JoinBitmapExpr) else None
        for _, operand in self.steps:
            if isinstance(operand, JoinBitmapExpr):
                yield from operand.tables()
            else:
                yield operand

    def has_cross(self) -> bool:
        return any(op == "cross" for op, _ in self.steps) or any(
            isinstance(t, JoinBitmapExpr) and t.has_cross() for _, t in self.steps
        )


def ground_truth_bitmap(expr: JoinBitmapExpr, index: JoinBitmapIndex):
    """Fold the chain left to right per the rules in the module docstring.

    Returns (BitArray, mode) with mode 'subset' iff a cross join appears
    anywhere in the chain.
    """

    def operand_bits(operand) -> BitArray:
        if isinstance(operand, JoinBitmapExpr):
            sub, submode = ground_truth_bitmap(operand, index)
            if submode != "full":
                raise ValueError("cross join is not allowed inside a subquery chain")
            return sub
        return index.bit_of(operand)

    acc = operand_bits(expr.base)
    mode = "full"
    for op, operand in expr.steps:
        b = operand_bits(operand)
        if op == "inner" or op == "semi":
            acc = acc & b
        elif op == "left":
            pass
        elif op == "right":
            acc = b
        elif op == "full":
            acc = acc | b
        elif op == "cross":
            acc = acc & b
            mode = "subset"
        elif op == "anti":
            acc = acc & b.complement()
        else:
            raise ValueError(f"unknown join operator {op!r}")
    return acc, mode


def jump_intersect(arrays) -> BitArray:
    """AND the arrays in ascending popcount order, short-circuiting once the
    accumulator is empty. Identical to a naive fold of &."""
    arrays = list(arrays)
    if not arrays:
        raise ValueError("nothing to intersect")
    lengths = {a.n for a in arrays}
    if len(lengths) > 1:
        raise ValueError(f"length mismatch: {sorted(lengths)}")
    order = sorted(arrays, key=lambda a: a.popcount())
    acc = order[0]
    for nxt in order[1:]:
        if acc.popcount() == 0:
            break
        acc = acc & nxt
    return BitArray(acc.n, acc.bits)
