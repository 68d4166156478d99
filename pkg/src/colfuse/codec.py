"""Type-specific compression: frame-of-reference bit packing for integers
and symbol-table substitution for byte strings.

Bit order is normative for golden files: packed deltas are little-endian,
LSB-first within 64-bit words, and every mini block's payload starts on a
word (8-byte) boundary.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

from . import kernels
from .errors import DecodeError, EncodeError

DEFAULT_BLOCK_SIZE = 128

MAX_SYMBOLS = 255          # code 255 is the literal-byte escape
MAX_SYMBOL_LEN = 8
MAX_TABLE_BYTES = 2296     # 1 count byte + 255 * (1 length byte + 8 bytes)
ESCAPE = 255

_WIDTH_BOUNDS = {
    32: (-(1 << 31), (1 << 31) - 1),
    64: (-(1 << 63), (1 << 63) - 1),
}


@dataclass(frozen=True)
class MiniBlockMeta:
    """Per-block decode metadata: reference value, packed width, location."""

    base: int
    bit_width: int
    byte_offset: int
    value_count: int


class Kind(Enum):
    INT32 = "int32"
    INT64 = "int64"
    DECIMAL_18_2 = "decimal_18_2"
    CHAR = "char"
    VARCHAR = "varchar"
    DATE = "date"


@dataclass(frozen=True)
class ColumnType:
    kind: Kind
    n: int = 0  # CHAR length

    @property
    def is_varlen(self) -> bool:
        return self.kind is Kind.VARCHAR or (self.kind is Kind.CHAR and self.n > 2)

    @property
    def fixed_width(self) -> int:
        """Bytes per value at rest (32-bit unless INT64)."""
        if self.is_varlen:
            raise ValueError("varlen column has no fixed width")
        return 8 if self.kind is Kind.INT64 else 4

    @property
    def width_class(self) -> int:
        return self.fixed_width * 8


INT32 = ColumnType(Kind.INT32)
INT64 = ColumnType(Kind.INT64)
DECIMAL_18_2 = ColumnType(Kind.DECIMAL_18_2)
DATE = ColumnType(Kind.DATE)
VARCHAR = ColumnType(Kind.VARCHAR)


def CHAR(n: int) -> ColumnType:
    return ColumnType(Kind.CHAR, n)


def for_compress(values, width_class, block_size=DEFAULT_BLOCK_SIZE):
    """Partition ``values`` into mini blocks and bit-pack the deltas.

    Returns ``(metas, payload)``.  Per block, the base is the minimum and
    the bit width the smallest ``b`` with ``max - min < 2**b``.
    """
    if block_size <= 0:
        raise ValueError("block_size must be positive")
    lo, hi = _WIDTH_BOUNDS[width_class]
    for i, v in enumerate(values):
        if not (lo <= v <= hi):
            raise EncodeError(
                "value %d at index %d outside %d-bit range" % (v, i, width_class)
            )
    metas = []
    parts = []
    offset = 0
    for bstart in range(0, len(values), block_size):
        block = values[bstart : bstart + block_size]
        base = min(block)
        bit_width = (max(block) - base).bit_length()
        if bit_width:
            packed = kernels.pack_bits([v - base for v in block], bit_width)
        else:
            packed = b""
        metas.append(MiniBlockMeta(base, bit_width, offset, len(block)))
        parts.append(packed)
        offset += len(packed)
    return metas, b"".join(parts)


def for_decompress(meta, payload, out_width, start=0, count=None):
    """Decode values of one mini block; any contiguous sub-range works."""
    if count is None:
        count = meta.value_count - start
    if start < 0 or count < 0 or start + count > meta.value_count:
        raise ValueError("decode range outside block")
    if meta.bit_width:
        nwords = (meta.value_count * meta.bit_width + 63) // 64
        if meta.byte_offset + nwords * 8 > len(payload):
            raise DecodeError("payload truncated: block needs %d bytes" % (nwords * 8))
    return kernels.unpack_values(
        payload, meta.byte_offset, meta.bit_width, meta.base, start, count
    )


@dataclass(frozen=True)
class SymbolTable:
    """Static table of up to 255 symbols of 1..8 bytes each."""

    symbols: tuple = ()
    _maps: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.symbols, tuple):
            object.__setattr__(self, "symbols", tuple(self.symbols))
        if len(self.symbols) > MAX_SYMBOLS:
            raise ValueError("too many symbols")
        for s in self.symbols:
            if not 1 <= len(s) <= MAX_SYMBOL_LEN:
                raise ValueError("symbol length out of range")
        self._maps["sym_map"] = {s: i for i, s in enumerate(self.symbols)}
        self._maps["lengths"] = tuple(len(s) for s in self.symbols)
        self._maps["max_len"] = max((len(s) for s in self.symbols), default=1)

    @property
    def serialized_len(self) -> int:
        return 1 + sum(1 + len(s) for s in self.symbols)

    def serialize(self) -> bytes:
        out = bytearray([len(self.symbols)])
        for s in self.symbols:
            out.append(len(s))
            out += s
        assert len(out) <= MAX_TABLE_BYTES
        return bytes(out)

    @classmethod
    def deserialize(cls, buf, offset=0):
        """Parse a serialized table; returns ``(table, bytes_consumed)``."""
        try:
            count = buf[offset]
            pos = offset + 1
            symbols = []
            for _ in range(count):
                ln = buf[pos]
                pos += 1
                symbols.append(bytes(buf[pos : pos + ln]))
                if len(symbols[-1]) != ln:
                    raise IndexError
                pos += ln
        except IndexError:
            raise DecodeError("truncated symbol table") from None
        return cls(tuple(symbols)), pos - offset


def fsst_build_table(sample, iterations=5, sample_cap=16384):
    """Build a symbol table by iterative greedy gain over the sample.

    Each round re-segments the (capped) sample with the current table,
    counts emitted units and their pairwise concatenations, and keeps the
    255 candidates with the highest ``count * len`` gain.  Deterministic
    for a fixed sample order.
    """
    capped = []
    budget = sample_cap
    for rec in sample:
        if budget <= 0:
            break
        rec = rec[:budget]
        budget -= len(rec)
        if rec:
            capped.append(rec)
    table = SymbolTable()
    totals = Counter()
    for _ in range(iterations):
        counts = Counter()
        for rec in capped:
            units = _segment(table, rec)
            for u in units:
                counts[u] += 1
            for a, b in zip(units, units[1:]):
                counts[(a + b)[:MAX_SYMBOL_LEN]] += 1
        if not counts:
            return SymbolTable()
        # Accumulate across rounds so short high-gain symbols survive even
        # after longer concatenations start dominating the segmentation.
        totals.update(counts)
        ranked = sorted(
            totals.items(), key=lambda kv: (-kv[1] * len(kv[0]), kv[0])
        )
        table = SymbolTable(tuple(s for s, _ in ranked[:MAX_SYMBOLS]))
    return table


def _segment(table, record):
    """Split ``record`` into the units greedy encoding would emit."""
    sym_map = table._maps["sym_map"]
    max_len = table._maps["max_len"]
    units = []
    i = 0
    n = len(record)
    while i < n:
        limit = min(max_len, n - i)
        for length in range(limit, 0, -1):
            if record[i : i + length] in sym_map:
                units.append(record[i : i + length])
                i += length
                break
        else:
            units.append(record[i : i + 1])
            i += 1
    return units


def fsst_encode(table, record):
    """Encode one record; output is at most twice the input length."""
    return kernels.fsst_encode(table._maps["sym_map"], table._maps["max_len"], bytes(record))


def fsst_decode_record(table, encoded):
    """Exact inverse of :func:`fsst_encode`."""
    return kernels.fsst_decode(table.symbols, bytes(encoded))


def fsst_decoded_length(table, encoded):
    """Length of the decoded record without materializing its bytes."""
    return kernels.fsst_decoded_length(table._maps["lengths"], bytes(encoded))
