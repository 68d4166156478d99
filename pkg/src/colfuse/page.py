"""Fixed-length and variable-length page encoding.

Binary layout (all integers little-endian) is normative; golden-file
tests pin it byte for byte.  See docs/format.md.

Fixed page:    header | mini-block directory | packed payload | crc32
Varlen page:   header | codec flag | symbol table | string blocks
               | rid mini-block directory | rid payload | crc32
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from . import codec
from .codec import ColumnType, Kind, MiniBlockMeta, SymbolTable
from .errors import (
    CorruptPageError,
    EncodeError,
    OversizedRecordError,
    PageOverflowError,
    WrongLayoutError,
)

LAYOUT_FIXED = 0
LAYOUT_VARLEN = 1

STRING_BLOCK_LIMIT = 9216  # max encoded bytes per string mini block

_HEADER = struct.Struct("<QIBIIQ")   # page_id, column_id, layout, value_count, miniblock_count, first_rid
_META = struct.Struct("<qBII")       # base, bit_width, byte_offset, value_count
_CRC = struct.Struct("<I")
_U32 = struct.Struct("<I")

HEADER_SIZE = _HEADER.size
META_SIZE = _META.size


@dataclass(frozen=True)
class PageHeader:
    page_id: int
    column_id: int
    layout: int
    value_count: int
    miniblock_count: int
    first_rid: int


@dataclass(frozen=True)
class FixedPage:
    header: PageHeader
    metas: tuple
    payload: bytes
    footer_checksum: int


@dataclass(frozen=True)
class StringBlock:
    record_count: int
    byte_len: int
    lengths: tuple   # encoded length per record
    encoded: bytes   # concatenated encoded records


@dataclass(frozen=True)
class VarlenPage:
    header: PageHeader
    symbol_table: SymbolTable
    plain: bool
    string_blocks: tuple
    rid_metas: tuple
    rid_payload: bytes
    footer_checksum: int


def char_to_int(value, n):
    """Reinterpret a short string as a big-endian integer so integer order
    matches lexicographic order."""
    raw = value.encode() if isinstance(value, str) else bytes(value)
    if len(raw) > n:
        raise EncodeError("CHAR(%d) value too long: %r" % (n, value))
    return int.from_bytes(raw.ljust(n, b"\x00"), "big")


def int_to_char(value, n):
    return value.to_bytes(n, "big").rstrip(b"\x00").decode()


def _to_storage_ints(values, col_type):
    if col_type.kind is Kind.CHAR:
        return [char_to_int(v, col_type.n) for v in values]
    return list(values)


def _from_storage_ints(ints, col_type):
    if col_type.kind is Kind.CHAR:
        return [int_to_char(v, col_type.n) for v in ints]
    return ints


def _plain_metas(values, width_class, block_size):
    """Uncompressed variant: full-width packing with the type's lower bound
    as the base, so the payload is simply the raw value array."""
    base = -(1 << (width_class - 1))
    metas = []
    parts = []
    offset = 0
    for bstart in range(0, len(values), block_size):
        block = values[bstart : bstart + block_size]
        packed = codec.kernels.pack_bits([v - base for v in block], width_class)
        metas.append(MiniBlockMeta(base, width_class, offset, len(block)))
        parts.append(packed)
        offset += len(packed)
    return metas, b"".join(parts)


def _fixed_serialized_size(nblocks, payload_len):
    return HEADER_SIZE + nblocks * META_SIZE + payload_len + _CRC.size


def encode_fixed_page(values, col_type, first_rid, page_size, page_id=0,
                      column_id=0, block_size=codec.DEFAULT_BLOCK_SIZE,
                      compress=True):
    if col_type.is_varlen:
        raise WrongLayoutError("%s must use the varlen layout" % (col_type,))
    if not values:
        raise EncodeError("refusing to encode an empty page")
    ints = _to_storage_ints(values, col_type)
    wc = col_type.width_class

    def build(vals):
        if compress:
            return codec.for_compress(vals, wc, block_size)
        return _plain_metas(vals, wc, block_size)

    metas, payload = build(ints)
    if _fixed_serialized_size(len(metas), len(payload)) > page_size:
        max_fit = _max_prefix(
            len(ints),
            lambda k: _fixed_serialized_size(*_shape(build(ints[:k]))) <= page_size,
        )
        raise PageOverflowError(
            "page of %d values exceeds %d bytes" % (len(ints), page_size), max_fit
        )
    header = PageHeader(page_id, column_id, LAYOUT_FIXED, len(ints), len(metas), first_rid)
    body = serialize_fixed_body(header, metas, payload)
    crc = zlib.crc32(body)
    return FixedPage(header, tuple(metas), payload, crc)


def _shape(built):
    metas, payload = built
    return len(metas), len(payload)


def _max_prefix(n, fits):
    """Largest k in [0, n] with fits(k), assuming fits is monotone."""
    lo, hi = 0, n
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if fits(mid):
            lo = mid
        else:
            hi = mid - 1
    return lo


def decode_fixed_page(page, col_type, value_range=None, raw=False):
    """Inverse of encode over ``value_range`` (page-local index range)."""
    start, stop = value_range if value_range else (0, page.header.value_count)
    if not (0 <= start <= stop <= page.header.value_count):
        raise ValueError("range outside page")
    out = []
    pos = 0
    for meta in page.metas:
        if pos >= stop:
            break
        lo = max(start, pos)
        hi = min(stop, pos + meta.value_count)
        if lo < hi:
            out.extend(
                codec.for_decompress(meta, page.payload, col_type.width_class,
                                     lo - pos, hi - lo)
            )
        pos += meta.value_count
    return out if raw else _from_storage_ints(out, col_type)


def serialize_fixed_body(header, metas, payload):
    parts = [
        _HEADER.pack(header.page_id, header.column_id, header.layout,
                     header.value_count, header.miniblock_count, header.first_rid)
    ]
    for m in metas:
        parts.append(_META.pack(m.base, m.bit_width, m.byte_offset, m.value_count))
    parts.append(payload)
    return b"".join(parts)


def serialize_page(page):
    if isinstance(page, FixedPage):
        body = serialize_fixed_body(page.header, page.metas, page.payload)
    else:
        body = _serialize_varlen_body(page)
    return body + _CRC.pack(page.footer_checksum)


def encode_varlen_page(records, rids, page_size, page_id=0, column_id=0,
                       compress=True, block_limit=STRING_BLOCK_LIMIT):
    if len(records) != len(rids):
        raise EncodeError("records and rids differ in length")
    if not records:
        raise EncodeError("refusing to encode an empty page")
    for a, b in zip(rids, rids[1:]):
        if b <= a:
            raise EncodeError("rids must be strictly increasing")
    records = [bytes(r) if not isinstance(r, bytes) else r for r in records]

    def build(recs, rds):
        if compress:
            table = codec.fsst_build_table(recs)
            encoded = [codec.fsst_encode(table, r) for r in recs]
        else:
            table = SymbolTable()
            encoded = recs
        for i, e in enumerate(encoded):
            if len(e) > block_limit:
                raise OversizedRecordError(
                    "record %d encodes to %d bytes (> %d)" % (i, len(e), block_limit)
                )
        blocks = []
        cur, cur_len = [], 0
        for e in encoded:
            if cur and cur_len + len(e) > block_limit:
                blocks.append(cur)
                cur, cur_len = [], 0
            cur.append(e)
            cur_len += len(e)
        if cur:
            blocks.append(cur)
        sblocks = tuple(
            StringBlock(len(bl), sum(len(e) for e in bl),
                        tuple(len(e) for e in bl), b"".join(bl))
            for bl in blocks
        )
        rid_metas, rid_payload = codec.for_compress(list(rds), 64)
        return table, sblocks, rid_metas, rid_payload

    table, sblocks, rid_metas, rid_payload = build(records, rids)
    header = PageHeader(page_id, column_id, LAYOUT_VARLEN, len(records),
                        len(sblocks), rids[0])
    pg = VarlenPage(header, table, not compress, sblocks,
                    tuple(rid_metas), rid_payload, 0)
    body = _serialize_varlen_body(pg)
    if len(body) + _CRC.size > page_size:
        def fits(k):
            if k == 0:
                return True
            t, sb, rm, rp = build(records[:k], rids[:k])
            h = PageHeader(page_id, column_id, LAYOUT_VARLEN, k, len(sb), rids[0])
            p = VarlenPage(h, t, not compress, sb, tuple(rm), rp, 0)
            return len(_serialize_varlen_body(p)) + _CRC.size <= page_size

        max_fit = _max_prefix(len(records), fits)
        raise PageOverflowError(
            "varlen page of %d records exceeds %d bytes" % (len(records), page_size),
            max_fit,
        )
    return VarlenPage(header, table, not compress, sblocks, tuple(rid_metas),
                      rid_payload, zlib.crc32(body))


def _serialize_varlen_body(page):
    h = page.header
    parts = [
        _HEADER.pack(h.page_id, h.column_id, h.layout, h.value_count,
                     h.miniblock_count, h.first_rid),
        bytes([0 if page.plain else 1]),
        page.symbol_table.serialize(),
        _U32.pack(len(page.string_blocks)),
    ]
    for sb in page.string_blocks:
        parts.append(_U32.pack(sb.record_count))
        parts.append(_U32.pack(sb.byte_len))
        parts.append(struct.pack("<%dH" % sb.record_count, *sb.lengths))
        parts.append(sb.encoded)
    parts.append(_U32.pack(len(page.rid_metas)))
    for m in page.rid_metas:
        parts.append(_META.pack(m.base, m.bit_width, m.byte_offset, m.value_count))
    parts.append(_U32.pack(len(page.rid_payload)))
    parts.append(page.rid_payload)
    return b"".join(parts)


def record_offsets(lengths):
    """Exclusive prefix sums: output offset of each record."""
    offs = []
    total = 0
    for ln in lengths:
        offs.append(total)
        total += ln
    return offs, total


def decode_varlen_page(page):
    """Two-pass decode: per-record lengths and offsets first, then bytes.

    Returns ``[(rid, record), ...]`` sorted by rid ascending.
    """
    rids = decode_varlen_rids(page)
    records = []
    for sb in page.string_blocks:
        encs = []
        pos = 0
        for ln in sb.lengths:
            encs.append(sb.encoded[pos : pos + ln])
            pos += ln
        if pos != sb.byte_len:
            raise CorruptPageError("string block length mismatch")
        if page.plain:
            records.extend(encs)
            continue
        lengths = [codec.fsst_decoded_length(page.symbol_table, e) for e in encs]
        offs, total = record_offsets(lengths)
        buf = bytearray(total)
        for e, off, ln in zip(encs, offs, lengths):
            buf[off : off + ln] = codec.fsst_decode_record(page.symbol_table, e)
        pos = 0
        for ln in lengths:
            records.append(bytes(buf[pos : pos + ln]))
            pos += ln
    if len(records) != page.header.value_count or len(rids) != len(records):
        raise CorruptPageError("record count mismatch")
    return list(zip(rids, records))


def decode_varlen_rids(page):
    rids = []
    for m in page.rid_metas:
        rids.extend(codec.for_decompress(m, page.rid_payload, 64))
    return rids


def iter_records(page):
    """Stream (rid, record) pairs without materializing the whole page."""
    rids = decode_varlen_rids(page)
    i = 0
    for sb in page.string_blocks:
        pos = 0
        for ln in sb.lengths:
            enc = sb.encoded[pos : pos + ln]
            pos += ln
            if page.plain:
                rec = enc
            else:
                rec = codec.fsst_decode_record(page.symbol_table, enc)
            yield rids[i], rec
            i += 1


def parse_page(buf):
    """Parse serialized page bytes, verifying the footer checksum."""
    if len(buf) < HEADER_SIZE + _CRC.size:
        raise CorruptPageError("page too short")
    body, crc_bytes = buf[: -_CRC.size], buf[-_CRC.size :]
    (stored,) = _CRC.unpack(crc_bytes)
    if zlib.crc32(bytes(body)) != stored:
        raise CorruptPageError("checksum mismatch")
    fields = _HEADER.unpack_from(body, 0)
    header = PageHeader(*fields)
    pos = HEADER_SIZE
    if header.layout == LAYOUT_FIXED:
        metas = []
        for _ in range(header.miniblock_count):
            metas.append(MiniBlockMeta(*_META.unpack_from(body, pos)))
            pos += META_SIZE
        payload = bytes(body[pos:])
        return FixedPage(header, tuple(metas), payload, stored)
    if header.layout != LAYOUT_VARLEN:
        raise CorruptPageError("unknown layout %d" % header.layout)
    plain = body[pos] == 0
    pos += 1
    table, consumed = SymbolTable.deserialize(body, pos)
    pos += consumed
    (nblocks,) = _U32.unpack_from(body, pos)
    pos += 4
    sblocks = []
    for _ in range(nblocks):
        (rcount,) = _U32.unpack_from(body, pos)
        (blen,) = _U32.unpack_from(body, pos + 4)
        pos += 8
        lengths = struct.unpack_from("<%dH" % rcount, body, pos)
        pos += 2 * rcount
        encoded = bytes(body[pos : pos + blen])
        pos += blen
        sblocks.append(StringBlock(rcount, blen, lengths, encoded))
    (nmeta,) = _U32.unpack_from(body, pos)
    pos += 4
    rid_metas = []
    for _ in range(nmeta):
        rid_metas.append(MiniBlockMeta(*_META.unpack_from(body, pos)))
        pos += META_SIZE
    (plen,) = _U32.unpack_from(body, pos)
    pos += 4
    rid_payload = bytes(body[pos : pos + plen])
    return VarlenPage(header, table, plain, tuple(sblocks), tuple(rid_metas),
                      rid_payload, stored)
