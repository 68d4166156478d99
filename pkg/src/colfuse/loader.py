"""Sort-based clustering and two-pass loading onto the simulated device
array: pass 1 plans uncompressed regions, pass 2 compresses pages with a
worker pool and writes them densely, emitting side files and zone maps.

Output bytes are deterministic for a fixed plan and input, independent of
the worker count.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import date

from . import catalog, schema as schema_mod
from .codec import Kind
from .errors import LoadError, PageOverflowError
from .iosim import DeviceArray
from .page import (
    FixedPage,
    PageHeader,
    VarlenPage,
    char_to_int,
    encode_fixed_page,
    encode_varlen_page,
    serialize_page,
    serialize_fixed_body,
    _serialize_varlen_body,
)

import zlib

MAX_LOAD_WORKERS = 32
MIN_PAGE_SIZE = 64 * 1024
MAX_PAGE_SIZE = 2 * 1024 * 1024
ZONE_CARDINALITY_LIMIT = 5000
_EPOCH = date(1970, 1, 1).toordinal()

# Raw-byte budget per planned varlen page; leaves slack for the symbol
# table and directory.  Escape-heavy data can still expand past the page
# size, which is handled by splitting at encode time.
_VARLEN_SLACK = 8192


@dataclass(frozen=True)
class LoadPlan:
    schema: schema_mod.Schema
    page_size: int = 1 << 20
    device_count: int = 2
    compress: bool = True
    block_size: int = 128
    workers: int | None = None
    device_capacity: int | None = None

    def __post_init__(self):
        if not MIN_PAGE_SIZE <= self.page_size <= MAX_PAGE_SIZE:
            raise ValueError("page_size outside supported range")

    @property
    def effective_workers(self):
        if self.workers:
            return min(self.workers, MAX_LOAD_WORKERS)
        return min(os.cpu_count() or 1, MAX_LOAD_WORKERS)


@dataclass(frozen=True)
class Region:
    column_id: str
    start: int
    capacity: int


# --- input parsing ---

def parse_date(text):
    return date.fromisoformat(text).toordinal() - _EPOCH


def format_date(days):
    return date.fromordinal(days + _EPOCH).isoformat()


def parse_decimal(text):
    neg = text.startswith("-")
    if neg:
        text = text[1:]
    whole, _, frac = text.partition(".")
    cents = int(whole or "0") * 100 + int(frac.ljust(2, "0")[:2] or "0")
    return -cents if neg else cents


def parse_value(text, col_type):
    kind = col_type.kind
    if kind in (Kind.INT32, Kind.INT64):
        return int(text)
    if kind is Kind.DECIMAL_18_2:
        return parse_decimal(text)
    if kind is Kind.DATE:
        return parse_date(text)
    return text  # CHAR / VARCHAR stay textual


def read_table(path, table):
    columns = {c.name: [] for c in table.columns}
    names = [c.name for c in table.columns]
    types = [c.col_type for c in table.columns]
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("|")
            if fields and fields[-1] == "":
                fields = fields[:-1]
            if len(fields) != len(names):
                raise LoadError("row has %d fields, expected %d" % (len(fields), len(names)))
            for name, ct, text in zip(names, types, fields):
                columns[name].append(parse_value(text, ct))
    return columns


# --- clustering ---

def sort_cluster(columns, key):
    """Stable ascending sort by the cluster key; RIDs are row positions
    after the sort."""
    keycol = columns[key]
    order = sorted(range(len(keycol)), key=keycol.__getitem__)
    return {name: [col[i] for i in order] for name, col in columns.items()}


def storage_key(value, col_type):
    """64-bit ordered key for zone maps and predicates."""
    if col_type.kind is Kind.CHAR and col_type.n <= 2:
        return char_to_int(value, col_type.n)
    if isinstance(value, int):
        return value
    raise LoadError("attribute of type %s cannot be zone-mapped" % (col_type,))


def attr_series(table, sorted_columns, dim_tables):
    """Per-row key series for each designated attribute that passes the
    cardinality gate; reference attributes follow their one-hop join."""
    series = {}
    for attr in table.zone_attrs:
        src_type = table.column(attr.source).col_type
        src = sorted_columns[attr.source]
        if attr.is_reference:
            dim = dim_tables[attr.join_table]
            dim_cols = dim["columns"]
            dim_table = dim["table"]
            val_type = dim_table.column(attr.join_value).col_type
            mapping = {
                k: storage_key(v, val_type)
                for k, v in zip(dim_cols[attr.join_key], dim_cols[attr.join_value])
            }
            values = [mapping[k] for k in src]
        else:
            values = [storage_key(v, src_type) for v in src]
        if len(set(values)) <= ZONE_CARDINALITY_LIMIT:
            series[attr.name] = values
    return series


# --- pass 1: region planning ---

def fixed_rows_per_page(page_size, width):
    return page_size // width


def plan_fixed_partitions(row_count, page_size, width):
    rpp = fixed_rows_per_page(page_size, width)
    return [(s, min(s + rpp, row_count)) for s in range(0, row_count, rpp)]


def plan_varlen_partitions(records, page_size):
    budget = page_size - _VARLEN_SLACK
    parts = []
    start = 0
    acc = 0
    for i, rec in enumerate(records):
        ln = len(rec)
        if i > start and acc + ln > budget:
            parts.append((start, i))
            start = i
            acc = 0
        acc += ln
    if start < len(records) or not parts:
        parts.append((start, len(records)))
    return parts


def plan_regions(tables_data, plan):
    """Assign each (table, column) a contiguous region sized for the
    uncompressed page bound; regions of the same column are adjacent."""
    regions = []
    partitions = {}
    cursor = 0
    for table in plan.schema.tables:
        data = tables_data[table.name]
        for col in table.columns:
            cid = "%s.%s" % (table.name, col.name)
            values = data[col.name]
            if col.col_type.is_varlen:
                records = [v.encode() if isinstance(v, str) else v for v in values]
                parts = plan_varlen_partitions(records, plan.page_size)
            else:
                parts = plan_fixed_partitions(len(values), plan.page_size,
                                              col.col_type.fixed_width)
            capacity = len(parts) * plan.page_size
            regions.append(Region(cid, cursor, capacity))
            partitions[cid] = parts
            cursor += capacity
    return regions, partitions


# --- pass 2: compress and write ---

def _encode_fixed_partition(values, col_type, row_start, page_size, block_size, compress):
    """Encode one planned partition, splitting on overflow."""
    out = []
    base = row_start
    while values:
        try:
            pg = encode_fixed_page(values, col_type, base, page_size,
                                   block_size=block_size, compress=compress)
            out.append(((base, base + len(values)), pg))
            break
        except PageOverflowError as e:
            if e.max_fit == 0:
                raise LoadError("page size too small for a single value") from e
            head = values[: e.max_fit]
            pg = encode_fixed_page(head, col_type, base, page_size,
                                   block_size=block_size, compress=compress)
            out.append(((base, base + len(head)), pg))
            values = values[e.max_fit :]
            base += len(head)
    return out


def _encode_varlen_partition(records, row_start, page_size, compress):
    out = []
    base = row_start
    while records:
        rids = list(range(base, base + len(records)))
        try:
            pg = encode_varlen_page(records, rids, page_size, compress=compress)
            out.append(((base, base + len(records)), pg))
            break
        except PageOverflowError as e:
            if e.max_fit == 0:
                raise LoadError("page size too small for a single record") from e
            head = records[: e.max_fit]
            pg = encode_varlen_page(head, rids[: e.max_fit], page_size, compress=compress)
            out.append(((base, base + len(head)), pg))
            records = records[e.max_fit :]
            base += len(head)
    return out


def _restamp(pg, page_id, column_ord):
    """Rebuild a page with its final ids and checksum; returns bytes."""
    h = pg.header
    header = PageHeader(page_id, column_ord, h.layout, h.value_count,
                        h.miniblock_count, h.first_rid)
    if isinstance(pg, FixedPage):
        body = serialize_fixed_body(header, pg.metas, pg.payload)
        final = FixedPage(header, pg.metas, pg.payload, zlib.crc32(body))
    else:
        final = VarlenPage(header, pg.symbol_table, pg.plain, pg.string_blocks,
                           pg.rid_metas, pg.rid_payload, 0)
        body = _serialize_varlen_body(final)
        final = VarlenPage(header, pg.symbol_table, pg.plain, pg.string_blocks,
                           pg.rid_metas, pg.rid_payload, zlib.crc32(body))
    return serialize_page(final)


def compress_write(tables_data, plan, out_dir):
    """Pass 2: compress pages in a worker pool, write them densely per
    region, stripe across devices round-robin by page id, and emit side
    files, zone maps, and the manifest."""
    regions, partitions = plan_regions(tables_data, plan)
    region_by_col = {r.column_id: r for r in regions}
    meta_dir = os.path.join(out_dir, "meta")
    os.makedirs(meta_dir, exist_ok=True)
    devices = DeviceArray(plan.device_count, os.path.join(out_dir, "devices"))

    dim_tables = {
        t.name: {"table": t, "columns": tables_data[t.name]}
        for t in plan.schema.tables
    }

    manifest_cols = {}
    next_page_id = 0
    column_ord = 0
    pool = ThreadPoolExecutor(max_workers=plan.effective_workers)
    try:
        for table in plan.schema.tables:
            data = tables_data[table.name]
            series = attr_series(table, data, dim_tables)
            attr_ids = {
                name: i for i, name in enumerate(sorted(series))
            }
            for col in table.columns:
                cid = "%s.%s" % (table.name, col.name)
                region = region_by_col[cid]
                parts = partitions[cid]
                if col.col_type.is_varlen:
                    records = [
                        v.encode() if isinstance(v, str) else v for v in data[col.name]
                    ]
                    jobs = [
                        pool.submit(_encode_varlen_partition, records[s:e], s,
                                    plan.page_size, plan.compress)
                        for s, e in parts
                    ]
                else:
                    values = data[col.name]
                    jobs = [
                        pool.submit(_encode_fixed_partition, values[s:e],
                                    col.col_type, s, plan.page_size,
                                    plan.block_size, plan.compress)
                        for s, e in parts
                    ]
                pages = []
                for job in jobs:
                    pages.extend(job.result())

                first_page_id = next_page_id
                offsets = []
                sizes = []
                counts = []
                boundaries = []
                cursor = region.start
                for (row_start, row_end), pg in pages:
                    page_id = next_page_id
                    next_page_id += 1
                    blob = _restamp(pg, page_id, column_ord)
                    device = page_id % plan.device_count
                    if plan.device_capacity is not None and cursor + len(blob) > plan.device_capacity:
                        raise LoadError(
                            "device capacity exceeded writing region %s" % cid
                        )
                    devices.write(device, cursor, blob)
                    offsets.append(cursor)
                    sizes.append(len(blob))
                    counts.append(row_end - row_start)
                    boundaries.append((row_start, row_end))
                    cursor += len(blob)
                if cursor - region.start > region.capacity:
                    raise LoadError("region overflow for column %s" % cid)

                base = os.path.join(meta_dir, cid)
                catalog.write_u64_array(base + ".offsets", offsets)
                catalog.write_u32_array(base + ".sizes", sizes)
                rid_prefix = []
                total = 0
                for c in counts:
                    total += c
                    rid_prefix.append(total)
                catalog.write_u64_array(base + ".rids", rid_prefix)
                if series:
                    zm = catalog.build_zone_map(
                        {attr_ids[name]: vals for name, vals in series.items()},
                        boundaries,
                    )
                    catalog.write_zone_map(base + ".zonemap", zm)
                manifest_cols[cid] = {
                    "first_page_id": first_page_id,
                    "page_count": len(pages),
                    "region_start": region.start,
                    "region_capacity": region.capacity,
                    "column_ord": column_ord,
                }
                column_ord += 1
    finally:
        pool.shutdown(wait=True)
        devices.flush()
        devices.close()

    manifest = {
        "format_version": 1,
        "page_size": plan.page_size,
        "device_count": plan.device_count,
        "compress": plan.compress,
        "block_size": plan.block_size,
        "schema": _schema_to_dict(plan.schema),
        "tables": {
            t.name: {
                "row_count": len(next(iter(tables_data[t.name].values()), [])),
                "cluster_key": t.cluster_key,
                "attr_ids": {
                    name: i
                    for i, name in enumerate(
                        sorted(attr_series(t, tables_data[t.name], dim_tables))
                    )
                },
            }
            for t in plan.schema.tables
        },
        "columns": manifest_cols,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=1, sort_keys=True)
    return manifest


def _schema_to_dict(sch):
    return {
        "name": sch.name,
        "tables": [
            {
                "name": t.name,
                "cluster_key": t.cluster_key,
                "columns": [
                    dict(name=c.name, **schema_mod.col_type_to_dict(c.col_type))
                    for c in t.columns
                ],
                "zone_attrs": [
                    {
                        "name": a.name,
                        "source": a.source,
                        "join_table": a.join_table,
                        "join_key": a.join_key,
                        "join_value": a.join_value,
                    }
                    for a in t.zone_attrs
                ],
            }
            for t in sch.tables
        ],
    }


def load_tables(input_dir, sch):
    """Read pipe-delimited <table>.tbl files for every table in the schema."""
    out = {}
    for table in sch.tables:
        path = os.path.join(input_dir, table.name + ".tbl")
        out[table.name] = read_table(path, table)
    return out


def load_database(input_dir, plan, out_dir):
    """End-to-end load: read, cluster, plan, compress, write."""
    raw = load_tables(input_dir, plan.schema)
    sorted_tables = {
        t.name: sort_cluster(raw[t.name], t.cluster_key) for t in plan.schema.tables
    }
    os.makedirs(out_dir, exist_ok=True)
    return compress_write(sorted_tables, plan, out_dir)
