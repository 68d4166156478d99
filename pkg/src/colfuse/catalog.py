"""RID indexes, zone maps, the column->page dictionary, and compile-time
page pruning."""

from __future__ import annotations

import struct
from bisect import bisect_right
from dataclasses import dataclass

from .errors import ColfuseError

_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")
_TRIPLE = struct.Struct("<Iqq")  # attr_id, min, max

OPS = ("lt", "le", "eq", "ge", "gt", "between")


@dataclass(frozen=True)
class RidIndex:
    """Prefix sums of per-page row counts; entry i = rows in pages 0..=i."""

    cumulative_counts: tuple

    @property
    def total_rows(self):
        return self.cumulative_counts[-1] if self.cumulative_counts else 0

    def page_span(self, ordinal):
        """RID interval [start, end) covered by page ``ordinal``."""
        start = self.cumulative_counts[ordinal - 1] if ordinal else 0
        return start, self.cumulative_counts[ordinal]


def rid_index_from_counts(counts):
    cum = []
    total = 0
    for c in counts:
        total += c
        cum.append(total)
    return RidIndex(tuple(cum))


def rid_to_page(index, rid):
    """Smallest ordinal whose cumulative count exceeds ``rid``."""
    if rid < 0 or rid >= index.total_rows:
        raise ColfuseError("rid %d out of range" % rid)
    return bisect_right(index.cumulative_counts, rid)


def align_pages(index_a, index_b, page_a):
    """Minimal contiguous pages of B covering A's page RID span."""
    if index_a.total_rows != index_b.total_rows:
        raise ColfuseError("rid indexes cover different row counts")
    start, end = index_a.page_span(page_a)
    first = rid_to_page(index_b, start)
    last = rid_to_page(index_b, end - 1)
    return list(range(first, last + 1))


@dataclass(frozen=True)
class ZoneMap:
    """Per-page [min, max] bounds keyed by attribute id."""

    bounds: dict  # attr_id -> tuple of (min, max) per page ordinal

    @property
    def page_count(self):
        for spans in self.bounds.values():
            return len(spans)
        return 0


def build_zone_map(attr_series, boundaries):
    """Exact min/max per page for each attribute series.

    ``attr_series`` maps attribute id to one value per row (reference
    attributes are mapped onto rows by the caller); ``boundaries`` is a
    list of (start, end) row ranges, one per page.
    """
    bounds = {}
    for attr_id, series in attr_series.items():
        spans = []
        for start, end in boundaries:
            chunk = series[start:end]
            spans.append((min(chunk), max(chunk)))
        bounds[attr_id] = tuple(spans)
    return ZoneMap(bounds)


@dataclass(frozen=True)
class PrunedPageList:
    column_id: str
    page_ids: tuple  # global page ids, sorted ascending


@dataclass(frozen=True)
class ColumnPlacement:
    """Ordered pages of one column with their first RIDs."""

    column_id: str
    page_ids: tuple
    first_rids: tuple

    def ordinal(self, page_id):
        # page ids are assigned sequentially within a column's region
        return page_id - self.page_ids[0]


class Dictionary:
    """Column -> page placement for one loaded database."""

    def __init__(self, placements):
        self._cols = {p.column_id: p for p in placements}

    def placement(self, column_id):
        return self._cols[column_id]

    def columns(self):
        return list(self._cols)


def _range_intersects(lo, hi, op, const):
    if op == "lt":
        return lo < const
    if op == "le":
        return lo <= const
    if op == "eq":
        return lo <= const <= hi
    if op == "ge":
        return hi >= const
    if op == "gt":
        return hi > const
    if op == "between":
        a, b = const
        return hi >= a and lo <= b
    raise ColfuseError("unknown predicate op %r" % op)


def prune(zone_map, placement, predicates):
    """Pages of one column that can satisfy every applicable predicate.

    Predicates on attributes absent from the zone map do not prune (they
    are still evaluated at scan time).  Boundaries are inclusive, keeping
    the result sound.
    """
    survivors = []
    for ordinal, page_id in enumerate(placement.page_ids):
        keep = True
        for attr_id, op, const in predicates:
            spans = zone_map.bounds.get(attr_id)
            if spans is None:
                continue
            lo, hi = spans[ordinal]
            if not _range_intersects(lo, hi, op, const):
                keep = False
                break
        if keep:
            survivors.append(page_id)
    return PrunedPageList(placement.column_id, tuple(survivors))


def _merge_intervals(ivals):
    out = []
    for s, e in sorted(ivals):
        if out and s <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], e))
        else:
            out.append((s, e))
    return out


def _intersect_two(a, b):
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        s = max(a[i][0], b[j][0])
        e = min(a[i][1], b[j][1])
        if s < e:
            out.append((s, e))
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return out


def pages_to_intervals(pruned, placement, index):
    ivals = []
    for page_id in pruned.page_ids:
        ivals.append(index.page_span(placement.ordinal(page_id)))
    return _merge_intervals(ivals)


def intervals_to_pages(intervals, placement, index):
    ids = []
    for ordinal, page_id in enumerate(placement.page_ids):
        s, e = index.page_span(ordinal)
        for is_, ie in intervals:
            if is_ < e and s < ie:
                ids.append(page_id)
                break
    return ids


def intersect_page_lists(lists, placements, indexes):
    """Restrict per-column page lists so all cover the same RID set.

    ``lists``, ``placements`` and ``indexes`` are dicts keyed by column id.
    """
    common = None
    for col, pruned in lists.items():
        ivals = pages_to_intervals(pruned, placements[col], indexes[col])
        common = ivals if common is None else _intersect_two(common, ivals)
    out = {}
    for col in lists:
        out[col] = PrunedPageList(
            col, tuple(intervals_to_pages(common or [], placements[col], indexes[col]))
        )
    return out


# --- side files (normative formats, little-endian) ---

def write_u64_array(path, values):
    with open(path, "wb") as f:
        for v in values:
            f.write(_U64.pack(v))


def read_u64_array(path):
    data = open(path, "rb").read()
    return [v for (v,) in _U64.iter_unpack(data)]


def write_u32_array(path, values):
    with open(path, "wb") as f:
        for v in values:
            f.write(_U32.pack(v))


def read_u32_array(path):
    data = open(path, "rb").read()
    return [v for (v,) in _U32.iter_unpack(data)]


def write_zone_map(path, zone_map):
    attrs = sorted(zone_map.bounds)
    with open(path, "wb") as f:
        f.write(_U32.pack(len(attrs)))
        for ordinal in range(zone_map.page_count):
            for attr_id in attrs:
                lo, hi = zone_map.bounds[attr_id][ordinal]
                f.write(_TRIPLE.pack(attr_id, lo, hi))


def read_zone_map(path):
    data = open(path, "rb").read()
    (nattr,) = _U32.unpack_from(data, 0)
    bounds = {}
    pos = 4
    while pos < len(data):
        for _ in range(nattr):
            attr_id, lo, hi = _TRIPLE.unpack_from(data, pos)
            bounds.setdefault(attr_id, []).append((lo, hi))
            pos += _TRIPLE.size
    return ZoneMap({a: tuple(v) for a, v in bounds.items()})
