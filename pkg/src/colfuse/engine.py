"""Pipeline executor.

Two modes over identical plans:

* FUSED — one pass launch per pipeline.  Each worker claims a logical
  page group (aligned pages across the pipeline's columns), drives
  IO -> decompress -> operate for that group, and never materializes
  intermediates beyond the per-group working set.
* STAGED — one pass to read all pruned pages, one pass to decompress
  them into full column arrays, then one pass per operator over the
  materialized intermediates (aggregation takes two: accumulate and
  finalize).

Both modes share the pruning step, the operators, and the expression
evaluator, so their results are directly comparable.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field

from . import catalog, page as page_mod
from .codec import Kind
from .errors import (
    ColfuseError,
    HashTableOverflowError,
    PlanError,
    QueueFullError,
    WorkMemExceededError,
)
from .iosim import IoConfig, IoRequest, IoStats, configure_queues
from .kernels import kmp_contains

MASK64 = (1 << 64) - 1
HASH_CONST = 0x9E3779B97F4A7C15
MAX_LOAD_FACTOR = 0.7
DEFAULT_SCRATCH_BYTES = 192 * 1024
DEFAULT_WORK_MEM_BYTES = 256 * 1024 * 1024
DEFAULT_EXEC_WORKERS = 4

AGG_FUNCS = ("sum", "count", "min", "max", "avg")


# --- plans ---

@dataclass(frozen=True)
class Filter:
    column: str
    op: str  # lt | le | eq | ge | gt | between
    const: object


@dataclass(frozen=True)
class LikeFilter:
    column: str
    needle: bytes  # substring match, i.e. LIKE '%needle%'


@dataclass(frozen=True)
class HashBuild:
    name: str
    key: str
    payload: tuple  # column names carried into the table


@dataclass(frozen=True)
class HashProbe:
    name: str
    key: str
    carry: tuple  # payload names added to the probe row


@dataclass(frozen=True)
class Aggregate:
    group_by: tuple  # column names
    aggs: tuple      # (func, expr, out_name)


@dataclass(frozen=True)
class Pipeline:
    table: str
    columns: tuple  # column names read from storage
    ops: tuple
    prune: tuple = ()  # (attr_name, op, const) against zone maps


@dataclass(frozen=True)
class Query:
    name: str
    pipelines: tuple


@dataclass
class ExecTrace:
    pipeline: int
    mode: str
    pass_launches: int = 0
    barrier_count: int = 0
    bytes_read: int = 0
    intermediate_bytes: int = 0
    scratch_spills: int = 0
    wall_ms: float = 0.0

    def as_dict(self):
        return {
            "pipeline": self.pipeline,
            "mode": self.mode,
            "pass_launches": self.pass_launches,
            "barrier_count": self.barrier_count,
            "bytes_read": self.bytes_read,
            "intermediate_bytes": self.intermediate_bytes,
            "scratch_spills": self.scratch_spills,
            "wall_ms": self.wall_ms,
        }


@dataclass
class QueryResult:
    rows: list
    traces: list
    stats: dict

    @property
    def pass_launches(self):
        return self.stats["pass_launches"]


# --- expressions ---

def eval_expr(expr, row):
    """Evaluate a tuple expression over one row mapping.

    Forms: ('col', name), ('const', v), ('add'|'sub'|'mul', a, b).
    Arithmetic is exact integer arithmetic over storage values.
    """
    tag = expr[0]
    if tag == "col":
        return row[expr[1]]
    if tag == "const":
        return expr[1]
    a = eval_expr(expr[1], row)
    b = eval_expr(expr[2], row)
    if tag == "add":
        return a + b
    if tag == "sub":
        return a - b
    if tag == "mul":
        return a * b
    raise PlanError("unknown expression tag %r" % (tag,))


def _compare(value, op, const):
    if op == "lt":
        return value < const
    if op == "le":
        return value <= const
    if op == "eq":
        return value == const
    if op == "ge":
        return value >= const
    if op == "gt":
        return value > const
    if op == "between":
        return const[0] <= value <= const[1]
    raise PlanError("unknown filter op %r" % (op,))


# --- hash table ---

class HashTable:
    """Open-addressing table with linear probing and multiply-shift
    hashing; sized for a row bound at load factor <= 0.7.  Inserts are
    linearizable; probes are expected only after the build barrier."""

    def __init__(self, row_bound):
        need = max(2, int(row_bound / MAX_LOAD_FACTOR) + 1)
        cap = 2
        while cap < need:
            cap <<= 1
        self._cap = cap
        self._log2 = cap.bit_length() - 1
        self._keys = [None] * cap
        self._vals = [None] * cap
        self._count = 0
        self._lock = threading.Lock()

    def _slot(self, key):
        return ((key * HASH_CONST) & MASK64) >> (64 - self._log2)

    def insert(self, key, value):
        """Append ``value`` under ``key`` (keys may repeat)."""
        with self._lock:
            slot = self._slot(key)
            for _ in range(self._cap):
                k = self._keys[slot]
                if k is None:
                    if self._count >= int(self._cap * MAX_LOAD_FACTOR):
                        raise HashTableOverflowError("hash table past load factor")
                    self._keys[slot] = key
                    self._vals[slot] = [value]
                    self._count += 1
                    return
                if k == key:
                    self._vals[slot].append(value)
                    return
                slot = (slot + 1) & (self._cap - 1)
        raise HashTableOverflowError("hash table full")

    def get(self, key):
        slot = self._slot(key)
        for _ in range(self._cap):
            k = self._keys[slot]
            if k is None:
                return None
            if k == key:
                return self._vals[slot]
            slot = (slot + 1) & (self._cap - 1)
        return None

    def __len__(self):
        return self._count

    def items(self):
        for k, v in zip(self._keys, self._vals):
            if k is not None:
                yield k, v


class _AggState:
    """Shared aggregation state: group tuples interned to integer keys
    for the hash table; accumulator updates are associative, so the
    result is independent of worker interleaving."""

    def __init__(self, op, row_bound):
        self.op = op
        self.table = HashTable(row_bound)
        self._intern = {}
        self._lock = threading.Lock()

    def update(self, row):
        self.update_batch((row,))

    def update_batch(self, rows):
        group_by = self.op.group_by
        aggs = self.op.aggs
        with self._lock:
            for row in rows:
                key = tuple(row[c] for c in group_by)
                kid = self._intern.get(key)
                if kid is None:
                    kid = len(self._intern)
                    self._intern[key] = kid
                    accs = [_agg_init(func) for func, _, _ in aggs]
                    self.table.insert(kid, (key, accs))
                else:
                    accs = self.table.get(kid)[0][1]
                for i, (func, expr, _) in enumerate(aggs):
                    accs[i] = _agg_step(func, accs[i], eval_expr(expr, row))

    def finalize(self):
        rows = []
        for _, values in self.table.items():
            key, accs = values[0]
            out = [
                _agg_final(func, acc)
                for (func, _, _), acc in zip(self.op.aggs, accs)
            ]
            rows.append(tuple(key) + tuple(out))
        rows.sort(key=lambda r: r[: len(self.op.group_by)])
        return rows


def _agg_init(func):
    if func == "sum":
        return 0
    if func == "count":
        return 0
    if func in ("min", "max"):
        return None
    if func == "avg":
        return (0, 0)
    raise PlanError("unknown aggregate %r" % (func,))


def _agg_step(func, acc, value):
    if func == "sum":
        return acc + value
    if func == "count":
        return acc + 1
    if func == "min":
        return value if acc is None or value < acc else acc
    if func == "max":
        return value if acc is None or value > acc else acc
    if func == "avg":
        return (acc[0] + value, acc[1] + 1)
    raise PlanError("unknown aggregate %r" % (func,))


def _agg_final(func, acc):
    if func == "avg":
        s, n = acc
        return s / n if n else None
    return acc


# --- pruning (one launch per query) ---

def _prune_predicates(db, pipeline):
    preds = []
    for attr_name, op, const in pipeline.prune:
        attr_id = db.attr_id(pipeline.table, attr_name)
        if attr_id is not None:
            preds.append((attr_id, op, const))
    return preds


def prune_pipeline(db, pipeline):
    """Per-column surviving page lists, intersected to a common RID set."""
    preds = _prune_predicates(db, pipeline)
    lists = {}
    placements = {}
    indexes = {}
    for name in pipeline.columns:
        info = db.column(pipeline.table, name)
        placements[name] = info.placement
        indexes[name] = info.rid_index
        if info.zone_map is not None:
            lists[name] = catalog.prune(info.zone_map, info.placement, preds)
        else:
            lists[name] = catalog.PrunedPageList(info.column_id, info.placement.page_ids)
    return catalog.intersect_page_lists(lists, placements, indexes)


# --- shared page reading ---

class _PageCache:
    """Per-query parsed-page cache; each page is read from the device
    array exactly once even when groups share a straddling page."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries = {}
        self.failed = threading.Event()

    def claim(self, page_id):
        with self._lock:
            if page_id in self._entries:
                return False
            self._entries[page_id] = [threading.Event(), None]
            return True

    def fulfill(self, page_id, parsed):
        entry = self._entries[page_id]
        entry[1] = parsed
        entry[0].set()

    def get(self, page_id):
        entry = self._entries[page_id]
        while not entry[0].wait(timeout=1.0):
            if self.failed.is_set():
                raise ColfuseError("page read aborted by another worker")
        return entry[1]


def _read_pages(db, infos, wanted, pair, cache):
    """Submit IO for the pages this worker claimed and park results in
    the cache; honors the queue-pair depth with backpressure."""
    claimed = [
        (name, pid) for name, pids in wanted for pid in pids if cache.claim(pid)
    ]
    pending = []
    for name, pid in claimed:
        info = infos[name]
        device, offset, length = db.page_location(info, pid)
        req = IoRequest(pid, device, offset, length)
        while True:
            try:
                pair.submit(req)
                pending.append(pid)
                break
            except QueueFullError:
                done = pair.poll_wait()
                cache.fulfill(done.page_id, page_mod.parse_page(done.payload))
                pending.remove(done.page_id)
    while pending:
        done = pair.poll_wait()
        cache.fulfill(done.page_id, page_mod.parse_page(done.payload))
        pending.remove(done.page_id)


# --- column decoding over a RID interval ---

def _decode_interval(db, info, pages, span, cache):
    """Values of one column for RIDs [span[0], span[1]), in RID order."""
    start, end = span
    out = []
    for pid in pages:
        ordinal = info.placement.ordinal(pid)
        p_start, p_end = info.rid_index.page_span(ordinal)
        lo, hi = max(start, p_start), min(end, p_end)
        if lo >= hi:
            continue
        parsed = cache.get(pid)
        if info.col_type.is_varlen:
            records = page_mod.decode_varlen_page(parsed)
            out.extend(rec for rid, rec in records[lo - p_start : hi - p_start])
        else:
            out.extend(
                page_mod.decode_fixed_page(
                    parsed, info.col_type, value_range=(lo - p_start, hi - p_start)
                )
            )
    return out


def _decoded_bytes(info, values):
    if info.col_type.is_varlen:
        return sum(len(v) for v in values)
    return len(values) * info.col_type.fixed_width


def _batch_bytes(values):
    if values and isinstance(values[0], (bytes, bytearray)):
        return sum(len(v) for v in values)
    return 8 * len(values)


# --- operators over decoded column batches ---

def _rows_at(cols, extra, live):
    for i in live:
        row = {c: vals[i] for c, vals in cols.items()}
        for c, vals in extra.items():
            row[c] = vals[i]
        yield row


def _apply_op(op, cols, extra, live, tables, agg):
    """One operator over a batch of aligned column values.

    ``cols`` maps storage column -> list sharing RID order; ``extra``
    holds columns carried in by probes (index -> value maps); ``live``
    is the surviving index list.  Returns the new ``live``.
    """
    if isinstance(op, Filter):
        col = cols[op.column]
        fop, const = op.op, op.const
        if fop == "between":
            lo, hi = const
            return [i for i in live if lo <= col[i] <= hi]
        return [i for i in live if _compare(col[i], fop, const)]
    if isinstance(op, LikeFilter):
        col = cols[op.column]
        needle = op.needle
        return [i for i in live if kmp_contains(needle, col[i])]
    if isinstance(op, HashBuild):
        ht = tables[op.name]
        key = cols[op.key]
        payload = [extra.get(c) or cols[c] for c in op.payload]
        for i in live:
            ht.insert(key[i], tuple(col[i] for col in payload))
        return []
    if isinstance(op, HashProbe):
        ht = tables[op.name]
        key = cols[op.key]
        kept = []
        carried = {c: {} for c in op.carry}
        for i in live:
            hits = ht.get(key[i])
            if not hits:
                continue
            kept.append(i)
            # build keys are unique in the canned plans; carry the
            # first (only) payload
            for c, v in zip(op.carry, hits[0]):
                carried[c][i] = v
        extra.update(carried)
        return kept
    if isinstance(op, Aggregate):
        agg.update_batch(_rows_at(cols, extra, live))
        return []
    raise PlanError("unknown operator %r" % (op,))


def _apply_ops(batch, columns, ops, tables, agg, emitted):
    """Run the whole operator chain over one batch; rows surviving a
    chain without a sink fall through to ``emitted``."""
    cols = {c: batch[c] for c in columns}
    live = list(range(len(batch[columns[0]]) if columns else 0))
    extra = {}
    for op in ops:
        live = _apply_op(op, cols, extra, live, tables, agg)
        if not live:
            break
    emitted.extend(_rows_at(cols, extra, live))


def _build_groups(db, pipeline, pruned):
    """Logical page groups: one per surviving anchor page (the column
    with the fewest pages), carrying each column's aligned page ids and
    the common RID intervals they cover."""
    infos = {name: db.column(pipeline.table, name) for name in pipeline.columns}
    anchor = min(
        pipeline.columns, key=lambda n: len(infos[n].placement.page_ids)
    )
    common = None
    for name in pipeline.columns:
        ivals = catalog.pages_to_intervals(
            pruned[name], infos[name].placement, infos[name].rid_index
        )
        common = ivals if common is None else catalog._intersect_two(common, ivals)
    common = common or []
    groups = []
    for pid in pruned[anchor].page_ids:
        a_span = infos[anchor].rid_index.page_span(infos[anchor].placement.ordinal(pid))
        spans = catalog._intersect_two([a_span], common)
        if not spans:
            continue
        lo, hi = spans[0][0], spans[-1][1]
        per_col = {}
        for name in pipeline.columns:
            info = infos[name]
            ids = [
                p
                for p in pruned[name].page_ids
                if _page_overlaps(info, p, lo, hi)
            ]
            per_col[name] = ids
        groups.append((spans, per_col))
    return infos, groups


def _page_overlaps(info, page_id, lo, hi):
    s, e = info.rid_index.page_span(info.placement.ordinal(page_id))
    return s < hi and lo < e


def _pipeline_row_bound(db, pipeline):
    return db.table_rows(pipeline.table)


def _make_sinks(db, pipeline, tables):
    agg = None
    for op in pipeline.ops:
        if isinstance(op, HashBuild):
            tables[op.name] = HashTable(_pipeline_row_bound(db, pipeline))
        elif isinstance(op, Aggregate):
            agg = _AggState(op, _pipeline_row_bound(db, pipeline))
    return agg


# --- fused mode ---

def _run_pipeline_fused(db, pipeline, pruned, tables, stats, pairs, workers,
                        scratch_bytes, trace):
    infos, groups = _build_groups(db, pipeline, pruned)
    agg = _make_sinks(db, pipeline, tables)
    emitted = []
    cache = _PageCache()
    cursor = {"next": 0}
    lock = threading.Lock()
    errors = []

    def worker(widx):
        pair = pairs[widx % len(pairs)]
        try:
            while True:
                with lock:
                    gi = cursor["next"]
                    cursor["next"] += 1
                if gi >= len(groups):
                    return
                spans, per_col = groups[gi]
                _read_pages(db, infos, list(per_col.items()), pair, cache)
                stats.add_barrier()  # IO complete before decode
                batch = {}
                group_bytes = 0
                for name in pipeline.columns:
                    vals = []
                    for span in spans:
                        vals.extend(
                            _decode_interval(db, infos[name], per_col[name], span, cache)
                        )
                    batch[name] = vals
                    group_bytes += _decoded_bytes(infos[name], vals)
                if group_bytes > scratch_bytes:
                    trace.scratch_spills += 1  # spill to heap, transparently
                stats.add_barrier()  # decode complete before operators
                _apply_ops(batch, pipeline.columns, pipeline.ops, tables, agg, emitted)
        except Exception as e:  # propagate after releasing waiters
            cache.failed.set()
            errors.append(e)

    stats.add_launch()
    trace.pass_launches += 1
    nworkers = max(1, min(workers, len(groups)))
    if nworkers == 1:
        worker(0)
    else:
        threads = [
            threading.Thread(target=worker, args=(w,), daemon=True)
            for w in range(nworkers)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
    if errors:
        raise errors[0]
    stats.add_barrier()  # pipeline-complete hard barrier
    return agg, emitted


# --- staged mode ---

def _run_pipeline_staged(db, pipeline, pruned, tables, stats, pairs,
                         work_mem_bytes, trace):
    infos = {name: db.column(pipeline.table, name) for name in pipeline.columns}
    agg = _make_sinks(db, pipeline, tables)
    emitted = []
    cache = _PageCache()
    pair = pairs[0]

    def launch():
        stats.add_launch()
        trace.pass_launches += 1
        stats.add_barrier()

    def charge(nbytes):
        trace.intermediate_bytes += nbytes
        if trace.intermediate_bytes > work_mem_bytes:
            raise WorkMemExceededError(
                "staged intermediates exceed work-memory budget"
            )

    # pass 1: IO — all pruned pages into a buffer
    launch()
    seen = set()
    wanted = []
    for name in pipeline.columns:
        ids = [p for p in pruned[name].page_ids if p not in seen]
        seen.update(ids)
        wanted.append((name, ids))
    _read_pages(db, infos, wanted, pair, cache)
    for name, ids in wanted:
        for pid in ids:
            charge(db.page_location(infos[name], pid)[2])

    # pass 2: decompress — full column arrays over the common RID set
    launch()
    spans = None
    for name in pipeline.columns:
        ivals = catalog.pages_to_intervals(
            pruned[name], infos[name].placement, infos[name].rid_index
        )
        spans = ivals if spans is None else catalog._intersect_two(spans, ivals)
    columns = {}
    for name in pipeline.columns:
        vals = []
        for span in spans or []:
            vals.extend(
                _decode_interval(db, infos[name], pruned[name].page_ids, span, cache)
            )
        columns[name] = vals
        charge(_decoded_bytes(infos[name], vals))

    # passes 3..k: one per operator (aggregate takes accumulate+finalize).
    # Each operator pass consumes the previous materialization and emits
    # a fresh one: surviving rows are gathered into new column arrays.
    live = list(range(len(columns[pipeline.columns[0]]) if pipeline.columns else 0))
    for op in pipeline.ops:
        launch()
        extra = {}
        live = _apply_op(op, columns, extra, live, tables, agg)
        if isinstance(op, Aggregate):
            launch()  # result finalization pass
            charge(16 * len(agg.table))
        elif live or extra:
            columns = {
                c: [vals[i] for i in live] for c, vals in columns.items()
            }
            for c, vals in extra.items():
                columns[c] = [vals[i] for i in live]
            live = list(range(len(live)))
            charge(sum(_batch_bytes(v) for v in columns.values()))
    emitted.extend(_rows_at(columns, {}, live))
    return agg, emitted


# --- query driver ---

def run_query(db, query, mode="fused", workers=DEFAULT_EXEC_WORKERS,
              io_workers=None, io_config=None, scratch_bytes=DEFAULT_SCRATCH_BYTES,
              work_mem_bytes=DEFAULT_WORK_MEM_BYTES, stats=None):
    """Execute all pipelines of a query sequentially in plan order.

    Returns a QueryResult whose rows come from the final pipeline's
    aggregate (or its emitted rows if it has no sink).
    """
    if mode not in ("fused", "staged"):
        raise PlanError("unknown mode %r" % (mode,))
    stats = stats if stats is not None else IoStats()
    io_config = io_config or IoConfig()
    io_workers = io_workers or (workers if mode == "fused" else 1)
    pairs = configure_queues(io_workers, db.devices, io_config, stats)
    traces = []
    tables = {}

    # pruning pass: one launch covering every pipeline of the query
    stats.add_launch()
    pruned_all = [prune_pipeline(db, p) for p in query.pipelines]

    last_agg = None
    last_emitted = []
    for idx, pipeline in enumerate(query.pipelines):
        trace = ExecTrace(idx, mode)
        before = stats.bytes_read
        barriers_before = stats.barrier_count
        t0 = time.perf_counter()
        if mode == "fused":
            agg, emitted = _run_pipeline_fused(
                db, pipeline, pruned_all[idx], tables, stats, pairs,
                workers, scratch_bytes, trace,
            )
        else:
            agg, emitted = _run_pipeline_staged(
                db, pipeline, pruned_all[idx], tables, stats, pairs,
                work_mem_bytes, trace,
            )
        trace.wall_ms = (time.perf_counter() - t0) * 1e3
        trace.bytes_read = stats.bytes_read - before
        trace.barrier_count = stats.barrier_count - barriers_before
        traces.append(trace)
        if agg is not None:
            last_agg, last_emitted = agg, emitted
        elif emitted:
            last_agg, last_emitted = None, emitted

    rows = last_agg.finalize() if last_agg is not None else last_emitted
    return QueryResult(rows, traces, stats.as_dict())
