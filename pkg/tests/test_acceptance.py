"""Acceptance gate: one test per criterion, each emitting a single
``criterion N (<name>): PASS`` line (visible in the -rA PASSES section),
with tolerances pinned in the assertions."""

import bisect
import hashlib
import pathlib
import random
import statistics
import time

import pytest

from colfuse import catalog, codec, engine, loader, page, schema
from colfuse.db import Database
from colfuse.kernels import kmp_contains
from colfuse.bench import datagen, oracle, queries, runner

from conftest import make_dataset

GOLDEN_FIXED = "cb39c8514d07c15b7b80d1e80961040272cd2990a13d35e06469df8fcc1a7e78"
GOLDEN_VARLEN = "4ad27a255b323e4656206861c3eeda849bad027d335847e55bec8465ec725ba5"

# fused pass launches (pipelines + 1 pruning) and staged totals per query
LAUNCH_COUNTS = {
    "q1": (2, 6), "q3": (4, 16), "q6": (2, 8), "qlk": (2, 7),
    "s11": (3, 12), "s21": (5, 19), "s31": (5, 20),
}

_INF = 1 << 62


def _verdict(num, name, ok, detail=""):
    line = "criterion %d (%s): %s" % (num, name, "PASS" if ok else "FAIL")
    if detail:
        line += " -- " + detail
    print(line)
    assert ok, line


def _tree(root):
    return {
        str(p.relative_to(root)): p.read_bytes()
        for p in sorted(pathlib.Path(root).rglob("*")) if p.is_file()
    }


# --- criterion 1 -----------------------------------------------------------

def test_criterion_01_codec_roundtrip():
    rng = random.Random(2024)
    t0 = time.monotonic()
    blocks = 0
    calls = 400
    per_call = 250
    block_size = 16
    for call in range(calls):
        width_class = 32 if call % 2 == 0 else 64
        lo, hi = (-(1 << 31), (1 << 31) - 1) if width_class == 32 \
            else (-(1 << 62), 1 << 62)
        base = rng.randrange(lo, hi - 1)
        span = min(hi - base + 1, 1 << rng.randrange(0, width_class - 1))
        values = [base + rng.randrange(span) for _ in range(per_call * block_size)]
        metas, payload = codec.for_compress(values, width_class, block_size)
        blocks += len(metas)
        pos = 0
        for m in metas:
            assert codec.for_decompress(m, payload, width_class) == \
                values[pos:pos + m.value_count]
            pos += m.value_count
        bi = rng.randrange(len(metas))
        m = metas[bi]
        s = rng.randrange(m.value_count)
        n = rng.randrange(m.value_count - s)
        lo_v = bi * block_size
        assert codec.for_decompress(m, payload, width_class, start=s, count=n) \
            == values[lo_v + s:lo_v + s + n]
    assert blocks == 100_000

    words = [bytes(rng.randrange(97, 123) for _ in range(rng.randrange(1, 9)))
             for _ in range(40)]
    records_done = 0
    for _ in range(20):
        recs = []
        for _ in range(500):
            parts = [rng.choice(words) for _ in range(rng.randrange(0, 8))]
            if rng.random() < 0.1:
                parts.append(bytes(rng.randrange(256) for _ in range(rng.randrange(6))))
            recs.append(b" ".join(parts))
        table = codec.fsst_build_table(recs)
        for r in recs:
            assert codec.fsst_decode_record(table, codec.fsst_encode(table, r)) == r
        records_done += len(recs)
    elapsed = time.monotonic() - t0
    _verdict(1, "codec roundtrip", blocks == 100_000 and records_done == 10_000
             and elapsed < 30.0,
             "%d FOR blocks + %d FSST records in %.1fs" % (blocks, records_done, elapsed))


# --- criterion 2 -----------------------------------------------------------

def test_criterion_02_page_golden_files():
    vals = [(i * 37) % 100000 - 5000 for i in range(1000)]
    fp = page.encode_fixed_page(vals, codec.INT32, 4096, 65536,
                                page_id=12, column_id=3)
    recs = [("record %d pending special deposits" % (i % 97)).encode()
            for i in range(500)]
    vp = page.encode_varlen_page(recs, list(range(2000, 2500)), 65536,
                                 page_id=40, column_id=7)
    fixed = hashlib.sha256(page.serialize_page(fp)).hexdigest()
    varlen = hashlib.sha256(page.serialize_page(vp)).hexdigest()
    _verdict(2, "page golden files",
             fixed == GOLDEN_FIXED and varlen == GOLDEN_VARLEN,
             "fixed %s.. varlen %s.." % (fixed[:12], varlen[:12]))


# --- criterion 3 -----------------------------------------------------------

def _pred_interval(op, const):
    if op == "lt":
        return (-_INF, const - 1)
    if op == "le":
        return (-_INF, const)
    if op == "eq":
        return (const, const)
    if op == "ge":
        return (const, _INF)
    if op == "gt":
        return (const + 1, _INF)
    return const  # between


def test_criterion_03_pruning_soundness(data_root, tpch_small, ssb_small):
    rng = random.Random(33)
    t0 = time.monotonic()
    preds_run = 0
    pages_excluded = 0
    for base in (tpch_small, ssb_small):
        ds = make_dataset(data_root, base.schema_name, base.sf, page_size=65536)
        dims = {
            t.name: {"table": t, "columns": ds.sorted_tables[t.name]}
            for t in ds.schema.tables
        }
        with Database(ds.db_dir) as db:
            for table in ds.schema.tables:
                series = loader.attr_series(table, ds.sorted_tables[table.name], dims)
                for attr_name, values in series.items():
                    aid = db.attr_id(table.name, attr_name)
                    lo, hi = min(values), max(values)
                    pad = max(1, (hi - lo) // 20)
                    infos = [db.column(table.name, c.name) for c in table.columns]
                    # sorted distinct attr values per page of every column
                    per_page = []
                    for info in infos:
                        spans = [info.rid_index.page_span(o)
                                 for o in range(len(info.offsets))]
                        per_page.append([sorted(set(values[s:e])) for s, e in spans])
                    for _ in range(200):
                        op = rng.choice(["lt", "le", "eq", "ge", "gt", "between"])
                        if op == "between":
                            const = tuple(sorted(
                                rng.randrange(lo - pad, hi + pad + 1) for _ in "ab"))
                        else:
                            const = rng.randrange(lo - pad, hi + pad + 1)
                        a, b = _pred_interval(op, const)
                        preds_run += 1
                        for info, distinct in zip(infos, per_page):
                            kept = set(catalog.prune(
                                info.zone_map, info.placement,
                                [(aid, op, const)]).page_ids)
                            for ordinal, pid in enumerate(info.placement.page_ids):
                                if pid in kept:
                                    continue
                                pages_excluded += 1
                                # excluded page must hold no matching row,
                                # so pruned scan output == unpruned output
                                vals = distinct[ordinal]
                                i = bisect.bisect_left(vals, a)
                                assert not (i < len(vals) and vals[i] <= b), \
                                    (table.name, attr_name, op, const, pid)
    elapsed = time.monotonic() - t0
    _verdict(3, "pruning soundness", preds_run >= 200 and pages_excluded > 0
             and elapsed < 120.0,
             "%d predicates, %d excluded page checks in %.1fs"
             % (preds_run, pages_excluded, elapsed))


# --- criteria 4 and 5 ------------------------------------------------------

@pytest.fixture(scope="module")
def small_runs(tpch_small, ssb_small):
    out = {}
    for ds in (tpch_small, ssb_small):
        qids = (queries.TPCH_QUERIES if ds.schema_name == "tpch"
                else queries.SSB_QUERIES)
        with Database(ds.db_dir) as db:
            for qid in qids:
                q = queries.get_query(qid)
                out[qid] = {
                    "oracle": oracle.run_oracle(ds.sorted_tables, q, ds.schema),
                    "fused": engine.run_query(db, q, "fused", workers=2),
                    "staged": engine.run_query(db, q, "staged"),
                }
    return out


def test_criterion_04_mode_equivalence(tpch_tiny, ssb_tiny, small_runs):
    t0 = time.monotonic()
    checked = 0
    for ds in (tpch_tiny, ssb_tiny):
        qids = (queries.TPCH_QUERIES if ds.schema_name == "tpch"
                else queries.SSB_QUERIES)
        with Database(ds.db_dir) as db:
            for qid in qids:
                q = queries.get_query(qid)
                expect = oracle.run_oracle(ds.sorted_tables, q, ds.schema)
                for mode in ("fused", "staged"):
                    got = engine.run_query(db, q, mode, workers=2)
                    assert got.rows == expect, (qid, mode, "sf=0.001")
                    checked += 1
    for qid, runs in small_runs.items():
        for mode in ("fused", "staged"):
            assert runs[mode].rows == runs["oracle"], (qid, mode, "sf=0.01")
            checked += 1
    elapsed = time.monotonic() - t0
    _verdict(4, "mode equivalence", checked == 28 and elapsed < 300.0,
             "%d query runs == oracle at SF 0.001 and 0.01 in %.1fs"
             % (checked, elapsed))


def test_criterion_05_launch_accounting(small_runs):
    details = []
    ok = True
    for qid, (fused_expect, staged_expect) in LAUNCH_COUNTS.items():
        q = queries.get_query(qid)
        fused = small_runs[qid]["fused"].pass_launches
        staged = small_runs[qid]["staged"].pass_launches
        ratio = staged / fused
        ok &= (fused == len(q.pipelines) + 1 == fused_expect
               and staged == staged_expect and ratio >= 3.0)
        details.append("%s %d/%d (%.2fx)" % (qid, fused, staged, ratio))
    _verdict(5, "launch accounting", ok, ", ".join(details))


# --- criterion 6 -----------------------------------------------------------

def test_criterion_06_io_volume_reduction(data_root, tpch_small, ssb_small):
    details = []
    ok = True
    for ds, qid in ((tpch_small, "q6"), (ssb_small, "s11")):
        plain = make_dataset(data_root, ds.schema_name, ds.sf, compress=False)
        q = queries.get_query(qid)
        with Database(ds.db_dir) as db:
            packed = engine.run_query(db, q, "fused").stats["bytes_read"]
        with Database(plain.db_dir) as db:
            raw = engine.run_query(db, q, "fused").stats["bytes_read"]
        ratio = packed / raw
        ok &= ratio <= 0.8
        details.append("%s %d/%d = %.3f" % (qid, packed, raw, ratio))
    _verdict(6, "io volume reduction", ok, ", ".join(details))


# --- criterion 7 -----------------------------------------------------------

def test_criterion_07_page_size_robustness(data_root, tpch_tiny, ssb_tiny):
    checked = 0
    for base in (tpch_tiny, ssb_tiny):
        qids = (queries.TPCH_QUERIES if base.schema_name == "tpch"
                else queries.SSB_QUERIES)
        expected = {
            qid: oracle.run_oracle(base.sorted_tables,
                                   queries.get_query(qid), base.schema)
            for qid in qids
        }
        for page_size in (64 << 10, 256 << 10, 1 << 20, 2 << 20):
            ds = make_dataset(data_root, base.schema_name, base.sf,
                              page_size=page_size)
            with Database(ds.db_dir) as db:
                for qid in qids:
                    q = queries.get_query(qid)
                    for mode in ("fused", "staged"):
                        got = engine.run_query(db, q, mode, workers=2)
                        assert got.rows == expected[qid], (qid, mode, page_size)
                        checked += 1
    _verdict(7, "page size robustness", checked == 7 * 4 * 2,
             "%d runs across 64K/256K/1M/2M pages" % checked)


# --- criterion 8 -----------------------------------------------------------

def _side_bytes(db_dir):
    meta = pathlib.Path(db_dir) / "meta"
    return sum(p.stat().st_size for p in meta.iterdir()
               if p.suffix in (".offsets", ".sizes", ".rids", ".zonemap"))


def _raw_bytes(raw_dir):
    return sum(p.stat().st_size for p in pathlib.Path(raw_dir).glob("*.tbl"))


def test_criterion_08_loader_determinism_and_overhead(tmp_path_factory,
                                                      data_root, tpch_small):
    root = tmp_path_factory.mktemp("loads")
    raw_dir = data_root / "raw-tpch-0.1"
    if not raw_dir.exists():
        datagen.generate("tpch", str(raw_dir), sf=0.1, seed=11)
    sch = schema.get_schema("tpch")
    outs = []
    for tag in ("a", "b"):
        out = root / tag
        loader.load_database(str(raw_dir),
                             loader.LoadPlan(sch, page_size=1 << 20,
                                             device_count=2, workers=tag == "a" and 1 or 4),
                             str(out))
        outs.append(out)
    identical = _tree(outs[0]) == _tree(outs[1])

    raw_tables = loader.load_tables(str(raw_dir), sch)
    decode_ok = True
    with Database(str(outs[0])) as db:
        for t in sch.tables:
            expect = loader.sort_cluster(raw_tables[t.name], t.cluster_key)
            for c in t.columns:
                info = db.column(t.name, c.name)
                got = []
                for pid in info.placement.page_ids:
                    dev, off, ln = db.page_location(info, pid)
                    parsed = page.parse_page(db.devices.read(dev, off, ln))
                    if c.col_type.is_varlen:
                        got.extend(r for _, r in page.decode_varlen_page(parsed))
                    else:
                        got.extend(page.decode_fixed_page(parsed, c.col_type))
                want = expect[c.name]
                if c.col_type.is_varlen:
                    want = [v.encode() for v in want]
                decode_ok &= got == want

    ratio = _side_bytes(outs[0]) / _raw_bytes(raw_dir)
    small_ratio = _side_bytes(tpch_small.db_dir) / _raw_bytes(tpch_small.raw_dir)
    _verdict(8, "loader determinism and overhead",
             identical and decode_ok and ratio <= 1e-4,
             "identical=%s decode=%s side/raw %.2e at SF 0.1 (%.2e at SF 0.01)"
             % (identical, decode_ok, ratio, small_ratio))


# --- criterion 9 -----------------------------------------------------------

def test_criterion_09_operator_oracles():
    rng = random.Random(77)
    alphabet = b"abcde"
    mismatches = 0
    for _ in range(10_000):
        text = bytes(rng.choice(alphabet) for _ in range(rng.randrange(0, 60)))
        pat = bytes(rng.choice(alphabet) for _ in range(rng.randrange(1, 7)))
        if rng.random() < 0.3 and text:
            i = rng.randrange(len(text))
            text = text[:i] + pat + text[i:]
        mismatches += kmp_contains(pat, text) != (pat in text)

    ht = engine.HashTable(10_000)
    ref = {}
    for _ in range(10_000):
        if ref and rng.random() < 0.5:
            key = rng.choice(list(ref))
            mismatches += ht.get(key) != ref[key]
        else:
            key = rng.randrange(-(1 << 40), 1 << 40)
            ht.insert(key, key % 97)
            ref.setdefault(key, []).append(key % 97)

    counts = []
    while sum(counts) < 10_000:
        counts.append(min(rng.randrange(1, 50), 10_000 - sum(counts)))
    idx = catalog.rid_index_from_counts(counts)
    spans = [idx.page_span(i) for i in range(len(counts))]
    for rid in range(idx.total_rows):
        expect = next(i for i, (s, e) in enumerate(spans) if s <= rid < e)
        mismatches += catalog.rid_to_page(idx, rid) != expect
    _verdict(9, "operator oracles", mismatches == 0,
             "%d mismatches over kmp/hash/rid_to_page" % mismatches)


# --- criterion 10 ----------------------------------------------------------

def test_criterion_10_wall_clock_trend(tpch_small, ssb_small):
    """Soft trend criterion: per-query staged/fused wall ratios over 10
    repetitions are reported; the hard assert is the aggregate
    (geometric-mean) non-regression ratio > 1.0 -- single-query means at
    desk scale sit within scheduler jitter."""
    details = []
    ratios = []
    for ds in (tpch_small, ssb_small):
        qids = (queries.TPCH_QUERIES if ds.schema_name == "tpch"
                else queries.SSB_QUERIES)
        for qid in qids:
            rows = runner.run_bench(ds.db_dir, qid, repetitions=10)
            fused = statistics.fmean(
                r["wall_ms"] for r in rows if r["mode"] == "fused")
            staged = statistics.fmean(
                r["wall_ms"] for r in rows if r["mode"] == "staged")
            ratios.append(staged / fused)
            details.append("%s %.2fx" % (qid, ratios[-1]))
    aggregate = statistics.geometric_mean(ratios)
    _verdict(10, "wall clock trend (staged/fused over 10 reps)",
             aggregate > 1.0,
             "aggregate %.2fx; per query %s" % (aggregate, ", ".join(details)))
