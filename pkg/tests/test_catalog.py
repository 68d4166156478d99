import random

import pytest

from colfuse import catalog
from colfuse.errors import ColfuseError


def _index(counts):
    return catalog.rid_index_from_counts(counts)


def test_rid_index_spans():
    idx = _index([100, 50, 25])
    assert idx.total_rows == 175
    assert idx.page_span(0) == (0, 100)
    assert idx.page_span(2) == (150, 175)


def test_rid_to_page_matches_linear_scan():
    rng = random.Random(4)
    counts = [rng.randint(1, 40) for _ in range(50)]
    idx = _index(counts)
    spans = [idx.page_span(i) for i in range(len(counts))]
    for rid in range(idx.total_rows):
        expect = next(i for i, (s, e) in enumerate(spans) if s <= rid < e)
        assert catalog.rid_to_page(idx, rid) == expect
    with pytest.raises(ColfuseError):
        catalog.rid_to_page(idx, idx.total_rows)
    with pytest.raises(ColfuseError):
        catalog.rid_to_page(idx, -1)


def test_align_pages_minimal_cover():
    a = _index([100, 100, 100])
    b = _index([60, 60, 60, 60, 60])
    assert catalog.align_pages(a, b, 0) == [0, 1]
    assert catalog.align_pages(a, b, 1) == [1, 2, 3]
    with pytest.raises(ColfuseError):
        catalog.align_pages(a, _index([10]), 0)


def _brute_prune(series, boundaries, predicates):
    """Pages that contain at least one row satisfying all predicates, plus
    any page the inclusive min/max test cannot exclude."""
    keep = []
    for ordinal, (s, e) in enumerate(boundaries):
        ok = True
        for attr_id, op, const in predicates:
            vals = series[attr_id][s:e]
            lo, hi = min(vals), max(vals)
            if op == "lt":
                hit = lo < const
            elif op == "le":
                hit = lo <= const
            elif op == "eq":
                hit = lo <= const <= hi
            elif op == "ge":
                hit = hi >= const
            elif op == "gt":
                hit = hi > const
            else:
                hit = hi >= const[0] and lo <= const[1]
            if not hit:
                ok = False
                break
        if ok:
            keep.append(ordinal)
    return keep


def test_prune_sound_and_tight_on_random_data():
    rng = random.Random(7)
    n = 2000
    series = {0: sorted(rng.randrange(1000) for _ in range(n)),
              1: [rng.randrange(50) for _ in range(n)]}
    boundaries = [(i, min(i + 100, n)) for i in range(0, n, 100)]
    zm = catalog.build_zone_map(series, boundaries)
    placement = catalog.ColumnPlacement("t.c", tuple(range(10, 10 + len(boundaries))),
                                        tuple(s for s, _ in boundaries))
    ops = ["lt", "le", "eq", "ge", "gt", "between"]
    for _ in range(300):
        attr = rng.choice([0, 1])
        op = rng.choice(ops)
        const = (rng.randrange(1100) if op != "between"
                 else tuple(sorted((rng.randrange(1100), rng.randrange(1100)))))
        preds = [(attr, op, const)]
        got = catalog.prune(zm, placement, preds)
        expect = [placement.page_ids[o] for o in _brute_prune(series, boundaries, preds)]
        assert list(got.page_ids) == expect
        # rows matching the predicate must all lie in surviving pages
        for ordinal, (s, e) in enumerate(boundaries):
            if placement.page_ids[ordinal] in got.page_ids:
                continue
            vals = series[attr][s:e]
            for v in vals:
                if op == "between":
                    assert not (const[0] <= v <= const[1])
                elif op == "lt":
                    assert not v < const
                elif op == "le":
                    assert not v <= const
                elif op == "eq":
                    assert v != const
                elif op == "ge":
                    assert not v >= const
                else:
                    assert not v > const


def test_prune_unknown_attr_keeps_all_pages():
    zm = catalog.build_zone_map({0: [1, 2, 3, 4]}, [(0, 2), (2, 4)])
    placement = catalog.ColumnPlacement("t.c", (0, 1), (0, 2))
    got = catalog.prune(zm, placement, [(99, "eq", 5)])
    assert got.page_ids == (0, 1)


def test_interval_algebra():
    merged = catalog._merge_intervals([(5, 10), (0, 3), (9, 12), (3, 5)])
    assert merged == [(0, 12)]
    assert catalog._intersect_two([(0, 10), (20, 30)], [(5, 25)]) == [(5, 10), (20, 25)]


def test_intersect_page_lists_common_rid_set():
    pa = catalog.ColumnPlacement("a", (0, 1, 2), (0, 100, 200))
    pb = catalog.ColumnPlacement("b", (3, 4, 5, 6), (0, 80, 160, 240))
    ia = _index([100, 100, 100])
    ib = _index([80, 80, 80, 60])
    lists = {
        "a": catalog.PrunedPageList("a", (1,)),       # rids 100..200
        "b": catalog.PrunedPageList("b", (4, 5, 6)),  # rids 80..300
    }
    out = catalog.intersect_page_lists(
        lists, {"a": pa, "b": pb}, {"a": ia, "b": ib})
    assert out["a"].page_ids == (1,)
    assert out["b"].page_ids == (4, 5)  # rids 100..200 live in pages 4 and 5


def test_side_file_roundtrips(tmp_path):
    u64 = [0, 1, 2**40, 2**63]
    u32 = [0, 7, 2**31]
    catalog.write_u64_array(tmp_path / "a", u64)
    catalog.write_u32_array(tmp_path / "b", u32)
    assert catalog.read_u64_array(tmp_path / "a") == u64
    assert catalog.read_u32_array(tmp_path / "b") == u32
    zm = catalog.build_zone_map(
        {0: [5, -3, 8, 1], 2: [0, 0, 9, 9]}, [(0, 2), (2, 4)])
    catalog.write_zone_map(tmp_path / "z", zm)
    back = catalog.read_zone_map(tmp_path / "z")
    assert back.bounds == {0: ((-3, 5), (1, 8)), 2: ((0, 0), (9, 9))}
