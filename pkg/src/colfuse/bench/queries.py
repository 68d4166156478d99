"""Canned query plans over the built-in schemas.

All constants are storage values: dates as days since 1970-01-01,
decimals as integer cents.  Revenue expressions use exact integer
arithmetic so engine and oracle results are comparable with equality.
"""

from __future__ import annotations

from .. import engine
from ..loader import parse_date

_D = parse_date


def q1(ship_upper="1998-09-02"):
    """Scan-heavy aggregation: group by return flag and line status."""
    cutoff = _D(ship_upper)
    price = ("col", "l_extendedprice")
    disc_price = ("mul", price, ("sub", ("const", 100), ("col", "l_discount")))
    return engine.Query("q1", (
        engine.Pipeline(
            "lineitem",
            ("l_shipdate", "l_returnflag", "l_linestatus", "l_quantity",
             "l_extendedprice", "l_discount"),
            (
                engine.Filter("l_shipdate", "le", cutoff),
                engine.Aggregate(
                    ("l_returnflag", "l_linestatus"),
                    (
                        ("sum", ("col", "l_quantity"), "sum_qty"),
                        ("sum", price, "sum_base_price"),
                        ("sum", disc_price, "sum_disc_price"),
                        ("avg", ("col", "l_quantity"), "avg_qty"),
                        ("count", ("const", 1), "count_order"),
                    ),
                ),
            ),
            prune=(("l_shipdate", "le", cutoff),),
        ),
    ))


def q3(segment="BUILDING", cut="1995-03-15"):
    """Three-pipeline join: customer -> orders -> lineitem."""
    cutoff = _D(cut)
    revenue = ("mul", ("col", "l_extendedprice"),
               ("sub", ("const", 100), ("col", "l_discount")))
    return engine.Query("q3", (
        engine.Pipeline(
            "customer", ("c_custkey", "c_mktsegment"),
            (
                engine.Filter("c_mktsegment", "eq", segment.encode()),
                engine.HashBuild("ht_cust", "c_custkey", ()),
            ),
        ),
        engine.Pipeline(
            "orders", ("o_orderkey", "o_custkey", "o_orderdate"),
            (
                engine.Filter("o_orderdate", "lt", cutoff),
                engine.HashProbe("ht_cust", "o_custkey", ()),
                engine.HashBuild("ht_ord", "o_orderkey", ("o_orderdate",)),
            ),
            prune=(("o_orderdate", "lt", cutoff),),
        ),
        engine.Pipeline(
            "lineitem", ("l_orderkey", "l_shipdate", "l_extendedprice", "l_discount"),
            (
                engine.Filter("l_shipdate", "gt", cutoff),
                engine.HashProbe("ht_ord", "l_orderkey", ("o_orderdate",)),
                engine.Aggregate(
                    ("l_orderkey", "o_orderdate"),
                    (("sum", revenue, "revenue"),),
                ),
            ),
            prune=(("l_shipdate", "gt", cutoff), ("o_orderdate", "lt", cutoff)),
        ),
    ))


def q6(year=1994, disc_lo=5, disc_hi=7, qty=24):
    """Selective scan over four columns with a scalar aggregate."""
    lo, hi = _D("%d-01-01" % year), _D("%d-12-31" % year)
    revenue = ("mul", ("col", "l_extendedprice"), ("col", "l_discount"))
    return engine.Query("q6", (
        engine.Pipeline(
            "lineitem",
            ("l_shipdate", "l_discount", "l_quantity", "l_extendedprice"),
            (
                engine.Filter("l_shipdate", "between", (lo, hi)),
                engine.Filter("l_discount", "between", (disc_lo, disc_hi)),
                engine.Filter("l_quantity", "lt", qty),
                engine.Aggregate((), (("sum", revenue, "revenue"),)),
            ),
            prune=(
                ("l_shipdate", "between", (lo, hi)),
                ("l_discount", "between", (disc_lo, disc_hi)),
                ("l_quantity", "lt", qty),
            ),
        ),
    ))


def qlk(needle="pending", year=1995):
    """Substring LIKE over order comments, grouped by order date."""
    lo, hi = _D("%d-01-01" % year), _D("%d-12-31" % year)
    return engine.Query("qlk", (
        engine.Pipeline(
            "orders", ("o_orderdate", "o_comment"),
            (
                engine.Filter("o_orderdate", "between", (lo, hi)),
                engine.LikeFilter("o_comment", needle.encode()),
                engine.Aggregate(("o_orderdate",), (("count", ("const", 1), "n"),)),
            ),
            prune=(("o_orderdate", "between", (lo, hi)),),
        ),
    ))


def s11(year=1993, disc_lo=1, disc_hi=3, qty=25):
    """Star join flight 1: date filter via one dimension."""
    revenue = ("mul", ("col", "lo_extendedprice"), ("col", "lo_discount"))
    return engine.Query("s11", (
        engine.Pipeline(
            "date_dim", ("d_datekey", "d_year"),
            (
                engine.Filter("d_year", "eq", year),
                engine.HashBuild("ht_date", "d_datekey", ()),
            ),
        ),
        engine.Pipeline(
            "lineorder",
            ("lo_orderdate", "lo_discount", "lo_quantity", "lo_extendedprice"),
            (
                engine.Filter("lo_discount", "between", (disc_lo, disc_hi)),
                engine.Filter("lo_quantity", "lt", qty),
                engine.HashProbe("ht_date", "lo_orderdate", ()),
                engine.Aggregate((), (("sum", revenue, "revenue"),)),
            ),
            prune=(
                ("d_year", "eq", year),
                ("lo_discount", "between", (disc_lo, disc_hi)),
                ("lo_quantity", "lt", qty),
            ),
        ),
    ))


def s21(category="MFGR#12", region="AMERICA"):
    """Star join flight 2: two selective dimensions plus the date."""
    return engine.Query("s21", (
        engine.Pipeline(
            "date_dim", ("d_datekey", "d_year"),
            (engine.HashBuild("ht_date", "d_datekey", ("d_year",)),),
        ),
        engine.Pipeline(
            "part", ("p_partkey", "p_category", "p_brand"),
            (
                engine.Filter("p_category", "eq", category.encode()),
                engine.HashBuild("ht_part", "p_partkey", ("p_brand",)),
            ),
        ),
        engine.Pipeline(
            "supplier", ("s_suppkey", "s_region"),
            (
                engine.Filter("s_region", "eq", region.encode()),
                engine.HashBuild("ht_supp", "s_suppkey", ()),
            ),
        ),
        engine.Pipeline(
            "lineorder",
            ("lo_partkey", "lo_suppkey", "lo_orderdate", "lo_revenue"),
            (
                engine.HashProbe("ht_part", "lo_partkey", ("p_brand",)),
                engine.HashProbe("ht_supp", "lo_suppkey", ()),
                engine.HashProbe("ht_date", "lo_orderdate", ("d_year",)),
                engine.Aggregate(
                    ("d_year", "p_brand"),
                    (("sum", ("col", "lo_revenue"), "revenue"),),
                ),
            ),
        ),
    ))


def s31(region="ASIA", year_lo=1992, year_hi=1997):
    """Star join flight 3: nation-level revenue over a year range."""
    return engine.Query("s31", (
        engine.Pipeline(
            "customer", ("c_custkey", "c_nationkey", "c_region"),
            (
                engine.Filter("c_region", "eq", region.encode()),
                engine.HashBuild("ht_cust", "c_custkey", ("c_nationkey",)),
            ),
        ),
        engine.Pipeline(
            "supplier", ("s_suppkey", "s_nationkey", "s_region"),
            (
                engine.Filter("s_region", "eq", region.encode()),
                engine.HashBuild("ht_supp", "s_suppkey", ("s_nationkey",)),
            ),
        ),
        engine.Pipeline(
            "date_dim", ("d_datekey", "d_year"),
            (
                engine.Filter("d_year", "between", (year_lo, year_hi)),
                engine.HashBuild("ht_date", "d_datekey", ("d_year",)),
            ),
        ),
        engine.Pipeline(
            "lineorder",
            ("lo_custkey", "lo_suppkey", "lo_orderdate", "lo_revenue"),
            (
                engine.HashProbe("ht_cust", "lo_custkey", ("c_nationkey",)),
                engine.HashProbe("ht_supp", "lo_suppkey", ("s_nationkey",)),
                engine.HashProbe("ht_date", "lo_orderdate", ("d_year",)),
                engine.Aggregate(
                    ("c_nationkey", "s_nationkey", "d_year"),
                    (("sum", ("col", "lo_revenue"), "revenue"),),
                ),
            ),
            prune=(("d_year", "between", (year_lo, year_hi)),),
        ),
    ))


QUERIES = {
    "q1": q1, "q3": q3, "q6": q6, "qlk": qlk,
    "s11": s11, "s21": s21, "s31": s31,
}

TPCH_QUERIES = ("q1", "q3", "q6", "qlk")
SSB_QUERIES = ("s11", "s21", "s31")


def get_query(query_id, **params):
    try:
        return QUERIES[query_id](**params)
    except KeyError:
        raise ValueError("unknown query %r" % (query_id,)) from None


def schema_for(query_id):
    return "tpch" if query_id in TPCH_QUERIES else "ssb"
