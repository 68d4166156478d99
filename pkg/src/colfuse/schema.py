"""Table schemas for the engine: column types, cluster keys, designated
zone-map attributes with optional one-hop join mappings.

Built-in schemas mimic the shapes of the TPC-H and star-schema benchmark
tables at desk scale; they are shape-compatible, not byte-compatible with
the official generators.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .codec import CHAR, DATE, DECIMAL_18_2, INT32, INT64, VARCHAR, ColumnType, Kind

_KIND_NAMES = {
    "int32": INT32,
    "int64": INT64,
    "decimal_18_2": DECIMAL_18_2,
    "date": DATE,
    "varchar": VARCHAR,
}


@dataclass(frozen=True)
class Column:
    name: str
    col_type: ColumnType


@dataclass(frozen=True)
class ZoneAttr:
    """A designated pruning attribute.

    Direct attributes read ``source`` from the row itself; reference
    attributes follow a one-hop join: the row's ``source`` value is looked
    up in ``join_table.join_key`` and the joined row's ``join_value``
    provides the zone-mapped key.
    """

    name: str
    source: str
    join_table: str | None = None
    join_key: str | None = None
    join_value: str | None = None

    @property
    def is_reference(self):
        return self.join_table is not None


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple
    cluster_key: str
    zone_attrs: tuple = ()

    def column(self, name) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def attr_ids(self):
        """Stable attribute-name -> id mapping for this table's zone maps."""
        return {a.name: i for i, a in enumerate(sorted(self.zone_attrs, key=lambda a: a.name))}


@dataclass(frozen=True)
class Schema:
    name: str
    tables: tuple

    def table(self, name) -> Table:
        for t in self.tables:
            if t.name == name:
                return t
        raise KeyError(name)


def tpch_schema():
    customer = Table(
        "customer",
        (
            Column("c_custkey", INT32),
            Column("c_nationkey", INT32),
            Column("c_mktsegment", VARCHAR),
            Column("c_comment", VARCHAR),
        ),
        cluster_key="c_custkey",
    )
    orders = Table(
        "orders",
        (
            Column("o_orderkey", INT64),
            Column("o_custkey", INT32),
            Column("o_orderdate", DATE),
            Column("o_comment", VARCHAR),
        ),
        cluster_key="o_orderdate",
        zone_attrs=(ZoneAttr("o_orderdate", "o_orderdate"),),
    )
    lineitem = Table(
        "lineitem",
        (
            Column("l_orderkey", INT64),
            Column("l_quantity", INT32),
            Column("l_extendedprice", DECIMAL_18_2),
            Column("l_discount", DECIMAL_18_2),
            Column("l_returnflag", CHAR(1)),
            Column("l_linestatus", CHAR(1)),
            Column("l_shipdate", DATE),
            Column("l_comment", VARCHAR),
        ),
        cluster_key="l_shipdate",
        zone_attrs=(
            ZoneAttr("l_shipdate", "l_shipdate"),
            ZoneAttr("l_quantity", "l_quantity"),
            ZoneAttr("l_discount", "l_discount"),
            ZoneAttr("o_orderdate", "l_orderkey", "orders", "o_orderkey", "o_orderdate"),
        ),
    )
    return Schema("tpch", (customer, orders, lineitem))


def ssb_schema():
    date_dim = Table(
        "date_dim",
        (
            Column("d_datekey", INT32),
            Column("d_year", INT32),
            Column("d_yearmonthnum", INT32),
        ),
        cluster_key="d_datekey",
    )
    part = Table(
        "part",
        (
            Column("p_partkey", INT32),
            Column("p_category", VARCHAR),
            Column("p_brand", VARCHAR),
        ),
        cluster_key="p_partkey",
    )
    supplier = Table(
        "supplier",
        (
            Column("s_suppkey", INT32),
            Column("s_nationkey", INT32),
            Column("s_region", VARCHAR),
        ),
        cluster_key="s_suppkey",
    )
    customer = Table(
        "customer",
        (
            Column("c_custkey", INT32),
            Column("c_nationkey", INT32),
            Column("c_region", VARCHAR),
        ),
        cluster_key="c_custkey",
    )
    lineorder = Table(
        "lineorder",
        (
            Column("lo_orderkey", INT64),
            Column("lo_custkey", INT32),
            Column("lo_suppkey", INT32),
            Column("lo_partkey", INT32),
            Column("lo_orderdate", INT32),
            Column("lo_quantity", INT32),
            Column("lo_extendedprice", DECIMAL_18_2),
            Column("lo_discount", INT32),
            Column("lo_revenue", DECIMAL_18_2),
        ),
        cluster_key="lo_orderdate",
        zone_attrs=(
            ZoneAttr("lo_orderdate", "lo_orderdate"),
            ZoneAttr("lo_quantity", "lo_quantity"),
            ZoneAttr("lo_discount", "lo_discount"),
            ZoneAttr("d_year", "lo_orderdate", "date_dim", "d_datekey", "d_year"),
        ),
    )
    return Schema("ssb", (date_dim, part, supplier, customer, lineorder))


_BUILTINS = {"tpch": tpch_schema, "ssb": ssb_schema}


def get_schema(name_or_path):
    """Look up a built-in schema or load one from a JSON file."""
    if name_or_path in _BUILTINS:
        return _BUILTINS[name_or_path]()
    with open(name_or_path) as f:
        doc = json.load(f)
    return schema_from_dict(doc)


def _col_type_from_dict(d):
    kind = d["kind"]
    if kind == "char":
        return CHAR(d["n"])
    return _KIND_NAMES[kind]


def schema_from_dict(doc):
    tables = []
    for t in doc["tables"]:
        cols = tuple(Column(c["name"], _col_type_from_dict(c)) for c in t["columns"])
        attrs = tuple(
            ZoneAttr(
                a["name"], a["source"],
                a.get("join_table"), a.get("join_key"), a.get("join_value"),
            )
            for a in t.get("zone_attrs", ())
        )
        tables.append(Table(t["name"], cols, t["cluster_key"], attrs))
    return Schema(doc.get("name", "custom"), tuple(tables))


def col_type_to_dict(ct):
    if ct.kind is Kind.CHAR:
        return {"kind": "char", "n": ct.n}
    return {"kind": ct.kind.value}
