"""Deterministic pipe-delimited data generators shaped like the TPC-H
and star-schema benchmark tables.

Row counts scale linearly with the scale factor (SF 1 = 6M fact rows);
values are drawn from a seeded RNG, so identical (schema, sf, seed)
arguments reproduce identical files byte for byte.
"""

from __future__ import annotations

import os
import random
from datetime import date, timedelta

MIN_SF = 0.001
MAX_SF = 1.0

_START = date(1992, 1, 1)
_END = date(1998, 12, 31)
_DAYS = (_END - _START).days

_WORDS = (
    "pending", "special", "final", "express", "regular", "furious",
    "careful", "ironic", "silent", "bold", "even", "quick", "slow",
    "deposits", "requests", "accounts", "packages", "instructions",
    "platelets", "foxes", "theodolites", "pinto", "beans", "asymptotes",
)
_SEGMENTS = ("AUTOMOBILE", "BUILDING", "FURNITURE", "MACHINERY", "HOUSEHOLD")
_REGIONS = ("AFRICA", "AMERICA", "ASIA", "EUROPE", "MIDDLE EAST")


def _check_sf(sf):
    if not MIN_SF <= sf <= MAX_SF:
        raise ValueError("scale factor must be in [%g, %g]" % (MIN_SF, MAX_SF))


def _comment(rng, lo, hi):
    out = []
    n = 0
    target = rng.randint(lo, hi)
    while n < target:
        w = rng.choice(_WORDS)
        out.append(w)
        n += len(w) + 1
    return " ".join(out)


def _date_str(rng):
    return (_START + timedelta(days=rng.randint(0, _DAYS))).isoformat()


def gen_tpch(out_dir, sf=0.01, seed=42):
    _check_sf(sf)
    rng = random.Random(seed)
    os.makedirs(out_dir, exist_ok=True)
    n_cust = max(50, int(150_000 * sf))
    n_ord = max(200, int(1_500_000 * sf))
    n_li = max(800, int(6_000_000 * sf))

    with open(os.path.join(out_dir, "customer.tbl"), "w") as f:
        for i in range(1, n_cust + 1):
            f.write("%d|%d|%s|%s|\n" % (
                i, rng.randint(0, 24), rng.choice(_SEGMENTS),
                _comment(rng, 29, 116),
            ))

    order_dates = {}
    with open(os.path.join(out_dir, "orders.tbl"), "w") as f:
        for i in range(1, n_ord + 1):
            d = _date_str(rng)
            order_dates[i] = d
            f.write("%d|%d|%s|%s|\n" % (
                i, rng.randint(1, n_cust), d, _comment(rng, 19, 78),
            ))

    with open(os.path.join(out_dir, "lineitem.tbl"), "w") as f:
        for _ in range(n_li):
            okey = rng.randint(1, n_ord)
            ship = date.fromisoformat(order_dates[okey]) + timedelta(
                days=rng.randint(1, 121)
            )
            f.write("%d|%d|%d.%02d|0.%02d|%s|%s|%s|%s|\n" % (
                okey, rng.randint(1, 50),
                rng.randint(900, 104_949), rng.randint(0, 99),
                rng.randint(0, 10),
                rng.choice("RAN"), rng.choice("OF"),
                ship.isoformat(), _comment(rng, 10, 43),
            ))
    return {"customer": n_cust, "orders": n_ord, "lineitem": n_li}


def gen_ssb(out_dir, sf=0.01, seed=42):
    _check_sf(sf)
    rng = random.Random(seed)
    os.makedirs(out_dir, exist_ok=True)
    n_cust = max(50, int(30_000 * sf))
    n_supp = max(20, int(2_000 * sf))
    n_part = max(100, int(200_000 * sf))
    n_lo = max(800, int(6_000_000 * sf))

    datekeys = []
    with open(os.path.join(out_dir, "date_dim.tbl"), "w") as f:
        d = _START
        while d <= _END:
            key = d.year * 10_000 + d.month * 100 + d.day
            datekeys.append(key)
            f.write("%d|%d|%d|\n" % (key, d.year, d.year * 100 + d.month))
            d += timedelta(days=1)

    with open(os.path.join(out_dir, "part.tbl"), "w") as f:
        for i in range(1, n_part + 1):
            mfgr = rng.randint(1, 5)
            cat = rng.randint(1, 5)
            f.write("%d|MFGR#%d%d|MFGR#%d%d%d|\n" % (
                i, mfgr, cat, mfgr, cat, rng.randint(1, 40),
            ))

    with open(os.path.join(out_dir, "supplier.tbl"), "w") as f:
        for i in range(1, n_supp + 1):
            f.write("%d|%d|%s|\n" % (i, rng.randint(0, 24), rng.choice(_REGIONS)))

    with open(os.path.join(out_dir, "customer.tbl"), "w") as f:
        for i in range(1, n_cust + 1):
            f.write("%d|%d|%s|\n" % (i, rng.randint(0, 24), rng.choice(_REGIONS)))

    with open(os.path.join(out_dir, "lineorder.tbl"), "w") as f:
        for i in range(1, n_lo + 1):
            price = rng.randint(90_000, 10_494_950)
            disc = rng.randint(0, 10)
            f.write("%d|%d|%d|%d|%d|%d|%d.%02d|%d|%d.%02d|\n" % (
                i, rng.randint(1, n_cust), rng.randint(1, n_supp),
                rng.randint(1, n_part), rng.choice(datekeys),
                rng.randint(1, 50), price // 100, price % 100,
                disc, price * (100 - disc) // 10_000,
                price * (100 - disc) // 100 % 100,
            ))
    return {
        "date_dim": len(datekeys), "part": n_part, "supplier": n_supp,
        "customer": n_cust, "lineorder": n_lo,
    }


GENERATORS = {"tpch": gen_tpch, "ssb": gen_ssb}


def generate(schema_name, out_dir, sf=0.01, seed=42):
    try:
        gen = GENERATORS[schema_name]
    except KeyError:
        raise ValueError("no generator for schema %r" % (schema_name,)) from None
    return gen(out_dir, sf=sf, seed=seed)
