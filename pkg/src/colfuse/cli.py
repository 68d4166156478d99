"""Command-line interface: generate data, load a database, run and
verify queries, and benchmark."""

from __future__ import annotations

import argparse
import json
import sys

from . import engine, loader, schema as schema_mod
from .bench import datagen, kernelbench, oracle, queries, runner
from .db import Database
from .iosim import IoConfig

_CONFIG_KEYS = {
    "latency_s": float,
    "bandwidth_bps": float,
    "queue_depth": int,
    "scratch_bytes": int,
    "work_mem_bytes": int,
    "workers": int,
    "io_workers": int,
}


def read_config(path):
    """Plain key=value file for the latency model and worker knobs."""
    out = {}
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or key not in _CONFIG_KEYS:
                raise SystemExit("config %s:%d: bad entry %r" % (path, lineno, line))
            out[key] = _CONFIG_KEYS[key](value.strip())
    return out


def _exec_kwargs(args, cfg):
    io_config = IoConfig(
        latency_s=cfg.get("latency_s", IoConfig.latency_s),
        bandwidth_bps=cfg.get("bandwidth_bps", IoConfig.bandwidth_bps),
        queue_depth=cfg.get("queue_depth", IoConfig.queue_depth),
    )
    return {
        "workers": args.workers or cfg.get("workers", engine.DEFAULT_EXEC_WORKERS),
        "io_workers": args.io_workers or cfg.get("io_workers"),
        "io_config": io_config,
        "scratch_bytes": cfg.get("scratch_bytes", engine.DEFAULT_SCRATCH_BYTES),
        "work_mem_bytes": cfg.get("work_mem_bytes", engine.DEFAULT_WORK_MEM_BYTES),
    }


def cmd_gen(args):
    counts = datagen.generate(args.schema, args.out, sf=args.sf, seed=args.seed)
    for table, n in counts.items():
        print("%s: %d rows" % (table, n))
    return 0


def cmd_load(args):
    sch = schema_mod.get_schema(args.schema)
    if args.cluster_key:
        sch = _override_cluster_keys(sch, args.cluster_key)
    plan = loader.LoadPlan(
        sch, page_size=args.page_size, device_count=args.devices,
        compress=not args.no_compress, block_size=args.block_size,
        workers=args.workers,
    )
    manifest = loader.load_database(args.input, plan, args.out)
    total_pages = sum(c["page_count"] for c in manifest["columns"].values())
    print("loaded %d tables, %d columns, %d pages -> %s" % (
        len(manifest["tables"]), len(manifest["columns"]), total_pages, args.out))
    return 0


def _override_cluster_keys(sch, overrides):
    keys = {}
    for item in overrides:
        table, sep, col = item.partition("=")
        if not sep:
            raise SystemExit("--cluster-key expects table=column, got %r" % item)
        keys[table] = col
    tables = []
    for t in sch.tables:
        if t.name in keys:
            t.column(keys[t.name])  # validate
            t = schema_mod.Table(t.name, t.columns, keys[t.name], t.zone_attrs)
        tables.append(t)
    return schema_mod.Schema(sch.name, tuple(tables))


def cmd_query(args):
    cfg = read_config(args.config) if args.config else {}
    result, wall_ms = runner.run_once(
        args.db, args.query_id, args.mode, **_exec_kwargs(args, cfg))
    if args.json:
        print(json.dumps({
            "query": args.query_id,
            "mode": args.mode,
            "rows": [_jsonable(r) for r in result.rows],
            "stats": result.stats,
            "traces": [t.as_dict() for t in result.traces],
            "wall_ms": wall_ms,
        }))
    else:
        for row in result.rows:
            print("|".join(str(v) for v in _jsonable(row)))
        print("-- %d rows, %d launches, %d bytes read, %.3f ms" % (
            len(result.rows), result.stats["pass_launches"],
            result.stats["bytes_read"], wall_ms))
    return 0


def _jsonable(row):
    return tuple(v.decode("utf-8", "replace") if isinstance(v, bytes) else v
                 for v in row)


def cmd_verify(args):
    cfg = read_config(args.config) if args.config else {}
    sch = schema_mod.get_schema(queries.schema_for(args.query_id))
    raw = loader.load_tables(args.input, sch)
    sorted_tables = {
        t.name: loader.sort_cluster(raw[t.name], t.cluster_key) for t in sch.tables
    }
    query = queries.get_query(args.query_id)
    expected = oracle.run_oracle(sorted_tables, query, sch)
    ok = True
    for mode in ("fused", "staged"):
        result, _ = runner.run_once(
            args.db, args.query_id, mode, **_exec_kwargs(args, cfg))
        if result.rows == expected:
            print("%s %s: ok (%d rows)" % (args.query_id, mode, len(expected)))
        else:
            ok = False
            print("%s %s: MISMATCH (engine %d rows, oracle %d rows)" % (
                args.query_id, mode, len(result.rows), len(expected)))
    return 0 if ok else 1


def cmd_bench(args):
    cfg = read_config(args.config) if args.config else {}
    modes = tuple(args.modes.split(","))
    rows = runner.run_bench(
        args.db, args.query_id, modes=modes, repetitions=args.repetitions,
        **_exec_kwargs(args, cfg))
    summary = runner.summarize(rows)
    print(runner.human_report(rows, summary))
    if args.report:
        with open(args.report, "w") as f:
            f.write(runner.machine_report(rows) + "\n")
            f.write(json.dumps({"summary": summary}) + "\n")
        print("machine-readable report written to %s" % args.report)
    return 0


def cmd_kernel_bench(args):
    rows = kernelbench.run_kernel_bench(
        n_values=args.values, n_strings=args.strings)
    print("backends:", ", ".join(kernelbench.available_backends()))
    print(kernelbench.format_kernel_bench(rows))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="colfuse",
        description="Desk-scale columnar engine with fused and staged execution.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate benchmark-shaped input files")
    p.add_argument("--schema", required=True, choices=sorted(datagen.GENERATORS))
    p.add_argument("--sf", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("load", help="sort, compress, and load tables")
    p.add_argument("--schema", required=True,
                   help="builtin schema name or JSON schema file")
    p.add_argument("--input", required=True, help="directory of <table>.tbl files")
    p.add_argument("--out", required=True, help="database output directory")
    p.add_argument("--page-size", type=int, default=1 << 20)
    p.add_argument("--devices", type=int, default=2)
    p.add_argument("--workers", type=int)
    p.add_argument("--block-size", type=int, default=128)
    p.add_argument("--no-compress", action="store_true",
                   help="store pages without compression")
    p.add_argument("--cluster-key", action="append",
                   metavar="TABLE=COLUMN", help="override a table's cluster key")
    p.set_defaults(func=cmd_load)

    def query_args(p):
        p.add_argument("query_id", choices=sorted(queries.QUERIES))
        p.add_argument("--db", required=True)
        p.add_argument("--workers", type=int)
        p.add_argument("--io-workers", type=int)
        p.add_argument("--config", help="key=value config file")

    p = sub.add_parser("query", help="run one canned query")
    query_args(p)
    p.add_argument("--mode", choices=("fused", "staged"), default="fused")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("verify", help="check both modes against the oracle")
    query_args(p)
    p.add_argument("--input", required=True, help="raw input directory")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="repeated cold-start measurements")
    query_args(p)
    p.add_argument("--modes", default="fused,staged")
    p.add_argument("--repetitions", type=int, default=runner.DEFAULT_REPETITIONS)
    p.add_argument("--report", help="write machine-readable report here")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("kernel-bench",
                       help="compare compiled and pure-Python kernels")
    p.add_argument("--values", type=int, default=200_000)
    p.add_argument("--strings", type=int, default=5_000)
    p.set_defaults(func=cmd_kernel_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
