"""Brute-force reference evaluation of query plans over raw rows.

Deliberately shares nothing with the engine's execution path: joins use
plain dicts, LIKE uses the ``in`` operator, aggregation uses a plain
dict keyed by the group tuple.  Only the plan dataclasses and the
expression tuple format are shared, so results are comparable with
strict equality.
"""

from __future__ import annotations

from .. import engine


def _eval(expr, row):
    tag = expr[0]
    if tag == "col":
        return row[expr[1]]
    if tag == "const":
        return expr[1]
    a, b = _eval(expr[1], row), _eval(expr[2], row)
    if tag == "add":
        return a + b
    if tag == "sub":
        return a - b
    if tag == "mul":
        return a * b
    raise ValueError("unknown expression tag %r" % (tag,))


def _passes(value, op, const):
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
    raise ValueError("unknown filter op %r" % (op,))


def _bytes(v):
    return v.encode() if isinstance(v, str) else v


def run_oracle(tables, query, schema):
    """Evaluate ``query`` over ``tables`` (table name -> column dict of
    raw parsed values).  Returns rows matching the engine's output."""
    joins = {}
    result = None
    for pipeline in query.pipelines:
        table = schema.table(pipeline.table)
        data = tables[pipeline.table]
        names = list(pipeline.columns)
        varlen = {c for c in names if table.column(c).col_type.is_varlen}
        n = len(data[names[0]]) if names else 0
        groups = {}
        agg_op = None
        for i in range(n):
            row = {c: data[c][i] for c in names}
            # varlen values compare as bytes, like the engine's decode
            for c in varlen:
                row[c] = _bytes(row[c])
            alive = True
            for op in pipeline.ops:
                if isinstance(op, engine.Filter):
                    if not _passes(row[op.column], op.op, op.const):
                        alive = False
                        break
                elif isinstance(op, engine.LikeFilter):
                    if op.needle not in _bytes(row[op.column]):
                        alive = False
                        break
                elif isinstance(op, engine.HashBuild):
                    joins.setdefault(op.name, {})[row[op.key]] = tuple(
                        row[c] for c in op.payload
                    )
                    alive = False
                    break
                elif isinstance(op, engine.HashProbe):
                    match = joins.get(op.name, {}).get(row[op.key])
                    if match is None:
                        alive = False
                        break
                    row.update(zip(op.carry, match))
                elif isinstance(op, engine.Aggregate):
                    agg_op = op
                    key = tuple(row[c] for c in op.group_by)
                    accs = groups.get(key)
                    if accs is None:
                        accs = groups[key] = [
                            _init(f) for f, _, _ in op.aggs
                        ]
                    for j, (func, expr, _) in enumerate(op.aggs):
                        accs[j] = _step(func, accs[j], _eval(expr, row))
                    alive = False
                    break
            del alive
        if agg_op is not None:
            result = sorted(
                tuple(k) + tuple(
                    _final(f, a) for (f, _, _), a in zip(agg_op.aggs, accs_)
                )
                for k, accs_ in groups.items()
            )
    return result if result is not None else []


def _init(func):
    if func in ("sum", "count"):
        return 0
    if func in ("min", "max"):
        return None
    if func == "avg":
        return (0, 0)
    raise ValueError(func)


def _step(func, acc, value):
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
    raise ValueError(func)


def _final(func, acc):
    if func == "avg":
        return acc[0] / acc[1] if acc[1] else None
    return acc
