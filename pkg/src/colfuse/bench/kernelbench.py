"""Micro-benchmark comparing the compiled kernel backend against the
pure-Python twin on identical inputs."""

from __future__ import annotations

import importlib
import random
import time

from ..codec import fsst_build_table

_BACKENDS = {}
_BACKENDS["python"] = importlib.import_module("colfuse.kernels._py")
try:
    _BACKENDS["cython"] = importlib.import_module("colfuse.kernels._ck")
except ImportError:
    pass


def available_backends():
    return sorted(_BACKENDS)


def _time(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3  # ms


def run_kernel_bench(n_values=200_000, n_strings=5_000, seed=7):
    """Per-kernel best-of-three timings for every available backend.

    Returns rows of {kernel, backend, ms}; all backends see identical
    inputs and their outputs are cross-checked for equality.
    """
    rng = random.Random(seed)
    values = [rng.randrange(1 << 20) for _ in range(n_values)]
    base = min(values)
    deltas = [v - base for v in values]
    bit_width = max(values).bit_length()
    words = " pending special final express regular deposits requests ".split()
    strings = [
        (" ".join(rng.choice(words) for _ in range(6))).encode()
        for _ in range(n_strings)
    ]
    table = fsst_build_table(strings)
    sym_map = table._maps["sym_map"]
    max_len = table._maps["max_len"]
    symbols = table.symbols
    needle = b"pending"
    haystack = b"".join(strings)

    rows = []
    outputs = {}
    for name, mod in _BACKENDS.items():
        payload = mod.pack_bits(deltas, bit_width)
        encoded = [mod.fsst_encode(sym_map, max_len, s) for s in strings]
        out = {
            "pack_bits": payload,
            "unpack_values": mod.unpack_values(payload, 0, bit_width, base, 0, n_values),
            "fsst_encode": encoded,
            "fsst_decode": [mod.fsst_decode(symbols, e) for e in encoded],
            "kmp_contains": mod.kmp_contains(needle, haystack),
        }
        outputs[name] = out
        rows.append({"kernel": "pack_bits", "backend": name,
                     "ms": _time(lambda: mod.pack_bits(deltas, bit_width))})
        rows.append({"kernel": "unpack_values", "backend": name,
                     "ms": _time(lambda: mod.unpack_values(payload, 0, bit_width, base, 0, n_values))})
        rows.append({"kernel": "fsst_encode", "backend": name,
                     "ms": _time(lambda: [mod.fsst_encode(sym_map, max_len, s) for s in strings])})
        rows.append({"kernel": "fsst_decode", "backend": name,
                     "ms": _time(lambda: [mod.fsst_decode(symbols, e) for e in encoded])})
        rows.append({"kernel": "kmp_contains", "backend": name,
                     "ms": _time(lambda: mod.kmp_contains(needle, haystack))})

    names = list(outputs)
    for other in names[1:]:
        if outputs[other] != outputs[names[0]]:
            raise AssertionError("backend outputs diverge")
    return rows


def format_kernel_bench(rows):
    lines = ["%-14s %-8s %12s" % ("kernel", "backend", "ms"), "-" * 36]
    for r in rows:
        lines.append("%-14s %-8s %12.3f" % (r["kernel"], r["backend"], r["ms"]))
    by_kernel = {}
    for r in rows:
        by_kernel.setdefault(r["kernel"], {})[r["backend"]] = r["ms"]
    if all(len(v) > 1 for v in by_kernel.values()):
        lines.append("")
        for kernel, v in by_kernel.items():
            lines.append("%-14s python/cython speedup %.2fx"
                         % (kernel, v["python"] / v["cython"]))
    return "\n".join(lines)
