import importlib
import random

import pytest

backends = [importlib.import_module("colfuse.kernels._py")]
try:
    backends.append(importlib.import_module("colfuse.kernels._ck"))
except ImportError:
    pass


@pytest.fixture(params=backends, ids=lambda m: m.BACKEND)
def k(request):
    return request.param


def test_pack_unpack_roundtrip(k):
    rng = random.Random(3)
    for width in (1, 3, 7, 8, 17, 33, 41, 63):
        deltas = [rng.randrange(1 << width) for _ in range(200)]
        payload = k.pack_bits(deltas, width)
        assert len(payload) % 8 == 0
        out = k.unpack_values(payload, 0, width, 0, 0, len(deltas))
        assert out == deltas


def test_unpack_subrange_and_base(k):
    deltas = list(range(100))
    payload = k.pack_bits(deltas, 7)
    assert k.unpack_values(payload, 0, 7, 1000, 10, 5) == [1010, 1011, 1012, 1013, 1014]


def test_pack_bits_lsb_first_layout(k):
    # 2-bit values 0,1,2,3 -> bits 11 10 01 00 reading from MSB of the byte
    payload = k.pack_bits([0, 1, 2, 3], 2)
    assert payload[0] == 0b11100100


def test_fsst_roundtrip(k):
    symbols = (b"ab", b"abc", b"x")
    sym_map = {s: i for i, s in enumerate(symbols)}
    enc = k.fsst_encode(sym_map, 3, b"abcabxq")
    assert k.fsst_decode(symbols, enc) == b"abcabxq"
    assert k.fsst_decoded_length(tuple(len(s) for s in symbols), enc) == 7


def test_fsst_escape_literal(k):
    enc = k.fsst_encode({}, 1, b"zz")
    assert enc == bytes([255, ord("z"), 255, ord("z")])
    assert k.fsst_decode((), enc) == b"zz"


def test_fsst_corrupt_record(k):
    from colfuse.errors import CorruptRecordError
    with pytest.raises(CorruptRecordError):
        k.fsst_decode((b"a",), bytes([255]))  # trailing escape
    with pytest.raises(CorruptRecordError):
        k.fsst_decode((b"a",), bytes([7]))  # unknown code
    with pytest.raises(CorruptRecordError):
        k.fsst_decoded_length((1,), bytes([255]))


def test_kmp_matches_naive(k):
    rng = random.Random(9)
    for _ in range(300):
        text = bytes(rng.randrange(4) for _ in range(rng.randrange(40)))
        pat = bytes(rng.randrange(4) for _ in range(rng.randrange(6)))
        assert k.kmp_contains(pat, text) == (pat in text)


def test_backends_agree():
    if len(backends) < 2:
        pytest.skip("compiled backend not available")
    a, b = backends
    rng = random.Random(1)
    deltas = [rng.randrange(1 << 13) for _ in range(500)]
    assert a.pack_bits(deltas, 13) == b.pack_bits(deltas, 13)
    payload = a.pack_bits(deltas, 13)
    assert (a.unpack_values(payload, 0, 13, -50, 3, 100)
            == b.unpack_values(payload, 0, 13, -50, 3, 100))
    symbols = (b"he", b"llo", b" ")
    sym_map = {s: i for i, s in enumerate(symbols)}
    rec = b"hello hello world"
    assert a.fsst_encode(sym_map, 3, rec) == b.fsst_encode(sym_map, 3, rec)


def test_selected_backend_exports():
    from colfuse import kernels
    assert kernels.BACKEND in ("cython", "python")
    for name in ("pack_bits", "unpack_values", "fsst_encode", "fsst_decode",
                 "fsst_decoded_length", "kmp_contains"):
        assert callable(getattr(kernels, name))
